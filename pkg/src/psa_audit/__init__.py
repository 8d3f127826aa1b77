"""Charge-driven pre-trial assessment reproduction and audit toolkit."""

from .charges import ChargeCatalog, ChargeClass, ChargeCode, Derivative, default_catalog, parse_charge_code
from .counterfactual import (
    AuditPair,
    DispositionPolicy,
    build_audit_pairs,
    conviction_charges,
    counterfactual_assess,
    fully_disposed,
    is_conviction,
)
from .engine import (
    DmfConfig,
    EngineConfig,
    PsaResult,
    RiskFactors,
    SubScores,
    SupervisionLevel,
    WeightConfig,
    assess,
    check_bumpup,
    check_exclusion,
    compute_subscores,
    initial_recommendation,
    load_engine_config,
)
from .linkage import (
    CourtCase,
    MatchResult,
    MatchStatus,
    PsaRecord,
    deduplicate,
    filter_complete,
    find_candidates,
    link_records,
    resolve_match,
)
from .stats import (
    agreement_rate,
    bonferroni,
    initial_distribution,
    proportion_affected,
    race_consistency,
    rate_table,
    two_proportion_test,
    wilcoxon_rank_sum,
)
from .synth import GeneratorConfig, generate, write_dataset

__version__ = "0.1.0"

__all__ = [
    "AuditPair",
    "ChargeCatalog",
    "ChargeClass",
    "ChargeCode",
    "CourtCase",
    "Derivative",
    "DispositionPolicy",
    "DmfConfig",
    "EngineConfig",
    "GeneratorConfig",
    "MatchResult",
    "MatchStatus",
    "PsaRecord",
    "PsaResult",
    "RiskFactors",
    "SubScores",
    "SupervisionLevel",
    "WeightConfig",
    "agreement_rate",
    "assess",
    "bonferroni",
    "build_audit_pairs",
    "check_bumpup",
    "check_exclusion",
    "compute_subscores",
    "conviction_charges",
    "counterfactual_assess",
    "deduplicate",
    "default_catalog",
    "filter_complete",
    "find_candidates",
    "fully_disposed",
    "generate",
    "initial_distribution",
    "initial_recommendation",
    "is_conviction",
    "link_records",
    "load_engine_config",
    "parse_charge_code",
    "proportion_affected",
    "race_consistency",
    "rate_table",
    "resolve_match",
    "two_proportion_test",
    "wilcoxon_rank_sum",
    "write_dataset",
]
