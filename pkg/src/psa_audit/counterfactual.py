"""Conviction-charge determination and counterfactual re-scoring.

Each linked record is scored twice with the same engine: once over the
booked charges from the matched court case(s) and once over only the
charges that ended in a conviction.  The two 1..6 predictions are carried
over from the administered form unchanged (they do not depend on booked
charges); the violence flag is re-derived because its current-offense
input does.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .charges import ChargeCode
from .engine import EngineConfig, PsaResult, RiskFactors, SubScores, assess, nvca_flag_value
from .errors import NotDisposed
from .linkage import CourtCase, MatchResult, MatchStatus, PsaRecord


@dataclass(frozen=True)
class DispositionPolicy:
    """Jurisdiction-specific disposition semantics.

    conviction_threshold: codes strictly greater are convictions.
    plea_to_other_code: marks a guilty plea that names other charges.
    companion_zero_rule: in a fully resolved case containing the plea code,
        the zero-coded companion charges are the convictions.
    """

    conviction_threshold: int = 159
    plea_to_other_code: int = 72
    companion_zero_rule: bool = True

    def __post_init__(self):
        if self.conviction_threshold <= 0:
            raise ValueError("conviction_threshold must be > 0")


def fully_disposed(case: CourtCase, policy: DispositionPolicy | None = None) -> bool:
    """True when every filed charge carries a terminal disposition code."""
    return all(d is not None for d in case.dispositions)


def is_conviction(code: int | None, case: CourtCase, policy: DispositionPolicy) -> bool:
    """Whether one charge's disposition code denotes a conviction.

    Codes above the threshold always do.  A zero code counts only under
    the companion rule: the case is fully resolved and some sibling charge
    carries the plea-to-other-charges code.
    """
    if code is None:
        return False
    if code > policy.conviction_threshold:
        return True
    if (
        policy.companion_zero_rule
        and code == 0
        and fully_disposed(case, policy)
        and any(d == policy.plea_to_other_code for d in case.dispositions)
    ):
        return True
    return False


def _dedup_sorted(charges: Iterable[ChargeCode]) -> tuple[ChargeCode, ...]:
    seen = {}
    for c in charges:
        seen.setdefault(c.normalized, c)
    return tuple(seen[k] for k in sorted(seen))


def conviction_charges(match: MatchResult, policy: DispositionPolicy) -> tuple[ChargeCode, ...]:
    """Union over matched cases of the charges that ended in conviction.

    May be empty even when a plea was entered, when none of the pleaded
    charges belong to the matched case(s).  Raises NotDisposed if any
    matched case still has pending charges; such records are excluded
    from the analysis.
    """
    if match.status is not MatchStatus.MATCHED:
        raise ValueError("conviction_charges needs a Matched record")
    for case in match.matched_cases:
        if not fully_disposed(case, policy):
            raise NotDisposed(f"case {case.court_number} has pending charges")
    out = []
    for case in match.matched_cases:
        for charge, code in zip(case.filed_charges, case.dispositions):
            if is_conviction(code, case, policy):
                out.append(charge)
    return _dedup_sorted(out)


def booking_charges(match: MatchResult) -> tuple[ChargeCode, ...]:
    """Union of booked charges across the matched case(s)."""
    return _dedup_sorted(c for case in match.matched_cases for c in case.booking_charges)


def record_factors(record: PsaRecord, current_offense_violent: bool) -> RiskFactors:
    """Risk factors from the fields an assessment record carries; absent
    fields contribute nothing to the violence-flag score."""
    return RiskFactors(
        age_at_arrest=record.age_at_arrest or 0,
        prior_conviction=bool(record.prior_conviction),
        prior_violent_convictions=record.prior_violent_convictions or 0,
        current_offense_violent=current_offense_violent,
    )


def counterfactual_assess(
    record: PsaRecord,
    charges: Sequence[ChargeCode],
    config: EngineConfig,
) -> PsaResult:
    """Score a record over an arbitrary charge set.

    FTA and NCA come verbatim from the record; the violence flag is
    recomputed with only its current-offense-violent input re-derived
    from ``charges``.  Extradition is treated as false: the counterfactual
    concerns charges only, and the source data carries no extradition
    field.
    """
    if record.fta is None or record.nca is None:
        raise ValueError(f"record {record.record_id} has no sub-scores")
    violent = any(config.catalog.is_violent(c) for c in charges)
    nvca = nvca_flag_value(record_factors(record, violent), config.weights)
    subs = SubScores(fta=record.fta, nca=record.nca, nvca_flag=nvca)
    return assess(subs, charges, False, config.dmf, config.catalog)


@dataclass(frozen=True)
class AuditPair:
    """Booking-based vs conviction-based result for one linked record."""

    record_id: str
    booking_result: PsaResult
    conviction_result: PsaResult
    exclusion_lost: bool
    bumpup_lost: bool
    nvca_lost: bool
    recommendation_delta: int  # booking final minus conviction final
    excluded_by_sensitivity: bool


def build_audit_pair(match: MatchResult, policy: DispositionPolicy, config: EngineConfig) -> AuditPair:
    booked = booking_charges(match)
    convicted = conviction_charges(match, policy)
    plea_entered = any(
        d == policy.plea_to_other_code for case in match.matched_cases for d in case.dispositions
    )
    booking_result = counterfactual_assess(match.psa, booked, config)
    conviction_result = counterfactual_assess(match.psa, convicted, config)
    return AuditPair(
        record_id=match.psa.record_id,
        booking_result=booking_result,
        conviction_result=conviction_result,
        exclusion_lost=booking_result.exclusion and not conviction_result.exclusion,
        bumpup_lost=booking_result.bumpup and not conviction_result.bumpup,
        nvca_lost=booking_result.subscores.nvca_flag and not conviction_result.subscores.nvca_flag,
        recommendation_delta=int(booking_result.final) - int(conviction_result.final),
        excluded_by_sensitivity=plea_entered and not convicted,
    )


def build_audit_pairs(
    matches: Sequence[MatchResult],
    policy: DispositionPolicy,
    config: EngineConfig,
) -> tuple[list[AuditPair], list[MatchResult]]:
    """One AuditPair per matched, fully disposed record.

    Returns (pairs, skipped-not-disposed).  Pairs flagged
    ``excluded_by_sensitivity`` stay in the main set; the sensitivity
    variant of the analysis drops them.
    """
    pairs, skipped = [], []
    for m in matches:
        if m.status is not MatchStatus.MATCHED:
            continue
        if not all(fully_disposed(c, policy) for c in m.matched_cases):
            skipped.append(m)
            continue
        pairs.append(build_audit_pair(m, policy, config))
    return pairs, skipped
