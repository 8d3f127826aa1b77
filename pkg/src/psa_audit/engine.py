"""Assessment engine: sub-scores, charge-based exclusion, decision matrix
lookup, and bump-up, producing initial and final supervision recommendations.

Every operation here is a pure function over immutable inputs, so records
can be scored in parallel with no coordination.  The four-step shape:

  1. sub-scores (two 1..6 scales plus a binary violence flag), either
     taken from the form or computed from risk factors under a weight
     config;
  2. charge-based exclusion (extradition, a listed serious offense, or a
     violent charge combined with the violence flag) forces the most
     restrictive recommendation;
  3. the decision matrix maps (fta, nca) to an initial recommendation,
     with one split cell whose outcome depends on charge class;
  4. charge-based bump-up (a listed offense, or the violence flag without
     any violent charge) raises the recommendation one level, capped at
     the top.

The initial recommendation is always computed, even under an exclusion,
so that audits can compare like with like.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Mapping, Sequence

import yaml

from .charges import ChargeCatalog, ChargeCode, data_path, default_catalog
from .errors import ConfigError


class SupervisionLevel(IntEnum):
    OR_NAS = 1
    OR_MINIMUM = 2
    SFPDP_ACM = 3
    RELEASE_NOT_RECOMMENDED = 4

    @property
    def label(self) -> str:
        return _LEVEL_LABELS[self]

    @classmethod
    def from_label(cls, text: str) -> "SupervisionLevel":
        t = text.strip()
        if t in _LABEL_LEVELS:
            return _LABEL_LEVELS[t]
        if t.isdigit() and 1 <= int(t) <= 4:
            return cls(int(t))
        raise ValueError(f"unknown supervision level {text!r}")


_LEVEL_LABELS = {
    SupervisionLevel.OR_NAS: "OR-NAS",
    SupervisionLevel.OR_MINIMUM: "OR-Minimum",
    SupervisionLevel.SFPDP_ACM: "SFPDP-ACM",
    SupervisionLevel.RELEASE_NOT_RECOMMENDED: "Release-Not-Recommended",
}
_LABEL_LEVELS = {v: k for k, v in _LEVEL_LABELS.items()}


@dataclass(frozen=True)
class RiskFactors:
    age_at_arrest: int = 0
    pending_charge: bool = False
    prior_misdemeanor_conviction: bool = False
    prior_felony_conviction: bool = False
    prior_conviction: bool = False
    prior_violent_convictions: int = 0
    ftas_past_two_years: int = 0
    fta_older_than_two_years: bool = False
    prior_incarceration: bool = False
    current_offense_violent: bool = False

    def __post_init__(self):
        if self.age_at_arrest < 0:
            raise ValueError("age_at_arrest must be >= 0")
        if self.prior_violent_convictions < 0 or self.ftas_past_two_years < 0:
            raise ValueError("counts must be >= 0")
        if (self.prior_misdemeanor_conviction or self.prior_felony_conviction) and not self.prior_conviction:
            raise ValueError("prior_conviction must be true when a prior misdemeanor or felony conviction is set")


#: Numeric value each factor contributes per unit of weight.
FACTOR_VALUES = {
    "age_at_arrest": lambda f: f.age_at_arrest,
    "pending_charge": lambda f: int(f.pending_charge),
    "prior_misdemeanor_conviction": lambda f: int(f.prior_misdemeanor_conviction),
    "prior_felony_conviction": lambda f: int(f.prior_felony_conviction),
    "prior_conviction": lambda f: int(f.prior_conviction),
    "prior_violent_convictions": lambda f: f.prior_violent_convictions,
    "ftas_past_two_years": lambda f: f.ftas_past_two_years,
    "fta_older_than_two_years": lambda f: int(f.fta_older_than_two_years),
    "prior_incarceration": lambda f: int(f.prior_incarceration),
    "current_offense_violent": lambda f: int(f.current_offense_violent),
}


@dataclass(frozen=True)
class SubScores:
    fta: int
    nca: int
    nvca_flag: bool

    def __post_init__(self):
        if not (1 <= self.fta <= 6 and 1 <= self.nca <= 6):
            raise ValueError(f"fta/nca must be in 1..6, got ({self.fta}, {self.nca})")


@dataclass(frozen=True)
class ScoreBin:
    lo: int
    hi: int
    score: int


@dataclass(frozen=True)
class ScaleSpec:
    """Integer weights plus the raw-score breakpoint table for one 1..6 scale."""

    weights: Mapping[str, int]
    bins: tuple[ScoreBin, ...]

    def scale(self, raw: int) -> int:
        for b in self.bins:
            if b.lo <= raw <= b.hi:
                return b.score
        raise ConfigError(f"raw score {raw} outside breakpoint table domain [{self.bins[0].lo}, {self.bins[-1].hi}]")


@dataclass(frozen=True)
class FlagSpec:
    """Integer weights plus the threshold for the binary violence flag."""

    weights: Mapping[str, int]
    threshold: int


@dataclass(frozen=True)
class WeightConfig:
    fta: ScaleSpec
    nca: ScaleSpec
    nvca: FlagSpec


def raw_score(weights: Mapping[str, int], factors: RiskFactors) -> int:
    return sum(w * FACTOR_VALUES[name](factors) for name, w in weights.items())


def nvca_flag_value(factors: RiskFactors, config: WeightConfig) -> bool:
    return raw_score(config.nvca.weights, factors) >= config.nvca.threshold


def compute_subscores(factors: RiskFactors, config: WeightConfig) -> SubScores:
    """Linear raw scores mapped through the breakpoint tables.

    Raises ConfigError if a raw score falls outside its table's domain.
    """
    fta = config.fta.scale(raw_score(config.fta.weights, factors))
    nca = config.nca.scale(raw_score(config.nca.weights, factors))
    return SubScores(fta=fta, nca=nca, nvca_flag=nvca_flag_value(factors, config))


_SPLIT = "SPLIT"


@dataclass(frozen=True)
class DmfConfig:
    """6x6 decision matrix indexed (fta, nca), values SupervisionLevel
    or the split-cell marker."""

    cells: tuple[tuple[SupervisionLevel | str, ...], ...]
    split_cell: tuple[int, int] | None

    def cell(self, fta: int, nca: int) -> SupervisionLevel | str:
        if not (1 <= fta <= len(self.cells) and 1 <= nca <= len(self.cells[0])):
            raise ConfigError(f"decision matrix has no cell ({fta}, {nca})")
        value = self.cells[fta - 1][nca - 1]
        if value is None:
            raise ConfigError(f"decision matrix cell ({fta}, {nca}) is missing")
        return value

    def is_split(self, fta: int, nca: int) -> bool:
        return self.cell(fta, nca) == _SPLIT


@dataclass(frozen=True)
class PsaResult:
    subscores: SubScores
    exclusion: bool
    exclusion_reason: str
    bumpup: bool
    bumpup_reason: str
    initial: SupervisionLevel
    final: SupervisionLevel


def ordered_charges(charges: Sequence[ChargeCode]) -> list[ChargeCode]:
    """Deterministic charge order for reason reporting: lexicographic on
    the canonical normalized string."""
    return sorted(charges, key=lambda c: c.normalized)


def check_exclusion(
    charges: Sequence[ChargeCode],
    extradited: bool,
    nvca_flag: bool,
    catalog: ChargeCatalog,
) -> tuple[bool, str]:
    """Charge-based exclusion test.

    Fires on extradition, on any listed exclusion offense (including
    derivative forms), or on any violent charge combined with the violence
    flag.  The reason names the first clause and charge that fired.
    """
    if extradited:
        return True, "extradited"
    for c in ordered_charges(charges):
        if catalog.is_exclusion_charge(c):
            return True, f"exclusion-list:{c.normalized}"
    if nvca_flag:
        for c in ordered_charges(charges):
            if catalog.is_violent(c):
                return True, f"violent+nvca:{c.normalized}"
    return False, ""


def check_bumpup(
    charges: Sequence[ChargeCode],
    nvca_flag: bool,
    catalog: ChargeCatalog,
) -> tuple[bool, str]:
    """Charge-based bump-up test.

    Fires on any listed bump-up offense (including derivative forms, and
    honoring the weapon-use grey-zone policy), or when the violence flag
    is set while no booked charge is violent.
    """
    for c in ordered_charges(charges):
        if catalog.is_bumpup_charge(c):
            return True, f"bumpup-list:{c.normalized}"
    if nvca_flag and not any(catalog.is_violent(c) for c in charges):
        return True, "nvca-no-violent"
    return False, ""


def initial_recommendation(
    subscores: SubScores,
    charges: Sequence[ChargeCode],
    dmf: DmfConfig,
    catalog: ChargeCatalog,
) -> SupervisionLevel:
    """Decision matrix lookup.  At the split cell the outcome is the top
    level if any charge is a felony or a violent misdemeanor, otherwise
    the second-highest level."""
    value = dmf.cell(subscores.fta, subscores.nca)
    if value == _SPLIT:
        for c in charges:
            if c.is_felony() or (c.is_misdemeanor() and catalog.is_violent(c)):
                return SupervisionLevel.RELEASE_NOT_RECOMMENDED
        return SupervisionLevel.SFPDP_ACM
    return value


def assess(
    subscores: SubScores,
    charges: Sequence[ChargeCode],
    extradited: bool,
    dmf: DmfConfig,
    catalog: ChargeCatalog,
) -> PsaResult:
    """Run steps 2..4 over given sub-scores and booked charges."""
    exclusion, exclusion_reason = check_exclusion(charges, extradited, subscores.nvca_flag, catalog)
    initial = initial_recommendation(subscores, charges, dmf, catalog)
    bumpup, bumpup_reason = check_bumpup(charges, subscores.nvca_flag, catalog)
    if exclusion:
        final = SupervisionLevel.RELEASE_NOT_RECOMMENDED
    elif bumpup:
        final = SupervisionLevel(min(initial + 1, SupervisionLevel.RELEASE_NOT_RECOMMENDED))
    else:
        final = initial
    return PsaResult(
        subscores=subscores,
        exclusion=exclusion,
        exclusion_reason=exclusion_reason,
        bumpup=bumpup,
        bumpup_reason=bumpup_reason,
        initial=initial,
        final=final,
    )


# ---------------------------------------------------------------------------
# config loading


def _require_keys(doc: dict, allowed: set[str], required: set[str], where: str) -> None:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be a mapping")
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(doc)
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")


def _load_weights_map(doc, where: str) -> dict[str, int]:
    if not isinstance(doc, dict) or not doc:
        raise ConfigError(f"{where}: weights must be a non-empty mapping")
    out = {}
    for name, w in doc.items():
        if name not in FACTOR_VALUES:
            raise ConfigError(f"{where}: unknown factor {name!r}")
        if not isinstance(w, int) or isinstance(w, bool):
            raise ConfigError(f"{where}: weight for {name!r} must be an integer")
        out[name] = w
    return out


def _load_bins(doc, where: str) -> tuple[ScoreBin, ...]:
    if not isinstance(doc, list) or not doc:
        raise ConfigError(f"{where}: bins must be a non-empty list")
    bins = []
    for i, item in enumerate(doc):
        _require_keys(item, {"min", "max", "score"}, {"min", "max", "score"}, f"{where}[{i}]")
        b = ScoreBin(lo=int(item["min"]), hi=int(item["max"]), score=int(item["score"]))
        if b.lo > b.hi:
            raise ConfigError(f"{where}[{i}]: min > max")
        if not (1 <= b.score <= 6):
            raise ConfigError(f"{where}[{i}]: score must be in 1..6")
        bins.append(b)
    for prev, cur in zip(bins, bins[1:]):
        if cur.lo != prev.hi + 1:
            raise ConfigError(f"{where}: bins must be contiguous (gap after max={prev.hi})")
        if cur.score < prev.score:
            raise ConfigError(f"{where}: scores must be monotone non-decreasing")
    return tuple(bins)


def load_weight_config(path: str | Path) -> WeightConfig:
    doc = _read_yaml(path)
    _require_keys(doc, {"fta", "nca", "nvca"}, {"fta", "nca", "nvca"}, str(path))
    scales = {}
    for key in ("fta", "nca"):
        section = doc[key]
        _require_keys(section, {"weights", "bins"}, {"weights", "bins"}, f"{path}:{key}")
        scales[key] = ScaleSpec(
            weights=_load_weights_map(section["weights"], f"{path}:{key}"),
            bins=_load_bins(section["bins"], f"{path}:{key}.bins"),
        )
    nvca = doc["nvca"]
    _require_keys(nvca, {"weights", "threshold"}, {"weights", "threshold"}, f"{path}:nvca")
    if not isinstance(nvca["threshold"], int) or isinstance(nvca["threshold"], bool):
        raise ConfigError(f"{path}:nvca threshold must be an integer")
    return WeightConfig(
        fta=scales["fta"],
        nca=scales["nca"],
        nvca=FlagSpec(weights=_load_weights_map(nvca["weights"], f"{path}:nvca"), threshold=nvca["threshold"]),
    )


def load_dmf_config(path: str | Path) -> DmfConfig:
    doc = _read_yaml(path)
    _require_keys(doc, {"rows"}, {"rows"}, str(path))
    rows = doc["rows"]
    if not isinstance(rows, list) or len(rows) != 6:
        raise ConfigError(f"{path}: decision matrix needs exactly 6 rows (fta 1..6)")
    cells = []
    split_cell = None
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != 6:
            raise ConfigError(f"{path}: row {i + 1} needs exactly 6 entries (nca 1..6)")
        parsed_row = []
        for j, token in enumerate(row):
            if token is None or str(token).strip() == "":
                raise ConfigError(f"{path}: cell ({i + 1}, {j + 1}) is missing")
            if str(token).strip() == _SPLIT:
                if split_cell is not None:
                    raise ConfigError(f"{path}: more than one SPLIT cell")
                split_cell = (i + 1, j + 1)
                parsed_row.append(_SPLIT)
                continue
            try:
                parsed_row.append(SupervisionLevel.from_label(str(token)))
            except ValueError as exc:
                raise ConfigError(f"{path}: cell ({i + 1}, {j + 1}): {exc}") from None
        cells.append(tuple(parsed_row))
    return DmfConfig(cells=tuple(cells), split_cell=split_cell)


def _read_yaml(path: str | Path) -> dict:
    try:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: must contain a mapping")
    return doc


@dataclass(frozen=True)
class EngineConfig:
    catalog: ChargeCatalog
    dmf: DmfConfig
    weights: WeightConfig
    paths: tuple[str, str, str] = ("", "", "")  # catalog, dmf, weights as loaded


CONFIG_FILENAMES = {"catalog": "charge_catalog.yaml", "dmf": "dmf.yaml", "weights": "weights.yaml"}


def load_engine_config(
    config_dir: str | Path | None = None,
    *,
    catalog_path: str | Path | None = None,
    dmf_path: str | Path | None = None,
    weights_path: str | Path | None = None,
) -> EngineConfig:
    """Resolve and load the three engine config files.

    Explicit per-file paths win; otherwise files are taken from
    ``config_dir``; otherwise the packaged defaults are used.
    """
    base = Path(config_dir) if config_dir is not None else None

    def resolve(explicit, name):
        if explicit is not None:
            return Path(explicit)
        if base is not None:
            return base / CONFIG_FILENAMES[name]
        return data_path(CONFIG_FILENAMES[name])

    cat_p = resolve(catalog_path, "catalog")
    dmf_p = resolve(dmf_path, "dmf")
    wts_p = resolve(weights_path, "weights")
    catalog = default_catalog() if cat_p == data_path(CONFIG_FILENAMES["catalog"]) else ChargeCatalog.from_file(cat_p)
    return EngineConfig(
        catalog=catalog,
        dmf=load_dmf_config(dmf_p),
        weights=load_weight_config(wts_p),
        paths=(str(cat_p), str(dmf_p), str(wts_p)),
    )
