"""Seeded synthetic dataset generator with planted ground truth.

Every dataset row is driven by one random stream, so a config (including
its seed) fully determines the output bytes.  Each record is planted as
one of a small set of scenarios whose audit outcome is guaranteed by
construction:

  identical    every booked charge is convicted (sometimes encoded through
               the plea-code-plus-zero companion convention); booking and
               conviction results coincide.
  overbooked   an exclusion or bump-up charge is booked but dismissed.
               The "affected" variant pins the initial recommendation low
               enough that the final strictly drops; the "saturated"
               variant pins it at the top so the final cannot move even
               though the component is lost.
  plea_other   the only guilty plea points outside the case, so the
               conviction set is empty; results still coincide because the
               booked charges are inert misdemeanors.

Planted duplicate and incomplete rows exercise the intake filters, decoy
and twin court cases exercise the match-resolution rules, and withheld
court cases exercise the manual-review queue.

The recorded assessment columns are produced by the scoring engine
itself, which is what lets a validation run against this data close at
100% agreement.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path

from .charges import ChargeCode, parse_charge_code
from .engine import EngineConfig, RiskFactors, SubScores, assess, load_engine_config, nvca_flag_value
from .errors import ConfigError
from .io import (
    COURT_COLUMNS,
    GROUND_TRUTH_COLUMNS,
    PSA_COLUMNS,
    join_charges,
    write_csv,
)

FIRST_NAMES = (
    "ALEX", "BLAKE", "CAMERON", "DANA", "ELLIS", "FRANKIE", "GRAY", "HARPER",
    "INDIGO", "JORDAN", "KENDALL", "LANE", "MORGAN", "NOEL", "OAKLEY", "PARKER",
    "QUINN", "RILEY", "SAGE", "TAYLOR",
)
LAST_NAMES = (
    "ADAMS", "BARNES", "CRUZ", "DELGADO", "ELLISON", "FOSTER", "GARCIA", "HUANG",
    "IBARRA", "JOHNSON", "KIM", "LOPEZ", "MORENO", "NGUYEN", "OKAFOR", "PHAM",
    "QUINTERO", "ROSS", "SANTOS", "TRAN",
)

#: Default charge pools.  The scenario guarantees lean on their semantics:
#: neutral pools must stay off every catalog list, the bump-up pool must be
#: non-violent, and the violent pool must be violent-only (no exclusions).
DEFAULT_CHARGE_POOLS = {
    "neutral_felonies": ("459 PC F", "10851(A) VC F", "487(A) PC F"),
    "neutral_misdemeanors": ("484 PC M", "11350(A) HS M", "594(B)(1) PC M", "148(A)(1) PC M", "466 PC M", "853.7 PC M"),
    "violent": ("240 PC M", "243(B) PC M", "246 PC F"),
    "exclusion": ("187(A) PC F", "211 PC F", "215(A) PC F", "664/187(A) PC F"),
    "bumpup_nonviolent": ("646.9 PC M", "166(A)(4) PC M", "243.4 PC M"),
}

DEFAULT_GROUP_MIX = {"B": 0.45, "non-B": 0.55}
DEFAULT_SCORE_DISTRIBUTIONS = {
    "B": {"fta": (15, 18, 22, 20, 15, 10), "nca": (14, 18, 22, 20, 16, 10)},
    "non-B": {"fta": (30, 25, 20, 12, 8, 5), "nca": (28, 25, 20, 13, 9, 5)},
}
NONB_RACES = ("W", "H", "C", "O", "U")
NONB_RACE_WEIGHTS = (55, 20, 10, 8, 7)


@dataclass(frozen=True)
class GeneratorConfig:
    """Knobs for one synthetic dataset.

    Rates are per emitted record.  ``overbooking_rate`` is the fraction of
    records where a booked exclusion or bump-up charge is dropped at
    disposition; ``saturation_share`` of those are planted with a
    top-level initial recommendation so the drop cannot move the final.
    The planted affected rate is therefore
    overbooking_rate * (1 - saturation_share).
    """

    n_records: int = 2450
    seed: int = 0
    overbooking_rate: float = 0.32
    saturation_share: float = 0.15
    duplicate_rate: float = 0.17
    incomplete_rate: float = 0.026
    disposed_rate: float = 0.883
    plea_other_rate: float = 0.03
    unmatched_rate: float = 0.013
    decoy_rate: float = 0.06
    twin_rate: float = 0.02
    companion_zero_share: float = 0.25
    person_reuse_rate: float = 0.38
    group_mix: dict = field(default_factory=lambda: dict(DEFAULT_GROUP_MIX))
    score_distributions: dict = field(default_factory=lambda: {
        g: {k: tuple(v) for k, v in d.items()} for g, d in DEFAULT_SCORE_DISTRIBUTIONS.items()
    })
    charge_pools: dict = field(default_factory=lambda: {
        k: tuple(v) for k, v in DEFAULT_CHARGE_POOLS.items()
    })

    def __post_init__(self):
        if self.n_records < 0:
            raise ConfigError("n_records must be >= 0")
        missing = set(DEFAULT_CHARGE_POOLS) - set(self.charge_pools)
        if missing:
            raise ConfigError(f"charge_pools missing {sorted(missing)}")
        for pool, texts in self.charge_pools.items():
            if not texts:
                raise ConfigError(f"charge pool {pool!r} must be non-empty")
        for name in (
            "overbooking_rate", "saturation_share", "duplicate_rate", "incomplete_rate",
            "disposed_rate", "plea_other_rate", "unmatched_rate", "decoy_rate",
            "twin_rate", "companion_zero_share", "person_reuse_rate",
        ):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ConfigError(f"{name} must be in [0, 1], got {value}")
        if abs(sum(self.group_mix.values()) - 1.0) > 1e-9:
            raise ConfigError("group_mix must sum to 1")
        for group in self.group_mix:
            if group not in self.score_distributions:
                raise ConfigError(f"score_distributions missing group {group!r}")

    def to_dict(self) -> dict:
        return {
            "n_records": self.n_records,
            "seed": self.seed,
            "overbooking_rate": self.overbooking_rate,
            "saturation_share": self.saturation_share,
            "duplicate_rate": self.duplicate_rate,
            "incomplete_rate": self.incomplete_rate,
            "disposed_rate": self.disposed_rate,
            "plea_other_rate": self.plea_other_rate,
            "unmatched_rate": self.unmatched_rate,
            "decoy_rate": self.decoy_rate,
            "twin_rate": self.twin_rate,
            "companion_zero_share": self.companion_zero_share,
            "person_reuse_rate": self.person_reuse_rate,
            "group_mix": dict(self.group_mix),
            "score_distributions": {
                g: {k: list(v) for k, v in d.items()} for g, d in self.score_distributions.items()
            },
            "charge_pools": {k: list(v) for k, v in self.charge_pools.items()},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GeneratorConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown generator config keys: {sorted(unknown)}")
        return cls(**doc)


@dataclass
class _Person:
    sfid: str
    name: str
    dob: date
    group: str
    base_race: str
    last_arrest: date | None = None


@dataclass
class SynthDataset:
    psa_rows: list[dict]
    court_rows: list[dict]
    truth_rows: list[dict]

    def planted_counts(self) -> dict[str, int]:
        kinds = [r["kind"] for r in self.truth_rows]
        scenarios = [r["scenario"] for r in self.truth_rows]
        return {
            "records": len(self.truth_rows),
            "duplicates": kinds.count("duplicate"),
            "incomplete": kinds.count("incomplete"),
            "unmatched": scenarios.count("unmatched"),
            "disposed": sum(1 for r in self.truth_rows if r["disposed"] is True),
            "affected": sum(1 for r in self.truth_rows if r["affected"] is True),
        }


class _Generator:
    def __init__(self, config: GeneratorConfig, engine: EngineConfig):
        self.cfg = config
        self.engine = engine
        self.pools = {k: tuple(v) for k, v in config.charge_pools.items()}
        self.rng = random.Random(config.seed)
        self.persons: list[_Person] = []
        self.psa_rows: list[dict] = []
        self.court_rows: list[dict] = []
        self.truth_rows: list[dict] = []
        self.base_row_ids: list[int] = []  # indexes into psa_rows
        self._record_seq = 0
        self._case_seq = 0
        self._low_cells, self._top_cells = self._classify_cells()

    def _classify_cells(self):
        low, top = [], []
        for fta in range(1, 7):
            for nca in range(1, 7):
                value = self.engine.dmf.cells[fta - 1][nca - 1]
                if value == "SPLIT":
                    continue
                if int(value) <= 3:
                    low.append((fta, nca))
                else:
                    top.append((fta, nca))
        if not low or not top:
            raise ConfigError("decision matrix must offer both low and top non-split cells")
        return low, top

    # -- small draw helpers ------------------------------------------------

    def _charge(self, text: str) -> ChargeCode:
        return parse_charge_code(text, self.engine.catalog.derivative_prefixes)

    def _next_record_id(self) -> str:
        self._record_seq += 1
        return f"R{self._record_seq:06d}"

    def _next_court_number(self) -> str:
        self._case_seq += 1
        return f"CN{self._case_seq:07d}"

    def _draw_person(self) -> _Person:
        if self.persons and self.rng.random() < self.cfg.person_reuse_rate:
            return self.rng.choice(self.persons)
        groups = sorted(self.cfg.group_mix)
        group = self.rng.choices(groups, weights=[self.cfg.group_mix[g] for g in groups])[0]
        base_race = "B" if group == "B" else self.rng.choices(NONB_RACES, weights=NONB_RACE_WEIGHTS)[0]
        person = _Person(
            sfid=f"SF{len(self.persons) + 1:06d}",
            name=f"{self.rng.choice(LAST_NAMES)}, {self.rng.choice(FIRST_NAMES)}",
            dob=date(1955, 1, 1) + timedelta(days=self.rng.randrange(0, 365 * 43)),
            group=group,
            base_race=base_race,
        )
        self.persons.append(person)
        return person

    def _draw_arrest_date(self, person: _Person) -> date:
        # keep one person's arrests at least 5 days apart so candidate
        # windows never overlap across their records
        if person.last_arrest is None:
            arrest = date(2016, 7, 1) + timedelta(days=self.rng.randrange(0, 330))
        else:
            arrest = person.last_arrest + timedelta(days=5 + self.rng.randrange(0, 60))
        person.last_arrest = arrest
        return arrest

    def _draw_scores(self, group: str, cell_kind: str | None) -> tuple[int, int]:
        # overbooked scenarios pin the cell: "low" guarantees the drop is
        # visible in the final recommendation, "top" guarantees it is not.
        # identity-preserving scenarios may land anywhere, split cell included.
        dist = self.cfg.score_distributions[group]
        wanted = {"low": self._low_cells, "top": self._top_cells}.get(cell_kind)
        for _ in range(200):
            fta = self.rng.choices(range(1, 7), weights=dist["fta"])[0]
            nca = self.rng.choices(range(1, 7), weights=dist["nca"])[0]
            if wanted is None or (fta, nca) in wanted:
                return fta, nca
        return self.rng.choice(wanted or self._low_cells)

    def _draw_race(self, person: _Person) -> str:
        if self.rng.random() < 0.97:
            return person.base_race
        others = [r for r in ("B", "C", "H", "O", "U", "W") if r != person.base_race]
        return self.rng.choice(others)

    def _conviction_code(self) -> int:
        return 160 + self.rng.randrange(0, 40)

    # -- record assembly ---------------------------------------------------

    def run(self) -> SynthDataset:
        for _ in range(self.cfg.n_records):
            roll = self.rng.random()
            if roll < self.cfg.duplicate_rate:
                # until a base record exists there is nothing to copy
                if self.base_row_ids:
                    self._emit_duplicate()
                else:
                    self._emit_base()
            elif roll < self.cfg.duplicate_rate + self.cfg.incomplete_rate:
                self._emit_incomplete()
            else:
                self._emit_base()
        return SynthDataset(self.psa_rows, self.court_rows, self.truth_rows)

    def _emit_duplicate(self):
        source = self.psa_rows[self.rng.choice(self.base_row_ids)]
        row = dict(source)
        row["record_id"] = self._next_record_id()
        self.psa_rows.append(row)
        self.truth_rows.append({
            "record_id": row["record_id"],
            "kind": "duplicate",
            "scenario": "",
            "group": "",
            "true_match": "",
            "disposed": "",
            "conviction_charges": "",
            "affected": "",
            "duplicate_of": source["record_id"],
        })

    def _emit_incomplete(self):
        person = self._draw_person()
        arrest = self._draw_arrest_date(person)
        fta, nca = self._draw_scores(person.group, None)
        row = self._psa_row(person, arrest, fta, nca, nvca=False,
                            charges=[self._charge(self.rng.choice(self.pools["neutral_misdemeanors"]))],
                            prior_conviction=False, pv=0)
        blank = self.rng.choice(("arrest_date", "fta", "nca", "nvca_flag"))
        row[blank] = ""
        self.psa_rows.append(row)
        self.truth_rows.append({
            "record_id": row["record_id"],
            "kind": "incomplete",
            "scenario": f"missing:{blank}",
            "group": person.group,
            "true_match": "",
            "disposed": "",
            "conviction_charges": "",
            "affected": "",
            "duplicate_of": "",
        })

    def _emit_base(self):
        cfg = self.cfg
        person = self._draw_person()
        arrest = self._draw_arrest_date(person)
        disposed = self.rng.random() < cfg.disposed_rate
        unmatched = self.rng.random() < cfg.unmatched_rate

        roll = self.rng.random()
        if roll < cfg.overbooking_rate * (1 - cfg.saturation_share):
            scenario = "overbooked_affected"
        elif roll < cfg.overbooking_rate:
            scenario = "overbooked_saturated"
        elif roll < cfg.overbooking_rate + cfg.plea_other_rate:
            scenario = "plea_other_case"
        else:
            scenario = "identical"

        prior_conviction = self.rng.random() < 0.35
        if scenario.startswith("overbooked"):
            pv = self.rng.randint(0, 1)
        else:
            pv = self.rng.choices((0, 1, 2), weights=(70, 20, 10))[0]

        charges, dispositions, conviction_idx = self._plan_charges(scenario, disposed)
        cell_kind = {"overbooked_affected": "low", "overbooked_saturated": "top"}.get(scenario)
        fta, nca = self._draw_scores(person.group, cell_kind)

        violent = any(self.engine.catalog.is_violent(c) for c in charges)
        factors = record_factors_like(person, arrest, prior_conviction, pv, violent)
        nvca = nvca_flag_value(factors, self.engine.weights)
        result = assess(SubScores(fta, nca, nvca), charges, False, self.engine.dmf, self.engine.catalog)

        row = self._psa_row(person, arrest, fta, nca, nvca, charges, prior_conviction, pv)
        row["recorded_exclusion"] = result.exclusion
        row["recorded_bumpup"] = result.bumpup
        row["recorded_recommendation"] = result.final
        self.psa_rows.append(row)
        self.base_row_ids.append(len(self.psa_rows) - 1)

        matched_numbers = []
        if not unmatched:
            matched_numbers.append(self._emit_case(person, arrest, charges, dispositions))
            if self.rng.random() < cfg.twin_rate:
                matched_numbers.append(self._emit_case(person, arrest, charges, dispositions))
            if self.rng.random() < cfg.decoy_rate:
                self._emit_decoy(person, arrest, charges)

        convicted = [c for i, c in enumerate(charges) if i in conviction_idx] if disposed else []
        self.truth_rows.append({
            "record_id": row["record_id"],
            "kind": "base",
            "scenario": "unmatched" if unmatched else scenario,
            "group": person.group,
            "true_match": ";".join(matched_numbers),
            "disposed": disposed,
            "conviction_charges": join_charges(convicted),
            "affected": bool(scenario == "overbooked_affected" and disposed and not unmatched),
            "duplicate_of": "",
        })

    def _plan_charges(self, scenario: str, disposed: bool):
        """Charge list, dispositions, and the set of convicted indexes.

        Dispositions are planned for the disposed case; when the record is
        not disposed one slot is blanked afterwards.
        """
        rng = self.rng
        pools = self.pools
        neutrals = pools["neutral_misdemeanors"] + pools["neutral_felonies"]
        charges: list[ChargeCode] = []
        dispositions: list[int | None] = []
        convicted: set[int] = set()

        def add(text: str, code: int | None, conviction: bool):
            charges.append(self._charge(text))
            dispositions.append(code)
            if conviction:
                convicted.add(len(charges) - 1)

        if scenario == "overbooked_affected":
            pool = pools["bumpup_nonviolent"] if rng.random() < 0.5 else pools["exclusion"]
            add(rng.choice(pool), 30, False)
            for _ in range(rng.randint(0, 2)):
                add(rng.choice(neutrals), self._conviction_code(), True)
        elif scenario == "overbooked_saturated":
            pool = pools["exclusion"] if rng.random() < 0.5 else pools["bumpup_nonviolent"]
            add(rng.choice(pool), 30, False)
            for _ in range(rng.randint(1, 2)):
                add(rng.choice(neutrals), self._conviction_code(), True)
        elif scenario == "plea_other_case":
            add(rng.choice(pools["neutral_misdemeanors"]), 72, False)
            for _ in range(rng.randint(0, 1)):
                add(rng.choice(pools["neutral_misdemeanors"]), 30, False)
        else:  # identical
            pool = neutrals + pools["violent"]
            k = rng.randint(1, 3)
            picks = [rng.choice(pool) for _ in range(k)]
            if rng.random() < self.cfg.companion_zero_share:
                # plea-code encoding: the pleaded charge is an inert
                # misdemeanor; its zero-coded companions are the convictions
                add(rng.choice(pools["neutral_misdemeanors"]), 72, False)
                for text in picks:
                    add(text, 0, True)
            else:
                for text in picks:
                    add(text, self._conviction_code(), True)

        if not disposed:
            pending = rng.randrange(len(charges))
            dispositions[pending] = None
            convicted.discard(pending)
        return charges, dispositions, convicted

    def _emit_case(self, person: _Person, psa_arrest: date, charges, dispositions) -> str:
        offset = self.rng.choices((-1, 0, 1, 2), weights=(5, 80, 10, 5))[0]
        number = self._next_court_number()
        self.court_rows.append({
            "court_number": number,
            "sfid": person.sfid,
            "name": person.name,
            "dob": person.dob,
            "arrest_date": psa_arrest + timedelta(days=offset),
            "race": self._draw_race(person),
            "booking_charges": join_charges(charges),
            "filed_charges": join_charges(charges),
            "dispositions": ";".join("" if d is None else str(d) for d in dispositions),
        })
        return number

    def _emit_decoy(self, person: _Person, psa_arrest: date, booked):
        booked_strings = {c.raw for c in booked}
        decoys = [self._charge(t) for t in self.pools["neutral_misdemeanors"] if t not in booked_strings][:2]
        if not decoys:
            return
        offset = self.rng.choices((-1, 0, 1, 2), weights=(5, 80, 10, 5))[0]
        self.court_rows.append({
            "court_number": self._next_court_number(),
            "sfid": person.sfid,
            "name": person.name,
            "dob": person.dob,
            "arrest_date": psa_arrest + timedelta(days=offset),
            "race": self._draw_race(person),
            "booking_charges": join_charges(decoys),
            "filed_charges": join_charges(decoys),
            "dispositions": ";".join("30" for _ in decoys),
        })

    def _psa_row(self, person: _Person, arrest: date, fta, nca, nvca, charges, prior_conviction, pv) -> dict:
        age = (arrest - person.dob).days // 365
        return {
            "record_id": self._next_record_id(),
            "sfid": person.sfid,
            "name": person.name,
            "dob": person.dob,
            "arrest_date": arrest,
            "psa_date": arrest + timedelta(days=self.rng.choices((0, 1), weights=(85, 15))[0]),
            "fta": fta,
            "nca": nca,
            "nvca_flag": nvca,
            "booking_charges": join_charges(charges),
            "age_at_arrest": age,
            "prior_conviction": prior_conviction,
            "prior_violent_convictions": pv,
            "recorded_exclusion": "",
            "recorded_bumpup": "",
            "recorded_recommendation": "",
        }


def record_factors_like(person: _Person, arrest: date, prior_conviction: bool, pv: int, violent: bool):
    """Factors as the audit will reconstruct them from the record row."""
    return RiskFactors(
        age_at_arrest=(arrest - person.dob).days // 365,
        prior_conviction=prior_conviction,
        prior_violent_convictions=pv,
        current_offense_violent=violent,
    )


def generate(config: GeneratorConfig, engine: EngineConfig | None = None) -> SynthDataset:
    engine = engine or load_engine_config()
    return _Generator(config, engine).run()


def write_dataset(dataset: SynthDataset, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    paths = {
        "psa_records": out / "psa_records.csv",
        "court_cases": out / "court_cases.csv",
        "ground_truth": out / "ground_truth.csv",
    }
    write_csv(paths["psa_records"], PSA_COLUMNS, dataset.psa_rows)
    write_csv(paths["court_cases"], COURT_COLUMNS, dataset.court_rows)
    write_csv(paths["ground_truth"], GROUND_TRUTH_COLUMNS, dataset.truth_rows)
    return paths
