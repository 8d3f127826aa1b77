"""Summary tables and hypothesis tests over audit pairs.

All aggregations are pure reductions in a fixed order, so repeated runs
over the same pairs produce bit-identical tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .counterfactual import AuditPair
from .errors import DegenerateInput, EmptyInput, LengthMismatch
from .linkage import CourtCase

RACE_CATEGORIES = ("B", "C", "F", "H", "I", "J", "O", "U", "W")

#: Significance level used for table markers; differences are starred when
#: significant after a Bonferroni correction across the table's tests.
DEFAULT_ALPHA = 0.001


def _normal_two_sided_p(z: float) -> float:
    return math.erfc(abs(z) / math.sqrt(2.0))


def two_proportion_test(x1: int, n1: int, x2: int, n2: int, *, pooled: bool = True) -> tuple[float, float]:
    """Two-sample z-test for a difference of proportions.

    Returns (z, two-sided p).  Uses the pooled-variance form by default;
    the unpooled form is available for sensitivity checks.  Raises
    DegenerateInput when the pooled proportion is 0 or 1, where the
    statistic is undefined.
    """
    if n1 <= 0 or n2 <= 0:
        raise DegenerateInput("sample sizes must be positive")
    if not (0 <= x1 <= n1 and 0 <= x2 <= n2):
        raise ValueError("counts must satisfy 0 <= x <= n")
    p1, p2 = x1 / n1, x2 / n2
    pool = (x1 + x2) / (n1 + n2)
    if pool in (0.0, 1.0):
        raise DegenerateInput("pooled proportion is 0 or 1; p-value undefined")
    if pooled:
        se = math.sqrt(pool * (1.0 - pool) * (1.0 / n1 + 1.0 / n2))
    else:
        se = math.sqrt(p1 * (1.0 - p1) / n1 + p2 * (1.0 - p2) / n2)
        if se == 0.0:
            raise DegenerateInput("unpooled standard error is zero")
    z = (p1 - p2) / se
    return z, _normal_two_sided_p(z)


def _midranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def wilcoxon_rank_sum(a: Sequence[float], b: Sequence[float], *, continuity: bool = True) -> tuple[float, float]:
    """Rank-sum test with midranks for ties.

    Returns (z, two-sided p) from the normal approximation with
    tie-corrected variance and, by default, a continuity correction.
    The standardized statistic is reported so that swapping the samples
    negates it.  Raises DegenerateInput when every value across both
    samples is identical.
    """
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise DegenerateInput("both samples must be non-empty")
    pooled = list(a) + list(b)
    if all(v == pooled[0] for v in pooled):
        raise DegenerateInput("all values identical across both samples")
    n = n1 + n2
    ranks = _midranks(pooled)
    w = sum(ranks[:n1])
    mean = n1 * (n + 1) / 2.0

    tie_term = 0.0
    for v in set(pooled):
        t = pooled.count(v)
        tie_term += t**3 - t
    variance = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    sd = math.sqrt(variance)

    d = w - mean
    if continuity:
        d = math.copysign(max(abs(d) - 0.5, 0.0), d) if d != 0.0 else 0.0
    z = d / sd
    return z, min(1.0, _normal_two_sided_p(z))


def bonferroni(pvalues: Sequence[float], alpha: float) -> list[bool]:
    """Per-test significance under a Bonferroni correction.

    A test is flagged when p <= alpha / m; the boundary case counts as
    significant so that a family of exactly-threshold p-values behaves
    like the single-test rule it reduces to at m=1.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must be in (0, 1)")
    m = len(pvalues)
    return [p <= alpha / m for p in pvalues]


def agreement_rate(reproduced: Sequence, recorded: Sequence, mask: Sequence[bool] | None = None) -> float:
    """Fraction of positions where the two columns agree, over the masked
    subset when a mask is given."""
    if len(reproduced) != len(recorded):
        raise LengthMismatch(f"columns differ in length: {len(reproduced)} vs {len(recorded)}")
    if mask is None:
        mask = [True] * len(reproduced)
    elif len(mask) != len(reproduced):
        raise LengthMismatch("mask length does not match columns")
    total = sum(1 for m in mask if m)
    if total == 0:
        raise EmptyInput("mask selects no rows")
    agree = sum(1 for r, c, m in zip(reproduced, recorded, mask) if m and r == c)
    return agree / total


# ---------------------------------------------------------------------------
# audit tables


@dataclass(frozen=True)
class RateRow:
    component: str
    booking: float
    conviction: float
    difference: float
    statistic: float | None
    p_value: float | None
    significant: bool | None


@dataclass(frozen=True)
class RateTable:
    scope: str
    n: int
    rows: tuple[RateRow, ...]


def _pair_fields(pairs: Sequence[AuditPair]):
    booking = [p.booking_result for p in pairs]
    conviction = [p.conviction_result for p in pairs]
    return booking, conviction


def _rate_table_one(pairs: Sequence[AuditPair], scope: str, alpha: float) -> RateTable:
    n = len(pairs)
    booking, conviction = _pair_fields(pairs)
    components = [
        ("exclusion", [r.exclusion for r in booking], [r.exclusion for r in conviction]),
        ("bumpup", [r.bumpup for r in booking], [r.bumpup for r in conviction]),
        ("nvca_flag", [r.subscores.nvca_flag for r in booking], [r.subscores.nvca_flag for r in conviction]),
    ]
    rows = []
    tests: list[tuple[float, float] | None] = []
    for name, b_vals, c_vals in components:
        b_rate = sum(b_vals) / n
        c_rate = sum(c_vals) / n
        try:
            z, p = two_proportion_test(sum(b_vals), n, sum(c_vals), n)
            tests.append((z, p))
        except DegenerateInput:
            tests.append(None)
        rows.append((name, b_rate, c_rate))
    b_recs = [int(r.final) for r in booking]
    c_recs = [int(r.final) for r in conviction]
    try:
        z, p = wilcoxon_rank_sum(b_recs, c_recs)
        tests.append((z, p))
    except DegenerateInput:
        tests.append(None)
    rows.append(("recommendation", sum(b_recs) / n, sum(c_recs) / n))

    usable = [t[1] for t in tests if t is not None]
    flags = bonferroni(usable, alpha) if usable else []
    flag_iter = iter(flags)
    out = []
    for (name, b_val, c_val), t in zip(rows, tests):
        if t is None:
            out.append(RateRow(name, b_val, c_val, b_val - c_val, None, None, None))
        else:
            out.append(RateRow(name, b_val, c_val, b_val - c_val, t[0], t[1], next(flag_iter)))
    return RateTable(scope=scope, n=n, rows=tuple(out))


def rate_table(
    pairs: Sequence[AuditPair],
    group: Mapping[str, str] | None = None,
    *,
    alpha: float = DEFAULT_ALPHA,
) -> RateTable | dict[str, RateTable]:
    """Component rates and mean recommendation per charge source.

    With ``group`` (record id to label), returns one table per label plus
    an "all" table; otherwise a single overall table.
    """
    if not pairs:
        raise EmptyInput("no audit pairs")
    if group is None:
        return _rate_table_one(pairs, "all", alpha)
    tables = {"all": _rate_table_one(pairs, "all", alpha)}
    for label in sorted(set(group.values())):
        subset = [p for p in pairs if group.get(p.record_id) == label]
        if subset:
            tables[label] = _rate_table_one(subset, label, alpha)
    return tables


@dataclass(frozen=True)
class AffectedRow:
    component: str
    count: int
    fraction: float


@dataclass(frozen=True)
class AffectedTable:
    scope: str
    n: int
    rows: tuple[AffectedRow, ...]


def _affected_one(pairs: Sequence[AuditPair], scope: str) -> AffectedTable:
    n = len(pairs)
    counts = {
        "exclusion": sum(p.exclusion_lost for p in pairs),
        "bumpup": sum(p.bumpup_lost for p in pairs),
        "nvca_flag": sum(p.nvca_lost for p in pairs),
        "recommendation": sum(p.recommendation_delta > 0 for p in pairs),
    }
    rows = tuple(AffectedRow(k, v, v / n) for k, v in counts.items())
    return AffectedTable(scope=scope, n=n, rows=rows)


def proportion_affected(
    pairs: Sequence[AuditPair],
    group: Mapping[str, str] | None = None,
) -> AffectedTable | dict[str, AffectedTable]:
    """Strictly one-sided change rates: a component held under booking but
    not under conviction charges, and a final recommendation strictly
    higher under booking.  Cases moving the other way do not offset."""
    if not pairs:
        raise EmptyInput("no audit pairs")
    if group is None:
        return _affected_one(pairs, "all")
    tables = {"all": _affected_one(pairs, "all")}
    for label in sorted(set(group.values())):
        subset = [p for p in pairs if group.get(p.record_id) == label]
        if subset:
            tables[label] = _affected_one(subset, label)
    return tables


@dataclass(frozen=True)
class Histogram:
    scope: str
    n: int
    counts: tuple[int, int, int, int]  # levels 1..4

    @property
    def fractions(self) -> tuple[float, ...]:
        if self.n == 0:
            return (0.0, 0.0, 0.0, 0.0)
        return tuple(c / self.n for c in self.counts)

    @property
    def empty(self) -> bool:
        return self.n == 0


def initial_distribution(
    pairs: Sequence[AuditPair],
    group: Mapping[str, str] | None = None,
    *,
    expected_groups: Sequence[str] = (),
) -> dict[str, Histogram]:
    """Histogram of the booking-side initial recommendation, per group.

    ``expected_groups`` labels with no pairs still get a row, flagged
    empty, so a missing group is visible rather than silent.
    """
    labels: dict[str, list[AuditPair]] = {"all": list(pairs)}
    if group is not None:
        for label in sorted(set(group.values()) | set(expected_groups)):
            labels[label] = [p for p in pairs if group.get(p.record_id) == label]
    out = {}
    for label, subset in labels.items():
        counts = [0, 0, 0, 0]
        for p in subset:
            counts[int(p.booking_result.initial) - 1] += 1
        out[label] = Histogram(scope=label, n=len(subset), counts=tuple(counts))
    return out


@dataclass(frozen=True)
class ConsistencyMatrix:
    """Race-designation consistency across each individual's records.

    Row i, column j holds the mean, over multi-record individuals
    designated i at least once, of the percent of their records designated
    j.  Missing designations stay in the denominator but get no column,
    so rows need not sum to 100.
    """

    categories: tuple[str, ...]
    rows: dict[str, tuple[float, ...]]
    individuals: dict[str, int]


def race_consistency(cases: Sequence[CourtCase]) -> ConsistencyMatrix:
    by_person: dict[str, list[str]] = {}
    for c in cases:
        by_person.setdefault(c.sfid, []).append(c.race)
    multi = {sfid: races for sfid, races in by_person.items() if len(races) > 1}

    rows: dict[str, tuple[float, ...]] = {}
    individuals: dict[str, int] = {}
    for cat in RACE_CATEGORIES:
        members = [races for races in multi.values() if cat in races]
        if not members:
            continue
        sums = [0.0] * len(RACE_CATEGORIES)
        for races in members:
            total = len(races)
            for j, target in enumerate(RACE_CATEGORIES):
                sums[j] += races.count(target) / total
        rows[cat] = tuple(100.0 * s / len(members) for s in sums)
        individuals[cat] = len(members)
    return ConsistencyMatrix(categories=RACE_CATEGORIES, rows=rows, individuals=individuals)
