import itertools
import math
import random

import pytest
from hypothesis import given, strategies as st

from psa_audit.counterfactual import AuditPair
from psa_audit.engine import PsaResult, SubScores, SupervisionLevel
from psa_audit.errors import DegenerateInput, EmptyInput, LengthMismatch
from psa_audit.linkage import CourtCase
from psa_audit.stats import (
    _midranks,
    agreement_rate,
    bonferroni,
    initial_distribution,
    proportion_affected,
    race_consistency,
    rate_table,
    two_proportion_test,
    wilcoxon_rank_sum,
)

L = SupervisionLevel


def result(nvca=False, exclusion=False, bumpup=False, initial=L.OR_NAS, final=None):
    final = final if final is not None else (L.RELEASE_NOT_RECOMMENDED if exclusion else initial)
    return PsaResult(
        subscores=SubScores(2, 3, nvca),
        exclusion=exclusion,
        exclusion_reason="x" if exclusion else "",
        bumpup=bumpup,
        bumpup_reason="b" if bumpup else "",
        initial=initial,
        final=final,
    )


def pair(record_id, booking, conviction):
    return AuditPair(
        record_id=record_id,
        booking_result=booking,
        conviction_result=conviction,
        exclusion_lost=booking.exclusion and not conviction.exclusion,
        bumpup_lost=booking.bumpup and not conviction.bumpup,
        nvca_lost=booking.subscores.nvca_flag and not conviction.subscores.nvca_flag,
        recommendation_delta=int(booking.final) - int(conviction.final),
        excluded_by_sensitivity=False,
    )


# ---------------------------------------------------------------------------
# two-proportion z-test


def test_two_proportion_equal_rates():
    z, p = two_proportion_test(20, 100, 10, 50)
    assert z == 0.0 and p == 1.0


def test_two_proportion_frozen_hand_values():
    # (30/100 vs 10/100): z = sqrt(12.5), p = erfc(2.5); values computed
    # independently with 30-digit arithmetic
    z, p = two_proportion_test(30, 100, 10, 100)
    assert abs(z - 3.5355339059327378) < 1e-10
    assert abs(p - 4.069520174449589e-04) < 1e-14
    z2, p2 = two_proportion_test(45, 120, 30, 150)
    assert abs(z2 - 3.19012900631355) < 1e-10
    assert abs(p2 - 1.4220929725245871e-03) < 1e-13


def test_two_proportion_degenerate():
    with pytest.raises(DegenerateInput):
        two_proportion_test(0, 10, 0, 10)
    with pytest.raises(DegenerateInput):
        two_proportion_test(10, 10, 10, 10)
    with pytest.raises(DegenerateInput):
        two_proportion_test(1, 0, 1, 10)


def test_two_proportion_counts_validated():
    with pytest.raises(ValueError):
        two_proportion_test(11, 10, 1, 10)


@given(
    st.integers(0, 40), st.integers(1, 40), st.integers(0, 40), st.integers(1, 40)
)
def test_two_proportion_symmetry(x1, n1, x2, n2):
    x1, x2 = min(x1, n1), min(x2, n2)
    try:
        z, p = two_proportion_test(x1, n1, x2, n2)
    except DegenerateInput:
        return
    z_swapped, p_swapped = two_proportion_test(x2, n2, x1, n1)
    assert math.isclose(z_swapped, -z, abs_tol=1e-12)
    assert math.isclose(p_swapped, p, abs_tol=1e-12)


# ---------------------------------------------------------------------------
# Wilcoxon rank-sum


def exact_two_sided_p(a, b):
    """Permutation enumeration of the rank-sum statistic: probability of a
    deviation from the null mean at least as large as observed."""
    pooled = list(a) + list(b)
    n1, n = len(a), len(a) + len(b)
    ranks = _midranks(pooled)
    mean = n1 * (n + 1) / 2.0
    obs = abs(sum(ranks[:n1]) - mean)
    hits = total = 0
    for combo in itertools.combinations(range(n), n1):
        total += 1
        if abs(sum(ranks[i] for i in combo) - mean) >= obs - 1e-12:
            hits += 1
    return hits / total


def test_wilcoxon_identical_samples():
    z, p = wilcoxon_rank_sum([1, 2, 3, 4], [1, 2, 3, 4])
    assert z == 0.0 and p == 1.0


def test_wilcoxon_degenerate_all_identical():
    with pytest.raises(DegenerateInput):
        wilcoxon_rank_sum([2, 2], [2, 2])
    with pytest.raises(DegenerateInput):
        wilcoxon_rank_sum([], [1, 2])


def test_wilcoxon_tie_correction_shrinks_variance():
    # identical z numerator; the tied sample must standardize to a larger |z|
    tied = [1, 1, 2, 2, 3, 3, 4, 4]
    z_tied, _ = wilcoxon_rank_sum(tied[:4], tied[4:], continuity=False)
    untied = [1, 2, 3, 4, 5, 6, 7, 8]
    z_untied, _ = wilcoxon_rank_sum(untied[:4], untied[4:], continuity=False)
    # rank sums coincide (ranks are midranks of the same pattern); only the
    # variance differs, and the tie-corrected variance is strictly smaller
    assert abs(z_tied) > abs(z_untied)


def test_wilcoxon_exact_agreement_large_homogeneous():
    # shifted ordinal samples large enough for the approximation to track
    # enumeration closely (enumeration stays feasible at 8v8)
    a = [1, 1, 2, 2, 2, 3, 3, 4]
    b = [2, 2, 3, 3, 3, 4, 4, 4]
    z, p = wilcoxon_rank_sum(a, b)
    pe = exact_two_sided_p(a, b)
    assert abs(p - pe) < 0.05


def test_wilcoxon_z_statistic_formula_against_direct_computation():
    rng = random.Random(99)
    for _ in range(200):
        n1, n2 = rng.randint(2, 10), rng.randint(2, 10)
        a = [rng.randint(1, 4) for _ in range(n1)]
        b = [rng.randint(1, 4) for _ in range(n2)]
        if all(v == (a + b)[0] for v in a + b):
            continue
        z, p = wilcoxon_rank_sum(a, b)
        # independent computation of the same closed form
        pooled = a + b
        n = n1 + n2
        srt = sorted(pooled)
        rank_of = {}
        i = 0
        while i < n:
            j = i
            while j + 1 < n and srt[j + 1] == srt[i]:
                j += 1
            rank_of[srt[i]] = (i + j) / 2 + 1
            i = j + 1
        w = sum(rank_of[v] for v in a)
        mu = n1 * (n + 1) / 2
        ties = sum(t**3 - t for t in (srt.count(v) for v in set(srt)))
        var = n1 * n2 / 12 * ((n + 1) - ties / (n * (n - 1)))
        d = w - mu
        d = math.copysign(max(abs(d) - 0.5, 0.0), d) if d else 0.0
        assert math.isclose(z, d / math.sqrt(var), abs_tol=1e-12)
        assert math.isclose(p, min(1.0, math.erfc(abs(z) / math.sqrt(2))), abs_tol=1e-12)


@given(
    st.lists(st.integers(1, 4), min_size=1, max_size=10),
    st.lists(st.integers(1, 4), min_size=1, max_size=10),
)
def test_wilcoxon_symmetry(a, b):
    try:
        z, p = wilcoxon_rank_sum(a, b)
    except DegenerateInput:
        return
    z_swapped, p_swapped = wilcoxon_rank_sum(b, a)
    assert math.isclose(z_swapped, -z, abs_tol=1e-12)
    assert math.isclose(p_swapped, p, abs_tol=1e-12)


# ---------------------------------------------------------------------------
# Bonferroni


def test_bonferroni_single_test_reduces_to_alpha():
    assert bonferroni([0.04], 0.05) == [True]
    assert bonferroni([0.06], 0.05) == [False]


def test_bonferroni_worked_example():
    assert bonferroni([0.0005, 0.02], 0.001) == [True, False]


def test_bonferroni_all_ones():
    assert bonferroni([1.0, 1.0, 1.0], 0.05) == [False, False, False]


def test_bonferroni_alpha_validated():
    with pytest.raises(ValueError):
        bonferroni([0.01], 0.0)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=6))
def test_bonferroni_monotone_in_alpha(ps):
    lo = bonferroni(ps, 0.01)
    hi = bonferroni(ps, 0.05)
    assert all(h or not l for l, h in zip(lo, hi))


# ---------------------------------------------------------------------------
# agreement rate


def test_agreement_identical():
    assert agreement_rate([1, 2, 3], [1, 2, 3]) == 1.0


def test_agreement_one_in_thousand():
    a = [True] * 1000
    b = [True] * 999 + [False]
    assert agreement_rate(a, b) == 0.999


def test_agreement_mask_changes_denominator():
    rep = [True, False, True, True]
    rec = [True, True, True, False]
    mask = [True, False, True, True]  # drop the second row
    assert agreement_rate(rep, rec, mask) == 2 / 3


def test_agreement_length_mismatch():
    with pytest.raises(LengthMismatch):
        agreement_rate([1], [1, 2])
    with pytest.raises(LengthMismatch):
        agreement_rate([1, 2], [1, 2], mask=[True])
    with pytest.raises(EmptyInput):
        agreement_rate([1], [1], mask=[False])


# ---------------------------------------------------------------------------
# tables


def test_rate_table_identical_pairs_zero_differences():
    p = [pair(f"R{i}", result(), result()) for i in range(5)]
    t = rate_table(p)
    for row in t.rows:
        assert row.difference == 0.0
        if row.component == "recommendation":
            assert row.booking == 1.0  # mean rank of OR-NAS
    assert t.n == 5


def test_rate_table_hand_counted_fixture():
    pairs = [
        pair("R0", result(exclusion=True), result()),
        pair("R1", result(), result()),
        pair("R2", result(), result()),
        pair("R3", result(), result()),
    ]
    t = rate_table(pairs)
    by = {r.component: r for r in t.rows}
    assert by["exclusion"].booking == 0.25
    assert by["exclusion"].conviction == 0.0
    assert by["exclusion"].difference == 0.25
    # booking finals: [4,1,1,1] mean 1.75; conviction all 1
    assert by["recommendation"].booking == 1.75
    assert by["recommendation"].conviction == 1.0


def test_rate_table_grouped():
    pairs = [pair(f"R{i}", result(exclusion=(i < 2)), result()) for i in range(4)]
    groups = {"R0": "B", "R1": "non-B", "R2": "B", "R3": "non-B"}
    tables = rate_table(pairs, groups)
    assert set(tables) == {"all", "B", "non-B"}
    b = {r.component: r for r in tables["B"].rows}
    assert b["exclusion"].booking == 0.5


def test_rate_table_empty_raises():
    with pytest.raises(EmptyInput):
        rate_table([])


def test_proportion_affected_wrong_direction_not_counted():
    up = pair("R0", result(initial=L.OR_NAS), result(initial=L.OR_MINIMUM, final=L.OR_MINIMUM))
    assert up.recommendation_delta == -1
    t = proportion_affected([up])
    by = {r.component: r for r in t.rows}
    assert by["recommendation"].fraction == 0.0


def test_proportion_affected_exact_fixture():
    pairs = []
    for i in range(100):
        if i < 27:
            pairs.append(pair(f"R{i}", result(bumpup=True, initial=L.OR_NAS, final=L.OR_MINIMUM), result()))
        else:
            pairs.append(pair(f"R{i}", result(), result()))
    t = proportion_affected(pairs)
    by = {r.component: r for r in t.rows}
    assert by["recommendation"].fraction == 0.27
    assert by["bumpup"].fraction == 0.27
    assert by["exclusion"].fraction == 0.0


def test_proportion_affected_zero_delta_pairs_only_scale_the_denominator():
    affected = [pair(f"A{i}", result(bumpup=True, initial=L.OR_NAS, final=L.OR_MINIMUM), result())
                for i in range(3)]
    inert = [pair(f"I{i}", result(), result()) for i in range(9)]
    small = {r.component: r for r in proportion_affected(affected).rows}
    big = {r.component: r for r in proportion_affected(affected + inert).rows}
    for component in small:
        assert big[component].count == small[component].count
        assert big[component].fraction == small[component].count / 12


def test_proportion_affected_saturation_counts_component_not_recommendation():
    sat = pair(
        "R0",
        result(exclusion=True, initial=L.RELEASE_NOT_RECOMMENDED),
        result(initial=L.RELEASE_NOT_RECOMMENDED),
    )
    t = proportion_affected([sat])
    by = {r.component: r for r in t.rows}
    assert by["exclusion"].fraction == 1.0
    assert by["recommendation"].fraction == 0.0


def test_initial_distribution_single_group_sums_to_one():
    pairs = [pair(f"R{i}", result(initial=L(1 + i % 3)), result()) for i in range(9)]
    hists = initial_distribution(pairs)
    assert set(hists) == {"all"}
    assert sum(hists["all"].fractions) == pytest.approx(1.0)
    assert sum(hists["all"].counts) == 9


def test_initial_distribution_planted_group_shift_recovered():
    pairs, groups = [], {}
    for i in range(200):
        initial = L.SFPDP_ACM if i % 2 else L.OR_NAS
        rid = f"R{i}"
        pairs.append(pair(rid, result(initial=initial), result()))
        groups[rid] = "B" if i % 2 else "non-B"
    hists = initial_distribution(pairs, groups)
    assert hists["B"].fractions[2] == 1.0
    assert hists["non-B"].fractions[0] == 1.0


def test_initial_distribution_empty_group_flagged():
    pairs = [pair("R0", result(), result())]
    hists = initial_distribution(pairs, {"R0": "B"}, expected_groups=["B", "non-B"])
    assert hists["non-B"].empty
    assert hists["non-B"].counts == (0, 0, 0, 0)


# ---------------------------------------------------------------------------
# race-designation consistency


def _case(sfid, race, n):
    return CourtCase(court_number=f"C{sfid}{n}", sfid=sfid, race=race)


def test_consistency_stable_labels_give_100_diagonal():
    cases = [_case("S1", "B", i) for i in range(3)] + [_case("S2", "W", i) for i in range(2)]
    m = race_consistency(cases)
    b = dict(zip(m.categories, m.rows["B"]))
    w = dict(zip(m.categories, m.rows["W"]))
    assert b["B"] == 100.0 and b["W"] == 0.0
    assert w["W"] == 100.0


def test_consistency_hand_computed_fixture():
    # individual 1: B, B, W; individual 2: B, B
    cases = [
        _case("S1", "B", 0), _case("S1", "B", 1), _case("S1", "W", 2),
        _case("S2", "B", 0), _case("S2", "B", 1),
    ]
    m = race_consistency(cases)
    b = dict(zip(m.categories, m.rows["B"]))
    assert b["B"] == pytest.approx(100 * (2 / 3 + 1) / 2)  # 83.33
    assert b["W"] == pytest.approx(100 * (1 / 3 + 0) / 2)  # 16.67
    # W row: only individual 1 qualifies
    w = dict(zip(m.categories, m.rows["W"]))
    assert w["B"] == pytest.approx(100 * 2 / 3)
    assert w["W"] == pytest.approx(100 * 1 / 3)
    assert m.individuals == {"B": 2, "W": 1}


def test_consistency_single_record_individuals_excluded():
    base = [
        _case("S1", "B", 0), _case("S1", "B", 1), _case("S1", "W", 2),
        _case("S2", "B", 0), _case("S2", "B", 1),
    ]
    with_single = base + [_case("S3", "H", 0)]
    assert race_consistency(base) == race_consistency(with_single)


def test_consistency_missing_race_stays_in_denominator():
    cases = [_case("S1", "B", 0), _case("S1", "", 1)]
    m = race_consistency(cases)
    b = dict(zip(m.categories, m.rows["B"]))
    assert b["B"] == 50.0
    assert sum(m.rows["B"]) == 50.0  # missing has no column; row does not sum to 100


def test_consistency_diagonal_tracks_label_stability():
    # individuals whose records carry a stable label 98% of the time produce
    # a diagonal entry near 98
    rng = random.Random(12)
    cases = []
    for i in range(400):
        sfid = f"S{i}"
        for n in range(rng.randint(2, 4)):
            race = "B" if rng.random() < 0.98 else rng.choice(["W", "O", "U"])
            cases.append(_case(sfid, race, n))
    m = race_consistency(cases)
    diag = dict(zip(m.categories, m.rows["B"]))["B"]
    assert abs(diag - 98.0) < 1.5


def test_rate_table_values_in_range():
    rng = random.Random(77)
    levels = list(SupervisionLevel)
    pairs = []
    for i in range(300):
        b = result(nvca=rng.random() < 0.3, exclusion=rng.random() < 0.2,
                   bumpup=rng.random() < 0.3, initial=rng.choice(levels))
        c = result(nvca=rng.random() < 0.2, exclusion=rng.random() < 0.1,
                   bumpup=rng.random() < 0.2, initial=rng.choice(levels))
        pairs.append(pair(f"R{i}", b, c))
    t = rate_table(pairs)
    for row in t.rows:
        if row.component == "recommendation":
            assert 1.0 <= row.booking <= 4.0 and 1.0 <= row.conviction <= 4.0
            assert -3.0 <= row.difference <= 3.0
        else:
            assert 0.0 <= row.booking <= 1.0 and 0.0 <= row.conviction <= 1.0
            assert -1.0 <= row.difference <= 1.0
    a = proportion_affected(pairs)
    for row in a.rows:
        assert 0.0 <= row.fraction <= 1.0
    hists = initial_distribution(pairs)
    assert sum(hists["all"].counts) == len(pairs)
