import math
import warnings
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trotterpath.exceptions import (
    BudgetExceededError,
    DomainError,
    NoZeroAreaPathError,
    NotRepresentableError,
    UnsupportedDimensionError,
)
from trotterpath.gridpath import (
    LatticePath,
    deviation_sum,
    enumerate_paths,
    error_triplet,
    signed_area,
)
from trotterpath.planners import (
    RUTH_COEFFICIENTS,
    GateSequence,
    SplitCoefficients,
    compute_CD,
    continuous_2T_region,
    path_shape_factors,
    plan,
    plan_1T,
    plan_2D,
    plan_2O,
    plan_2T,
    plan_best_continuous_2T,
    plan_naive_alternation,
    plan_ruth,
    split_from_path,
    symmetrize_2D,
)


def test_2O_golden():
    assert str(plan_2O(4, 3)) == "BAAABBA"


def test_2T_golden():
    assert str(plan_2T(4, 3).lattice_path()) == "AABBBAA"


def test_2T_12_8_is_6A_8B_6A():
    assert plan_2T(12, 8).lattice_path().runs() == [(0, 6), (1, 8), (0, 6)]


def test_2T_both_odd():
    with pytest.raises(NotRepresentableError, match="both odd"):
        plan_2T(3, 3)


def test_2T_mirrored_form():
    assert str(plan_2T(3, 4).lattice_path()) == "BBAAABB"


def test_2T_reduce():
    seq = plan_2T(8, 2, n=1, reduce=True)
    assert seq.reps == 2
    assert str(seq.lattice_path()) == "AABAA" * 2


def test_2D_goldens():
    assert str(plan_2D((4, 3))) == "ABABABA"
    assert str(plan_2D((3, 4, 5))) == "CBACBACBCABC"
    assert str(plan_2D((6, 4, 2))) == "ABACBA" * 2


def test_2D_repeats_reduced_unit():
    assert str(plan_2D((2, 2), n=3)) == "AB" * 6


def test_2D_bad_tie_break():
    with pytest.raises(DomainError):
        plan_2D((4, 3), tie_break="random")


def test_2O_small_square():
    assert str(plan_2O(2, 2)) == "ABBA"


def test_2O_parity_error_mentions_doubled_grid():
    with pytest.raises(NoZeroAreaPathError, match="doubled"):
        plan_2O(3, 3)


def test_2O_budget():
    with pytest.raises(BudgetExceededError, match="n\\^10"):
        plan_2O(12, 8, n=20)


def test_2O_larger_grid_is_zero_area():
    path = plan_2O(12, 8)
    assert signed_area(path) == 0
    assert path.targets == (12, 8)


def _brute_2O(p, q):
    best = None
    for path in enumerate_paths(p, q):
        t = error_triplet(path)
        if t.e2 == 0:
            key = t.moment_objective
            if best is None or key < best:
                best = key
    return best


@pytest.mark.parametrize(
    "p,q", [(p, q) for p in range(1, 10) for q in range(1, 10) if p + q <= 12 and p * q % 2 == 0]
)
def test_2O_is_optimal_among_zero_area_paths(p, q):
    path = plan_2O(p, q)
    assert signed_area(path) == 0
    assert error_triplet(path).moment_objective == _brute_2O(p, q)


@pytest.mark.parametrize("p,q", [(p, q) for p in range(1, 11) for q in range(1, 11) if p + q <= 12])
def test_2D_minimises_total_distance(p, q):
    best = min(deviation_sum(x) for x in enumerate_paths(p, q))
    assert deviation_sum(plan_2D((p, q))) == best


@pytest.mark.parametrize("p,q", [(p, q) for p in range(1, 12) for q in range(1, 12)
                                 if p + q <= 12 and math.gcd(p, q) == 1])
def test_2D_shape_bound(p, q):
    seq = plan("2D", (p, q))
    path = seq.lattice_path(2 if seq.meta.get("symmetrized") else 1)
    P, Q = path.targets
    assert signed_area(path) == 0
    assert path_shape_factors(path)[2] <= min(P * P + 4 * Q * Q, Q * Q + 4 * P * P)


def test_symmetrize_requires_odd_weights():
    with pytest.raises(NotRepresentableError):
        symmetrize_2D((4, 3))


def test_symmetrize_structure():
    seq = symmetrize_2D((3, 1), n=2)
    assert seq.reps == 1
    path = seq.lattice_path()
    half = plan_2D((3, 1))
    assert str(path) == str(half) + str(half.reversed())
    assert signed_area(path) == 0


def test_symmetrize_odd_n_uses_half_gates():
    seq = symmetrize_2D((3, 1), n=1)
    assert not seq.integral
    assert seq.lattice_path(2).targets == (6, 2)


def test_1T():
    seq = plan_1T((1, 1))
    assert str(seq.lattice_path()) == "AB"
    assert error_triplet(seq.lattice_path()).e2 == Fraction(1, 2)


def test_1T_gcd_reduction():
    assert str(plan_1T((2, 2), n=2).lattice_path()) == "AB" * 4
    assert str(plan_1T((2, 2), n=2, reduce=False).lattice_path()) == "AABB" * 2


def test_1T_always_integral():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        seq = plan_1T((4, 3), n=2)
    assert seq.integral
    assert seq.lattice_path().targets == (8, 6)


def test_naive_alternation():
    assert str(plan_naive_alternation(4, 3)) == "ABABABA"
    assert str(plan_naive_alternation(1, 3)) == "ABBB"
    assert str(plan_naive_alternation(1, 1, n=2)) == "ABAB"


def test_ruth():
    seq = plan_ruth(6, 7, n=24)
    a = sum(c for k, c in RUTH_COEFFICIENTS if k == 0)
    b = sum(c for k, c in RUTH_COEFFICIENTS if k == 1)
    assert a == b == 1
    assert not seq.integral
    assert seq.reps == 24
    with pytest.raises(NotRepresentableError):
        seq.lattice_path()


@pytest.mark.parametrize("p,q,region", [(4, 2, "a"), (3, 2, "b"), (2, 3, "c"), (1, 3, "d")])
def test_continuous_regions(p, q, region):
    assert continuous_2T_region(p, q) == region
    outer = plan_best_continuous_2T(p, q).entries[0][0]
    assert outer == (0 if region in "ab" else 1)


def test_split_coefficients_for_2T():
    # e^{A/2} e^{B} e^{A/2}: one B block, A split in halves
    split = split_from_path(LatticePath.from_string("AABBBAA"))
    assert split.a == (Fraction(0), Fraction(1))
    C, D, f = compute_CD(split, 4, 3)
    # closed form -(pq/24)(p, 2q) gives C = -1, D = -2 and f = p^2 + 4 q^2
    assert (C, D) == (Fraction(-1), Fraction(-2))
    assert f == 4**2 + 4 * 3**2


def test_split_matches_moments_on_symmetric_paths():
    for text in ["AABBBAA", "ABABABA", "ABBABBA", "BAABAAB"]:
        path = LatticePath.from_string(text)
        p, q = path.targets
        assert compute_CD(split_from_path(path), p, q) == path_shape_factors(path)


def test_split_validation():
    with pytest.raises(DomainError):
        SplitCoefficients((Fraction(1, 2),), (Fraction(1),))
    with pytest.raises(DomainError):
        SplitCoefficients((Fraction(1), Fraction(0)), (Fraction(2),))


def test_gate_sequence_validation():
    with pytest.raises(DomainError):
        GateSequence("x", (1, 1), 1, ((0, Fraction(1)),))
    with pytest.raises(DomainError):
        GateSequence("x", (1, 1), 0, ((0, 1), (1, 1)))


def test_gate_sequence_json_round_trip():
    for seq in [plan("2O", (4, 3)), plan("ruth", (6, 7), 2), plan("2D", (3, 1), 1), plan_2T(8, 2, reduce=True)]:
        again = GateSequence.from_json(seq.to_json())
        assert again == seq


def test_switchings_and_steps():
    seq = plan("naive", (1, 1), 3)
    assert str(seq.lattice_path()) == "ABABAB"
    assert seq.switchings == 5
    assert plan("2D", (4, 3), 5).trotter_steps == 35


def test_dispatch_errors():
    with pytest.raises(UnsupportedDimensionError):
        plan("2T", (2, 2, 2))
    with pytest.raises(DomainError):
        plan("4X", (2, 2))
    with pytest.raises(DomainError):
        plan("2D", (0, 2))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 9), st.integers(1, 9), st.integers(1, 3))
def test_2D_path_always_lands_on_target(p, q, n):
    seq = plan("2D", (p, q), n)
    assert sum(c for k, c in seq.entries if k == 0) == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 7).map(lambda x: 2 * x), st.integers(1, 13), st.integers(1, 2))
def test_2T_moment_law(p, q, n):
    t = error_triplet(plan_2T(p, q, n).lattice_path()).normalized(n)
    scale = Fraction(p * q, 24 * n * n)
    assert (t.e2, t.e3a, t.e3b) == (0, -scale * p, -scale * 2 * q)
