import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import column_oracle, lattice_paths
from trotterpath.exceptions import (
    BudgetExceededError,
    DomainError,
    UnsupportedDimensionError,
)
from trotterpath.gridpath import (
    ErrorTriplet,
    LatticePath,
    deviation_sum,
    diagonal_distance_sq,
    edge_weight,
    enumerate_paths,
    error_triplet,
    path_weight_sum,
    signed_area,
    third_moments,
    total_diagonal_distance,
)


def P(s):
    return LatticePath.from_string(s)


def test_string_round_trip():
    path = P("BAAABBA")
    assert path.targets == (4, 3)
    assert str(path) == "BAAABBA"
    assert LatticePath.from_json(path.to_json()) == path


def test_three_letter_paths():
    path = P("CBACBACBCABC")
    assert path.targets == (3, 4, 5)
    assert path.dims == 3


@pytest.mark.parametrize(
    "text,targets",
    [("ABX1", None), ("AB", (2, 1)), ("A", None)],
)
def test_invalid_paths(text, targets):
    with pytest.raises(DomainError):
        LatticePath.from_string(text, targets)


def test_zero_target_rejected():
    with pytest.raises(DomainError):
        LatticePath((0, 1), (1,))


def test_runs_and_points():
    path = P("AABBBAA")
    assert path.runs() == [(0, 2), (1, 3), (0, 2)]
    assert path.points()[0] == (0, 0)
    assert path.points()[-1] == (4, 3)
    assert len(path.points()) == 8


def test_single_step_triplet():
    # e^A e^B = e^{A+B} (1 + [A,B]/2 + ...)
    assert error_triplet(P("AB")) == ErrorTriplet(Fraction(1, 2), Fraction(1, 3), Fraction(1, 6))
    assert error_triplet(P("BA")).e2 == Fraction(-1, 2)


@pytest.mark.parametrize("steps", ["BAAABBA", "AABBBAA", "ABABABA"])
def test_figure_paths_have_zero_area(steps):
    assert signed_area(P(steps)) == 0


def test_2T_moments_match_closed_form():
    assert third_moments(P("AABBBAA")) == (Fraction(-2), Fraction(-3))


@settings(max_examples=200, deadline=None)
@given(lattice_paths())
def test_triplet_matches_column_integration(path):
    area, m1, m2 = column_oracle(path)
    t = error_triplet(path)
    assert (t.e2, t.e3a, t.e3b) == (area, m1, m2)


@settings(max_examples=200, deadline=None)
@given(lattice_paths())
def test_edge_weights_sum_to_scaled_triplet(path):
    assert path_weight_sum(path) == error_triplet(path).scaled()


@settings(max_examples=100, deadline=None)
@given(lattice_paths())
def test_reversal_negates_area(path):
    t, r = error_triplet(path), error_triplet(path.reversed())
    assert r.e2 == -t.e2
    if t.e2 == 0:
        assert (r.e3a, r.e3b) == (t.e3a, t.e3b)


@settings(max_examples=100, deadline=None)
@given(lattice_paths())
def test_swapping_axes(path):
    t, s = error_triplet(path), error_triplet(path.swapped())
    assert s.e2 == -t.e2
    assert (s.e3a, s.e3b) == (-t.e3b, -t.e3a)


@settings(max_examples=100, deadline=None)
@given(lattice_paths())
def test_path_followed_by_reverse_cancels_area(path):
    assert signed_area(path.concat(path.reversed())) == 0


@settings(max_examples=100, deadline=None)
@given(lattice_paths(max_side=5), st.integers(2, 4))
def test_repetition_scales_zero_area_moments(path, k):
    t = error_triplet(path)
    if t.e2 == 0:
        rep = error_triplet(path.repeat(k))
        assert (rep.e3a, rep.e3b) == (k * t.e3a, k * t.e3b)


def test_normalized_units():
    t = error_triplet(P("AABBBAA").repeat(2))
    norm = t.normalized(2)
    # two repetitions of the unit, each step A/2: (pq/24n^2)(p, 2q) with n = 2
    assert (norm.e3a, norm.e3b) == (Fraction(-1, 2), Fraction(-3, 4))


def test_edge_weight_values():
    assert edge_weight(1, 0, "right") == (0, 0, 0)
    assert edge_weight(1, 1, "up") == (1, 2, 1)
    assert edge_weight(2, 1, 0) == (-1, -3, -2)
    with pytest.raises(DomainError):
        edge_weight(-1, 0, "up")
    with pytest.raises(DomainError):
        edge_weight(0, 0, "sideways")


def test_three_operator_triplet_unsupported():
    with pytest.raises(UnsupportedDimensionError):
        error_triplet(P("ABC"))


def test_enumerate_paths_is_complete_and_ordered():
    paths = [str(p) for p in enumerate_paths(3, 4)]
    assert len(paths) == math.comb(7, 3)
    assert len(set(paths)) == len(paths)
    assert paths == sorted(paths)


def test_enumerate_paths_budget():
    with pytest.raises(BudgetExceededError):
        list(enumerate_paths(10, 10))


def test_deviation_sum_matches_euclidean_total():
    for path in enumerate_paths(4, 3):
        total = total_diagonal_distance(path)
        assert math.isclose(total * math.hypot(4, 3), deviation_sum(path), rel_tol=1e-12)


def test_diagonal_distance():
    assert diagonal_distance_sq((1, 0), (1, 1)) == Fraction(1, 2)
    assert diagonal_distance_sq((2, 2, 2), (1, 1, 1)) == 0
