"""Geometric construction and benchmarking of Trotter product orderings."""

from .exceptions import (
    BudgetExceededError,
    DomainError,
    EmptyStatsError,
    NoZeroAreaPathError,
    NotRepresentableError,
    NumericalError,
    TrotterError,
    UnsupportedDimensionError,
)
from .gridpath import (
    ErrorTriplet,
    LatticePath,
    deviation_sum,
    edge_weight,
    enumerate_paths,
    error_triplet,
    signed_area,
    third_moments,
    total_diagonal_distance,
)
from .planners import (
    METHODS,
    GateSequence,
    SplitCoefficients,
    compute_CD,
    plan,
    plan_1T,
    plan_2D,
    plan_2O,
    plan_2T,
    plan_best_continuous_2T,
    plan_naive_alternation,
    plan_ruth,
    symmetrize_2D,
)
from .linalg import HamiltonianSpec, build_model, random_hermitian, sequence_to_unitary
from .evaluate import (
    CrossoverStats,
    FidelityCurve,
    count_resources,
    crossover_histogram,
    find_crossover,
    fidelity,
    fit_slope,
    frobenius_error,
    infidelity,
    sweep_time,
)

__version__ = "0.1.0"
