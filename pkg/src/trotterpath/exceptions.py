"""Exception hierarchy shared by all modules."""


class TrotterError(Exception):
    """Base class for every error raised by this package."""


class DomainError(TrotterError, ValueError):
    """An argument lies outside the domain of the operation."""


class UnsupportedDimensionError(DomainError):
    """The operation is only defined for a specific number of operator types."""


class NotRepresentableError(DomainError):
    """The requested product formula cannot be built for these weights."""


class NoZeroAreaPathError(DomainError):
    """No monotone lattice path with vanishing signed area exists on the grid."""


class BudgetExceededError(TrotterError):
    """An explicit resource bound would be exceeded."""


class NumericalError(TrotterError, ArithmeticError):
    """A numerical routine failed or could not reach the requested accuracy."""


class EmptyStatsError(NumericalError):
    """Every sample of a statistical run was skipped."""
