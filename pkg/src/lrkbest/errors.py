"""Exception types raised by the detection and reduction routines."""


class LrkbestError(Exception):
    """Base class for all package-specific errors."""


class RankDeficientError(LrkbestError):
    """A matrix that must have full column rank does not (pivot below tolerance)."""


class IterationLimitError(LrkbestError):
    """Lattice reduction exceeded its swap budget (near-degenerate basis)."""


class IntegerOverflowError(LrkbestError):
    """Unimodular bookkeeping would leave the exact int64 range."""


class EnumerationBudgetError(LrkbestError):
    """Exact search was requested on a problem larger than the enumeration budget."""
