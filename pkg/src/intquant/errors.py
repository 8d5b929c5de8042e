"""Exception hierarchy shared by all modules."""


class IntQuantError(Exception):
    """Base class for every error raised by the package."""


class DomainError(IntQuantError, ValueError):
    """An argument lies outside the domain of the operation."""


class UnboundedQuantileError(DomainError):
    """The requested quantile is infinite (u=0 or u=1 on unbounded support)."""


class DivergenceError(IntQuantError, ArithmeticError):
    """A required integral or moment is infinite."""


class DegenerateMeanError(DomainError):
    """A ratio measure was requested for a distribution with zero mean."""
