"""Exception types raised by the library."""


class DomainError(ValueError):
    """An argument lies outside the region where a quantity is defined."""


class PreconditionError(DomainError):
    """A documented precondition of an operation does not hold."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to meet its tolerance."""
