"""Exception types raised across the package."""


class ReconnError(Exception):
    """Base class for package errors."""


class DomainError(ReconnError, ValueError):
    """An elementary operation was evaluated outside its domain."""


class InvalidShape(ReconnError, ValueError):
    pass


class ShapeMismatch(ReconnError, ValueError):
    pass


class OnInterface(ReconnError, ValueError):
    """A two-sided evaluation was requested exactly on an interface."""


class NotOnInterface(ReconnError, ValueError):
    pass


class AtCenter(DomainError):
    """A singular unit was evaluated at (or numerically at) its center."""


class NoSingularUnit(ReconnError, ValueError):
    pass


class NoRootInUnitInterval(ReconnError):
    """``det(M_lambda)`` has no sign change on the scanned part of (0, 1)."""


class KernelRankError(ReconnError):
    pass


class ConfigError(ReconnError, ValueError):
    pass


class NumericalFailure(ReconnError, FloatingPointError):
    """Training produced a non-finite loss or gradient."""

    def __init__(self, iteration: int, message: str = "non-finite loss"):
        super().__init__(f"{message} at iteration {iteration}")
        self.iteration = iteration
