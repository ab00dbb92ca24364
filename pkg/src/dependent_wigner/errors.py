"""Exception types shared across the package."""


class DependentWignerError(Exception):
    """Base class for all errors raised by this package."""


class LimitExceeded(DependentWignerError):
    """A brute-force routine was asked to work beyond its configured size."""


class NotConnected(DependentWignerError):
    pass


class InvalidSpec(DependentWignerError, ValueError):
    pass


class Unsupported(DependentWignerError):
    pass


class UnboundedPotential(InvalidSpec):
    pass


class InsufficientSamples(DependentWignerError, ValueError):
    pass


class EmptyInput(DependentWignerError, ValueError):
    pass


class EmptyGrid(DependentWignerError, ValueError):
    pass


class BackendFailure(DependentWignerError):
    pass


class OnCut(DependentWignerError, ValueError):
    pass


class BudgetExceeded(DependentWignerError):
    pass


class OddOrder(DependentWignerError, ValueError):
    pass


class TruncationTooSmall(DependentWignerError, ValueError):
    pass


class InsufficientOrder(DependentWignerError, ValueError):
    pass


class PropagationViolation(DependentWignerError):
    """A flow coefficient broke the bound it should inherit from its parents."""
