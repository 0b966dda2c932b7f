"""Exception hierarchy shared by all modules."""


class StrongConvError(Exception):
    """Base class for errors raised by this package."""


class DomainError(StrongConvError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class EvaluationError(StrongConvError, ArithmeticError):
    """A black-box function returned a non-finite value."""


class IncompleteBasisError(StrongConvError, KeyError):
    """A functional is missing values on part of a Chebyshev basis."""


class DimensionMismatchError(StrongConvError, ValueError):
    pass


class SizeCapError(StrongConvError, RuntimeError):
    """An enumeration or dense computation exceeds its configured size cap."""


class PoleRegionError(StrongConvError, ValueError):
    """Evaluation requested at an N where a Weingarten function has a pole."""


class ReconstructionError(StrongConvError, RuntimeError):
    """A rational reconstruction disagrees with direct evaluation."""


class InconsistencyError(StrongConvError, RuntimeError):
    """Two independent engines disagree on a quantity that must match."""


class NotSelfAdjointError(StrongConvError, ValueError):
    pass
