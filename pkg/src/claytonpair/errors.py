"""Exception hierarchy for claytonpair."""


class ClaytonPairError(Exception):
    """Base class for all model and data errors raised by this package."""


class DomainError(ClaytonPairError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class TableError(ClaytonPairError, ValueError):
    """A frequency table violates its structural invariants."""


class NonfiniteLikelihood(ClaytonPairError, ArithmeticError):
    """A positive count multiplies a vanishing cell probability."""


class SingularInformation(ClaytonPairError, ArithmeticError):
    """The Fisher information matrix cannot be inverted."""


class NoConvergence(ClaytonPairError, RuntimeError):
    """No optimizer start reached the gradient tolerance."""


class DegenerateTable(ClaytonPairError, ValueError):
    """The table leaves a group rate unidentifiable."""


class H0ViolationInSpec(ClaytonPairError, ValueError):
    """A Type-I-error study was requested with unequal group rates."""


class SamplingExhausted(ClaytonPairError, RuntimeError):
    """Rejection sampling of sweep scenarios failed too many times in a row."""
