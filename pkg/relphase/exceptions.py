class RelphaseError(Exception):
    """Base class for every error raised by relphase."""


class ConfigurationError(RelphaseError):
    """The run configuration, a prior spec string or a CLI value is invalid."""


class InvalidStateError(RelphaseError, ValueError):
    """A state, observable or prior violates one of its invariants."""


class DimensionMismatchError(RelphaseError, ValueError):
    """Operand dimensions are incompatible, an index is out of range or a size guard tripped."""


class ToleranceBreachError(RelphaseError):
    """A numeric result fell outside the configured tolerances."""


class TruncationError(ToleranceBreachError):
    """The Fock cutoff leaves more probability mass outside the space than ``tail_tol`` allows."""


class EmbeddingLossError(ToleranceBreachError):
    """Embedding spin blocks into the relative Fock space lost more than ``tail_tol``."""


class ResolutionError(ToleranceBreachError):
    """The quadrature resolution is too low for the prior being averaged over."""
