"""Exception hierarchy.

The CLI maps these onto exit codes: validation-type errors exit 2,
coverage/consistency errors exit 3.
"""


class MarkovCertError(Exception):
    """Base class for all library errors."""


class ValidationError(MarkovCertError, ValueError):
    """Input is not a valid state, matrix or file."""


class DomainError(MarkovCertError, ValueError):
    """Scalar argument outside its allowed range."""


class RegionError(MarkovCertError, IndexError):
    """Region out of range, overlapping where disjointness is required, etc."""


class ShapeError(MarkovCertError, ValueError):
    """Operands live on different layouts."""


class CompositionError(MarkovCertError, ValueError):
    """Tensor product of states whose sites overlap."""


class CapacityError(MarkovCertError, MemoryError):
    """Hilbert space dimension beyond the configured maximum."""


class DegenerateInputError(MarkovCertError, ValueError):
    """Input has no usable support (e.g. zero matrix after clipping)."""


class ConsistencyError(MarkovCertError):
    """Marginals that should agree do not."""

    def __init__(self, message, distances=None):
        super().__init__(message)
        self.distances = dict(distances or {})


class CoverageError(MarkovCertError, KeyError):
    """A required reduced density matrix is missing."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class PlanError(MarkovCertError, ValueError):
    """Shield plan violates its ordering constraints or does not fit the state."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class GeometryError(MarkovCertError, ValueError):
    """Grid too small for the requested neighbourhood."""


class SchemeError(MarkovCertError, ValueError):
    """Measurement scheme cannot be applied to the requested region."""


class RecoveryError(ConsistencyError):
    """Petz reconstruction needed a repair larger than allowed."""
