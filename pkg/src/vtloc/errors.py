"""Exception types shared across the toolkit."""


class VtlocError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatch(VtlocError):
    """Operands live on incompatible spaces."""


class DecompositionFailed(VtlocError):
    """An eigen/singular value decomposition did not converge."""


class EmptySupport(VtlocError):
    """A time interval contains no grid point."""


class EmptySubset(VtlocError):
    """A vertex or spectral index subset is empty."""


class NyquistViolation(VtlocError):
    """Requested bandwidth is at or above the grid Nyquist rate."""


class NoConvergence(VtlocError):
    """Power iteration stalled before reaching tolerance."""


class ZeroSignal(VtlocError):
    """An operation requires a signal with positive norm."""


class RankDeficient(VtlocError):
    """A Gram matrix is numerically singular beyond the configured floor."""


class DegenerateSpectrum(VtlocError):
    """A leading eigenvalue sits at 0 or 1 where the construction is undefined."""


class DomainError(VtlocError):
    """An inverse-cosine argument left [0, 1] by more than the allowed slack."""


class RankExceeded(VtlocError):
    """More atoms requested than the projector rank supports."""


class InvalidSpec(VtlocError):
    """A baseline dictionary specification is malformed."""


class InsufficientData(VtlocError):
    """Sample values are all zero; priors cannot be estimated."""


class ZeroValidationEnergy(VtlocError):
    """Validation samples carry no signal energy; RSE is undefined."""


class RetractionFailure(VtlocError):
    """Polar retraction hit a rank-deficient step matrix."""


class ConfigError(VtlocError):
    """An experiment configuration is invalid."""


class ZeroMatrix(VtlocError):
    """A Laplacian argument is identically zero."""
