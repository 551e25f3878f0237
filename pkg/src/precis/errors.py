"""Exception types shared across the toolkit."""


class PrecisError(Exception):
    """Base class for all toolkit-specific errors."""


class NotPositiveDefinite(PrecisError):
    """A matrix required to be positive definite failed its Cholesky factorization."""


class DimensionMismatch(PrecisError):
    """Inputs have incompatible or ragged shapes."""


class SingleClass(PrecisError):
    """A ranking metric was requested but the truth contains only one class."""


class EmptyAverage(PrecisError):
    """Averaging was requested over an empty set of iterates."""


class ZeroVarianceFeature(PrecisError):
    """Standardization hit one or more constant features."""

    def __init__(self, feature_ids):
        self.feature_ids = list(feature_ids)
        super().__init__(f"features with zero variance: {self.feature_ids}")


class MissingRawIntensities(PrecisError):
    """The intensity filter was enabled but no raw intensities are available."""


class AllCellsFailed(PrecisError):
    """Every hyperparameter grid cell failed to produce a usable fit."""
