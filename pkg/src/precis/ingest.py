"""Preparation of externally quantified expression data for the correction pipeline.

The input is a table of per-subject feature summaries produced upstream:
posterior means of log-scale expression, their posterior variances, and
optionally the raw fluorescence intensities.  Preparation filters weak
features, standardizes each remaining feature to mean 0 / variance 1
(population convention, divisor n), and converts the averaged posterior
variances into per-feature error variances on the standardized scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MeasurementErrorModel
from .errors import DimensionMismatch, MissingRawIntensities, ZeroVarianceFeature


@dataclass(frozen=True)
class ExpressionTable:
    """Per-subject feature summaries: means, posterior variances, optional raw intensities."""

    means: np.ndarray
    posterior_variances: np.ndarray
    feature_ids: tuple[str, ...]
    raw_intensities: np.ndarray | None = None

    def __post_init__(self):
        means = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        pvar = np.atleast_2d(np.asarray(self.posterior_variances, dtype=np.float64))
        ids = tuple(str(f) for f in self.feature_ids)
        if means.shape != pvar.shape:
            raise DimensionMismatch(
                f"means shape {means.shape} != posterior variance shape {pvar.shape}"
            )
        if len(ids) != means.shape[1]:
            raise DimensionMismatch(
                f"{len(ids)} feature ids for {means.shape[1]} feature columns"
            )
        if (pvar < 0).any():
            raise ValueError("posterior variances must be non-negative")
        raw = self.raw_intensities
        if raw is not None:
            raw = np.atleast_2d(np.asarray(raw, dtype=np.float64))
            if raw.shape != means.shape:
                raise DimensionMismatch(
                    f"raw intensity shape {raw.shape} != means shape {means.shape}"
                )
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "posterior_variances", pvar)
        object.__setattr__(self, "feature_ids", ids)
        object.__setattr__(self, "raw_intensities", raw)

    @property
    def n(self) -> int:
        return self.means.shape[0]

    @property
    def p(self) -> int:
        return self.means.shape[1]

    def subset(self, keep: np.ndarray) -> "ExpressionTable":
        """Restrict to the given feature indices, preserving order."""
        keep = np.asarray(keep)
        return ExpressionTable(
            means=self.means[:, keep],
            posterior_variances=self.posterior_variances[:, keep],
            feature_ids=tuple(self.feature_ids[i] for i in keep),
            raw_intensities=None if self.raw_intensities is None else self.raw_intensities[:, keep],
        )


@dataclass(frozen=True)
class FilterConfig:
    """Thresholds for the three per-feature filters, applied in order.

    intensity: keep features with at least ``intensity_fraction`` of subjects
    above ``intensity_threshold`` raw units.  iqr: keep features whose
    interquartile range of (log-scale) means is at least ``iqr_min``.
    noise: keep features whose averaged posterior variance is below
    ``noise_ratio_max`` times the feature variance.
    """

    intensity_fraction: float = 0.25
    intensity_threshold: float = 100.0
    iqr_min: float = 0.6
    noise_ratio_max: float = 0.5
    use_intensity: bool = True
    use_iqr: bool = True
    use_noise: bool = True


def feature_moments(table: ExpressionTable) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and population standard deviation (divisor n) of the means."""
    mu = table.means.mean(axis=0)
    sd = np.sqrt(((table.means - mu) ** 2).mean(axis=0))
    return mu, sd


def standardize(table: ExpressionTable) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Center and scale each feature to mean 0, variance 1 (population convention).

    Returns ``(w, feature_means, feature_sds)``; raises ``ZeroVarianceFeature``
    listing the offending labels if any feature is constant.
    """
    mu, sd = feature_moments(table)
    dead = np.where(sd == 0)[0]
    if dead.size:
        raise ZeroVarianceFeature([table.feature_ids[i] for i in dead])
    w = (table.means - mu) / sd
    return w, mu, sd


def estimate_sigma_u(table: ExpressionTable, feature_sds: np.ndarray) -> MeasurementErrorModel:
    """Per-feature error variances on the standardized scale.

    Averages each feature's posterior variances over subjects (errors are
    assumed homogeneous across subjects) and divides by the feature variance.
    """
    sds = np.asarray(feature_sds, dtype=np.float64)
    if sds.shape != (table.p,):
        raise DimensionMismatch(f"feature_sds must have length {table.p}")
    if (sds <= 0).any():
        raise ValueError("feature standard deviations must be positive")
    raw = table.posterior_variances.mean(axis=0)
    return MeasurementErrorModel(raw / sds**2)


def apply_filters(
    table: ExpressionTable, cfg: FilterConfig = FilterConfig()
) -> tuple[np.ndarray, dict[str, int]]:
    """Apply the per-feature filters in order; report removals per filter.

    Each filter is a pure per-feature predicate, so the final kept set does
    not depend on the order; the order only attributes removals.  Returns
    ``(kept indices, {"intensity": k2, "iqr": k3, "noise": k4})``.
    """
    alive = np.ones(table.p, dtype=bool)
    counts: dict[str, int] = {}

    if cfg.use_intensity:
        if table.raw_intensities is None:
            raise MissingRawIntensities("intensity filter enabled but raw intensities absent")
        frac_bright = (table.raw_intensities > cfg.intensity_threshold).mean(axis=0)
        keep = frac_bright >= cfg.intensity_fraction
        counts["intensity"] = int((alive & ~keep).sum())
        alive &= keep

    if cfg.use_iqr:
        q1, q3 = np.quantile(table.means, [0.25, 0.75], axis=0)  # type-7 interpolation
        keep = (q3 - q1) >= cfg.iqr_min
        counts["iqr"] = int((alive & ~keep).sum())
        alive &= keep

    if cfg.use_noise:
        _, sd = feature_moments(table)
        mean_pvar = table.posterior_variances.mean(axis=0)
        # remove when error variance >= noise_ratio_max * feature variance
        with np.errstate(invalid="ignore"):
            keep = mean_pvar < cfg.noise_ratio_max * sd**2
        counts["noise"] = int((alive & ~keep).sum())
        alive &= keep

    return np.where(alive)[0], counts


@dataclass(frozen=True)
class PreparedData:
    """Output of the full preparation pipeline, ready for the correction chain."""

    w: np.ndarray
    error_model: MeasurementErrorModel
    feature_ids: tuple[str, ...]
    feature_means: np.ndarray
    feature_sds: np.ndarray
    removal_counts: dict[str, int]


def prepare(table: ExpressionTable, cfg: FilterConfig = FilterConfig()) -> PreparedData:
    """Filter, standardize, and estimate error variances in one pass."""
    kept, counts = apply_filters(table, cfg)
    reduced = table.subset(kept)
    w, mu, sd = standardize(reduced)
    me = estimate_sigma_u(reduced, sd)
    return PreparedData(
        w=w,
        error_model=me,
        feature_ids=reduced.feature_ids,
        feature_means=mu,
        feature_sds=sd,
        removal_counts=counts,
    )
