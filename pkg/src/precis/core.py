"""Shared domain types, dense symmetric linear algebra, and the contaminated-model identities.

Matrices are plain float64 numpy arrays.  ``sym_matrix`` is the single entry
point that turns outside input into a validated symmetric matrix; everything
downstream assumes its output.  Positive definiteness is always established
by attempting a Cholesky factorization, never by an eigendecomposition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NotPositiveDefinite

# Construction-time tolerance for |m - m.T|; asymmetry beyond this is an error,
# below it the matrix is repaired by averaging with its transpose.
SYMMETRY_TOL = 1e-9


def sym_matrix(entries, tol: float = SYMMETRY_TOL) -> np.ndarray:
    """Validate and symmetrize a dense square matrix.

    Returns ``(m + m.T) / 2`` as a fresh float64 array.  Raises
    ``DimensionMismatch`` for non-square input and ``ValueError`` for
    non-finite entries or asymmetry exceeding ``tol``.
    """
    m = np.array(entries, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ValueError("matrix contains non-finite entries")
    asym = np.abs(m - m.T).max()
    if asym > tol:
        raise ValueError(f"matrix asymmetry {asym:.3e} exceeds tolerance {tol:.1e}")
    return (m + m.T) / 2.0


def as_dataset(rows, min_rows: int = 2) -> np.ndarray:
    """Validate an n-by-d data matrix (rows are observations)."""
    try:
        x = np.array(rows, dtype=np.float64)
    except ValueError as exc:
        raise DimensionMismatch(f"ragged dataset: {exc}") from exc
    if x.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d dataset, got shape {x.shape}")
    if x.shape[0] < min_rows:
        raise ValueError(f"dataset needs at least {min_rows} rows, got {x.shape[0]}")
    if not np.isfinite(x).all():
        raise ValueError("dataset contains non-finite values")
    return x


@dataclass(frozen=True)
class MeasurementErrorModel:
    """Diagonal measurement-error covariance, stored as per-coordinate variances.

    Variances may be zero (clean data); operations that need the error
    precision matrix enforce strict positivity themselves.
    """

    variances: np.ndarray

    def __post_init__(self):
        v = np.atleast_1d(np.array(self.variances, dtype=np.float64))
        if v.ndim != 1:
            raise DimensionMismatch(f"variances must be a vector, got shape {v.shape}")
        if not np.isfinite(v).all() or (v < 0).any():
            raise ValueError("error variances must be finite and non-negative")
        object.__setattr__(self, "variances", v)

    @property
    def dim(self) -> int:
        return self.variances.shape[0]

    def covariance(self) -> np.ndarray:
        """Dense diagonal error covariance."""
        return np.diag(self.variances)


@dataclass(frozen=True)
class BagusHyperparams:
    """Hyperparameters for one spike-and-slab EM fit.

    ``spike_scale`` and ``slab_scale`` are the Laplace scales of the narrow
    and wide mixture components; ``slab_prior_prob`` is the prior probability
    that an off-diagonal entry is from the slab.  ``diagonal_rate`` is the
    exponential rate on diagonal entries and defaults to ``spike_scale``
    (the usual convention).  ``spectral_bound`` caps off-diagonal magnitudes
    during coordinate descent.
    """

    spike_scale: float
    slab_scale: float
    slab_prior_prob: float = 0.5
    diagonal_rate: float | None = None
    spectral_bound: float = 10.0
    em_tol: float = 1e-4
    em_max_iter: int = 50

    def __post_init__(self):
        if self.diagonal_rate is None:
            object.__setattr__(self, "diagonal_rate", self.spike_scale)
        if not 0 < self.spike_scale < self.slab_scale:
            raise ValueError(
                f"need 0 < spike_scale < slab_scale, got {self.spike_scale}, {self.slab_scale}"
            )
        if not 0 < self.slab_prior_prob < 1:
            raise ValueError(f"slab_prior_prob must be in (0, 1), got {self.slab_prior_prob}")
        if self.diagonal_rate <= 0:
            raise ValueError("diagonal_rate must be positive")
        if self.spectral_bound <= 0:
            raise ValueError("spectral_bound must be positive")
        if self.em_tol <= 0:
            raise ValueError("em_tol must be positive")
        if self.em_max_iter < 1:
            raise ValueError("em_max_iter must be at least 1")


@dataclass(frozen=True)
class PrecisionEstimate:
    """A fitted precision matrix with its edge-inclusion probabilities.

    ``omega`` is symmetric positive definite; ``inclusion_prob`` holds the
    posterior slab probabilities with the diagonal fixed at 1 by convention.
    ``objective_trace`` records the penalized objective after each EM
    iteration.  ``converged`` is False when the iteration cap was hit; the
    best (final) iterate is still returned.
    """

    omega: np.ndarray
    inclusion_prob: np.ndarray
    objective_trace: tuple[float, ...] = ()
    converged: bool = True

    def __post_init__(self):
        omega = sym_matrix(self.omega)
        p = sym_matrix(self.inclusion_prob)
        if p.shape != omega.shape:
            raise DimensionMismatch("omega and inclusion_prob must share shape")
        cholesky_lower(omega)  # raises NotPositiveDefinite
        off = ~np.eye(p.shape[0], dtype=bool)
        if (p[off] < 0).any() or (p[off] > 1).any():
            raise ValueError("off-diagonal inclusion probabilities must lie in [0, 1]")
        if not np.allclose(np.diag(p), 1.0):
            raise ValueError("inclusion probability diagonal must be 1")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "inclusion_prob", p)
        object.__setattr__(self, "objective_trace", tuple(float(v) for v in self.objective_trace))

    @property
    def dim(self) -> int:
        return self.omega.shape[0]


def cholesky_lower(m: np.ndarray) -> np.ndarray:
    """Lower-triangular Cholesky factor; raises ``NotPositiveDefinite`` if any pivot <= 0."""
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"matrix of dim {m.shape[0]} is not positive definite") from exc


def spd_logdet(m: np.ndarray) -> float:
    """Log-determinant of an SPD matrix from its Cholesky pivots."""
    factor = cholesky_lower(m)
    return 2.0 * float(np.sum(np.log(np.diag(factor))))


def spd_solve(m: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``m @ x = b`` for SPD ``m`` via Cholesky."""
    factor = cholesky_lower(m)
    return scipy.linalg.cho_solve((factor, True), b)


def spd_inverse(m: np.ndarray) -> np.ndarray:
    """Inverse of an SPD matrix via Cholesky; output exactly symmetrized."""
    inv = spd_solve(m, np.eye(m.shape[0]))
    return (inv + inv.T) / 2.0


def is_spd(m: np.ndarray) -> bool:
    try:
        cholesky_lower(m)
        return True
    except NotPositiveDefinite:
        return False


def sample_covariance(x: np.ndarray) -> np.ndarray:
    """Sample covariance with divisor n, centered at the sample mean."""
    x = as_dataset(x)
    centered = x - x.mean(axis=0)
    s = centered.T @ centered / x.shape[0]
    return (s + s.T) / 2.0


def contaminated_precision(omega_x: np.ndarray, sigma_u: MeasurementErrorModel) -> np.ndarray:
    """Precision matrix of the observed (noise-contaminated) variables.

    Uses the downdate identity
    ``omega_w = omega_x - omega_x (I + S_u omega_x)^{-1} S_u omega_x``
    with ``S_u`` the diagonal error covariance, which avoids inverting
    ``omega_x`` itself.  Equals ``inv(inv(omega_x) + S_u)``.
    """
    omega_x = sym_matrix(omega_x)
    d = omega_x.shape[0]
    if sigma_u.dim != d:
        raise DimensionMismatch(f"error model dim {sigma_u.dim} != matrix dim {d}")
    cholesky_lower(omega_x)
    su_om = sigma_u.variances[:, None] * omega_x  # S_u @ omega_x
    core = np.eye(d) + su_om
    correction = omega_x @ np.linalg.solve(core, su_om)
    result = omega_x - correction  # symmetric up to roundoff from the solve
    return (result + result.T) / 2.0


def naive_moment_correction(s_w: np.ndarray, sigma_u: MeasurementErrorModel) -> np.ndarray:
    """Subtract the known error variances from the observed covariance diagonal.

    The result is in general indefinite; it exists to demonstrate why the
    plug-in moment correction cannot be inverted into a precision estimate.
    """
    s_w = sym_matrix(s_w)
    if sigma_u.dim != s_w.shape[0]:
        raise DimensionMismatch(f"error model dim {sigma_u.dim} != matrix dim {s_w.shape[0]}")
    return s_w - np.diag(sigma_u.variances)
