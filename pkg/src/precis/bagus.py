"""MAP estimation of a sparse precision matrix under a spike-and-slab Lasso prior.

The penalized objective is

    (n/2) * (tr(S @ omega) - logdet(omega))
        + sum_{i<j} pen(omega_ij) + diagonal_rate * sum_i omega_ii

where ``pen`` is the negative log of a two-component Laplace mixture (narrow
spike, wide slab).  Optimization runs as EM: the E-step computes posterior
slab probabilities and the implied per-entry l1 weights, the M-step is a
graphical-lasso style block coordinate descent with off-diagonal magnitudes
clipped to ``spectral_bound``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ._mstep import sweep_columns
from .core import (
    BagusHyperparams,
    PrecisionEstimate,
    cholesky_lower,
    spd_inverse,
    spd_logdet,
    sym_matrix,
)
from .errors import AllCellsFailed, NotPositiveDefinite, PrecisError

logger = logging.getLogger(__name__)

# Column sweeps per M-step; coordinate passes per column solve.
MSTEP_MAX_SWEEPS = 200
CD_MAX_PASS = 100


@dataclass(frozen=True)
class FitInput:
    """Sample covariance of the working data and the count that produced it."""

    s: np.ndarray
    n: int

    def __post_init__(self):
        object.__setattr__(self, "s", sym_matrix(self.s))
        if self.n < 2:
            raise ValueError(f"need n >= 2 observations, got {self.n}")
        if (np.diag(self.s) < 0).any():
            raise ValueError("covariance diagonal must be non-negative")

    @property
    def dim(self) -> int:
        return self.s.shape[0]


def slab_inclusion_prob(omega_ij, hp: BagusHyperparams):
    """Posterior probability that an entry belongs to the slab component.

    Normalized Bernoulli posterior under the Laplace mixture prior,
    ``1 / (1 + odds)`` with spike-to-slab odds
    ``(slab_scale/spike_scale) * ((1-eta)/eta) * exp(|omega| * (1/slab_scale - 1/spike_scale))``.
    Monotone non-decreasing in |omega|; strictly inside (0, 1).
    Accepts scalars or arrays.
    """
    eta = hp.slab_prior_prob
    ratio = (hp.slab_scale / hp.spike_scale) * ((1.0 - eta) / eta)
    rate_gap = 1.0 / hp.slab_scale - 1.0 / hp.spike_scale  # <= 0
    odds = ratio * np.exp(np.abs(omega_ij) * rate_gap)
    return 1.0 / (1.0 + odds)


def estep(omega: np.ndarray, hp: BagusHyperparams) -> tuple[np.ndarray, np.ndarray]:
    """Inclusion probabilities and expected l1 penalty weights at the current iterate.

    Returns ``(p, weights)``: ``p`` has the elementwise slab probabilities with
    diagonal fixed at 1; ``weights[i, j] = p_ij/slab_scale + (1-p_ij)/spike_scale``
    off the diagonal (a convex combination of the two Laplace rates) and
    ``diagonal_rate`` on it.
    """
    omega = sym_matrix(omega)
    p = slab_inclusion_prob(omega, hp)
    np.fill_diagonal(p, 1.0)
    weights = p / hp.slab_scale + (1.0 - p) / hp.spike_scale
    np.fill_diagonal(weights, hp.diagonal_rate)
    return p, weights


def _mixture_penalty(values: np.ndarray, hp: BagusHyperparams) -> np.ndarray:
    """Negative log density of the Laplace mixture prior, elementwise."""
    a = np.abs(values)
    log_slab = np.log(hp.slab_prior_prob / (2.0 * hp.slab_scale)) - a / hp.slab_scale
    log_spike = np.log((1.0 - hp.slab_prior_prob) / (2.0 * hp.spike_scale)) - a / hp.spike_scale
    return -np.logaddexp(log_slab, log_spike)


def objective(omega: np.ndarray, fit_input: FitInput, hp: BagusHyperparams) -> float:
    """Penalized negative log posterior (up to an additive constant)."""
    omega = sym_matrix(omega)
    if omega.shape != fit_input.s.shape:
        raise ValueError("omega and covariance dimensions differ")
    logdet = spd_logdet(omega)  # raises NotPositiveDefinite
    likelihood = 0.5 * fit_input.n * (float((fit_input.s * omega).sum()) - logdet)
    upper = np.triu_indices(omega.shape[0], k=1)
    penalty = float(_mixture_penalty(omega[upper], hp).sum())
    diagonal = hp.diagonal_rate * float(np.trace(omega))
    return likelihood + penalty + diagonal


def weighted_objective(
    omega: np.ndarray, fit_input: FitInput, weights: np.ndarray, diag_rate: float
) -> float:
    """The M-step surrogate: likelihood plus fixed elementwise l1 penalty."""
    omega = sym_matrix(omega)
    logdet = spd_logdet(omega)
    likelihood = 0.5 * fit_input.n * (float((fit_input.s * omega).sum()) - logdet)
    upper = np.triu_indices(omega.shape[0], k=1)
    penalty = float((weights[upper] * np.abs(omega[upper])).sum())
    return likelihood + penalty + diag_rate * float(np.trace(omega))


def mstep(
    fit_input: FitInput,
    weights: np.ndarray,
    omega_init: np.ndarray,
    hp: BagusHyperparams,
    max_sweeps: int = MSTEP_MAX_SWEEPS,
) -> np.ndarray:
    """Minimize the weighted surrogate by column-wise block coordinate descent.

    Sweeps run until the largest elementwise change drops below ``hp.em_tol``
    or ``max_sweeps`` is hit.  The running inverse is refreshed from a
    Cholesky solve before every sweep, which doubles as the positive
    definiteness guard; losing PD here indicates a numerics bug because the
    update keeps every Schur complement strictly positive.

    The surrogate is non-increasing whenever ``omega_init`` already respects
    the magnitude bound (always true for EM iterates after the first); a
    start outside the box gets projected into it, which can raise the
    surrogate relative to the infeasible start.
    """
    omega = sym_matrix(omega_init)
    weights = sym_matrix(weights)
    if omega.shape != fit_input.s.shape or weights.shape != fit_input.s.shape:
        raise ValueError("omega, weights, and covariance dimensions differ")
    cd_tol = 0.1 * hp.em_tol
    for _ in range(max_sweeps):
        w = spd_inverse(omega)  # raises NotPositiveDefinite on a broken iterate
        delta = sweep_columns(
            fit_input.s,
            weights,
            hp.diagonal_rate,
            float(fit_input.n),
            hp.spectral_bound,
            omega,
            w,
            cd_tol,
            CD_MAX_PASS,
        )
        if delta < hp.em_tol:
            break
    cholesky_lower(omega)
    return omega


def default_init(s: np.ndarray) -> np.ndarray:
    """Cheap PD starting point: inv(S), ridge-repaired when S is singular."""
    s = sym_matrix(s)
    try:
        return spd_inverse(s)
    except NotPositiveDefinite:
        d = s.shape[0]
        ridge = 1e-2 * float(np.trace(s)) / d
        if ridge <= 0.0:
            ridge = 1e-2
        return spd_inverse(s + ridge * np.eye(d))


def fit_bagus(
    fit_input: FitInput,
    hp: BagusHyperparams,
    omega_init: np.ndarray | None = None,
) -> PrecisionEstimate:
    """EM loop alternating inclusion-probability updates with coordinate descent.

    Stops when the largest elementwise change of omega between EM iterations
    falls below ``hp.em_tol``, or after ``hp.em_max_iter`` iterations; in the
    latter case the final (best) iterate is returned with ``converged=False``.
    """
    omega = default_init(fit_input.s) if omega_init is None else sym_matrix(omega_init)
    cholesky_lower(omega)
    trace = []
    converged = False
    for _ in range(hp.em_max_iter):
        _, weights = estep(omega, hp)
        omega_new = mstep(fit_input, weights, omega, hp)
        trace.append(objective(omega_new, fit_input, hp))
        delta = float(np.abs(omega_new - omega).max())
        omega = omega_new
        if delta < hp.em_tol:
            converged = True
            break
    if not converged:
        logger.warning(
            "EM did not converge within %d iterations (last objective %.6g)",
            hp.em_max_iter,
            trace[-1],
        )
    p, _ = estep(omega, hp)
    return PrecisionEstimate(
        omega=omega, inclusion_prob=p, objective_trace=trace, converged=converged
    )


def bic(
    s: np.ndarray,
    omega_hat: np.ndarray,
    n: int,
    hp: BagusHyperparams | None = None,
    *,
    selected: np.ndarray | None = None,
    threshold: float = 0.5,
) -> float:
    """BIC-style model score: ``n*(tr(S omega) - logdet omega) + log(n)*q``.

    ``q`` counts strict upper-triangle entries whose inclusion probability
    meets ``threshold`` (the Laplace relaxation never yields exact zeros, so
    selection is probability-based).  Pass either a boolean ``selected``
    matrix or ``hp`` from which probabilities are recomputed at ``omega_hat``.
    """
    s = sym_matrix(s)
    omega_hat = sym_matrix(omega_hat)
    if s.shape != omega_hat.shape:
        raise ValueError("s and omega_hat dimensions differ")
    if selected is None:
        if hp is None:
            raise ValueError("bic needs hp or an explicit selected matrix to count edges")
        selected = slab_inclusion_prob(omega_hat, hp) >= threshold
    upper = np.triu_indices(s.shape[0], k=1)
    q = int(np.asarray(selected, dtype=bool)[upper].sum())
    fit_term = n * (float((s * omega_hat).sum()) - spd_logdet(omega_hat))
    return fit_term + np.log(n) * q


@dataclass(frozen=True)
class TuneCell:
    """Outcome of one (spike_scale, slab_scale) grid cell."""

    hp: BagusHyperparams
    bic: float | None
    estimate: PrecisionEstimate | None
    error: str | None = None


@dataclass(frozen=True)
class TuneResult:
    best: BagusHyperparams
    cells: tuple[TuneCell, ...]

    @property
    def best_cell(self) -> TuneCell:
        return min(
            (c for c in self.cells if c.error is None),
            key=lambda c: (c.bic, -c.hp.spike_scale, -c.hp.slab_scale),
        )


def make_hyperparams(
    spike_scale: float,
    slab_scale: float,
    *,
    eta: float = 0.5,
    diagonal_rate: float | None = None,
    spectral_bound: float = 10.0,
    em_tol: float = 1e-4,
    em_max_iter: int = 50,
) -> BagusHyperparams:
    """Hyperparameters under the usual conventions (eta = 0.5, diagonal rate = spike scale)."""
    return BagusHyperparams(
        spike_scale=spike_scale,
        slab_scale=slab_scale,
        slab_prior_prob=eta,
        diagonal_rate=diagonal_rate,
        spectral_bound=spectral_bound,
        em_tol=em_tol,
        em_max_iter=em_max_iter,
    )


def tune(
    fit_input: FitInput,
    grid: list[tuple[float, float]],
    *,
    eta: float = 0.5,
    diagonal_rate: float | None = None,
    spectral_bound: float = 10.0,
    em_tol: float = 1e-4,
    em_max_iter: int = 50,
    omega_init: np.ndarray | None = None,
    threshold: float = 0.5,
) -> TuneResult:
    """Fit every (spike_scale, slab_scale) pair and pick the BIC minimizer.

    Exact BIC ties break toward stronger shrinkage (larger spike scale, then
    larger slab scale).  Failing cells are excluded with a logged diagnostic;
    ``AllCellsFailed`` is raised when nothing survives.
    """
    if not grid:
        raise ValueError("hyperparameter grid is empty")
    cells = []
    for spike, slab in grid:
        hp = make_hyperparams(
            spike,
            slab,
            eta=eta,
            diagonal_rate=diagonal_rate,
            spectral_bound=spectral_bound,
            em_tol=em_tol,
            em_max_iter=em_max_iter,
        )
        try:
            est = fit_bagus(fit_input, hp, omega_init=omega_init)
            score = bic(
                fit_input.s,
                est.omega,
                fit_input.n,
                selected=est.inclusion_prob >= threshold,
            )
            cells.append(TuneCell(hp=hp, bic=score, estimate=est))
        except (PrecisError, FloatingPointError, np.linalg.LinAlgError) as exc:
            logger.warning("grid cell (%g, %g) failed: %s", spike, slab, exc)
            cells.append(TuneCell(hp=hp, bic=None, estimate=None, error=str(exc)))
    survivors = [c for c in cells if c.error is None]
    if not survivors:
        raise AllCellsFailed(f"all {len(cells)} grid cells failed")
    best = min(
        survivors, key=lambda c: (c.bic, -c.hp.spike_scale, -c.hp.slab_scale)
    )
    return TuneResult(best=best.hp, cells=tuple(cells))
