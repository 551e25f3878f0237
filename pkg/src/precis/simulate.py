"""Ground-truth graph generation, Gaussian sampling, and contamination.

Two graph layouts are supported: "hub" places nodes in equal groups wired
either as stars (group leader connected to every member; the default) or as
complete blocks; "random" draws each pair independently.  Off-diagonal
magnitudes are 1; diagonals are lifted uniformly to ``|lambda_min| + 0.5``
of the off-diagonal pattern so the matrix is safely positive definite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MeasurementErrorModel, as_dataset, cholesky_lower, sym_matrix
from .rng import as_generator

HUB_STYLES = ("star", "block")
STRUCTURES = ("hub", "random")

# Margin added above |lambda_min| of the off-diagonal pattern.
DIAGONAL_MARGIN = 0.5


@dataclass(frozen=True)
class GraphSpec:
    """Layout of the true conditional-dependence graph."""

    structure: str
    d: int
    edge_probability: float | None = None  # random only; defaults to 3/d
    group_size: int = 20  # hub only
    hub_style: str = "star"

    def __post_init__(self):
        if self.structure not in STRUCTURES:
            raise ValueError(f"structure must be one of {STRUCTURES}, got {self.structure!r}")
        if self.d < 1:
            raise ValueError("d must be positive")
        if self.structure == "hub":
            if self.group_size < 2:
                raise ValueError("hub groups need at least 2 nodes")
            if self.d % self.group_size != 0:
                raise ValueError(
                    f"hub structure needs d divisible by group_size, got {self.d} / {self.group_size}"
                )
            if self.hub_style not in HUB_STYLES:
                raise ValueError(f"hub_style must be one of {HUB_STYLES}, got {self.hub_style!r}")
        if self.edge_probability is not None and not 0 <= self.edge_probability <= 1:
            raise ValueError("edge_probability must lie in [0, 1]")

    @property
    def resolved_edge_probability(self) -> float:
        if self.edge_probability is not None:
            return self.edge_probability
        return 3.0 / self.d


@dataclass(frozen=True)
class SimCell:
    """One point of the simulation grid."""

    spec: GraphSpec
    n: int
    gamma: float
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")


def gen_precision(spec: GraphSpec, rng=None) -> tuple[np.ndarray, np.ndarray]:
    """Generate the true precision matrix and its adjacency.

    Returns ``(omega_true, adjacency)`` where adjacency is boolean symmetric
    with an empty diagonal.  The rng is only consumed for the random layout.
    """
    rng = as_generator(rng)
    d = spec.d
    adjacency = np.zeros((d, d), dtype=bool)
    if spec.structure == "hub":
        g = spec.group_size
        for start in range(0, d, g):
            if spec.hub_style == "star":
                leader = start
                for member in range(start + 1, start + g):
                    adjacency[leader, member] = adjacency[member, leader] = True
            else:  # complete block
                for i in range(start, start + g):
                    for j in range(i + 1, start + g):
                        adjacency[i, j] = adjacency[j, i] = True
    else:
        prob = spec.resolved_edge_probability
        iu = np.triu_indices(d, k=1)
        hits = rng.random(iu[0].shape[0]) < prob
        adjacency[iu[0][hits], iu[1][hits]] = True
        adjacency |= adjacency.T

    pattern = adjacency.astype(np.float64)
    lam_min = float(np.linalg.eigvalsh(pattern)[0])
    omega = pattern + (abs(lam_min) + DIAGONAL_MARGIN) * np.eye(d)
    cholesky_lower(omega)
    return omega, adjacency


def sample_mvn(n: int, sigma: np.ndarray, rng=None) -> np.ndarray:
    """Draw n iid mean-zero Gaussian rows with covariance ``sigma``."""
    if n < 1:
        raise ValueError("n must be positive")
    sigma = sym_matrix(sigma)
    factor = cholesky_lower(sigma)
    z = as_generator(rng).standard_normal((n, sigma.shape[0]))
    return z @ factor.T


def contaminate(
    x: np.ndarray, sigma_x_diag: np.ndarray, gamma: float, rng=None
) -> tuple[np.ndarray, MeasurementErrorModel]:
    """Add independent per-coordinate Gaussian noise scaled by the signal variance.

    Coordinate j receives noise variance ``gamma * sigma_x_diag[j]``.  The
    returned error model holds those exact variances (the simulation treats
    the contamination level as known).
    """
    x = as_dataset(x, min_rows=1)
    if gamma <= 0:
        raise ValueError("gamma must be positive to contaminate; use the clean data directly")
    diag = np.asarray(sigma_x_diag, dtype=np.float64)
    if diag.ndim != 1 or diag.shape[0] != x.shape[1]:
        raise ValueError(f"sigma_x_diag must have length {x.shape[1]}")
    if (diag <= 0).any():
        raise ValueError("signal variances must be positive")
    variances = gamma * diag
    noise = as_generator(rng).standard_normal(x.shape) * np.sqrt(variances)
    return x + noise, MeasurementErrorModel(variances)
