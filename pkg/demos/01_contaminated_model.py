"""Why additive measurement error breaks precision-matrix estimation.

Builds a small true precision matrix, derives the precision of the observed
(noisy) variables in closed form, and shows that the obvious moment fix,
subtracting the error variances from the observed covariance, produces an
indefinite matrix that cannot be inverted into an estimate.
"""

import numpy as np

from precis import (
    MeasurementErrorModel,
    contaminated_precision,
    naive_moment_correction,
    sample_covariance,
    spd_inverse,
)
from precis.simulate import GraphSpec, contaminate, gen_precision, sample_mvn

rng = np.random.default_rng(0)

omega_true, adjacency = gen_precision(GraphSpec(structure="hub", d=10, group_size=5))
sigma_true = spd_inverse(omega_true)
print("true precision (first group block):")
print(np.round(omega_true[:5, :5], 2))

# closed-form effect of the noise on the precision matrix
me = MeasurementErrorModel(0.5 * np.diag(sigma_true))
omega_observed = contaminated_precision(omega_true, me)
offs = np.abs(omega_true[adjacency] - omega_observed[adjacency])
print(f"\nnoise at gamma=0.5 moves true-edge entries by up to {offs.max():.3f}")
zero_mask = ~adjacency & ~np.eye(10, dtype=bool)
print(f"and turns exact zeros into entries as large as {np.abs(omega_observed[zero_mask]).max():.3f}")

# the naive moment correction is indefinite in the n < d regime and beyond
x = sample_mvn(40, sigma_true, rng)
w, me = contaminate(x, np.diag(sigma_true), 0.5, rng)
corrected_cov = naive_moment_correction(sample_covariance(w), me)
eigenvalues = np.linalg.eigvalsh(corrected_cov)
print(f"\nmoment-corrected covariance eigenvalue range: [{eigenvalues[0]:.3f}, {eigenvalues[-1]:.3f}]")
print("negative eigenvalues make it unusable as a covariance; a different correction is needed.")
