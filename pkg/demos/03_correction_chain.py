"""The full correction chain on contaminated data, against the naive fit.

Generates a hub graph, contaminates the sample at a known noise-to-signal
ratio, then compares three fits of the same family: on the clean data
(unattainable in practice), on the noisy data as-is, and corrected by
alternating imputation with warm-started refits and averaging past burn-in.
"""

import numpy as np

from precis import FitInput, IroConfig, fit_bagus, make_hyperparams, run_iro, sample_covariance, spd_inverse
from precis.metrics import auc, frobenius_error
from precis.simulate import GraphSpec, contaminate, gen_precision, sample_mvn

rng = np.random.default_rng(7)
d, n, gamma = 40, 100, 0.25

omega_true, adjacency = gen_precision(GraphSpec(structure="hub", d=d, group_size=10))
sigma_true = spd_inverse(omega_true)
x = sample_mvn(n, sigma_true, rng)
w, error_model = contaminate(x, np.diag(sigma_true), gamma, rng)

hp = make_hyperparams(0.1, 0.5)
true_fit = fit_bagus(FitInput(sample_covariance(x), n), hp)
naive_fit = fit_bagus(FitInput(sample_covariance(w), n), hp)

chain = run_iro(w, error_model, IroConfig(iterations=25, hp=hp, burn_in_fraction=0.2, seed=42))
corrected = chain.averaged
print(f"chain of {len(chain.per_iteration)} iterations, {chain.burn_in_count} discarded as burn-in")
if chain.nonconverged_iterations:
    print(f"iterations that hit the EM cap (best iterate kept): {chain.nonconverged_iterations}")

print(f"\n{'arm':<10} {'frobenius':>10} {'auc':>8}")
for name, est in (("true", true_fit), ("naive", naive_fit), ("corrected", corrected)):
    print(
        f"{name:<10} {frobenius_error(est.omega, omega_true):>10.3f} "
        f"{auc(est.inclusion_prob, adjacency):>8.4f}"
    )
print("\nthe corrected arm recovers most of the gap between naive and the clean-data fit.")
