"""Independent oracles and shared assertions for the test suite.

The oracles re-derive expected values by brute force (dense grid search,
pairwise counting, explicit scalar formulas) without touching the code paths
they check.
"""

import numpy as np

from precis.core import cholesky_lower


def random_spd(rng, d, scale=1.0):
    a = rng.standard_normal((d, d))
    return scale * (a @ a.T + d * np.eye(d))


def random_correlation_2x2(rng, rho_max=0.6, diag_lo=0.9, diag_hi=1.6):
    """Well-conditioned 2x2 covariance for the optimizer battery."""
    rho = rng.uniform(-rho_max, rho_max)
    d1, d2 = rng.uniform(diag_lo, diag_hi, 2)
    off = rho * np.sqrt(d1 * d2)
    return np.array([[d1, off], [off, d2]])


def scalar_objective_2x2(o11, o12, o22, s, n, hp):
    """Penalized objective on a 2x2 problem, evaluated from scalar formulas."""
    det = o11 * o22 - o12 * o12
    trace_term = s[0, 0] * o11 + 2 * s[0, 1] * o12 + s[1, 1] * o22
    a = abs(o12)
    pen = -np.logaddexp(
        np.log(hp.slab_prior_prob / (2 * hp.slab_scale)) - a / hp.slab_scale,
        np.log((1 - hp.slab_prior_prob) / (2 * hp.spike_scale)) - a / hp.spike_scale,
    )
    return 0.5 * n * (trace_term - np.log(det)) + pen + hp.diagonal_rate * (o11 + o22)


def grid_search_map_2x2(s, n, hp, rounds=7, pts=25):
    """Zooming dense grid search for the 2x2 MAP, constrained to |o12| <= bound.

    Returns the minimizing (o11, o12, o22) to a resolution far below 1e-4.
    """
    bound = hp.spectral_bound
    lo = np.array([0.02, -bound, 0.02])
    hi = np.array([8.0, bound, 8.0])
    best = None
    for _ in range(rounds):
        g0 = np.linspace(lo[0], hi[0], pts)
        g1 = np.linspace(lo[1], hi[1], pts)
        g2 = np.linspace(lo[2], hi[2], pts)
        o11, o12, o22 = np.meshgrid(g0, g1, g2, indexing="ij")
        det = o11 * o22 - o12**2
        valid = det > 1e-12
        a = np.abs(o12)
        pen = -np.logaddexp(
            np.log(hp.slab_prior_prob / (2 * hp.slab_scale)) - a / hp.slab_scale,
            np.log((1 - hp.slab_prior_prob) / (2 * hp.spike_scale)) - a / hp.spike_scale,
        )
        trace_term = s[0, 0] * o11 + 2 * s[0, 1] * o12 + s[1, 1] * o22
        with np.errstate(invalid="ignore", divide="ignore"):
            f = (
                0.5 * n * (trace_term - np.log(np.where(valid, det, np.nan)))
                + pen
                + hp.diagonal_rate * (o11 + o22)
            )
        f = np.where(valid, f, np.inf)
        k = np.unravel_index(np.argmin(f), f.shape)
        best = np.array([g0[k[0]], g1[k[1]], g2[k[2]]])
        step = np.array([g0[1] - g0[0], g1[1] - g1[0], g2[1] - g2[0]])
        lo = np.maximum(best - 2 * step, [1e-3, -bound, 1e-3])
        hi = np.minimum(best + 2 * step, [20.0, bound, 20.0])
    return best


def optimizer_battery(n_cases=20, n=100, seed=2024):
    """The fixed 2x2 battery: covariances plus weight levels with bounds in the
    regime where the constrained objective has a single basin."""
    levels = [(0.2, 1.0, 3.0), (0.25, 2.0, 3.5), (0.4, 1.2, 5.0)]
    rng = np.random.default_rng(seed)
    cases = []
    for i in range(n_cases):
        s = random_correlation_2x2(rng)
        cases.append((s, n, levels[i % len(levels)]))
    return cases


def brute_force_auc(scores, truth):
    """O(P*N) pairwise counting with ties worth 1/2."""
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth, dtype=bool)
    pos = scores[truth]
    neg = scores[~truth]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


def assert_monotone_trace(estimate, slack=1e-8):
    trace = np.asarray(estimate.objective_trace)
    if trace.size > 1:
        assert (np.diff(trace) <= slack).all(), f"objective trace increased: {trace}"


def assert_valid_estimate(estimate, bound=None):
    """Symmetry, positive definiteness, probability ranges, and the magnitude cap."""
    omega = estimate.omega
    assert np.array_equal(omega, omega.T)
    cholesky_lower(omega)
    p = estimate.inclusion_prob
    assert (p >= 0).all() and (p <= 1).all()
    assert np.allclose(np.diag(p), 1.0)
    if bound is not None:
        assert np.abs(omega).max() <= bound + 1e-12, f"entry exceeds bound {bound}"
