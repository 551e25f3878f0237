"""Compiled inner loop of the block coordinate descent M-step.

One call performs a single sweep of column updates on the working precision
matrix.  The caller owns convergence control, positive-definiteness guards,
and the periodic resync of the running inverse.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _soft(value, threshold):
    if value > threshold:
        return value - threshold
    if value < -threshold:
        return value + threshold
    return 0.0


@njit(cache=True)
def sweep_columns(s, weights, diag_rate, n, bound, omega, w, cd_tol, cd_max_pass):
    """One full pass of column updates; mutates ``omega`` and ``w`` in place.

    ``w`` must hold inv(omega) on entry and holds inv(omega) on exit (kept in
    sync through the block-inverse identity after every column).  For column j
    the off-diagonal entries solve a weighted lasso with quadratic form
    ``(n*s_jj + 2*diag_rate) * inv(omega_11)`` and linear term ``n * s_1j``
    by cyclic soft-thresholding, each coordinate clipped to [-bound, bound];
    the diagonal entry then restores a positive Schur complement fixed at
    ``1 / (s_jj + 2*diag_rate/n)``.

    Returns the largest elementwise change in omega over the sweep.
    """
    d = s.shape[0]
    m = d - 1
    om11inv = np.empty((m, m))
    grad = np.empty(m)
    omcol = np.empty(m)
    u = np.empty(m)
    sweep_delta = 0.0

    for j in range(d):
        s22 = s[j, j]
        sigma22 = s22 + 2.0 * diag_rate / n
        kappa = n * sigma22
        w22 = w[j, j]

        # inv(omega_11) via rank-1 downdate of the running inverse
        for a in range(m):
            ia = a if a < j else a + 1
            wa = w[ia, j]
            for b in range(m):
                ib = b if b < j else b + 1
                om11inv[a, b] = w[ia, ib] - wa * w[ib, j] / w22

        for a in range(m):
            ia = a if a < j else a + 1
            omcol[a] = omega[ia, j]

        # gradient of the smooth part at the warm start
        for a in range(m):
            ia = a if a < j else a + 1
            acc = 0.0
            for b in range(m):
                acc += om11inv[a, b] * omcol[b]
            grad[a] = kappa * acc + n * s[ia, j]

        for _ in range(cd_max_pass):
            pass_delta = 0.0
            for k in range(m):
                ik = k if k < j else k + 1
                old = omcol[k]
                akk = kappa * om11inv[k, k]
                partial = akk * old - grad[k]
                new = _soft(partial, weights[ik, j]) / akk
                if new > bound:
                    new = bound
                elif new < -bound:
                    new = -bound
                diff = new - old
                if diff != 0.0:
                    omcol[k] = new
                    for a in range(m):
                        grad[a] += kappa * om11inv[a, k] * diff
                    if abs(diff) > pass_delta:
                        pass_delta = abs(diff)
            if pass_delta < cd_tol:
                break

        schur = 1.0 / sigma22
        quad_form = 0.0
        for a in range(m):
            acc = 0.0
            for b in range(m):
                acc += om11inv[a, b] * omcol[b]
            u[a] = acc
            quad_form += omcol[a] * acc
        om22 = schur + quad_form

        for a in range(m):
            ia = a if a < j else a + 1
            change = abs(omega[ia, j] - omcol[a])
            if change > sweep_delta:
                sweep_delta = change
            omega[ia, j] = omcol[a]
            omega[j, ia] = omcol[a]
        change = abs(omega[j, j] - om22)
        if change > sweep_delta:
            sweep_delta = change
        omega[j, j] = om22

        # block-inverse identity keeps w = inv(omega) exact after the column swap
        w[j, j] = sigma22
        for a in range(m):
            ia = a if a < j else a + 1
            wa = -sigma22 * u[a]
            w[ia, j] = wa
            w[j, ia] = wa
            for b in range(m):
                ib = b if b < j else b + 1
                w[ia, ib] = om11inv[a, b] + sigma22 * u[a] * u[b]

    return sweep_delta
