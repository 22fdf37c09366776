"""Compiled inner loop of the CGL coordinate descent."""

import numba
import numpy as np

BRIDGE_EPS = 1e-12
DRIFT_TOL = 1e-8

OK = 0
REFRESH = 1
BRIDGE = -1


@numba.njit(cache=True)
def _probe_residual(M, L, v):
    p = M.shape[0]
    y = M @ v
    s = y.sum() / p
    z = L @ y
    worst = 0.0
    for a in range(p):
        d = abs(z[a] + s - v[a])
        if d > worst:
            worst = d
    return worst


@numba.njit(cache=True)
def cd_sweep(M, L, w, inv_h, I, J, order, start, drift, probe):
    """Run the coordinate updates ``order[start:]`` in place.

    Returns ``(next_position, drift, status)``. Every ``p`` updates the
    inverse is checked against ``L`` on the probe vector; status REFRESH asks
    the caller to refactorize before resuming at ``next_position``.
    """
    p = M.shape[0]
    u = np.empty(p)
    for pos in range(start, order.shape[0]):
        k = order[pos]
        i = I[k]
        j = J[k]
        rk = M[i, i] + M[j, j] - 2.0 * M[i, j]
        wk = w[k]
        if 1.0 - wk * rk <= BRIDGE_EPS:
            new = inv_h[k]
        else:
            new = wk + inv_h[k] - 1.0 / rk
            if new < 0.0:
                new = 0.0
        if new == wk:
            continue
        delta = new - wk
        denom = 1.0 + delta * rk
        if denom <= BRIDGE_EPS * (1.0 + abs(delta) * rk):
            return pos, drift, BRIDGE
        c = delta / denom
        for a in range(p):
            u[a] = M[a, i] - M[a, j]
        for a in range(p):
            ca = c * u[a]
            for b in range(p):
                M[a, b] -= ca * u[b]
        L[i, i] += delta
        L[j, j] += delta
        L[i, j] -= delta
        L[j, i] -= delta
        w[k] = new
        drift += 1
        if drift >= p:
            drift = 0
            if _probe_residual(M, L, probe) > DRIFT_TOL:
                return pos + 1, drift, REFRESH
    return order.shape[0], drift, OK
