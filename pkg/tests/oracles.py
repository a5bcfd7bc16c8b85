"""Independent reference computations used by the tests.

Nothing here imports the package's solver or readout code.
"""
from __future__ import annotations

import numpy as np


def project_box_hyperplane(v, y, C):
    """Euclidean projection of v onto {0 <= a <= C, y.a = 0}.

    a(mu) = clip(v - mu*y, 0, C) and g(mu) = y.a(mu) is piecewise linear and
    non-increasing in mu; evaluate g at every breakpoint and interpolate the root.
    """
    bps = np.unique(np.concatenate([v * y, (v - C) * y]))
    A = np.clip(v[None, :] - bps[:, None] * y[None, :], 0.0, C)
    g = A @ y
    zero = np.flatnonzero(g == 0)
    if zero.size:
        return A[zero[0]]
    k = np.flatnonzero((g[:-1] > 0) & (g[1:] < 0))[0]
    mu = bps[k] + (bps[k + 1] - bps[k]) * g[k] / (g[k] - g[k + 1])
    return np.clip(v - mu * y, 0.0, C)


def qp_dual_projected_gradient(K, y, C, iters=20000):
    """Maximise sum(a) - 1/2 (a*y)^T K (a*y) over the SVM dual feasible set (FISTA)."""
    K = np.asarray(K, float)
    y = np.asarray(y, float)
    Q = (y[:, None] * y[None, :]) * K
    L = max(np.linalg.eigvalsh(Q).max(), 1e-12)
    a = np.zeros(len(y))
    z, t = a.copy(), 1.0
    for _ in range(iters):
        grad = 1.0 - Q @ z
        a_new = project_box_hyperplane(z + grad / L, y, C)
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        z = a_new + ((t - 1) / t_new) * (a_new - a)
        a, t = a_new, t_new
    return a


def dual_value(K, y, a):
    ay = a * y
    return float(a.sum() - 0.5 * ay @ K @ ay)


def dense_mvm(G, x):
    """Column sums sum_i G[i][p] * x[i] with explicit loops."""
    d, P = len(G), len(G[0])
    return [sum(G[i][p] * x[i] for i in range(d)) for p in range(P)]


def nearest_level_bruteforce(levels, value):
    """Index of the closest level, lowest index on ties."""
    best, best_d = 0, abs(levels[0] - value)
    for k, lv in enumerate(levels):
        dist = abs(lv - value)
        if dist < best_d:
            best, best_d = k, dist
    return best
