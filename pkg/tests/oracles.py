"""Reference implementations written independently of the package code.

They favour obviousness over speed and are used only to check the
optimized versions.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def cv_matrices(T: float, q: float):
    F = np.array([[1, T, 0, 0], [0, 1, 0, 0], [0, 0, 1, T], [0, 0, 0, 1]], dtype=float)
    blk = q * np.array([[T**3 / 3, T**2 / 2], [T**2 / 2, T]])
    Q = np.zeros((4, 4))
    Q[:2, :2] = blk
    Q[2:, 2:] = blk
    return F, Q


def kalman_filter(m0, P0, F, Q, H, R, zs):
    """Posterior means and covariances after each measurement in ``zs``."""
    m, P = np.asarray(m0, float), np.asarray(P0, float)
    means, covs = [], []
    for z in zs:
        m, P = F @ m, F @ P @ F.T + Q
        S = H @ P @ H.T + R
        K = P @ H.T @ np.linalg.inv(S)
        m = m + K @ (z - H @ m)
        P = (np.eye(len(m)) - K @ H) @ P
        means.append(m.copy())
        covs.append(P.copy())
    return means, covs


def ospa_bruteforce(X, Y, c: float, p: int = 2) -> float:
    """OSPA by enumerating every injective assignment of the smaller set."""
    X = [tuple(x) for x in X]
    Y = [tuple(y) for y in Y]
    if len(X) > len(Y):
        X, Y = Y, X
    m, n = len(X), len(Y)
    if n == 0:
        return 0.0
    if m == 0:
        return float(c)
    best = math.inf
    for perm in itertools.permutations(range(n), m):
        s = sum(min(c, math.dist(X[i], Y[j])) ** p for i, j in enumerate(perm))
        best = min(best, s)
    return ((best + c**p * (n - m)) / n) ** (1 / p)


def floyd_warshall(nodes, edges):
    """All-pairs shortest distances as a dict of dicts."""
    d = {u: {v: (0.0 if u == v else math.inf) for v in nodes} for u in nodes}
    for (u, v), c in edges.items():
        d[u][v] = min(d[u][v], c)
        d[v][u] = min(d[v][u], c)
    for k in nodes:
        for i in nodes:
            for j in nodes:
                if d[i][k] + d[k][j] < d[i][j]:
                    d[i][j] = d[i][k] + d[k][j]
    return d


def min_cover_cost(nodes, edges, targets, start) -> float:
    """Cheapest open walk from ``start`` visiting all ``targets``."""
    d = floyd_warshall(nodes, edges)
    todo = [t for t in set(targets) if t != start]
    best = 0.0 if not todo else math.inf
    for order in itertools.permutations(todo):
        c, prev = 0.0, start
        for v in order:
            c += d[prev][v]
            prev = v
        best = min(best, c)
    return best


def renyi_direct(a, b, alpha: float) -> float:
    """Integral form of the intensity divergence, summed particle by particle."""
    return float(
        sum(a_i for a_i in a)
        + alpha / (1 - alpha) * sum(b_i for b_i in b)
        - sum((b_i**alpha) * (a_i ** (1 - alpha)) for a_i, b_i in zip(a, b)) / (1 - alpha)
    )


def hellinger_form(a, b) -> float:
    """Closed form of the alpha = 1/2 divergence: sum of squared root gaps."""
    return float(sum((math.sqrt(x) - math.sqrt(y)) ** 2 for x, y in zip(a, b)))


class ReferenceSearchGrid:
    """Cell-by-cell search-value bookkeeping with plain Python lists."""

    def __init__(self, nx, ny, cell, init_value, decay):
        self.nx, self.ny, self.cell, self.decay = nx, ny, cell, decay
        self.area = nx * ny * cell * cell
        self.d = [init_value / self.area] * (nx * ny)

    def _inside(self, idx, s, a):
        ix, iy = idx % self.nx, idx // self.nx
        cx, cy = (ix + 0.5) * self.cell, (iy + 0.5) * self.cell
        return max(abs(cx - s[0]), abs(cy - s[1])) <= a / 2

    def step(self, s_prev, s_now, a):
        self.d = [v if self._inside(i, s_prev, a) else v * self.decay for i, v in enumerate(self.d)]
        self.d = [1 / self.area if self._inside(i, s_now, a) else v for i, v in enumerate(self.d)]


def tracking_ratio_reference(truth, estimates, eps):
    """Per-target share of alive steps with an estimate within ``eps``, averaged."""
    hits, alive = {}, {}
    for live, est in zip(truth, estimates):
        for tid, x, y in live:
            alive[tid] = alive.get(tid, 0) + 1
            ok = any(math.hypot(e[0] - x, e[1] - y) <= eps for e in est)
            hits[tid] = hits.get(tid, 0) + int(ok)
    if not alive:
        return math.nan
    return sum(hits[t] / alive[t] for t in alive) / len(alive)
