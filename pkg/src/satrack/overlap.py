"""OSPA distance and windowed tracking-overlap detection between agent pairs."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment


def _positions(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        return np.zeros((0, 2))
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] == 4:
        return X[:, [0, 2]]
    return X[:, :2]


def ospa(X, Y, c: float = 50.0, p: int = 2) -> float:
    """OSPA distance between point sets; 4-D states are reduced to positions."""
    if c <= 0:
        raise ValueError("cutoff must be positive")
    X, Y = _positions(X), _positions(Y)
    m, n = len(X), len(Y)
    if m == 0 and n == 0:
        return 0.0
    if m == 0 or n == 0:
        return float(c)
    if m > n:
        X, Y, m, n = Y, X, n, m
    D = np.minimum(c, np.linalg.norm(X[:, None, :] - Y[None, :, :], axis=2)) ** p
    rows, cols = linear_sum_assignment(D)
    total = D[rows, cols].sum() + (n - m) * c**p
    return float((total / n) ** (1.0 / p))


def squares_overlap(s_i, s_j, a: float) -> bool:
    """Closed a x a squares centred at s_i and s_j intersect."""
    return max(abs(s_i[0] - s_j[0]), abs(s_i[1] - s_j[1])) <= a


@dataclass
class OverlapLedger:
    window: int = 3
    cutoff: float = 50.0
    threshold: float = 0.9
    scores: dict = field(default_factory=dict)

    def _buf(self, pair) -> deque:
        key = tuple(sorted(pair))
        if key not in self.scores:
            self.scores[key] = deque(maxlen=self.window)
        return self.scores[key]

    def cumulative(self, pair) -> float:
        buf = self._buf(pair)
        if len(buf) < self.window:
            return float("inf")
        return float(sum(buf))

    def reset(self, pair) -> None:
        self._buf(pair).clear()

    def entries(self, pair) -> list[float]:
        return list(self._buf(pair))


def overlap_step(ledger: OverlapLedger, pair, X_i, X_j, s_i, s_j, a: float) -> OverlapLedger:
    """Push one incremental overlap score (or the non-overlap flag) for ``pair``."""
    buf = ledger._buf(pair)
    if not squares_overlap(s_i, s_j, a) or len(_positions(X_i)) == 0 or len(_positions(X_j)) == 0:
        buf.append(float("inf"))
    else:
        buf.append(ospa(X_i, X_j, ledger.cutoff))
    return ledger


def decide_switch(ledger: OverlapLedger, pair, rng: np.random.Generator):
    """Agent id that should drop back to searching, or None."""
    if ledger.cumulative(pair) <= ledger.threshold:
        i, j = pair
        choice = i if rng.random() < 0.5 else j
        ledger.reset(pair)
        return choice
    return None
