"""Sequential Monte Carlo PHD filter over true targets."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .world import (
    Area,
    Measurement,
    MotionModel,
    SensorModel,
    detection_probability_batch,
    likelihood_batch,
    propagate_batch,
)


@dataclass(frozen=True)
class BirthModel:
    """Uniform-in-position birth intensity over a square support."""

    rate: float = 0.3
    n_particles: int = 300
    velocity_std: float = 1.0


@dataclass
class ParticlePHD:
    states: np.ndarray  # (N, 4)
    weights: np.ndarray  # (N,)
    birth: BirthModel = BirthModel()
    rho: int = 1000
    newborn: np.ndarray | None = None  # (N,) True for particles born this scan

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float).reshape(-1, 4)
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(self.states) != len(self.weights):
            raise ValueError("states and weights differ in length")
        if self.newborn is None:
            self.newborn = np.zeros(len(self.weights), dtype=bool)
        self.newborn = np.asarray(self.newborn, dtype=bool).reshape(-1)
        if len(self.newborn) != len(self.weights):
            raise ValueError("newborn flags and weights differ in length")

    @classmethod
    def empty(cls, birth: BirthModel = BirthModel(), rho: int = 1000) -> "ParticlePHD":
        return cls(np.zeros((0, 4)), np.zeros(0), birth, rho)

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def __len__(self) -> int:
        return len(self.weights)

    def copy(self) -> "ParticlePHD":
        return replace(
            self, states=self.states.copy(), weights=self.weights.copy(), newborn=self.newborn.copy()
        )


def square(center, side: float) -> Area:
    h = side / 2
    return Area(center[0] - h, center[0] + h, center[1] - h, center[1] + h)


def sample_births(
    support: Area, birth: BirthModel, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    n = birth.n_particles
    X = np.empty((n, 4))
    X[:, 0] = rng.uniform(support.xmin, support.xmax, n)
    X[:, 2] = rng.uniform(support.ymin, support.ymax, n)
    X[:, [1, 3]] = rng.normal(0.0, birth.velocity_std, (n, 2))
    return X, np.full(n, birth.rate / n)


def phd_survive(phd: ParticlePHD, m: MotionModel, rng=None) -> ParticlePHD:
    """Prediction of the persistent part only (no birth term)."""
    return replace(
        phd,
        states=propagate_batch(phd.states, m, rng),
        weights=phd.weights * m.p_survive,
        newborn=np.zeros(len(phd.weights), dtype=bool),
    )


def add_births(phd: ParticlePHD, support: Area, rng: np.random.Generator) -> ParticlePHD:
    if phd.birth.rate <= 0 or phd.birth.n_particles <= 0:
        return phd
    Xb, wb = sample_births(support, phd.birth, rng)
    return replace(
        phd,
        states=np.vstack([phd.states, Xb]),
        weights=np.concatenate([phd.weights, wb]),
        newborn=np.concatenate([phd.newborn, np.ones(len(wb), dtype=bool)]),
    )


def phd_predict(
    phd: ParticlePHD, m: MotionModel, birth_support: Area, rng: np.random.Generator
) -> ParticlePHD:
    """Predicted intensity: survivors propagated and thinned by p_S, plus births."""
    return add_births(phd_survive(phd, m, rng), birth_support, rng)


def _as_array(Z) -> np.ndarray:
    if isinstance(Z, np.ndarray):
        return Z.reshape(-1, 2).astype(float)
    return np.array([[z.range, z.bearing] for z in Z], dtype=float).reshape(-1, 2)


def phd_update(phd: ParticlePHD, Z, s, sm: SensorModel, likelihood=None) -> ParticlePHD:
    """Measurement update of the particle intensity.

    ``Z`` may be a list of :class:`Measurement` or an (M, 2) array.
    ``likelihood(Z, X, s)`` replaces the range/bearing likelihood when given;
    clutter intensity is then evaluated on ``Z`` as if it were range/bearing.
    """
    Z = _as_array(Z)
    w = phd.weights
    pd = detection_probability_batch(phd.states, s, sm)
    new_w = w * (1.0 - pd)
    seen = pd > 0
    if len(Z) and seen.any():
        idx = np.flatnonzero(seen)
        X = phd.states[idx]
        g = likelihood_batch(Z, X, s, sm) if likelihood is None else likelihood(Z, X, s)
        num = g * (pd[idx] * w[idx])[None, :]
        tau = num.sum(axis=1)
        denom = sm.clutter_intensity(Z[:, 0], Z[:, 1]) + tau
        bad = (denom <= 0) & (num.max(axis=1) > 0)
        if bad.any():
            raise ValueError("clutter intensity vanishes where the target term is nonzero")
        safe = np.where(denom > 0, denom, 1.0)
        new_w[idx] += (num / safe[:, None]).sum(axis=0)
    return replace(phd, weights=new_w)


def resample(phd: ParticlePHD, rho: int | None = None, rng=None) -> ParticlePHD:
    """Systematic resampling to ceil(rho * mass) equally weighted particles."""
    rho = phd.rho if rho is None else rho
    M = phd.mass
    n = int(math.ceil(rho * M - 1e-9)) if M > 0 else 0
    if n == 0:
        return replace(phd, states=np.zeros((0, 4)), weights=np.zeros(0), newborn=np.zeros(0, dtype=bool))
    rng = np.random.default_rng() if rng is None else rng
    cdf = np.cumsum(phd.weights) / M
    cdf[-1] = 1.0
    u = (rng.uniform() + np.arange(n)) / n
    idx = np.searchsorted(cdf, u, side="left")
    return replace(
        phd, states=phd.states[idx].copy(), weights=np.full(n, M / n), newborn=phd.newborn[idx].copy()
    )


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def weighted_kmeans(
    P: np.ndarray,
    w: np.ndarray,
    k: int,
    restarts: int = 10,
    iters: int = 30,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd's algorithm with weighted k-means++ seeding.

    All restarts run together as one batched array computation; the result
    with the lowest weighted inertia wins.  Returns (centers, labels).
    """
    n = len(P)
    if k <= 0 or n == 0:
        return np.zeros((0, P.shape[1])), np.zeros(n, dtype=int)
    k = min(k, n)
    if k == 1:  # the single optimal centre is the weighted mean
        return np.average(P, axis=0, weights=w)[None, :], np.zeros(n, dtype=int)
    rng = np.random.default_rng(seed)
    p = w / w.sum()
    C = np.empty((restarts, k, P.shape[1]))
    for r in range(restarts):
        C[r, 0] = P[rng.choice(n, p=p)]
        d2 = np.sum((P - C[r, 0]) ** 2, axis=1)
        for j in range(1, k):
            q = w * d2
            tot = q.sum()
            pick = rng.choice(n, p=q / tot) if tot > 0 else rng.choice(n, p=p)
            C[r, j] = P[pick]
            d2 = np.minimum(d2, np.sum((P - C[r, j]) ** 2, axis=1))
    for _ in range(iters):
        D = np.sum((P[None, :, None, :] - C[:, None, :, :]) ** 2, axis=-1)  # (R, N, k)
        lab = D.argmin(axis=2)
        onehot = (lab[..., None] == np.arange(k)) * w[None, :, None]  # (R, N, k)
        mass = onehot.sum(axis=1)  # (R, k)
        newC = np.einsum("rnk,nd->rkd", onehot, P) / np.where(mass > 0, mass, 1.0)[..., None]
        newC = np.where(mass[..., None] > 0, newC, C)
        if np.allclose(newC, C, atol=1e-9):
            C = newC
            break
        C = newC
    D = np.sum((P[None, :, None, :] - C[:, None, :, :]) ** 2, axis=-1)
    inertia = (D.min(axis=2) * w[None, :]).sum(axis=1)
    best = int(np.argmin(inertia))
    return C[best], D[best].argmin(axis=1)


def phd_estimate(
    phd: ParticlePHD,
    region: Area | None = None,
    restarts: int = 10,
    seed: int = 0,
    persistent_only: bool = False,
) -> tuple[int, np.ndarray]:
    """Expected count (rounded) in ``region`` and that many cluster-centre states.

    With ``persistent_only`` the particles born this scan are left out, so a
    new target needs a second detection before it is reported.
    """
    X, w = phd.states, phd.weights
    if persistent_only:
        X, w = X[~phd.newborn], w[~phd.newborn]
    if region is not None and len(X):
        keep = (
            (X[:, 0] >= region.xmin)
            & (X[:, 0] <= region.xmax)
            & (X[:, 2] >= region.ymin)
            & (X[:, 2] <= region.ymax)
        )
        X, w = X[keep], w[keep]
    n_hat = round_half_up(float(w.sum())) if len(w) else 0
    positive = w > 0
    X, w = X[positive], w[positive]
    if n_hat == 0 or len(X) == 0:
        return 0, np.zeros((0, 4))
    centers, labels = weighted_kmeans(X[:, [0, 2]], w, n_hat, restarts=restarts, seed=seed)
    states = np.empty((len(centers), 4))
    for j in range(len(centers)):
        sel = labels == j
        if not sel.any():
            states[j] = [centers[j, 0], 0.0, centers[j, 1], 0.0]
            continue
        states[j] = np.average(X[sel], axis=0, weights=w[sel])
    return n_hat, states
