"""Single-target and single-agent models: dynamics, controls, sensing, likelihood.

State vectors use the ordering ``[px, vx, py, vy]``.  Batched helpers
(``*_batch``) operate on ``(N, 4)`` particle arrays and are what the filter
uses internally; the scalar functions exist for clarity and testing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class KinematicState:
    px: float
    vx: float
    py: float
    vy: float
    label: int = 1  # 1 = true target, 0 = virtual target

    def as_array(self) -> np.ndarray:
        return np.array([self.px, self.vx, self.py, self.vy], dtype=float)

    @property
    def position(self) -> tuple[float, float]:
        return (self.px, self.py)

    @classmethod
    def from_array(cls, x, label: int = 1) -> "KinematicState":
        return cls(float(x[0]), float(x[1]), float(x[2]), float(x[3]), label)


@dataclass(frozen=True)
class MotionModel:
    """Near-constant-velocity model with white-acceleration noise."""

    T: float = 1.0
    p_survive: float = 0.99
    noise_intensity: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.p_survive <= 1.0:
            raise ValueError(f"p_survive must lie in (0, 1], got {self.p_survive}")
        if self.T <= 0 or self.noise_intensity < 0:
            raise ValueError("T must be positive and noise_intensity non-negative")

    @property
    def F(self) -> np.ndarray:
        T = self.T
        return np.array(
            [[1, T, 0, 0], [0, 1, 0, 0], [0, 0, 1, T], [0, 0, 0, 1]], dtype=float
        )

    @property
    def Q(self) -> np.ndarray:
        T = self.T
        block = np.array([[T / 3, T / 2], [T / 2, T]])
        Q = np.zeros((4, 4))
        Q[:2, :2] = block
        Q[2:, 2:] = block
        return self.noise_intensity * Q

    @cached_property
    def noise_factor(self) -> np.ndarray:
        """Lower Cholesky factor of Q (jittered so q = 0 still factors)."""
        return np.linalg.cholesky(self.Q + 1e-12 * np.eye(4))

    def scaled(self, factor: float) -> "MotionModel":
        return MotionModel(self.T, self.p_survive, self.noise_intensity * factor)


@dataclass(frozen=True)
class SensorModel:
    """Square footprint detector with range/bearing noise growing with range."""

    side: float = 10.0
    pd_max: float = 0.99
    range_noise0: float = 1.0
    range_noise_slope: float = 5e-5
    bearing_noise0: float = np.pi / 180
    bearing_noise_slope: float = 1e-5
    clutter_rate: float = 10.0
    # 0 spreads clutter over the footprint image; R > 0 spreads it uniformly
    # over the range/bearing box [0, R] x (-pi, pi]
    clutter_max_range: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.pd_max <= 1.0:
            raise ValueError(f"pd_max must lie in (0, 1], got {self.pd_max}")
        if self.side <= 0:
            raise ValueError("sensing side must be positive")
        coeffs = (
            self.range_noise0,
            self.range_noise_slope,
            self.bearing_noise0,
            self.bearing_noise_slope,
            self.clutter_rate,
            self.clutter_max_range,
        )
        if min(coeffs) < 0:
            raise ValueError("noise coefficients and clutter rate must be >= 0")

    def range_std(self, r):
        return self.range_noise0 + self.range_noise_slope * np.square(r)

    def bearing_std(self, r):
        return self.bearing_noise0 + self.bearing_noise_slope * np.asarray(r)

    def clutter_density(self, z_range, z_bearing):
        """Spatial clutter density f_c in (range, bearing) coordinates.

        With footprint support, clutter is uniform in position over the
        sensing square and its image has density ``r / a**2`` where the
        back-projected point falls inside the square.  With a positive
        ``clutter_max_range`` the density is flat over the range/bearing box.
        """
        z_range = np.asarray(z_range, dtype=float)
        z_bearing = np.asarray(z_bearing, dtype=float)
        if self.clutter_max_range > 0:
            R = self.clutter_max_range
            inside = (z_range >= 0) & (z_range <= R)
            return np.where(inside, 1.0 / (2 * np.pi * R), 0.0)
        half = self.side / 2
        inside = (np.abs(z_range * np.cos(z_bearing)) <= half) & (
            np.abs(z_range * np.sin(z_bearing)) <= half
        )
        return np.where(inside & (z_range >= 0), z_range / self.side**2, 0.0)

    def clutter_intensity(self, z_range, z_bearing):
        return self.clutter_rate * self.clutter_density(z_range, z_bearing)

    def sample_clutter(self, s, n: int, rng: np.random.Generator) -> np.ndarray:
        """``n`` false alarms as an (n, 2) range/bearing array, drawn from f_c."""
        if self.clutter_max_range > 0:
            r = rng.uniform(0.0, self.clutter_max_range, n)
            b = wrap_angle(rng.uniform(-np.pi, np.pi, n))
            return np.column_stack([r, b])
        h = self.side / 2
        px = rng.uniform(s[0] - h, s[0] + h, n)
        py = rng.uniform(s[1] - h, s[1] + h, n)
        r = np.hypot(s[0] - px, s[1] - py)
        b = wrap_angle(np.arctan2(s[1] - py, s[0] - px))
        return np.column_stack([r, b])


@dataclass(frozen=True)
class ControlModel:
    radial_step: float = 2.0
    radial_levels: int = 2
    angular_divisions: int = 8


@dataclass(frozen=True)
class Measurement:
    range: float
    bearing: float

    def __post_init__(self):
        if self.range < 0:
            raise ValueError("range must be non-negative")


@dataclass(frozen=True)
class Area:
    """Axis-aligned surveillance rectangle."""

    xmin: float = 0.0
    xmax: float = 100.0
    ymin: float = 0.0
    ymax: float = 100.0

    @property
    def size(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)

    def contains(self, p, tol: float = 1e-9) -> bool:
        return (
            self.xmin - tol <= p[0] <= self.xmax + tol
            and self.ymin - tol <= p[1] <= self.ymax + tol
        )


def wrap_angle(a):
    """Wrap angles to (-pi, pi]."""
    w = np.mod(np.asarray(a, dtype=float) + np.pi, TWO_PI) - np.pi
    return np.where(w == -np.pi, np.pi, w)


# --- dynamics -------------------------------------------------------------


def propagate_target(
    x: KinematicState, m: MotionModel, rng: np.random.Generator | None = None
) -> KinematicState:
    if x.label == 0:
        return x
    nxt = m.F @ x.as_array()
    if rng is not None:
        nxt = nxt + rng.multivariate_normal(np.zeros(4), m.Q)
    return KinematicState.from_array(nxt, label=1)


def propagate_batch(
    X: np.ndarray, m: MotionModel, rng: np.random.Generator | None = None
) -> np.ndarray:
    """Propagate true-target states ``X`` of shape (N, 4)."""
    out = X @ m.F.T
    if rng is not None and len(X):
        out = out + rng.standard_normal(X.shape) @ m.noise_factor.T
    return out


def admissible_controls(
    s, c: ControlModel, area: Area | None = None
) -> list[tuple[float, float]]:
    """Reachable next positions, deduplicated, stay action first.

    Enumeration order: stay, then ring 1 headings 0..N-1, then ring 2, ...
    Positions outside ``area`` (when given) are dropped.
    """
    sx, sy = float(s[0]), float(s[1])
    dtheta = TWO_PI / c.angular_divisions if c.angular_divisions else 0.0
    out: list[tuple[float, float]] = []
    seen: set[tuple[float, float]] = set()
    for l1 in range(c.radial_levels + 1):
        for l2 in range(c.angular_divisions + 1):
            r = l1 * c.radial_step
            p = (sx + r * math.cos(l2 * dtheta), sy + r * math.sin(l2 * dtheta))
            key = (round(p[0], 9), round(p[1], 9))
            if key in seen:
                continue
            seen.add(key)
            if area is not None and not area.contains(p):
                continue
            out.append((float(p[0]), float(p[1])))
    return out


# --- sensing --------------------------------------------------------------


def in_sensing_range(x, s, a: float) -> bool:
    return max(abs(x[0] - s[0]), abs(x[1] - s[1])) <= a / 2


def in_sensing_range_batch(P: np.ndarray, s, a: float) -> np.ndarray:
    """Closed-square membership for positions ``P`` of shape (N, 2)."""
    return np.maximum(np.abs(P[:, 0] - s[0]), np.abs(P[:, 1] - s[1])) <= a / 2


def detection_probability(x: KinematicState, s, sm: SensorModel) -> float:
    if x.label != 1:
        raise ValueError("detection_probability applies to true targets only")
    return sm.pd_max if in_sensing_range(x.position, s, sm.side) else 0.0


def detection_probability_batch(X: np.ndarray, s, sm: SensorModel) -> np.ndarray:
    inside = in_sensing_range_batch(X[:, [0, 2]], s, sm.side)
    return np.where(inside, sm.pd_max, 0.0)


def observe_batch(X: np.ndarray, s) -> tuple[np.ndarray, np.ndarray]:
    """Noiseless (range, bearing) of states ``X`` seen from ``s``."""
    dx = s[0] - X[:, 0]
    dy = s[1] - X[:, 2]
    return np.hypot(dx, dy), np.arctan2(dy, dx)


def measure(
    x: KinematicState, s, sm: SensorModel, rng: np.random.Generator | None = None
) -> Measurement:
    if x.label != 1:
        raise ValueError("only true targets generate measurements")
    r, b = observe_batch(x.as_array()[None, :], s)
    r, b = float(r[0]), float(b[0])
    if rng is not None:
        r_true = r
        r = r_true + rng.normal(0.0, sm.range_std(r_true))
        b = b + rng.normal(0.0, sm.bearing_std(r_true))
    return Measurement(max(r, 0.0), float(wrap_angle(b)))


def likelihood(z: Measurement, x: KinematicState, s, sm: SensorModel) -> float:
    return float(likelihood_batch(np.array([[z.range, z.bearing]]), x.as_array()[None, :], s, sm)[0, 0])


def likelihood_batch(Z: np.ndarray, X: np.ndarray, s, sm: SensorModel) -> np.ndarray:
    """Likelihood matrix g(z_m | x_n, s) of shape (M, N).

    ``Z`` is an (M, 2) array of (range, bearing); noise scales are evaluated
    at each state's predicted range.
    """
    Z = np.asarray(Z, dtype=float).reshape(-1, 2)
    r, b = observe_batch(X, s)
    sr = sm.range_std(r)
    sb = sm.bearing_std(r)
    dr = (Z[:, 0:1] - r[None, :]) / sr[None, :]
    db = wrap_angle(Z[:, 1:2] - b[None, :]) / sb[None, :]
    return np.exp(-0.5 * (dr * dr + db * db)) / (TWO_PI * sr * sb)[None, :]
