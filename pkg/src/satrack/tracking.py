"""Tracking-mode control by maximizing the Renyi divergence between the
predicted intensity and its pseudo-update under each candidate control."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .phd import ParticlePHD, phd_estimate, phd_update
from .world import SensorModel, observe_batch


@dataclass
class ControlEvaluation:
    control: tuple[float, float]
    predicted: np.ndarray  # (M, 2) range/bearing
    divergence: float


def predicted_measurements(X_hat: np.ndarray, u, sm: SensorModel | None = None) -> np.ndarray:
    """Mode of the likelihood for every predicted state, i.e. its noiseless image."""
    X_hat = np.asarray(X_hat, dtype=float).reshape(-1, 4)
    r, b = observe_batch(X_hat, u)
    return np.column_stack([r, b])


def renyi_divergence(D_pred: ParticlePHD, D_post: ParticlePHD, alpha: float) -> float:
    return renyi_from_weights(D_pred.weights, D_post.weights, alpha)


def renyi_from_weights(w_pred, w_post, alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    w_pred = np.asarray(w_pred, dtype=float)
    w_post = np.asarray(w_post, dtype=float)
    if w_pred.shape != w_post.shape:
        raise ValueError("intensities must share the same particle support")
    # per-particle terms, each >= 0 by weighted AM-GM
    terms = (
        w_pred
        + alpha / (1 - alpha) * w_post
        - np.power(w_post, alpha) * np.power(w_pred, 1 - alpha) / (1 - alpha)
    )
    return float(np.maximum(terms, 0.0).sum())


def evaluate_controls(
    phd_pred: ParticlePHD, U, sm: SensorModel, alpha: float, X_hat: np.ndarray | None = None
) -> list[ControlEvaluation]:
    if X_hat is None:
        _, X_hat = phd_estimate(phd_pred)
    out = []
    for u in U:
        Zbar = predicted_measurements(X_hat, u, sm)
        post = phd_update(phd_pred, Zbar, u, sm)
        out.append(ControlEvaluation(tuple(u), Zbar, renyi_divergence(phd_pred, post, alpha)))
    return out


def select_track_control(
    phd_pred: ParticlePHD,
    s,
    U,
    sm: SensorModel,
    alpha: float = 0.5,
    X_hat: np.ndarray | None = None,
) -> tuple[float, float]:
    """Divergence-maximizing control; ties keep the earliest control in ``U``."""
    if not U:
        raise ValueError("empty control set")
    evals = evaluate_controls(phd_pred, U, sm, alpha, X_hat)
    best = evals[0]
    for e in evals[1:]:
        if e.divergence > best.divergence + 1e-12:
            best = e
    return best.control
