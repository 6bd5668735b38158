"""Evaluation metrics and Monte Carlo aggregation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .overlap import ospa
from .search_density import SearchGrid, fuse


METRICS = ("searched_fraction", "ospa", "tracking_ratio")


@dataclass
class TrialResult:
    seed: int
    searched: np.ndarray  # (K,)
    ospa: np.ndarray  # (K,)
    tracked: dict[int, list[bool]]  # target id -> flag per alive step
    ratio_series: np.ndarray | None = None  # (K,) running tracking ratio
    events: list[tuple] = field(default_factory=list)
    truth: list[tuple] = field(default_factory=list)

    @property
    def tracking_ratio(self) -> float:
        return tracking_ratio(self.tracked)

    def metric_series(self) -> dict[str, np.ndarray]:
        ratio = self.ratio_series
        if ratio is None:
            ratio = np.full(len(self.searched), self.tracking_ratio)
        return {"searched_fraction": self.searched, "ospa": self.ospa, "tracking_ratio": ratio}


def searched_fraction(grids: list[SearchGrid], threshold: float = 0.5) -> float:
    """Share of cells whose fused search value is at least ``threshold``."""
    fused = grids[0]
    for g in grids[1:]:
        fused = fuse(fused, g)
    return float(np.mean(fused.values() >= threshold))


def ospa_timeseries(estimates, truth, c: float = 50.0) -> np.ndarray:
    return np.array([ospa(X, Y, c) for X, Y in zip(estimates, truth)])


def tracked_flags(truth, estimates, eps: float = 5.0) -> dict[int, list[bool]]:
    """Per target, whether some estimate lies within ``eps`` at each alive step.

    ``truth[k]`` is a list of ``(target_id, x, y)`` for targets alive at step k;
    ``estimates[k]`` is an (M, 4) or (M, 2) array.
    """
    flags: dict[int, list[bool]] = {}
    for live, est in zip(truth, estimates):
        est = np.asarray(est, dtype=float)
        P = est[:, [0, 2]] if est.ndim == 2 and est.shape[1] == 4 else est.reshape(-1, 2)
        for tid, x, y in live:
            hit = bool(len(P)) and bool(np.min(np.hypot(P[:, 0] - x, P[:, 1] - y)) <= eps)
            flags.setdefault(tid, []).append(hit)
    return flags


def tracking_ratio(flags: dict[int, list[bool]]) -> float:
    """Mean over targets of (tracked steps / lifetime steps); NaN without targets."""
    ratios = [np.mean(v) for v in flags.values() if len(v)]
    return float(np.mean(ratios)) if ratios else float("nan")


def tracking_ratio_series(truth, estimates, eps: float = 5.0) -> np.ndarray:
    """Tracking ratio restricted to steps 0..k, for every k.

    The last entry equals :func:`tracking_ratio` of the whole run.
    """
    alive: dict[int, int] = {}
    hits: dict[int, int] = {}
    out = np.full(len(truth), np.nan)
    for k, (live, est) in enumerate(zip(truth, estimates)):
        flags = tracked_flags([live], [est], eps)
        for tid, (hit,) in flags.items():
            alive[tid] = alive.get(tid, 0) + 1
            hits[tid] = hits.get(tid, 0) + int(hit)
        if alive:
            out[k] = float(np.mean([hits[t] / alive[t] for t in alive]))
    return out


@dataclass
class Aggregate:
    mean: np.ndarray
    std: np.ndarray
    n: int


def _fsum_mean(col: np.ndarray) -> float:
    vals = col[~np.isnan(col)]
    return math.fsum(vals) / len(vals) if len(vals) else float("nan")


def aggregate(series: list[np.ndarray]) -> Aggregate:
    """Per-step mean and population std across trials, NaNs skipped.

    Sums use ``math.fsum`` so the result does not depend on trial order.
    """
    A = np.vstack([np.asarray(s, dtype=float) for s in series])
    mean = np.array([_fsum_mean(A[:, j]) for j in range(A.shape[1])])
    std = np.array([math.sqrt(_fsum_mean((A[:, j] - mean[j]) ** 2)) for j in range(A.shape[1])])
    return Aggregate(mean, std, len(series))


def trial_seeds(seed: int, n_trials: int) -> list[int]:
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n_trials)]


def _run(args):
    from .sim import run_trial

    cfg, seed = args
    return run_trial(cfg, seed)


def run_trials(cfg, seeds: list[int], jobs: int = 1) -> list[TrialResult]:
    if jobs > 1 and len(seeds) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run, [(cfg, s) for s in seeds]))
    return [_run((cfg, s)) for s in seeds]


def monte_carlo(cfg, n_trials: int | None = None, seeds: list[int] | None = None, jobs: int = 1):
    """Run trials and aggregate every metric series.

    Returns ``(results, {metric: Aggregate})``.
    """
    if seeds is None:
        if n_trials is None:
            raise ValueError("give n_trials or seeds")
        seeds = trial_seeds(cfg.run.seed, n_trials)
    if len(seeds) < 1:
        raise ValueError("n_trials must be >= 1")
    results = run_trials(cfg, list(seeds), jobs)
    return results, aggregate_results(results)


def aggregate_results(results: list[TrialResult]) -> dict[str, Aggregate]:
    names = results[0].metric_series().keys()
    return {m: aggregate([r.metric_series()[m] for r in results]) for m in names}
