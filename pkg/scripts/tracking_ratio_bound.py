"""Upper bound on the tracking-time ratio achievable by a search pattern.

Agents fly the search-only policy; a target counts as tracked from the first
step it falls inside any agent's sensing square until it dies, as if the
tracker never lost it.  This bounds what the search-and-track loop can reach
in the same scenario (switching to tracking only slows coverage further).

    python scripts/tracking_ratio_bound.py --agents 2 4 6 8 10 --trials 20
"""

import argparse

import numpy as np

from satrack.presets import get_preset
from satrack.metrics import trial_seeds
from satrack.sim import Simulation


def ratio_bound(cfg, seed: int) -> float:
    cfg = cfg.with_overrides({"tracking.enabled": False})
    sim = Simulation(cfg, seed)
    half = cfg.sensor.side / 2
    first: dict[int, int] = {}
    n = cfg.agents.count
    for k in range(cfg.run.horizon):
        sim.step()
        sensed = [(row[3], row[4]) for row in sim.event_rows[-n:]]  # positions that sensed step k
        for _, tid, x, y, alive in (row for row in sim.truth_rows if row[0] == k):
            if alive and tid not in first and any(max(abs(x - px), abs(y - py)) <= half for px, py in sensed):
                first[tid] = k
    ratios = []
    for t in sim.world.targets:
        end = min(t.death, cfg.run.horizon)
        if end <= t.birth:
            continue
        seen = first.get(t.id)
        ratios.append(0.0 if seen is None else (end - seen) / (end - t.birth))
    return float(np.mean(ratios)) if ratios else float("nan")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--preset", default="fig10a")
    p.add_argument("--comm-range", default="40.0")
    p.add_argument("--agents", nargs="+", default=["2", "4", "6", "8", "10"])
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    only = {"comm_range": [args.comm_range], "agents": args.agents}
    seeds = trial_seeds(args.seed, args.trials)
    for v in get_preset(args.preset).variants(only=only):
        vals = [ratio_bound(v.config, s) for s in seeds]
        print(f"{v.id}: bound {np.nanmean(vals):.3f} (std {np.nanstd(vals):.3f}, {len(vals)} trials)")


if __name__ == "__main__":
    main()
