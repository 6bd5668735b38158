"""Command-line entry point: run presets and dump intermediate state."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ScenarioConfig, dump_config, load_config
from .metrics import aggregate_results, run_trials, trial_seeds
from .presets import get_preset, list_presets


def _num(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _writer(f):
    return csv.writer(f, lineterminator="\n")


def _parse_only(items: list[str] | None) -> dict[str, list[str]]:
    only: dict[str, list[str]] = {}
    for item in items or []:
        name, _, labels = item.partition("=")
        if not labels:
            raise ValueError(f"--only expects AXIS=LABEL[,LABEL...], got {item!r}")
        only.setdefault(name, []).extend(labels.split(","))
    return only


def run_experiment(
    preset_name: str,
    n_trials: int,
    seed: int,
    out_dir,
    jobs: int = 1,
    base: ScenarioConfig | None = None,
    only: dict[str, list[str]] | None = None,
    log=None,
) -> dict:
    """Run every variant of a preset and write the CSV outputs.

    All variants share the same trial seeds.  Returns
    ``{experiment_id: (results, aggregates)}``.
    """
    preset = get_preset(preset_name)
    seeds = trial_seeds(seed, n_trials)
    variants = preset.variants(base, only)
    out = Path(out_dir)
    (out / "configs").mkdir(parents=True, exist_ok=True)
    collected = {}
    with (
        open(out / "results.csv", "w", newline="") as fr,
        open(out / "summary.csv", "w", newline="") as fs,
        open(out / "events.csv", "w", newline="") as fe,
        open(out / "truth.csv", "w", newline="") as ft,
    ):
        wr, ws, we, wt = _writer(fr), _writer(fs), _writer(fe), _writer(ft)
        wr.writerow(["experiment_id", "trial", "step", "metric", "value"])
        ws.writerow(["experiment_id", "metric", "step", "mean", "std"])
        we.writerow(["experiment_id", "trial", "step", "agent_id", "mode", "x", "y", "n_hat", "event_tag"])
        wt.writerow(["experiment_id", "trial", "step", "target_id", "x", "y", "alive"])
        for v in variants:
            if log:
                print(f"{v.id}: {n_trials} trials", file=log, flush=True)
            (out / "configs" / (v.id.replace("/", "__") + ".ini")).write_text(dump_config(v.config))
            results = run_trials(v.config, seeds, jobs)
            for t, r in enumerate(results):
                series = r.metric_series()
                for m in preset.metrics:
                    for k, val in enumerate(series[m]):
                        wr.writerow([v.id, t, k, m, _num(val)])
                for row in r.events:
                    we.writerow([v.id, t] + [_num(c) for c in row])
                for row in r.truth:
                    wt.writerow([v.id, t] + [_num(c) for c in row])
            aggs = aggregate_results(results)
            for m in preset.metrics:
                a = aggs[m]
                for k in range(len(a.mean)):
                    ws.writerow([v.id, m, k, _num(a.mean[k]), _num(a.std[k])])
            collected[v.id] = (results, aggs)
    return collected


def _scenario(args) -> ScenarioConfig:
    base = load_config(args.config) if args.config else ScenarioConfig()
    if args.preset:
        variants = get_preset(args.preset).variants(base, _parse_only(args.only))
        return variants[0].config
    return base


def _advance(args):
    from .sim import Simulation

    cfg = _scenario(args)
    sim = Simulation(cfg, args.seed)
    while sim.world.k < min(args.step, cfg.run.horizon):
        sim.step()
    return sim


def _emit(text: str, path) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    base = load_config(args.config) if args.config else None
    run_experiment(
        args.preset, args.trials, args.seed, args.out, args.jobs, base, _parse_only(args.only), log=sys.stderr
    )
    return 0


def cmd_list(args) -> int:
    print(list_presets())
    return 0


def cmd_dump_grid(args) -> int:
    from .search_density import fuse

    sim = _advance(args)
    if args.agent is None:
        grid = sim.agents[0].grid
        for ag in sim.agents[1:]:
            grid = fuse(grid, ag.grid)
    else:
        grid = sim.agents[args.agent].grid
    _emit(grid.to_csv(), args.out)
    return 0


def cmd_dump_plan(args) -> int:
    import io

    sim = _advance(args)
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(["agent_id", "seq", "node_x", "node_y"])
    for ag in sim.agents:
        centers = ag.grid.centers
        for seq, node in enumerate(ag.plan):
            w.writerow([ag.id, seq, _num(centers[node, 0]), _num(centers[node, 1])])
    _emit(buf.getvalue(), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="satrack", description="Multi-agent search-and-track experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a preset sweep and write CSV results")
    r.add_argument("--preset", required=True)
    r.add_argument("--trials", type=int, default=10)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", required=True)
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--config", help="INI file used as the base scenario")
    r.add_argument("--only", action="append", metavar="AXIS=LABELS", help="restrict a sweep axis")
    r.set_defaults(func=cmd_run)

    sub.add_parser("list-presets", help="list presets").set_defaults(func=cmd_list)

    for name, func, what in (
        ("dump-grid", cmd_dump_grid, "search-density grid"),
        ("dump-plan", cmd_dump_plan, "planned search paths"),
    ):
        d = sub.add_parser(name, help=f"write the {what} after STEP steps")
        d.add_argument("--preset")
        d.add_argument("--only", action="append", metavar="AXIS=LABELS")
        d.add_argument("--config")
        d.add_argument("--seed", type=int, default=0)
        d.add_argument("--step", type=int, default=0)
        d.add_argument("--out", help="output CSV (stdout if omitted)")
        if name == "dump-grid":
            d.add_argument("--agent", type=int, help="one agent's grid (default: all fused)")
        d.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, KeyError, ValueError, IndexError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
