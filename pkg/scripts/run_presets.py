"""Run every preset (or a chosen subset) and write each to its own folder.

    python scripts/run_presets.py --trials 30 --out results
    python scripts/run_presets.py fig6 fig10b --trials 50 --jobs 4
"""

import argparse
import sys
from pathlib import Path

from satrack.cli import run_experiment
from satrack.presets import PRESETS


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("presets", nargs="*", default=list(PRESETS))
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="results")
    args = p.parse_args()
    for name in args.presets:
        run_experiment(name, args.trials, args.seed, Path(args.out) / name, args.jobs, log=sys.stderr)


if __name__ == "__main__":
    main()
