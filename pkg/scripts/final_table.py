"""Print the final-step mean of every metric in a summary CSV as a table.

    python scripts/final_table.py results/fig10a/summary.csv
"""

import csv
import sys
from collections import defaultdict


def main(path):
    last = defaultdict(dict)
    with open(path) as f:
        for row in csv.DictReader(f):
            exp, metric, step = row["experiment_id"], row["metric"], int(row["step"])
            prev = last[exp].get(metric)
            if prev is None or step >= prev[0]:
                last[exp][metric] = (step, float(row["mean"]), float(row["std"]))
    metrics = sorted({m for d in last.values() for m in d})
    print("experiment_id," + ",".join(f"{m}_mean,{m}_std" for m in metrics))
    for exp, d in last.items():
        cells = []
        for m in metrics:
            _, mean, std = d.get(m, (0, float("nan"), float("nan")))
            cells += [f"{mean:.4f}", f"{std:.4f}"]
        print(exp + "," + ",".join(cells))


if __name__ == "__main__":
    main(sys.argv[1])
