#!/usr/bin/env python3
"""Plot global reliability against evaluations from qdbench series files.

Every `<label>-rep<k>.series.csv` in the directory contributes one curve per
label (the mean over repetitions). ME1 curves are solid, ME2 dashed.
"""
import argparse
import collections
import csv
import pathlib
import re
import sys

SERIES = re.compile(r"^(?P<label>.+)-rep(?P<rep>\d+)\.series\.csv$")


def load(directory):
    runs = collections.defaultdict(list)
    for path in sorted(pathlib.Path(directory).glob("*.series.csv")):
        m = SERIES.match(path.name)
        if not m:
            continue
        with path.open(newline="") as f:
            rows = list(csv.DictReader(f))
        runs[m["label"]].append(
            ([int(r["evaluations"]) for r in rows], [float(r["global_reliability"]) for r in rows])
        )
    return runs


def mean_curve(reps):
    xs = reps[0][0]
    length = min(len(r[0]) for r in reps)
    ys = [sum(r[1][k] for r in reps) / len(reps) for k in range(length)]
    return xs[:length], ys


def dimension_of(label):
    m = re.search(r"-n(\d+)$", label)
    return int(m.group(1)) if m else 0


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("directory")
    parser.add_argument("-o", "--out", default=None, help="image path (default <directory>/reliability.png)")
    args = parser.parse_args(argv)

    runs = load(args.directory)
    if not runs:
        print(f"no series files in {args.directory}", file=sys.stderr)
        return 1

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    dims = sorted({dimension_of(label) for label in runs})
    colours = dict(zip(dims, plt.cm.viridis([k / max(len(dims) - 1, 1) for k in range(len(dims))])))
    for label in sorted(runs, key=lambda s: (dimension_of(s), s)):
        xs, ys = mean_curve(runs[label])
        style = "--" if label.startswith("ME2") else "-"
        ax.plot(xs, ys, style, color=colours[dimension_of(label)], label=label)

    ax.set_xlabel("evaluations")
    ax.set_ylabel("global reliability")
    ax.set_ylim(0.0, 1.02)
    ax.grid(alpha=0.3)
    ax.legend(fontsize="small", ncol=2)
    fig.tight_layout()

    out = pathlib.Path(args.out) if args.out else pathlib.Path(args.directory) / "reliability.png"
    fig.savefig(out, dpi=120)
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
