"""Render an aerolay CSV (first column = variable) as an SVG, one line per (link, mode, engine)."""
import argparse
import csv
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv")
    ap.add_argument("--out", help="SVG path (default: CSV path with .svg)")
    ap.add_argument("--logx", action="store_true")
    args = ap.parse_args()

    series = defaultdict(lambda: ([], [], []))
    with open(args.csv) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        for row in reader:
            xs, ys, cis = series[(row[1], row[2], row[3])]
            xs.append(float(row[0]))
            ys.append(float(row[4]))
            cis.append(float(row[5]) if row[5] else 0.0)

    fig, ax = plt.subplots(figsize=(6, 4))
    for (link, mode, engine), (xs, ys, cis) in sorted(series.items()):
        style = "--" if engine == "montecarlo" else ":"
        ax.errorbar(xs, ys, yerr=cis if any(cis) else None, ls=style, marker=".", label=f"{link} {mode} {engine}")
    if args.logx:
        ax.set_xscale("log")
    ax.set_xlabel(header[0])
    ax.set_ylabel("probability")
    ax.set_ylim(0, 1.02)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(args.out or args.csv.rsplit(".", 1)[0] + ".svg")


if __name__ == "__main__":
    main()
