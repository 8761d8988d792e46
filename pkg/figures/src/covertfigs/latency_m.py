"""End-to-end latency versus message length, one series per detector,
with a marker where the series cross."""

from __future__ import annotations

import argparse

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .io import read_sweep_csv

SERIES_STYLE = {"cycle": ("tab:blue", "o"), "energy": ("tab:red", "s")}


def _crossovers(x1, y1, x2, y2):
    """Intersections of two piecewise-linear series in log-log space."""
    shared = np.intersect1d(x1, x2)
    lx = np.log10(shared)
    f1 = np.interp(lx, np.log10(x1), np.log10(y1))
    f2 = np.interp(lx, np.log10(x2), np.log10(y2))
    diff = f1 - f2
    points = []
    for i in range(len(diff) - 1):
        if np.isnan(diff[i]) or np.isnan(diff[i + 1]):
            continue
        if diff[i] == 0:
            # an actual touch point, not a stretch of identical series
            if (i > 0 and diff[i - 1] != 0) or diff[i + 1] != 0:
                points.append((shared[i], 10 ** f1[i]))
        elif diff[i] * diff[i + 1] < 0:
            t = diff[i] / (diff[i] - diff[i + 1])
            points.append((10 ** (lx[i] + t * (lx[i + 1] - lx[i])),
                           10 ** (f1[i] + t * (f1[i + 1] - f1[i]))))
    return points


def plot_latency_vs_m(csv_paths, out_path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    series = []
    for path in csv_paths:
        rows = [r for r in read_sweep_csv(path) if r["status"] == "ok"]
        if not rows:
            continue
        detector = rows[0]["detector"]
        x = np.array([r["swept_value"] for r in rows])
        y = np.array([r["e2e_latency_s"] for r in rows])
        color, marker = SERIES_STYLE.get(detector, ("tab:gray", "x"))
        ax.plot(x, y, marker + "-", color=color, label=f"{detector} detector")
        series.append((x, y))

    if len(series) == 2:
        for cx, cy in _crossovers(*series[0], *series[1]):
            ax.plot(cx, cy, "k*", markersize=14, zorder=5)
            ax.annotate("crossover", (cx, cy), textcoords="offset points",
                        xytext=(8, 8))

    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("message length [bits]")
    ax.set_ylabel("end-to-end latency [s]")
    ax.set_title("Latency vs message length")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="latency vs message length, one series per detector")
    parser.add_argument("--in", dest="csvs", nargs="+", required=True,
                        help="one sweep CSV per detector")
    parser.add_argument("--out", required=True, help="output image (png/svg)")
    args = parser.parse_args(argv)
    plot_latency_vs_m(args.csvs, args.out)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
