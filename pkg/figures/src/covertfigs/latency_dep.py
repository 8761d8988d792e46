"""End-to-end latency versus the per-link covertness requirement, with
hop-count and max spreading-gain panels."""

from __future__ import annotations

import argparse

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .io import read_sweep_csv, read_sweep_details


def plot_latency_vs_dep(csv_path, out_path, details_path=None) -> None:
    rows = read_sweep_csv(csv_path)
    x = np.array([r["swept_value"] for r in rows])
    lat = np.array([np.nan if r["e2e_latency_s"] is None else r["e2e_latency_s"]
                    for r in rows])
    hops = np.array([np.nan if r["hop_count"] is None else r["hop_count"]
                     for r in rows])
    detector = rows[0]["detector"]

    max_eta = None
    if details_path is not None:
        details = read_sweep_details(details_path)
        eta_by_value = {p["swept_value"]: p.get("max_eta")
                        for p in details["points"] if p["status"] == "ok"}
        max_eta = np.array([eta_by_value.get(v, np.nan) for v in x])

    n_panels = 3 if max_eta is not None else 2
    fig, axes = plt.subplots(n_panels, 1, figsize=(6, 2.6 * n_panels), sharex=True)

    axes[0].plot(x, lat, "o-", color="tab:blue")
    axes[0].set_yscale("log")
    axes[0].set_ylabel("end-to-end latency [s]")
    axes[0].set_title(f"Latency vs link covertness requirement ({detector} detector)")
    axes[0].grid(True, which="both", alpha=0.3)

    axes[1].step(x, hops, "s-", where="mid", color="tab:orange")
    axes[1].set_ylabel("hop count")
    axes[1].grid(True, alpha=0.3)

    if max_eta is not None:
        axes[2].plot(x, max_eta, "^-", color="tab:green")
        axes[2].set_yscale("log")
        axes[2].set_ylabel("max spreading gain")
        axes[2].grid(True, which="both", alpha=0.3)

    axes[-1].set_xlabel("required per-link DEP")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="latency / hop-count / spreading-gain vs DEP requirement")
    parser.add_argument("--in", dest="csv", required=True, help="sweep CSV")
    parser.add_argument("--details", default=None, help="sweep details JSON (eta panel)")
    parser.add_argument("--out", required=True, help="output image (png/svg)")
    args = parser.parse_args(argv)
    plot_latency_vs_dep(args.csv, args.out, details_path=args.details)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
