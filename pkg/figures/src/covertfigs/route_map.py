"""Topology map with one or more routes drawn over it; each route's
bottleneck hop is drawn as a red dotted segment and Willie gets a
distinct marker."""

from __future__ import annotations

import argparse

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .io import read_route, read_topology

ROUTE_STYLE = {"covert_max": ("tab:blue", "covertness-max route"),
               "latency_min": ("tab:green", "latency-min route")}


def plot_route_map(topology_path, route_paths, out_path) -> None:
    topo = read_topology(topology_path)
    pos = {n["id"]: n["position_m"] for n in topo["nodes"]}

    fig, ax = plt.subplots(figsize=(6, 6))
    xs = [p[0] for p in pos.values()]
    ys = [p[1] for p in pos.values()]
    ax.scatter(xs, ys, s=30, color="0.55", zorder=2, label="relay nodes")
    for nid, p in pos.items():
        ax.annotate(str(nid), (p[0], p[1]), textcoords="offset points",
                    xytext=(4, 4), fontsize=7, color="0.4")

    for name, nid in (("Alice", topo["alice"]), ("Bob", topo["bob"])):
        p = pos[nid]
        ax.scatter([p[0]], [p[1]], s=120, marker="o", color="tab:purple", zorder=3)
        ax.annotate(name, (p[0], p[1]), textcoords="offset points",
                    xytext=(6, -12), fontsize=10, fontweight="bold")

    w = topo["willie_position_m"]
    ax.scatter([w[0]], [w[1]], s=160, marker="X", color="black", zorder=4,
               label="Willie")

    for route_path in route_paths:
        route = read_route(route_path)
        color, label = ROUTE_STYLE.get(route["mode"], ("tab:orange", route["mode"]))
        bottleneck = route["summary"].get("bottleneck_hop_index")
        for i, hop in enumerate(route["hops"]):
            p1, p2 = pos[hop["tx"]], pos[hop["rx"]]
            if i == bottleneck:
                ax.plot([p1[0], p2[0]], [p1[1], p2[1]], linestyle=":", linewidth=2.5,
                        color="red", zorder=5)
            else:
                ax.plot([p1[0], p2[0]], [p1[1], p2[1]], "-", linewidth=2,
                        color=color, zorder=4)
        ax.plot([], [], "-", color=color, label=label)
    ax.plot([], [], ":", color="red", label="bottleneck hop")

    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title("Optimized routes")
    ax.set_aspect("equal")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="topology and route map")
    parser.add_argument("--topology", required=True, help="topology JSON")
    parser.add_argument("--route", dest="routes", nargs="+", required=True,
                        help="route JSON file(s)")
    parser.add_argument("--out", required=True, help="output image (png/svg)")
    args = parser.parse_args(argv)
    plot_route_map(args.topology, args.routes, args.out)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
