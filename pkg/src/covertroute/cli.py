"""Non-interactive command-line driver.

Subcommands: calibrate, allocate, route, sweep, gen-topology; each takes
--config/--out/--seed. Exit codes: 0 success, 2 config error,
3 infeasible or disconnected, 4 missing calibration. Outputs are
reproducible bit-exactly from (config, master seed, calibration file);
the calibration timestamp is the only field that varies between reruns.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys

from .allocation import InfeasibleLinkError, allocate_covert_max, allocate_latency_min, verify_allocation
from .config import ConfigError, ScenarioConfig, load_config
from .detectors import (CalibrationRangeError, CalibrationTable, DetectorError,
                        FingerprintMismatchError, calibrate, fingerprint_hash,
                        invert_dep, waveform_fingerprint)
from .routing import (COVERT_MAX, LATENCY_MIN, DisconnectedError, build_graph,
                      route_metrics, route_to_dict, shortest_path, widest_path)
from .topology import WILLIE, TopologyError, export_gains, link_gain, topology_to_dict

SWEEP_CSV_HEADER = ("swept_param,swept_value,detector,e2e_latency_s,e2e_dep,"
                    "dep_extrapolated,hop_count,bottleneck_theta_db,status")


class MissingCalibrationError(DetectorError):
    pass


def _table_path(cfg: ScenarioConfig, out_dir: str) -> str:
    if cfg.table_path:
        return cfg.table_path
    fp = waveform_fingerprint(cfg.waveform, cfg.k_bit_cycles, cfg.k_chip_cycles)
    return os.path.join(out_dir, f"calibration_{cfg.detector}_{fingerprint_hash(fp)}.json")


def _load_table(cfg: ScenarioConfig, out_dir: str) -> CalibrationTable:
    path = _table_path(cfg, out_dir)
    if not os.path.exists(path):
        raise MissingCalibrationError(
            f"no calibration table at {path}; run `covertroute calibrate` first"
        )
    table = CalibrationTable.load(path)
    expected = waveform_fingerprint(cfg.waveform, cfg.k_bit_cycles, cfg.k_chip_cycles)
    if table.fingerprint != expected:
        raise FingerprintMismatchError(
            f"{path} was calibrated for a different waveform "
            f"(hash {table.fingerprint_hash} != {fingerprint_hash(expected)})"
        )
    if table.detector != cfg.detector:
        raise FingerprintMismatchError(
            f"{path} holds a {table.detector} table but the scenario wants {cfg.detector}"
        )
    return table


def cmd_calibrate(cfg: ScenarioConfig, out_dir: str) -> int:
    table = calibrate(
        cfg.detector, cfg.waveform, cfg.snr_grid_db, cfg.obs_grid_bits,
        trials=cfg.trials, seed=cfg.master_seed,
        k_bit=cfg.k_bit_cycles, k_chip=cfg.k_chip_cycles, jobs=cfg.jobs,
    )
    path = _table_path(cfg, out_dir)
    table.save(path)
    cells = len(cfg.snr_grid_db) * len(cfg.obs_grid_bits)
    print(f"calibrated {cfg.detector} detector: "
          f"{len(cfg.snr_grid_db)} SNR x {len(cfg.obs_grid_bits)} obs = {cells} cells, "
          f"{cfg.trials} trials/cell")
    print(f"max CI halfwidth: {float(table.ci_halfwidth.max()):.4f}")
    print(f"wrote {path}")
    return 0


def cmd_gen_topology(cfg: ScenarioConfig, out_dir: str) -> int:
    topo_path = os.path.join(out_dir, "topology.json")
    with open(topo_path, "w", encoding="utf-8") as fh:
        json.dump(topology_to_dict(cfg.topology), fh, indent=1, sort_keys=True)
        fh.write("\n")
    gains_path = os.path.join(out_dir, "gains.csv")
    export_gains(cfg.topology, gains_path)
    print(f"wrote {topo_path} and {gains_path} "
          f"({cfg.topology.n_nodes} nodes, gain source {cfg.topology.gain_source})")
    return 0


def cmd_allocate(cfg: ScenarioConfig, out_dir: str) -> int:
    topo = cfg.topology
    g_rx = link_gain(topo, topo.alice, topo.bob)
    g_w = link_gain(topo, topo.alice, WILLIE)
    result: dict = {"tx": topo.alice, "rx": topo.bob}
    if cfg.mode in ("covert_max", "both"):
        alloc = allocate_covert_max(g_rx, g_w, cfg.constraints)
        report = verify_allocation(alloc, cfg.constraints, g_rx, g_w, "covert_max")
        result["covert_max"] = {"allocation": dataclasses.asdict(alloc),
                                "verification": report.to_dict()}
        print(f"covert-max: eta={alloc.eta:.3f} P={alloc.power_w:.4e} W "
              f"theta={alloc.theta:.4e} latency={alloc.latency_s:.4e} s")
    if cfg.mode in ("latency_min", "both"):
        table = _load_table(cfg, out_dir)
        snr_w_max = invert_dep(table, cfg.constraints.dep_reqd, cfg.constraints.m_bits)
        alloc = allocate_latency_min(g_rx, g_w, cfg.constraints, snr_w_max)
        report = verify_allocation(alloc, cfg.constraints, g_rx, g_w, "latency_min",
                                   snr_w_max=snr_w_max)
        result["latency_min"] = {"allocation": dataclasses.asdict(alloc),
                                 "snr_w_max": snr_w_max,
                                 "verification": report.to_dict()}
        print(f"latency-min: eta={alloc.eta:.3f} P={alloc.power_w:.4e} W "
              f"latency={alloc.latency_s:.4e} s")
    path = os.path.join(out_dir, "allocate.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(result, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"wrote {path}")
    return 0


def _print_route_summary(name: str, doc: dict) -> None:
    s = doc["summary"]
    seq = " -> ".join(str(n) for n in s["node_sequence"])
    print(f"{name}: {seq}")
    dep = "n/a" if s["e2e_dep"] is None else f"{s['e2e_dep']:.3f}"
    flag = " (extrapolated)" if s["dep_extrapolated"] else ""
    print(f"  hops={s['hop_count']} end-to-end DEP={dep}{flag} "
          f"latency={s['e2e_latency_s']:.4e} s "
          f"bottleneck theta={s['bottleneck_theta_db']:.2f} dB")


def cmd_route(cfg: ScenarioConfig, out_dir: str) -> int:
    table = None
    if cfg.mode in ("latency_min", "both"):
        table = _load_table(cfg, out_dir)
    else:
        try:
            table = _load_table(cfg, out_dir)
        except DetectorError:
            table = None  # covert mode reports DEP as n/a without a table

    if cfg.mode in ("covert_max", "both"):
        graph = build_graph(cfg.topology, cfg.constraints, COVERT_MAX)
        route = widest_path(graph)
        route = route_metrics(route, table, cfg.constraints.m_bits)
        doc = route_to_dict(route)
        path = os.path.join(out_dir, "route_covert_max.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")
        _print_route_summary("covert-max route", doc)
        print(f"wrote {path}")
    if cfg.mode in ("latency_min", "both"):
        graph = build_graph(cfg.topology, cfg.constraints, LATENCY_MIN, table)
        route = shortest_path(graph)
        route = route_metrics(route, table, cfg.constraints.m_bits)
        doc = route_to_dict(route)
        path = os.path.join(out_dir, "route_latency_min.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")
        _print_route_summary("latency-min route", doc)
        print(f"wrote {path}")
    return 0


def _sweep_point(cfg: ScenarioConfig, table: CalibrationTable, value: float) -> dict:
    """Solve one grid point; infeasibility is a row status, not an error."""
    cons = cfg.constraints
    if cfg.sweep_param == "dep_reqd":
        cons = dataclasses.replace(cons, dep_reqd=value)
        mode = LATENCY_MIN
    elif cfg.sweep_param == "m_bits":
        cons = dataclasses.replace(cons, m_bits=value)
        mode = LATENCY_MIN
    else:
        cons = dataclasses.replace(cons, d_reqd_bps=value)
        mode = COVERT_MAX
    try:
        graph = build_graph(cfg.topology, cons, mode, table)
        route = widest_path(graph) if mode == COVERT_MAX else shortest_path(graph)
        route = route_metrics(route, table, cons.m_bits)
    except (CalibrationRangeError, DisconnectedError, InfeasibleLinkError) as exc:
        return {"swept_value": value, "status": "infeasible", "reason": str(exc)}
    doc = route_to_dict(route)
    return {"swept_value": value, "status": "ok", "route": doc}


def cmd_sweep(cfg: ScenarioConfig, out_dir: str) -> int:
    if cfg.sweep_param is None:
        raise ConfigError("sweep grid required: config has no sweep section")
    table = _load_table(cfg, out_dir)
    points = [_sweep_point(cfg, table, v) for v in cfg.sweep_values]

    csv_path = os.path.join(out_dir, f"sweep_{cfg.sweep_param}_{cfg.detector}.csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_CSV_HEADER.split(","))
        for p in points:
            if p["status"] == "ok":
                s = p["route"]["summary"]
                writer.writerow([
                    cfg.sweep_param, repr(p["swept_value"]), cfg.detector,
                    repr(s["e2e_latency_s"]),
                    "" if s["e2e_dep"] is None else repr(s["e2e_dep"]),
                    str(bool(s["dep_extrapolated"])).lower(),
                    s["hop_count"], repr(s["bottleneck_theta_db"]), "ok",
                ])
            else:
                writer.writerow([cfg.sweep_param, repr(p["swept_value"]),
                                 cfg.detector, "", "", "", "", "", "infeasible"])

    details = {
        "swept_param": cfg.sweep_param,
        "detector": cfg.detector,
        "points": [
            {
                "swept_value": p["swept_value"],
                "status": p["status"],
                **({"hop_count": p["route"]["summary"]["hop_count"],
                    "max_eta": p["route"]["summary"]["max_eta"],
                    "node_sequence": p["route"]["summary"]["node_sequence"],
                    "e2e_latency_s": p["route"]["summary"]["e2e_latency_s"]}
                   if p["status"] == "ok" else {"reason": p.get("reason", "")}),
            }
            for p in points
        ],
    }
    details_path = os.path.join(out_dir, f"sweep_{cfg.sweep_param}_{cfg.detector}_details.json")
    with open(details_path, "w", encoding="utf-8") as fh:
        json.dump(details, fh, indent=1, sort_keys=True)
        fh.write("\n")

    ok = sum(1 for p in points if p["status"] == "ok")
    print(f"swept {cfg.sweep_param} over {len(points)} points "
          f"({ok} ok, {len(points) - ok} infeasible)")
    print(f"wrote {csv_path} and {details_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covertroute",
        description="Covert multi-hop DSSS routing simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("calibrate", "Monte-Carlo DEP calibration for the configured detector"),
        ("allocate", "closed-form single-hop allocation for the direct Alice->Bob link"),
        ("route", "solve the covert-max and/or latency-min route"),
        ("sweep", "route once per sweep grid point and write the results CSV"),
        ("gen-topology", "write the topology JSON and gain-matrix CSV"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", default=None, help="scenario JSON (defaults to the 6x6 preset)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the master seed")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be non-negative")
            cfg.master_seed = args.seed
        os.makedirs(args.out, exist_ok=True)
        handler = {
            "calibrate": cmd_calibrate,
            "allocate": cmd_allocate,
            "route": cmd_route,
            "sweep": cmd_sweep,
            "gen-topology": cmd_gen_topology,
        }[args.command]
        return handler(cfg, args.out)
    except (ConfigError, TopologyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (MissingCalibrationError, FingerprintMismatchError) as exc:
        print(f"calibration error: {exc}", file=sys.stderr)
        return 4
    except (DisconnectedError, InfeasibleLinkError, CalibrationRangeError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
