"""Readers for the documented output schemas.

Sweep CSV header (exact):
swept_param,swept_value,detector,e2e_latency_s,e2e_dep,dep_extrapolated,hop_count,bottleneck_theta_db,status

Sweep details JSON: {"swept_param", "detector", "points": [{"swept_value",
"status", "hop_count", "max_eta", ...}]}. Route JSON: {"mode", "hops":
[{"tx", "rx", ...}], "summary": {...}}. Topology JSON: {"nodes":
[{"id", "position_m"}], "alice", "bob", "willie_position_m"}.
"""

from __future__ import annotations

import csv
import json

SWEEP_COLUMNS = ("swept_param", "swept_value", "detector", "e2e_latency_s",
                 "e2e_dep", "dep_extrapolated", "hop_count",
                 "bottleneck_theta_db", "status")


class SchemaError(ValueError):
    pass


def read_sweep_csv(path) -> list[dict]:
    """Rows as dicts; numeric fields parsed, infeasible rows keep None."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in SWEEP_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise SchemaError(f"{path}: missing sweep columns {missing}")
        rows = []
        for raw in reader:
            row = dict(raw)
            row["swept_value"] = float(raw["swept_value"])
            if raw["status"] == "ok":
                row["e2e_latency_s"] = float(raw["e2e_latency_s"])
                row["e2e_dep"] = float(raw["e2e_dep"]) if raw["e2e_dep"] else None
                row["hop_count"] = int(raw["hop_count"])
                row["bottleneck_theta_db"] = float(raw["bottleneck_theta_db"])
            else:
                for key in ("e2e_latency_s", "e2e_dep", "hop_count",
                            "bottleneck_theta_db"):
                    row[key] = None
            rows.append(row)
    if not rows:
        raise SchemaError(f"{path}: sweep file has no data rows")
    return rows


def read_sweep_details(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if "points" not in doc:
        raise SchemaError(f"{path}: not a sweep details file")
    return doc


def read_route(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if "hops" not in doc or "summary" not in doc:
        raise SchemaError(f"{path}: not a route file")
    return doc


def read_topology(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if "nodes" not in doc or "willie_position_m" not in doc:
        raise SchemaError(f"{path}: not a topology file")
    return doc
