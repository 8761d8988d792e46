"""Scenario configuration: a single JSON file with units spelled out in the
key names (omega_max_hz, n0_dbm_per_hz, m_bits, ...). Missing keys fall
back to the 6x6-grid preset below; dBm values are converted to watts once,
here, and nowhere else."""

from __future__ import annotations

import copy
import json
import math
import os
from dataclasses import dataclass

from .allocation import AllocationError, Constraints, snr_from_ber
from .detectors import DETECTOR_KINDS
from .topology import PathLossModel, Topology, TopologyError, grid_topology, import_gains
from .units import db_to_linear, dbm_to_watt
from .waveform import DsssParams, WaveformError


class ConfigError(ValueError):
    pass


SWEEP_PARAMS = ("dep_reqd", "m_bits", "d_reqd_bps")

DEFAULT_CONFIG = {
    "topology": {
        "kind": "grid",
        "nx": 6,
        "ny": 6,
        "spacing_m": 50.0,
        "willie_position_m": [200.0, -50.0, 0.0],
        "max_link_distance_m": None,
        "gains_csv": None,
    },
    "channel": {
        "exponent": 3.0,
        "carrier_frequency_hz": 900e6,
        "reference_distance_m": 1.0,
        "reference_gain_db": None,
    },
    "constraints": {
        "omega_max_hz": 1.0e7,
        "n0_dbm_per_hz": -113.0,
        "m_bits": 1.0e8,
        "d_reqd_bps": 2.5e6,
        "snr_reqd_db": 10.0,
        "ber_reqd": None,
        "dep_reqd": 0.80,
        "p_max_dbm": 50.0,
    },
    "detector": "cycle",
    "mode": "both",
    "waveform": {
        "spreading_length": 7,
        "rolloff": 1.0,
        "samples_per_chip": 4,
        "code_seed": 0,
        "k_bit_cycles": 4,
        "k_chip_cycles": 2,
    },
    "calibration": {
        "snr_grid_db": [-25.0 + 2.5 * k for k in range(13)],
        "obs_grid_bits": [16, 64, 256, 1024],
        "trials": 500,
        "jobs": 0,
        "table_path": None,
    },
    "sweep": None,
    "master_seed": 1,
}


@dataclass
class ScenarioConfig:
    topology: Topology
    constraints: Constraints
    detector: str
    mode: str
    waveform: DsssParams
    k_bit_cycles: int
    k_chip_cycles: int
    snr_grid_db: list
    obs_grid_bits: list
    trials: int
    jobs: int
    table_path: str | None
    sweep_param: str | None
    sweep_values: list | None
    master_seed: int
    raw: dict


def _merge_defaults(user: dict, defaults: dict) -> dict:
    out = copy.deepcopy(defaults)
    for key, val in user.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge_defaults(val, out[key])
        else:
            out[key] = val
    return out


def load_config(path: str | None = None, base_dir: str | None = None) -> ScenarioConfig:
    """Parse and validate a scenario file; path None gives the preset."""
    user: dict = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                user = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})")
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        base_dir = base_dir or os.path.dirname(os.path.abspath(path))
    doc = _merge_defaults(user, DEFAULT_CONFIG)
    return parse_config(doc, base_dir=base_dir or os.getcwd())


def parse_config(doc: dict, base_dir: str) -> ScenarioConfig:
    try:
        return _parse_config(doc, base_dir)
    except (TopologyError, WaveformError, AllocationError) as exc:
        raise ConfigError(str(exc))


def _parse_config(doc: dict, base_dir: str) -> ScenarioConfig:
    chan = doc["channel"]
    model = PathLossModel(
        reference_gain_db=chan["reference_gain_db"],
        reference_distance_m=chan["reference_distance_m"],
        exponent=chan["exponent"],
        carrier_frequency_hz=chan["carrier_frequency_hz"],
    )

    topo_doc = doc["topology"]
    if topo_doc.get("kind", "grid") != "grid":
        raise ConfigError(f"unknown topology kind {topo_doc.get('kind')!r}")
    topology = grid_topology(
        nx=int(topo_doc["nx"]),
        ny=int(topo_doc["ny"]),
        spacing_m=float(topo_doc["spacing_m"]),
        willie_position=topo_doc["willie_position_m"],
        model=model,
        max_link_distance_m=topo_doc.get("max_link_distance_m"),
    )
    gains_csv = topo_doc.get("gains_csv")
    if gains_csv is not None:
        gains_path = os.path.join(base_dir, gains_csv)
        if not os.path.exists(gains_path):
            raise ConfigError(f"gains_csv not found: {gains_path}")
        topology = import_gains(topology, gains_path)

    cons = doc["constraints"]
    snr_db = cons.get("snr_reqd_db")
    ber_reqd = cons.get("ber_reqd")
    if (snr_db is None) == (ber_reqd is None):
        raise ConfigError("specify exactly one of snr_reqd_db and ber_reqd")
    snr_reqd = db_to_linear(snr_db) if snr_db is not None else snr_from_ber(ber_reqd)
    constraints = Constraints(
        omega_max_hz=float(cons["omega_max_hz"]),
        p_max_w=dbm_to_watt(float(cons["p_max_dbm"])),
        n0_w_per_hz=dbm_to_watt(float(cons["n0_dbm_per_hz"])),
        m_bits=float(cons["m_bits"]),
        snr_reqd=snr_reqd,
        d_reqd_bps=None if cons["d_reqd_bps"] is None else float(cons["d_reqd_bps"]),
        dep_reqd=None if cons["dep_reqd"] is None else float(cons["dep_reqd"]),
    )

    detector = doc["detector"]
    if detector not in DETECTOR_KINDS:
        raise ConfigError(f"detector must be one of {DETECTOR_KINDS}, got {detector!r}")
    mode = doc.get("mode", "both")
    if mode not in ("covert_max", "latency_min", "both"):
        raise ConfigError(f"mode must be covert_max, latency_min, or both, got {mode!r}")

    wf = doc["waveform"]
    spreading_length = int(wf["spreading_length"])
    waveform = DsssParams(
        spreading_length=spreading_length,
        bit_duration_s=spreading_length / constraints.omega_max_hz,
        rolloff=float(wf["rolloff"]),
        samples_per_chip=int(wf["samples_per_chip"]),
        code_seed=int(wf["code_seed"]),
    )

    cal = doc["calibration"]
    snr_grid = [float(x) for x in cal["snr_grid_db"]]
    obs_grid = [int(x) for x in cal["obs_grid_bits"]]
    if snr_grid != sorted(snr_grid) or obs_grid != sorted(obs_grid):
        raise ConfigError("calibration grids must be sorted ascending")

    sweep = doc.get("sweep")
    sweep_param = sweep_values = None
    if sweep is not None:
        sweep_param = sweep.get("param")
        if sweep_param not in SWEEP_PARAMS:
            raise ConfigError(f"sweep param must be one of {SWEEP_PARAMS}")
        sweep_values = [float(v) for v in sweep.get("values", [])]
        if not sweep_values:
            raise ConfigError("sweep grid required: sweep.values is empty")
        if sweep_values != sorted(sweep_values):
            raise ConfigError("sweep values must be sorted ascending")

    seed = int(doc["master_seed"])
    if seed < 0:
        raise ConfigError("master_seed must be non-negative")
    if not math.isfinite(constraints.m_bits):
        raise ConfigError("m_bits must be finite")

    return ScenarioConfig(
        topology=topology,
        constraints=constraints,
        detector=detector,
        mode=mode,
        waveform=waveform,
        k_bit_cycles=int(wf["k_bit_cycles"]),
        k_chip_cycles=int(wf["k_chip_cycles"]),
        snr_grid_db=snr_grid,
        obs_grid_bits=obs_grid,
        trials=int(cal["trials"]),
        jobs=int(cal["jobs"]),
        table_path=cal.get("table_path"),
        sweep_param=sweep_param,
        sweep_values=sweep_values,
        master_seed=seed,
        raw=doc,
    )
