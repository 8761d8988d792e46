"""Node geometry and per-link channel power gains.

Gains come either from a log-distance path-loss model evaluated on node
positions, or from an imported dB gain matrix (e.g. ray-traced data).
They are stored and exchanged in dB text form but used linearly (|h|^2)
everywhere else; the dB values are kept verbatim so an export/import
round-trip is bit-exact. A topology is immutable once built, so any
number of workers may read it concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .units import db_to_linear, linear_to_db

SPEED_OF_LIGHT = 299_792_458.0

#: Marker accepted by :func:`link_gain` as the receive endpoint for the adversary.
WILLIE = "willie"


class TopologyError(ValueError):
    """Bad node ids, malformed gain files, or dimension mismatches."""


def free_space_gain_db(carrier_frequency_hz: float, distance_m: float = 1.0) -> float:
    """Friis power gain (lambda / 4 pi d)^2 in dB, used as the model's reference."""
    lam = SPEED_OF_LIGHT / carrier_frequency_hz
    return linear_to_db((lam / (4.0 * math.pi * distance_m)) ** 2)


@dataclass(frozen=True)
class PathLossModel:
    """Log-distance path loss: gain(d) = ref_gain * (d / d0)^-exponent.

    The default reference is the free-space gain at d0 = 1 m for a 900 MHz
    carrier; exponent 3.0 approximates an urban-like environment.
    """

    reference_gain_db: float | None = None
    reference_distance_m: float = 1.0
    exponent: float = 3.0
    carrier_frequency_hz: float = 900e6

    def __post_init__(self):
        if self.exponent < 1:
            raise TopologyError(f"path-loss exponent must be >= 1, got {self.exponent}")
        if self.reference_distance_m <= 0:
            raise TopologyError("reference_distance_m must be positive")
        if self.reference_gain_db is None:
            object.__setattr__(
                self,
                "reference_gain_db",
                free_space_gain_db(self.carrier_frequency_hz, self.reference_distance_m),
            )

    def gain(self, distance_m: float) -> float:
        """Linear power gain at the given distance (clamped to d0 below d0)."""
        d = max(distance_m, self.reference_distance_m)
        ratio = d / self.reference_distance_m
        return db_to_linear(self.reference_gain_db) * ratio ** (-self.exponent)


@dataclass(frozen=True)
class Topology:
    """Node positions, the adversary position, and the gain source.

    With ``gain_source == "imported"``, ``node_gains_db[i, j]`` is the dB
    power gain transmitter i -> receiver j and ``willie_gains_db[i]`` the
    gain transmitter i -> Willie; lookups are directional and symmetry is
    never assumed. With ``gain_source == "model"`` gains are evaluated on
    demand from positions.
    """

    positions: np.ndarray  # (N, 3) meters
    willie_position: np.ndarray  # (3,) meters
    alice: int
    bob: int
    model: PathLossModel = field(default_factory=PathLossModel)
    gain_source: str = "model"
    node_gains_db: np.ndarray | None = None  # (N, N), imported only
    willie_gains_db: np.ndarray | None = None  # (N,), imported only
    max_link_distance_m: float | None = None

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 2:
            raise TopologyError("positions must be an (N>=2, 3) array")
        if not np.all(np.isfinite(pos)):
            raise TopologyError("node positions must be finite")
        wpos = np.asarray(self.willie_position, dtype=float)
        if wpos.shape != (3,) or not np.all(np.isfinite(wpos)):
            raise TopologyError("willie_position must be a finite 3-vector")
        n = pos.shape[0]
        for name, idx in (("alice", self.alice), ("bob", self.bob)):
            if not (0 <= idx < n):
                raise TopologyError(f"{name} id {idx} out of range for {n} nodes")
        if self.alice == self.bob:
            raise TopologyError("alice and bob must be distinct nodes")
        if self.gain_source not in ("model", "imported"):
            raise TopologyError(f"unknown gain_source {self.gain_source!r}")
        if self.gain_source == "imported":
            if self.node_gains_db is None or self.willie_gains_db is None:
                raise TopologyError("imported gain_source requires gain tables")
            if self.node_gains_db.shape != (n, n) or self.willie_gains_db.shape != (n,):
                raise TopologyError(
                    f"imported gain tables must be ({n},{n}) and ({n},), got "
                    f"{self.node_gains_db.shape} and {self.willie_gains_db.shape}"
                )
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "willie_position", wpos)

    @property
    def n_nodes(self) -> int:
        return self.positions.shape[0]

    def node_ids(self) -> range:
        return range(self.n_nodes)

    def distance(self, tx: int, rx_or_willie) -> float:
        p = self.willie_position if rx_or_willie == WILLIE else self.positions[rx_or_willie]
        return float(np.linalg.norm(self.positions[tx] - p))


def _check_node(topology: Topology, node, what: str) -> int:
    if not isinstance(node, (int, np.integer)) or not (0 <= node < topology.n_nodes):
        raise TopologyError(f"unknown {what} node id {node!r}")
    return int(node)


def link_gain(topology: Topology, tx: int, rx_or_willie) -> float:
    """Linear power gain |h|^2 from node tx to a node or to :data:`WILLIE`.

    Pure and deterministic for a fixed topology; raises on unknown ids so a
    missing import entry can never silently default.
    """
    tx = _check_node(topology, tx, "transmit")
    to_willie = rx_or_willie == WILLIE
    if not to_willie:
        rx = _check_node(topology, rx_or_willie, "receive")
        if rx == tx:
            raise TopologyError("self-links have no gain")
    if topology.gain_source == "imported":
        g_db = topology.willie_gains_db[tx] if to_willie else topology.node_gains_db[tx, rx]
        if not np.isfinite(g_db):
            where = f"({tx},willie)" if to_willie else f"({tx},{rx})"
            raise TopologyError(f"imported gain table has no usable entry at {where}")
        return db_to_linear(float(g_db))
    return topology.model.gain(topology.distance(tx, WILLIE if to_willie else rx))


def grid_topology(
    nx: int,
    ny: int,
    spacing_m: float,
    willie_position,
    model: PathLossModel | None = None,
    max_link_distance_m: float | None = None,
) -> Topology:
    """Regular nx-by-ny grid at height 0; node (i, j) sits at (i*s, j*s, 0).

    Alice is the (0, 0) corner, Bob the opposite corner. Node index is
    i + j * nx (x scans fastest).
    """
    if nx * ny < 2:
        raise TopologyError("grid needs at least 2 nodes")
    pos = np.array(
        [(i * spacing_m, j * spacing_m, 0.0) for j in range(ny) for i in range(nx)]
    )
    return Topology(
        positions=pos,
        willie_position=np.asarray(willie_position, dtype=float),
        alice=0,
        bob=nx * ny - 1,
        model=model or PathLossModel(),
        max_link_distance_m=max_link_distance_m,
    )


def random_topology(seed: int, n_nodes: int, box_m=(250.0, 250.0, 0.0),
                    model: PathLossModel | None = None) -> Topology:
    """Uniformly placed nodes (Alice = 0, Bob = last) and Willie in a box;
    used for randomized routing checks."""
    if n_nodes < 2:
        raise TopologyError("need at least 2 nodes")
    rng = np.random.default_rng(np.random.SeedSequence([0x7090, int(seed)]))
    box = np.asarray(box_m, dtype=float)
    pos = rng.uniform(0.0, 1.0, size=(n_nodes, 3)) * box
    willie = rng.uniform(0.0, 1.0, size=3) * box
    return Topology(
        positions=pos,
        willie_position=willie,
        alice=0,
        bob=n_nodes - 1,
        model=model or PathLossModel(),
    )


def export_gains(topology: Topology, path) -> None:
    """Write the gain tables as the documented CSV (dB, header row, '.' decimal).

    Row i holds the dB gains from transmitter i to every receiver and to
    Willie; the diagonal is written as 0.0 and ignored on import.
    """
    n = topology.n_nodes
    header = ",".join([f"node_{j}" for j in range(n)] + ["willie"])
    lines = [header]
    for i in range(n):
        row = []
        for j in range(n):
            if i == j:
                row.append("0.0")
            elif topology.gain_source == "imported":
                row.append(repr(float(topology.node_gains_db[i, j])))
            else:
                row.append(repr(linear_to_db(link_gain(topology, i, j))))
        if topology.gain_source == "imported":
            row.append(repr(float(topology.willie_gains_db[i])))
        else:
            row.append(repr(linear_to_db(link_gain(topology, i, WILLIE))))
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def import_gains(topology: Topology, path) -> Topology:
    """Return a copy of the topology backed by the CSV gain table at *path*.

    The file must be N x (N+1) in dB with the documented header; any
    malformed, NaN, or infinite cell is a hard error naming the row/column.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise TopologyError(f"{path}: empty gain file")
    n = topology.n_nodes
    expected_header = ",".join([f"node_{j}" for j in range(n)] + ["willie"])
    if lines[0] != expected_header:
        raise TopologyError(
            f"{path}: header mismatch for {n} nodes (expected {expected_header!r})"
        )
    if len(lines) - 1 != n:
        raise TopologyError(f"{path}: expected {n} data rows, found {len(lines) - 1}")
    node_db = np.zeros((n, n))
    willie_db = np.zeros(n)
    for i, line in enumerate(lines[1:]):
        cells = line.split(",")
        if len(cells) != n + 1:
            raise TopologyError(f"{path}: row {i} has {len(cells)} cells, expected {n + 1}")
        for j, cell in enumerate(cells):
            try:
                val = float(cell)
            except ValueError:
                raise TopologyError(f"{path}: row {i}, column {j}: malformed value {cell!r}")
            if math.isnan(val) or math.isinf(val):
                raise TopologyError(f"{path}: row {i}, column {j}: non-finite gain {cell!r}")
            if j < n:
                node_db[i, j] = val
            else:
                willie_db[i] = val
    return Topology(
        positions=topology.positions,
        willie_position=topology.willie_position,
        alice=topology.alice,
        bob=topology.bob,
        model=topology.model,
        gain_source="imported",
        node_gains_db=node_db,
        willie_gains_db=willie_db,
        max_link_distance_m=topology.max_link_distance_m,
    )


def topology_to_dict(topology: Topology) -> dict:
    """JSON-friendly view used by `gen-topology` and the figure scripts."""
    return {
        "nodes": [
            {"id": i, "position_m": [float(x) for x in topology.positions[i]]}
            for i in range(topology.n_nodes)
        ],
        "alice": topology.alice,
        "bob": topology.bob,
        "willie_position_m": [float(x) for x in topology.willie_position],
        "gain_source": topology.gain_source,
    }
