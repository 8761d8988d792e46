import math

import numpy as np
import pytest

from covertroute.topology import (WILLIE, PathLossModel, Topology, TopologyError,
                                  export_gains, free_space_gain_db, grid_topology,
                                  import_gains, link_gain, random_topology)
from covertroute.units import db_to_linear


def make_topo(**kwargs):
    defaults = dict(
        positions=np.array([[0.0, 0, 0], [100.0, 0, 0], [0.0, 100, 0]]),
        willie_position=np.array([50.0, 50, 0]),
        alice=0,
        bob=2,
    )
    defaults.update(kwargs)
    return Topology(**defaults)


def test_gain_at_reference_distance_is_reference_gain():
    model = PathLossModel(reference_gain_db=-30.0, reference_distance_m=1.0, exponent=2.0)
    assert model.gain(1.0) == pytest.approx(db_to_linear(-30.0), rel=1e-12)


def test_gain_follows_power_law():
    # hand-evaluated (d/d0)^-n with 0 dB reference gain
    model = PathLossModel(reference_gain_db=0.0, reference_distance_m=1.0, exponent=2.0)
    assert model.gain(10.0) == pytest.approx(1e-2, rel=1e-12)  # -20 dB
    assert model.gain(100.0) == pytest.approx(1e-4, rel=1e-12)  # -40 dB


def test_default_reference_is_friis_at_900mhz():
    model = PathLossModel()
    lam = 299_792_458.0 / 900e6
    assert db_to_linear(model.reference_gain_db) == pytest.approx(
        (lam / (4 * math.pi)) ** 2, rel=1e-12)


def test_gain_strictly_decreasing_in_distance(rng):
    model = PathLossModel(exponent=3.0)
    for _ in range(200):
        d1, d2 = sorted(rng.uniform(1.0, 500.0, size=2))
        if d1 == d2:
            continue
        assert model.gain(d1) > model.gain(d2)


def test_link_gain_pure_and_directional():
    topo = make_topo()
    g1 = link_gain(topo, 0, 1)
    assert g1 == link_gain(topo, 0, 1) == link_gain(topo, 0, 1)
    assert link_gain(topo, 0, WILLIE) == link_gain(topo, 0, WILLIE)


def test_link_gain_unknown_node_errors():
    topo = make_topo()
    with pytest.raises(TopologyError):
        link_gain(topo, 0, 7)
    with pytest.raises(TopologyError):
        link_gain(topo, -1, 1)
    with pytest.raises(TopologyError):
        link_gain(topo, 1, 1)


def test_imported_lookup_exact(tmp_path):
    topo = make_topo()
    path = tmp_path / "gains.csv"
    path.write_text(
        "node_0,node_1,node_2,willie\n"
        "0.0,-80.0,-60.0,-90.0\n"
        "-81.0,0.0,-61.0,-91.0\n"
        "-62.0,-63.0,0.0,-92.0\n"
    )
    imp = import_gains(topo, path)
    assert imp.gain_source == "imported"
    assert link_gain(imp, 0, 1) == pytest.approx(1e-8, rel=1e-12)
    assert link_gain(imp, 1, 0) == pytest.approx(db_to_linear(-81.0), rel=1e-12)
    assert link_gain(imp, 2, WILLIE) == pytest.approx(db_to_linear(-92.0), rel=1e-12)


def test_import_nan_cell_error_names_cell(tmp_path):
    topo = make_topo()
    path = tmp_path / "gains.csv"
    path.write_text(
        "node_0,node_1,node_2,willie\n"
        "0.0,-80.0,-60.0,-90.0\n"
        "-81.0,0.0,nan,-91.0\n"
        "-62.0,-63.0,0.0,-92.0\n"
    )
    with pytest.raises(TopologyError, match="row 1, column 2"):
        import_gains(topo, path)


def test_import_dimension_mismatch(tmp_path):
    topo = make_topo()
    path = tmp_path / "gains.csv"
    path.write_text("node_0,node_1,node_2,willie\n0.0,-80.0,-60.0,-90.0\n")
    with pytest.raises(TopologyError, match="expected 3 data rows"):
        import_gains(topo, path)


def test_import_malformed_row(tmp_path):
    topo = make_topo()
    path = tmp_path / "gains.csv"
    path.write_text(
        "node_0,node_1,node_2,willie\n"
        "0.0,-80.0,-60.0,-90.0\n"
        "-81.0,0.0,oops,-91.0\n"
        "-62.0,-63.0,0.0,-92.0\n"
    )
    with pytest.raises(TopologyError, match="row 1, column 2: malformed"):
        import_gains(topo, path)


def test_export_import_round_trip_bit_exact(tmp_path):
    # write/read oracle: the dB text representation survives a full cycle
    topo = grid_topology(3, 2, 40.0, (55.0, 20.0, 0.0))
    first = tmp_path / "first.csv"
    second = tmp_path / "second.csv"
    export_gains(topo, first)
    imported = import_gains(topo, first)
    export_gains(imported, second)
    assert first.read_text() == second.read_text()
    for tx in topo.node_ids():
        for rx in list(topo.node_ids()) + [WILLIE]:
            if rx == tx:
                continue
            assert link_gain(imported, tx, rx) == pytest.approx(
                link_gain(topo, tx, rx), rel=1e-12)


def test_grid_topology_paper_scale():
    # 6x6 at 50 m spacing: 36 nodes spanning 250 m per side
    topo = grid_topology(6, 6, 50.0, (125.0, 125.0, 0.0))
    assert topo.n_nodes == 36
    assert topo.positions[:, 0].max() == 250.0
    assert topo.positions[:, 1].max() == 250.0
    assert topo.alice == 0 and topo.bob == 35


def test_grid_node_positions():
    topo = grid_topology(3, 2, 10.0, (5.0, 5.0, 0.0))
    # node (i, j) at (i*s, j*s, 0), index i + j*nx
    assert np.allclose(topo.positions[0], [0, 0, 0])
    assert np.allclose(topo.positions[2], [20, 0, 0])
    assert np.allclose(topo.positions[3], [0, 10, 0])
    assert np.allclose(topo.positions[5], [20, 10, 0])


def test_grid_1x2_single_pair():
    topo = grid_topology(1, 2, 25.0, (10.0, 10.0, 0.0))
    assert topo.n_nodes == 2
    assert topo.alice == 0 and topo.bob == 1
    assert link_gain(topo, 0, 1) > 0


def test_grid_too_small():
    with pytest.raises(TopologyError):
        grid_topology(1, 1, 10.0, (0.0, 5.0, 0.0))


def test_topology_validation():
    with pytest.raises(TopologyError):
        make_topo(alice=0, bob=0)
    with pytest.raises(TopologyError):
        make_topo(positions=np.array([[0.0, 0, 0], [np.nan, 0, 0], [1.0, 1, 0]]))
    with pytest.raises(TopologyError):
        make_topo(gain_source="imported")  # tables missing


def test_random_topology_deterministic():
    t1 = random_topology(9, 5)
    t2 = random_topology(9, 5)
    assert np.array_equal(t1.positions, t2.positions)
    assert t1.alice == 0 and t1.bob == 4
