import math

import numpy as np
import pytest

from qworkstats.lattice import circuit_cost, color_edges, heavy_hex_layout, path_graph
from qworkstats.protocol import (DriveParams, GateProgram, build_program, drive_strength,
                                 prep_angle, thermal_one_probability, trotter_weights)


@pytest.mark.parametrize("kw", [dict(tau=0.0), dict(n_trotter=0), dict(beta=-1.0),
                                dict(gamma=math.inf)])
def test_drive_params_validation(kw):
    base = dict(beta=1.0, tau=1.0, gamma=1.0, n_trotter=4)
    base.update(kw)
    with pytest.raises(ValueError):
        DriveParams(**base)


def test_midpoints_and_dt():
    p = DriveParams(1.0, 2.0, 1.0, 4)
    assert p.dt == 0.5
    assert np.allclose(p.midpoints(), [0.25, 0.75, 1.25, 1.75])


def test_trotter_weights():
    assert np.allclose(trotter_weights(DriveParams(1.0, 1.0, 1.0, 1)), [1.0])
    assert np.allclose(trotter_weights(DriveParams(1.0, 1.0, 1.0, 2)), [0.70711, 0.70711], atol=1e-5)
    w = trotter_weights(DriveParams(1.0, 3.0, 2.5, 7))
    assert np.allclose(w, w[::-1])
    assert drive_strength(0.5, 1.0, 2.0) == pytest.approx(2.0)


def test_prep_angle():
    assert prep_angle(0.0) == pytest.approx(math.pi / 2)
    assert prep_angle(50.0) == pytest.approx(0.0, abs=1e-12)
    # independent closed form
    assert prep_angle(1.0) == pytest.approx(2 * math.acos(math.sqrt(math.e / (math.e + 1 / math.e))))


def test_thermal_one_probability():
    assert thermal_one_probability(1.0) == pytest.approx(1 / (1 + math.e ** 2))
    assert thermal_one_probability(0.0) == 0.5
    assert math.sin(prep_angle(1.0) / 2) ** 2 == pytest.approx(thermal_one_probability(1.0))


@pytest.mark.parametrize("layout, n_t", [(1, 1), (4, 3), (15, 29)])
def test_program_matches_cost(layout, n_t):
    g = heavy_hex_layout(layout_index=layout)
    prog = build_program(g, DriveParams(1.0, 1.0, 1.0, n_t))
    cost = circuit_cost(g, n_t)
    counts = prog.op_counts()
    assert counts["RZ"] == cost.rz_count and counts["RXX"] == cost.rxx_count
    assert counts["RY"] == cost.ry_count
    assert counts["MEASURE_X"] == counts["MEASURE_Y"] == g.n_vertices
    assert prog.depth == cost.total_depth
    assert sum(counts.values()) == cost.total_ops


def test_program_structure():
    g = heavy_hex_layout(size_hint=6)
    p = DriveParams(2.0, 1.5, 0.8, 3)
    prog = build_program(g, p)
    meas = [ins for ins in prog if ins.op == "MEASURE_ALL"]
    assert [m.tag for m in meas] == ["x", "y"]
    edges = set(g.edges)
    for ins in prog:
        assert all(q < g.n_vertices for q in ins.qubits)
        if ins.op == "RXX":
            assert ins.qubits in edges
        if ins.angle is not None:
            assert math.isfinite(ins.angle)
    rz_angles = []
    for ins in prog.body():
        if ins.op == "RZ" and ins.qubits == (0,):
            rz_angles.append(ins.angle)
    assert np.allclose(rz_angles, [-p.dt, -2 * p.dt, -2 * p.dt, -p.dt])


def test_gamma_zero_program_has_zero_rxx():
    prog = build_program(path_graph(3), DriveParams(1.0, 1.0, 0.0, 2))
    assert all(ins.angle == 0 for ins in prog if ins.op == "RXX")


def test_program_json_roundtrip():
    prog = build_program(path_graph(3), DriveParams(1.0, 1.0, 1.0, 2))
    assert GateProgram.from_json(prog.to_json()) == prog


def test_program_rejects_foreign_coloring():
    with pytest.raises(ValueError):
        build_program(path_graph(3), DriveParams(1.0, 1.0, 1.0, 2), color_edges(path_graph(4)))
