import csv
import json
import math

import numpy as np
import pytest
import scipy.io

from qgraph import families
from qgraph.dynamics import EvolutionConfig, strang_evolve
from qgraph.graph import Delta
from qgraph.io import (
    ConfigError,
    WF_COLUMNS,
    canonical_json,
    dump_operator,
    graph_from_json,
    load_graph,
    loads_json,
    read_wavefunction,
    save_graph,
    wavefunction_csv,
    write_snapshots,
    write_trace,
    write_wavefunction,
)
from qgraph.stationary import EnergyModel, GroundStateConfig, ncg
from qgraph.wavefunction import WaveFunction, from_edge_functions

GRAPH = {
    "edges": [
        {"from": "O", "to": "A", "length": 2.0},
        {"from": "O", "to": "B", "length": "pi"},
        {"from": "A", "to": "B", "length": 1.5, "id": "bridge", "line_kind": "C"},
    ],
    "conditions": {"O": {"kind": "delta", "strength": 0.5}, "B": {"kind": "dirichlet"}},
    "total_nodes": 120,
}


def test_graph_json_round_trip(tmp_path):
    g = graph_from_json(GRAPH)
    assert g.edge(("O", "B", "0")).length == math.pi
    assert g.condition("O") == Delta(0.5)
    save_graph(g, tmp_path / "g.json")
    g2 = load_graph(tmp_path / "g.json")
    assert canonical_json(g2.to_json()) == (tmp_path / "g.json").read_text()
    assert abs(g2.operator.H - g.operator.H).max() == 0


@pytest.mark.parametrize(
    "patch, msg",
    [
        ({"colour": "red"}, "unknown key"),
        ({"edges": [{"from": "A", "to": "B", "length": 1, "weight": 2}]}, "unknown key"),
        ({"edges": [{"from": "A", "length": 1}]}, "missing to"),
        ({"edges": [{"from": "A", "to": "B", "length": "1 +"}]}, "length"),
        ({"edges": [{"from": "A", "to": "B", "length": -1}]}, "invalid graph"),
        ({"edges": "AB"}, "edges"),
        ({"conditions": {"O": {"kind": "robin"}}}, "condition"),
        ({"conditions": {"O": {"kind": "delta"}}}, "strength"),
        ({"conditions": {"O": {"kind": "kirchhoff", "strength": 1}}}, "takes no"),
        ({"conditions": {"O": "free"}}, "must be an object"),
        ({"positions": [1, 2]}, "must be an object"),
    ],
)
def test_graph_json_errors(patch, msg):
    d = dict(GRAPH, **patch)
    with pytest.raises(ConfigError, match=msg):
        graph_from_json(d)


def test_json_syntax_error_location():
    with pytest.raises(ConfigError) as info:
        loads_json('{\n  "a": 1,\n  "b": }')
    assert info.value.line == 3 and info.value.col == 8
    assert "line 3" in str(info.value)


def test_wavefunction_csv_round_trip(tmp_path):
    g = graph_from_json(GRAPH)
    u = from_edge_functions(g, lambda e, x: np.exp(1j * x) * np.sin(x + 0.1))
    write_wavefunction(u, tmp_path / "u.csv")
    v = read_wavefunction(g, tmp_path / "u.csv")
    np.testing.assert_array_equal(v.values, u.values)
    real = WaveFunction(g, u.values.real)
    write_wavefunction(real, tmp_path / "r.csv")
    assert np.isrealobj(read_wavefunction(g, tmp_path / "r.csv").values)


def test_wavefunction_csv_layout():
    g = graph_from_json(GRAPH)
    u = WaveFunction(g, np.arange(g.size, dtype=float))
    rows = list(csv.reader(wavefunction_csv(u).splitlines()))
    assert tuple(rows[0]) == WF_COLUMNS
    body = rows[1:]
    assert len(body) == g.size + 2 * len(g.edges)
    # interior rows first, in global node order
    assert [float(r[5]) for r in body[: g.size]] == list(range(g.size))
    first = body[0]
    assert first[:4] == ["O", "A", "0", "1"]
    assert float(first[4]) == pytest.approx(g.mesh.dx[0])
    ends = body[g.size:]
    assert ends[0][3] == "0" and float(ends[0][4]) == 0.0
    assert ends[1][3] == str(g.mesh.counts[0] + 1) and float(ends[1][4]) == 2.0
    # Dirichlet end at B reads exactly 0
    b_end = [r for r in ends if r[1] == "B" and float(r[4]) > 0]
    assert all(float(r[5]) == 0.0 for r in b_end)


def test_wavefunction_csv_deterministic():
    g = graph_from_json(GRAPH)
    u = from_edge_functions(g, lambda e, x: np.cos(x) / 3)
    assert wavefunction_csv(u) == wavefunction_csv(u.copy())


def test_read_errors(tmp_path):
    g = graph_from_json(GRAPH)
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ConfigError, match="columns"):
        read_wavefunction(g, p)
    u = WaveFunction(g, np.ones(g.size))
    write_wavefunction(u, p)
    lines = p.read_text().splitlines()
    p.write_text("\n".join(lines[:5]) + "\n")
    with pytest.raises(ConfigError, match="missing"):
        read_wavefunction(g, p)
    other = families.segment(1.0, total_nodes=10)
    write_wavefunction(WaveFunction(other, np.ones(10)), p)
    with pytest.raises(ConfigError, match="unknown edge"):
        read_wavefunction(g, p)


def test_trace_rows(tmp_path):
    g = families.star(3, 10.0, {"O": Delta(1.0)}, total_nodes=300)
    u0 = from_edge_functions(g, lambda e, x: np.exp(-x**2))
    _, rep = ncg(EnergyModel(), u0, GroundStateConfig(rho=2.0))
    write_trace(rep, tmp_path / "t.csv")
    rows = list(csv.reader((tmp_path / "t.csv").read_text().splitlines()))
    assert rows[0] == ["iter", "energy", "mass", "residual"]
    assert len(rows) == rep.iterations + 2
    assert [int(r[0]) for r in rows[1:]] == list(range(rep.iterations + 1))
    assert float(rows[-1][1]) == rep.energies[-1]


def test_snapshot_manifest(tmp_path):
    g = families.segment(10.0, total_nodes=100)
    psi0 = from_edge_functions(g, lambda e, x: np.exp(-(x - 5) ** 2 + 1j * x))
    cfg = EvolutionConfig(dt=0.01, t_end=0.1, snapshot_every=4)
    _, traj = strang_evolve(g.operator, psi0, cfg)
    path = write_snapshots(traj, cfg, tmp_path / "snaps")
    man = json.loads(path.read_text())
    assert man["dt"] == 0.01 and man["t_end"] == 0.1
    assert [f["step"] for f in man["frames"]] == [0, 4, 8, 10]
    for f in man["frames"]:
        assert (tmp_path / "snaps" / f["file"]).is_file()
    last = read_wavefunction(g, tmp_path / "snaps" / man["frames"][-1]["file"])
    np.testing.assert_array_equal(last.values, traj.frames[-1].psi.values)


def test_dump_operator(tmp_path):
    g = graph_from_json(GRAPH)
    path = dump_operator(g, tmp_path / "deep" / "dir" / "H")
    assert path.name == "H.mtx" and path.is_file()
    H = scipy.io.mmread(path)
    assert abs(H.tocsr() - g.operator.H.tocsr()).max() == 0
