"""File formats: graph JSON, wavefunction and trace CSV, snapshot manifests.

Floats are written with ``repr`` precision so that files round-trip exactly
and repeated runs produce identical bytes.
"""
from __future__ import annotations

import csv
import io as _io
import json
import os
from pathlib import Path
from typing import Mapping

import numpy as np
import scipy.io

from .expr import ExprError, parse_number
from .graph import GraphError, MetricGraph, VertexCondition, build_graph
from .wavefunction import WaveFunction

GRAPH_KEYS = {"edges", "conditions", "total_nodes", "nodes_per_edge", "positions", "closure_order"}
EDGE_KEYS = {"from", "to", "length", "id", "line_kind"}
CONDITION_KEYS = {"kind", "strength", "A", "B"}
WF_COLUMNS = ("edge_from", "edge_to", "edge_id", "k", "x_local", "re", "im")
TRACE_COLUMNS = ("iter", "energy", "mass", "residual")


class ConfigError(ValueError):
    """Malformed input; ``line`` and ``col`` locate JSON syntax errors."""

    def __init__(self, msg: str, line: int | None = None, col: int | None = None):
        where = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(where + msg)
        self.line, self.col = line, col


def _fmt(x: float) -> str:
    return repr(float(x))


def load_json(path) -> dict:
    text = Path(path).read_text()
    return loads_json(text)


def loads_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, exc.lineno, exc.colno) from None


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _require_object(d, where: str):
    if not isinstance(d, Mapping):
        raise ConfigError(f"{where} must be an object")


def _reject_unknown(d: Mapping, allowed: set, where: str):
    _require_object(d, where)
    extra = sorted(set(d) - allowed)
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")


def condition_from_json(d: Mapping, where: str = "condition") -> VertexCondition:
    _reject_unknown(d, CONDITION_KEYS, where)
    kind = d.get("kind")
    if not isinstance(kind, str):
        raise ConfigError(f"{where} needs a 'kind'")
    kind = kind.lower()
    try:
        if kind in ("delta", "delta_prime"):
            if "strength" not in d:
                raise ConfigError(f"{where}: {kind} needs a 'strength'")
            return VertexCondition(kind, parse_number(d["strength"]))
        if kind == "custom":
            return VertexCondition(kind, A=d.get("A"), B=d.get("B"))
        extra = sorted(set(d) - {"kind"})
        if extra:
            raise ConfigError(f"{where}: {kind} takes no {', '.join(extra)}")
        return VertexCondition(kind)
    except (GraphError, ExprError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def conditions_from_json(d: Mapping | None) -> dict:
    if d is None:
        return {}
    _require_object(d, "conditions")
    return {str(v): condition_from_json(c, f"condition of {v!r}") for v, c in d.items()}


def graph_from_json(d: Mapping) -> MetricGraph:
    """Build a graph from the JSON description (see the README for the schema)."""
    _reject_unknown(d, GRAPH_KEYS, "graph")
    if "edges" not in d or not isinstance(d["edges"], list):
        raise ConfigError("graph needs an 'edges' list")
    edges = []
    for i, e in enumerate(d["edges"]):
        _reject_unknown(e, EDGE_KEYS, f"edge {i}")
        missing = {"from", "to", "length"} - set(e)
        if missing:
            raise ConfigError(f"edge {i} is missing {', '.join(sorted(missing))}")
        try:
            length = parse_number(e["length"])
        except ExprError as exc:
            raise ConfigError(f"edge {i} length: {exc}") from None
        edges.append((str(e["from"]), str(e["to"]), length, e.get("id"), e.get("line_kind")))
    positions = d.get("positions")
    if positions is not None:
        _require_object(positions, "positions")
        positions = {str(v): tuple(p) for v, p in positions.items()}
    try:
        return build_graph(
            edges,
            conditions_from_json(d.get("conditions")),
            total_nodes=d.get("total_nodes"),
            positions=positions,
            nodes_per_edge=d.get("nodes_per_edge"),
            closure_order=d.get("closure_order", 2),
        )
    except (GraphError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid graph: {exc}") from None


def load_graph(path) -> MetricGraph:
    return graph_from_json(load_json(path))


def save_graph(g: MetricGraph, path):
    Path(path).write_text(canonical_json(g.to_json()))


# wavefunctions --------------------------------------------------------------------
def wavefunction_rows(u: WaveFunction):
    """Rows of the wavefunction CSV: interior nodes in global order, then edge ends."""
    g = u.graph
    v = u.values
    ends = g.operator.trace_matrix @ v
    for i, e in enumerate(g.edges):
        x = g.edge_x(i)
        s = g.mesh.edge_slice(i)
        for k, (xk, val) in enumerate(zip(x, v[s]), start=1):
            yield (e.source, e.target, e.id, k, xk, val)
    for i, e in enumerate(g.edges):
        n = int(g.mesh.counts[i])
        yield (e.source, e.target, e.id, 0, 0.0, ends[2 * i])
        yield (e.source, e.target, e.id, n + 1, float(e.length), ends[2 * i + 1])


def wavefunction_csv(u: WaveFunction) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(WF_COLUMNS)
    for src, dst, eid, k, x, val in wavefunction_rows(u):
        val = complex(val)
        w.writerow((src, dst, eid, k, _fmt(x), _fmt(val.real), _fmt(val.imag)))
    return buf.getvalue()


def write_wavefunction(u: WaveFunction, path):
    Path(path).write_text(wavefunction_csv(u))


def read_wavefunction(g: MetricGraph, path) -> WaveFunction:
    """Inverse of :func:`write_wavefunction`; end rows are ignored."""
    vals = np.zeros(g.size, dtype=complex)
    seen = np.zeros(g.size, dtype=bool)
    with open(path, newline="") as fh:
        r = csv.DictReader(fh)
        if tuple(r.fieldnames or ()) != WF_COLUMNS:
            raise ConfigError(f"{path}: expected columns {','.join(WF_COLUMNS)}")
        for row in r:
            key = (row["edge_from"], row["edge_to"], row["edge_id"])
            k = int(row["k"])
            try:
                rng = g.node_range(key)
            except KeyError:
                raise ConfigError(f"{path}: unknown edge {key}") from None
            if 1 <= k <= len(rng):
                vals[rng.start + k - 1] = complex(float(row["re"]), float(row["im"]))
                seen[rng.start + k - 1] = True
    if not seen.all():
        raise ConfigError(f"{path}: {int((~seen).sum())} interior nodes missing")
    if not np.any(vals.imag):
        return WaveFunction(g, vals.real)
    return WaveFunction(g, vals)


def write_trace(report, path):
    """Iteration trace: one row per recorded iterate, the initial datum included."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for i, (e, m, r) in enumerate(zip(report.energies, report.masses, report.residuals)):
            w.writerow((i, _fmt(e), _fmt(m), _fmt(r)))


def write_snapshots(traj, cfg, outdir, prefix: str = "frame") -> Path:
    """One wavefunction CSV per frame and ``manifest.json``; returns the manifest path."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    width = max(5, len(str(traj.steps)))
    frames = []
    for f in traj.frames:
        name = f"{prefix}_{f.step:0{width}d}.csv"
        write_wavefunction(f.psi, out / name)
        frames.append({"step": f.step, "t": f.t, "file": name, "mass": f.mass, "energy": f.energy})
    manifest = {"dt": cfg.dt, "t_end": cfg.t_end, "frames": frames}
    path = out / "manifest.json"
    path.write_text(canonical_json(manifest))
    return path


def dump_operator(g: MetricGraph, path) -> Path:
    """Write ``H`` in Matrix Market coordinate format; returns the file written."""
    path = Path(path)
    if path.suffix != ".mtx":
        # mmwrite appends .mtx otherwise
        path = path.with_name(path.name + ".mtx")
    path.parent.mkdir(parents=True, exist_ok=True)
    scipy.io.mmwrite(os.fspath(path), g.operator.H.tocoo(), comment="finite-difference graph operator H", precision=17)
    # a failed write can pass silently, so check the result
    if not path.is_file():
        raise OSError(f"could not write operator to {path}")
    return path
