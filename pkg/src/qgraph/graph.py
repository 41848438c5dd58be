"""Metric graphs, vertex conditions and the per-edge finite-difference mesh.

An edge is identified by the triple ``(source, target, id)``.  Every edge is
parametrised by arc length ``x in [0, length]`` with ``x = 0`` at ``source``.
Only interior nodes are stored; vertex values are reconstructed later from the
vertex conditions (see :mod:`qgraph.operator`).

Vertex conditions are expressed as ``A u(v) + B u'(v) = 0`` where ``u(v)`` is the
vector of traces of the incident edges and ``u'(v)`` the vector of outgoing
derivatives, i.e. derivatives pointing from the edge interior towards the
vertex.  Rows and columns follow the incident edges sorted by ``(source,
target, id)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

EdgeKey = tuple[str, str, str]

DEFAULT_NODES_PER_EDGE = 100
MIN_NODES_PER_EDGE = 3


class GraphError(ValueError):
    """Raised for malformed graph descriptions."""


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    length: float
    id: str = "0"
    line_kind: str = "S"  # "S" straight, "C" half-ellipse; plotting only

    @property
    def key(self) -> EdgeKey:
        return (self.source, self.target, self.id)


KINDS = ("kirchhoff", "dirichlet", "delta", "delta_prime", "custom")


@dataclass(frozen=True)
class VertexCondition:
    """Vertex condition of one of the supported kinds.

    Derivatives are outgoing (pointing from the edge into the vertex).
    ``delta`` with strength ``alpha`` imposes continuity and
    ``sum_e u_e'(v) = alpha * u(v)``; the quadratic form then carries
    ``-alpha/2 |u(v)|^2``, so ``alpha > 0`` is attractive.  ``delta_prime``
    with strength ``beta`` imposes equal outgoing derivatives ``u'(v)`` and
    ``sum_e u_e(v) = beta * u'(v)``.  ``custom`` carries raw ``(A, B)``.
    """

    kind: str = "kirchhoff"
    strength: float = 0.0
    A: tuple | None = None
    B: tuple | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise GraphError(f"unknown vertex condition kind {self.kind!r}")
        if self.kind == "custom":
            if self.A is None or self.B is None:
                raise GraphError("custom condition needs both A and B")
            A = np.asarray(self.A, dtype=float)
            B = np.asarray(self.B, dtype=float)
            if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != B.shape:
                raise GraphError(f"custom condition needs square A, B of equal shape, got {A.shape} and {B.shape}")
            # store as nested tuples so the dataclass stays hashable
            object.__setattr__(self, "A", tuple(map(tuple, A.tolist())))
            object.__setattr__(self, "B", tuple(map(tuple, B.tolist())))

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind in ("delta", "delta_prime"):
            out["strength"] = float(self.strength)
        if self.kind == "custom":
            out["A"] = [list(r) for r in self.A]
            out["B"] = [list(r) for r in self.B]
        return out


def Kirchhoff() -> VertexCondition:
    return VertexCondition("kirchhoff")


def Dirichlet() -> VertexCondition:
    return VertexCondition("dirichlet")


def Delta(alpha: float) -> VertexCondition:
    return VertexCondition("delta", float(alpha))


def DeltaPrime(beta: float) -> VertexCondition:
    return VertexCondition("delta_prime", float(beta))


def Custom(A, B) -> VertexCondition:
    return VertexCondition("custom", A=A, B=B)


def condition_matrices(cond: VertexCondition, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(A, B)`` of shape ``(degree, degree)`` for ``cond``.

    >>> A, B = condition_matrices(Kirchhoff(), 3)
    >>> A.tolist(), B.tolist()
    ([[1.0, -1.0, 0.0], [0.0, 1.0, -1.0], [0.0, 0.0, 0.0]], [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 1.0, 1.0]])
    """
    d = degree
    if d < 1:
        raise GraphError("vertex degree must be positive")
    A = np.zeros((d, d))
    B = np.zeros((d, d))
    if cond.kind == "dirichlet":
        return np.eye(d), B
    if cond.kind == "custom":
        A = np.array(cond.A, dtype=float)
        B = np.array(cond.B, dtype=float)
        if A.shape != (d, d):
            raise GraphError(f"custom condition has size {A.shape[0]} but vertex degree is {d}")
        return A, B
    # continuity of traces (or of derivatives for delta') in the first d-1 rows
    cont = A if cond.kind != "delta_prime" else B
    for i in range(d - 1):
        cont[i, i] = 1.0
        cont[i, i + 1] = -1.0
    if cond.kind == "kirchhoff":
        B[-1, :] = 1.0
    elif cond.kind == "delta":
        B[-1, :] = 1.0
        A[-1, 0] = -cond.strength
    else:
        A[-1, :] = 1.0
        B[-1, 0] = -cond.strength
    return A, B


def allocate_nodes(lengths: Iterable[float], total: int) -> list[int]:
    """Distribute ``total`` interior nodes proportionally to ``lengths``.

    Largest-remainder rounding, then a floor of three nodes per edge, so the
    sum can exceed ``total`` only through the floor.
    """
    lengths = [float(l) for l in lengths]
    L = sum(lengths)
    quotas = [total * l / L for l in lengths]
    counts = [math.floor(q) for q in quotas]
    left = total - sum(counts)
    order = sorted(range(len(lengths)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[:left]:
        counts[i] += 1
    return [max(MIN_NODES_PER_EDGE, c) for c in counts]


class Mesh:
    """Interior-node layout: ``counts[e]`` nodes on edge ``e`` with spacing ``dx[e]``."""

    def __init__(self, lengths: Iterable[float], counts: Iterable[int]):
        self.lengths = np.asarray(list(lengths), dtype=float)
        self.counts = np.asarray(list(counts), dtype=int)
        if np.any(self.counts < MIN_NODES_PER_EDGE):
            raise GraphError(f"every edge needs at least {MIN_NODES_PER_EDGE} interior nodes")
        self.dx = self.lengths / (self.counts + 1)
        self.offsets = np.concatenate([[0], np.cumsum(self.counts)])
        for a in (self.lengths, self.counts, self.dx, self.offsets):
            a.flags.writeable = False

    @property
    def size(self) -> int:
        return int(self.offsets[-1])

    def edge_slice(self, e: int) -> slice:
        return slice(int(self.offsets[e]), int(self.offsets[e + 1]))


class MetricGraph:
    """Compact metric graph with vertex conditions and its mesh.

    Numerical content is fixed at construction.  Vertex positions are plotting
    metadata and may be updated with :func:`set_positions`.
    """

    def __init__(self, edges, conditions, mesh, positions=None, closure_order=2):
        self.edges: tuple[Edge, ...] = tuple(edges)
        self.mesh: Mesh = mesh
        self.closure_order = int(closure_order)
        seen: list[str] = []
        for e in self.edges:
            for v in (e.source, e.target):
                if v not in seen:
                    seen.append(v)
        self.vertices: tuple[str, ...] = tuple(seen)
        self.conditions: Mapping[str, VertexCondition] = dict(conditions)
        self.positions: dict[str, tuple[float, float]] = dict(positions or {})
        self._index = {e.key: i for i, e in enumerate(self.edges)}

    def __repr__(self):
        return f"MetricGraph({len(self.vertices)} vertices, {len(self.edges)} edges, {self.size} nodes)"

    @property
    def size(self) -> int:
        return self.mesh.size

    @property
    def total_length(self) -> float:
        return float(self.mesh.lengths.sum())

    def edge_index(self, key) -> int:
        key = tuple(str(k) for k in key)
        try:
            return self._index[key]
        except KeyError:
            raise KeyError(f"no edge {key}") from None

    def edge(self, key) -> Edge:
        return self.edges[self.edge_index(key)]

    def node_range(self, key) -> range:
        s = self.mesh.edge_slice(self.edge_index(key))
        return range(s.start, s.stop)

    def edge_x(self, e) -> np.ndarray:
        """Local coordinates of the interior nodes of edge ``e`` (index or key)."""
        i = e if isinstance(e, (int, np.integer)) else self.edge_index(e)
        n = self.mesh.counts[i]
        return self.mesh.dx[i] * np.arange(1, n + 1)

    def degree(self, v: str) -> int:
        return len(self.incident(v))

    def incident(self, v: str) -> list[tuple[int, int]]:
        """Incident edge ends ``(edge_index, side)`` sorted by edge key.

        ``side`` is 0 when ``v`` is the source and 1 when it is the target.
        """
        return self._incidence[v]

    @cached_property
    def _incidence(self) -> dict[str, list[tuple[int, int]]]:
        inc: dict[str, list[tuple[int, int]]] = {v: [] for v in self.vertices}
        for i, e in enumerate(self.edges):
            inc[e.source].append((i, 0))
            inc[e.target].append((i, 1))
        for v in inc:
            inc[v].sort(key=lambda t: (self.edges[t[0]].key, t[1]))
        return inc

    def condition(self, v: str) -> VertexCondition:
        return self.conditions[v]

    @cached_property
    def operator(self):
        """Assembled operator, built on first use."""
        from .operator import assemble

        return assemble(self)

    def to_json(self) -> dict:
        out = {
            "edges": [
                {"from": e.source, "to": e.target, "length": float(e.length), "id": e.id, "line_kind": e.line_kind}
                for e in self.edges
            ],
            "conditions": {v: self.conditions[v].to_json() for v in sorted(self.vertices)},
            "nodes_per_edge": [int(c) for c in self.mesh.counts],
            "closure_order": self.closure_order,
        }
        if self.positions:
            out["positions"] = {v: [float(p[0]), float(p[1])] for v, p in sorted(self.positions.items())}
        return out


def _as_edge(spec) -> Edge:
    if isinstance(spec, Edge):
        return spec
    if isinstance(spec, Mapping):
        spec = dict(spec)
        src, dst, length = spec.pop("from"), spec.pop("to"), spec.pop("length")
        return Edge(str(src), str(dst), length, spec.pop("id", None), spec.pop("line_kind", None))
    src, dst, length, *rest = spec
    eid = rest[0] if len(rest) > 0 else None
    kind = rest[1] if len(rest) > 1 else None
    return Edge(str(src), str(dst), length, eid, kind)


def build_graph(
    edges,
    conditions: Mapping[str, VertexCondition] | None = None,
    total_nodes: int | None = None,
    positions: Mapping[str, tuple[float, float]] | None = None,
    nodes_per_edge: Iterable[int] | None = None,
    closure_order: int = 2,
) -> MetricGraph:
    """Validate an edge list and build the graph with its mesh.

    ``edges`` holds :class:`Edge` objects or tuples ``(from, to, length[, id[,
    line_kind]])``.  Missing ids are numbered per ordered vertex pair; missing
    line kinds default to straight for the first edge between two vertices and
    curved for its parallels.  Vertices without an explicit condition get
    Kirchhoff.  With neither ``total_nodes`` nor ``nodes_per_edge`` every edge
    receives 100 interior nodes.
    """
    raw = [_as_edge(s) for s in edges]
    if not raw:
        raise GraphError("graph has no edges")
    if closure_order not in (2, 3):
        raise GraphError(f"closure order must be 2 or 3, got {closure_order}")
    next_id: dict[tuple[str, str], int] = {}
    pair_count: dict[frozenset, int] = {}
    used = set()
    built = []
    for e in raw:
        if e.source == e.target:
            raise GraphError(f"self-loop at {e.source!r}: split the loop with an auxiliary vertex")
        try:
            length = float(e.length)
        except (TypeError, ValueError):
            raise GraphError(f"edge {e.source}->{e.target} has non-numeric length {e.length!r}") from None
        if not (length > 0 and math.isfinite(length)):
            raise GraphError(f"edge {e.source}->{e.target} needs a positive finite length, got {e.length!r}")
        pair = (e.source, e.target)
        if e.id is None:
            k = next_id.get(pair, 0)
            while (pair + (str(k),)) in used:
                k += 1
            eid = str(k)
        else:
            eid = str(e.id)
        key = pair + (eid,)
        if key in used:
            raise GraphError(f"duplicate edge {key}")
        used.add(key)
        if eid.isdigit():
            next_id[pair] = max(next_id.get(pair, 0), int(eid) + 1)
        upair = frozenset(pair)
        n_par = pair_count.get(upair, 0)
        pair_count[upair] = n_par + 1
        kind = e.line_kind or ("S" if n_par == 0 else "C")
        if kind not in ("S", "C"):
            raise GraphError(f"line kind must be 'S' or 'C', got {kind!r}")
        built.append(Edge(e.source, e.target, length, eid, kind))

    vertices = {v for e in built for v in (e.source, e.target)}
    conds: dict[str, VertexCondition] = {}
    for v, c in (conditions or {}).items():
        if v not in vertices:
            raise GraphError(f"condition given for unknown vertex {v!r}")
        if not isinstance(c, VertexCondition):
            raise GraphError(f"condition for {v!r} is not a VertexCondition")
        conds[v] = c
    for v in vertices:
        conds.setdefault(v, Kirchhoff())

    lengths = [e.length for e in built]
    if nodes_per_edge is not None:
        counts = [int(c) for c in nodes_per_edge]
        if len(counts) != len(built):
            raise GraphError("nodes_per_edge must have one entry per edge")
    elif total_nodes is not None:
        if total_nodes < MIN_NODES_PER_EDGE * len(built):
            raise GraphError(f"total_nodes={total_nodes} is below {MIN_NODES_PER_EDGE} per edge")
        counts = allocate_nodes(lengths, int(total_nodes))
    else:
        counts = [DEFAULT_NODES_PER_EDGE] * len(built)
    if closure_order == 3 and min(counts) < 4:
        raise GraphError("third-order closure needs at least 4 interior nodes per edge")
    mesh = Mesh(lengths, counts)

    g = MetricGraph(built, conds, mesh, closure_order=closure_order)
    if positions:
        set_positions(g, positions)
    for v in g.vertices:
        if conds[v].kind == "custom":
            condition_matrices(conds[v], g.degree(v))  # dimension check
    return g


def set_positions(g: MetricGraph, positions: Mapping[str, tuple[float, float]]) -> MetricGraph:
    """Attach plotting coordinates to vertices; no numerical effect."""
    for v, p in positions.items():
        if v not in g.vertices:
            raise GraphError(f"position given for unknown vertex {v!r}")
        x, y = (float(c) for c in p)
        g.positions[v] = (x, y)
    return g
