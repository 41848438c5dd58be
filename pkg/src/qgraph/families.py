"""Builders for the graph families used in the experiments.

Every builder returns a :class:`~qgraph.graph.MetricGraph` with plotting
positions.  Loops are made of two half-loop edges between two vertices.
Interior vertices get Kirchhoff conditions and free ends get Dirichlet, unless
``conditions`` overrides them.  The resolution is set by exactly one of
``total_nodes`` (distributed proportionally to length), ``dx`` (target mesh
spacing) or ``nodes_per_edge``; the default is 100 nodes per edge.

Vertex labels
-------------
segment      ``A`` -> ``B``
star         centre ``O``, tips ``V1..VN``, edges ``O -> Vi``
ring         ``A -> B`` and ``B -> A``
tadpole      junction ``J``, antipode ``P``, tail end ``E``; edges ``J -> P``, ``P -> J``, ``J -> E``
dumbbell     left loop ``C <-> A``, segment ``A -> B``, right loop ``B <-> D``
necklace     cell ``i`` is the loop ``Vi_a <-> Vi_b`` and the link ``Vi_b -> V(i+1)_a``;
             the last link ends at ``End``; ``V1_a`` and ``End`` are the Dirichlet end points
honeycomb    hexagon corners ``H0, H1, ...`` (sorted by position), boundary stubs end at ``S0, S1, ...``
binary_tree  root ``R``, children ``R0, R1``, grandchildren ``R00, ...``; with ``rooted=True``
             an extra edge ``A -> R`` leads into the root
"""
from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from .graph import Dirichlet, GraphError, MetricGraph, VertexCondition, build_graph

FAMILIES = ("segment", "star", "ring", "tadpole", "dumbbell", "necklace", "honeycomb", "binary_tree")


def _positive(**kw):
    for name, val in kw.items():
        if not (isinstance(val, (int, float)) and val > 0 and math.isfinite(val)):
            raise GraphError(f"{name} must be positive and finite, got {val!r}")


def _counts(edges, dx):
    return [max(3, int(round(e[2] / dx)) - 1) for e in edges]


def _finish(edges, defaults, positions, conditions, total_nodes, dx, nodes_per_edge, closure_order) -> MetricGraph:
    given = sum(x is not None for x in (total_nodes, dx, nodes_per_edge))
    if given > 1:
        raise GraphError("give at most one of total_nodes, dx, nodes_per_edge")
    if dx is not None:
        _positive(dx=dx)
        nodes_per_edge = _counts(edges, dx)
    conds = dict(defaults)
    conds.update(conditions or {})
    return build_graph(
        edges,
        conds,
        total_nodes=total_nodes,
        positions=positions,
        nodes_per_edge=nodes_per_edge,
        closure_order=closure_order,
    )


def segment(length: float = math.pi, left: VertexCondition | None = None, right: VertexCondition | None = None,
            *, total_nodes=None, dx=None, nodes_per_edge=None, closure_order=2) -> MetricGraph:
    """Single edge ``A -> B``; both ends Dirichlet by default."""
    _positive(length=length)
    conds = {"A": left or Dirichlet(), "B": right or Dirichlet()}
    return _finish([("A", "B", length)], conds, {"A": (0.0, 0.0), "B": (length, 0.0)}, None,
                   total_nodes, dx, nodes_per_edge, closure_order)


def star(N: int = 3, edge_len: float = 10.0, conditions: Mapping[str, VertexCondition] | None = None,
         *, total_nodes=None, dx=None, nodes_per_edge=None, closure_order=2) -> MetricGraph:
    if not (isinstance(N, int) and N >= 1):
        raise GraphError(f"star needs at least one edge, got N={N!r}")
    _positive(edge_len=edge_len)
    tips = [f"V{i + 1}" for i in range(N)]
    edges = [("O", t, edge_len) for t in tips]
    pos = {"O": (0.0, 0.0)}
    for i, t in enumerate(tips):
        a = math.pi / 2 + 2 * math.pi * i / N
        pos[t] = (edge_len * math.cos(a), edge_len * math.sin(a))
    return _finish(edges, {t: Dirichlet() for t in tips}, pos, conditions, total_nodes, dx, nodes_per_edge, closure_order)


def ring(perimeter: float = 2 * math.pi, conditions=None, *, total_nodes=None, dx=None, nodes_per_edge=None,
         closure_order=2) -> MetricGraph:
    _positive(perimeter=perimeter)
    h = perimeter / 2
    r = perimeter / (2 * math.pi)
    edges = [("A", "B", h, None, "C"), ("B", "A", h, None, "C")]
    return _finish(edges, {}, {"A": (-r, 0.0), "B": (r, 0.0)}, conditions, total_nodes, dx, nodes_per_edge,
                   closure_order)


def tadpole(L: float = 1.0, tail_len: float = 30.0, conditions=None, *, total_nodes=None, dx=None,
            nodes_per_edge=None, closure_order=2) -> MetricGraph:
    """Loop of perimeter ``2 L`` through ``J`` and ``P`` with a tail ``J -> E`` of length ``tail_len``."""
    _positive(L=L, tail_len=tail_len)
    r = L / math.pi
    edges = [("J", "P", L, None, "C"), ("P", "J", L, None, "C"), ("J", "E", tail_len)]
    pos = {"P": (-2 * r, 0.0), "J": (0.0, 0.0), "E": (tail_len, 0.0)}
    return _finish(edges, {"E": Dirichlet()}, pos, conditions, total_nodes, dx, nodes_per_edge, closure_order)


def dumbbell(L: float = 3.0, loop_perimeter: float = 2 * math.pi, conditions=None, *, total_nodes=None, dx=None,
             nodes_per_edge=None, closure_order=2) -> MetricGraph:
    """Segment ``A -> B`` of length ``2 L`` with a loop at each end; all vertices Kirchhoff."""
    _positive(L=L, loop_perimeter=loop_perimeter)
    h = loop_perimeter / 2
    d = loop_perimeter / math.pi
    edges = [("C", "A", h, None, "C"), ("A", "C", h, None, "C"), ("A", "B", 2 * L), ("B", "D", h, None, "C"),
             ("D", "B", h, None, "C")]
    pos = {"C": (-L - d, 0.0), "A": (-L, 0.0), "B": (L, 0.0), "D": (L + d, 0.0)}
    return _finish(edges, {}, pos, conditions, total_nodes, dx, nodes_per_edge, closure_order)


def necklace(cells: int = 9, loop_perimeter: float = math.pi, link_len: float = 1.0, conditions=None, *,
             total_nodes=None, dx=None, nodes_per_edge=None, closure_order=2) -> MetricGraph:
    if not (isinstance(cells, int) and cells >= 1):
        raise GraphError(f"necklace needs at least one cell, got {cells!r}")
    _positive(loop_perimeter=loop_perimeter, link_len=link_len)
    h = loop_perimeter / 2
    d = loop_perimeter / math.pi
    edges, pos = [], {}
    x = 0.0
    for i in range(1, cells + 1):
        a, b = f"V{i}_a", f"V{i}_b"
        nxt = f"V{i + 1}_a" if i < cells else "End"
        edges += [(a, b, h, None, "C"), (b, a, h, None, "C"), (b, nxt, link_len)]
        pos[a], pos[b] = (x, 0.0), (x + d, 0.0)
        x += d + link_len
    pos["End"] = (x, 0.0)
    defaults = {"V1_a": Dirichlet(), "End": Dirichlet()}
    return _finish(edges, defaults, pos, conditions, total_nodes, dx, nodes_per_edge, closure_order)


def necklace_cell(g: MetricGraph, i: int) -> list:
    """Edge keys of cell ``i``: its loop and the links on either side."""
    a, b = f"V{i}_a", f"V{i}_b"
    return [e.key for e in g.edges if a in (e.source, e.target) or b in (e.source, e.target)]


def _hex_corners(rings: int, edge_len: float):
    centres = []
    R = rings - 1
    for q in range(-R, R + 1):
        for r in range(max(-R, -q - R), min(R, -q + R) + 1):
            # pointy-side axial layout, corners at angles 0, 60, ...
            centres.append((1.5 * edge_len * q, math.sqrt(3) * edge_len * (r + q / 2)))
    corners = {}
    edges = set()
    for cx, cy in centres:
        pts = []
        for k in range(6):
            a = math.pi / 3 * k
            p = (round(cx + edge_len * math.cos(a), 9), round(cy + edge_len * math.sin(a), 9))
            corners.setdefault(p, None)
            pts.append(p)
        for k in range(6):
            edges.add(tuple(sorted((pts[k], pts[(k + 1) % 6]))))
    return sorted(corners, key=lambda p: (p[1], p[0])), sorted(edges)


def honeycomb(rings: int = 3, edge_len: float = 1.0, conditions=None, *, total_nodes=None, dx=None,
              nodes_per_edge=None, closure_order=2) -> MetricGraph:
    """Hexagonal patch of ``1 + 3 rings (rings - 1)`` hexagons.

    Boundary corners (degree 2 in the patch) get a stub edge of length
    ``edge_len`` ending at a Dirichlet vertex, so that every corner has
    degree 3 as in the infinite lattice.
    """
    if not (isinstance(rings, int) and rings >= 1):
        raise GraphError(f"honeycomb needs at least one ring, got {rings!r}")
    _positive(edge_len=edge_len)
    corners, hex_edges = _hex_corners(rings, edge_len)
    name = {p: f"H{i}" for i, p in enumerate(corners)}
    pos = {name[p]: p for p in corners}
    edges = [(name[p], name[q], edge_len) for p, q in hex_edges]
    deg = {v: 0 for v in pos}
    for s, t, _ in edges:
        deg[s] += 1
        deg[t] += 1
    defaults = {}
    k = 0
    for p in corners:
        v = name[p]
        if deg[v] == 2:
            n = math.hypot(*p) or 1.0
            stub = f"S{k}"
            k += 1
            pos[stub] = (p[0] + edge_len * p[0] / n, p[1] + edge_len * p[1] / n)
            edges.append((v, stub, edge_len))
            defaults[stub] = Dirichlet()
    return _finish(edges, defaults, pos, conditions, total_nodes, dx, nodes_per_edge, closure_order)


def binary_tree(depth: int = 2, edge_len: float | Sequence[float] = 10.0, rooted: bool = False,
                root_len: float | None = None, conditions=None, *, total_nodes=None, dx=None, nodes_per_edge=None,
                closure_order=2) -> MetricGraph:
    """Binary tree with ``depth`` levels of branching below the root ``R``.

    ``edge_len`` is one length for all levels or one length per level.  The
    unrooted tree has ``2 + 4 + ... + 2**depth`` edges; ``rooted=True`` adds
    the edge ``A -> R`` (length ``root_len``, default the first level length)
    with a Dirichlet condition at ``A``.  Leaves are Dirichlet.
    """
    if not (isinstance(depth, int) and depth >= 1):
        raise GraphError(f"tree depth must be at least 1, got {depth!r}")
    lens = [float(edge_len)] * depth if np.isscalar(edge_len) else [float(x) for x in edge_len]
    if len(lens) != depth:
        raise GraphError(f"need {depth} level lengths, got {len(lens)}")
    _positive(**{f"level_{i}": x for i, x in enumerate(lens)})
    edges, pos = [], {"R": (0.0, 0.0)}
    defaults = {}
    if rooted:
        rl = lens[0] if root_len is None else root_len
        _positive(root_len=rl)
        edges.append(("A", "R", rl))
        pos["A"] = (0.0, rl)
        defaults["A"] = Dirichlet()
    level = ["R"]
    radius = 0.0
    # children of the root spread over the lower half plane when rooted
    span = (math.pi, 2 * math.pi) if rooted else (0.0, 2 * math.pi)
    for d in range(depth):
        radius += lens[d]
        nxt = []
        n = 2 ** (d + 1)
        for j, v in enumerate(level):
            for c in "01":
                w = v + c
                nxt.append(w)
                edges.append((v, w, lens[d]))
        for j, w in enumerate(nxt):
            if rooted:
                a = span[0] + (span[1] - span[0]) * (j + 0.5) / n
            else:
                a = span[0] + (span[1] - span[0]) * j / n + math.pi / 2
            pos[w] = (radius * math.cos(a), radius * math.sin(a))
        level = nxt
    defaults.update({v: Dirichlet() for v in level})
    return _finish(edges, defaults, pos, conditions, total_nodes, dx, nodes_per_edge, closure_order)


def build_family(name: str, params: Mapping | None = None, **mesh) -> MetricGraph:
    """Dispatch by family name; ``params`` are the builder's keyword arguments."""
    builders = {
        "segment": segment,
        "star": star,
        "ring": ring,
        "tadpole": tadpole,
        "dumbbell": dumbbell,
        "necklace": necklace,
        "honeycomb": honeycomb,
        "binary_tree": binary_tree,
    }
    if name not in builders:
        raise GraphError(f"unknown family {name!r}; choose from {', '.join(FAMILIES)}")
    try:
        return builders[name](**dict(params or {}), **mesh)
    except TypeError as exc:
        raise GraphError(f"bad parameters for {name}: {exc}") from None
