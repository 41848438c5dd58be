"""Static SVG drawings of graphs and of ``|u|`` on a graph.

Straight edges are segments; curved edges (parallel edges drawn with line
kind ``"C"``) are half-ellipses over the segment between their end points.
``|u|`` is drawn as a curve offset along the edge normal, scaled so that its
maximum reaches a fixed fraction of the drawing size.  Output depends only on
the input: coordinates are printed with fixed precision and elements appear
in edge order.
"""
from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .graph import GraphError, MetricGraph
from .wavefunction import GraphMismatchError, WaveFunction

CURVE_SAMPLES = 64
PLOT_FRACTION = 0.15


def _positions(g: MetricGraph) -> dict:
    missing = [v for v in g.vertices if v not in g.positions]
    if missing:
        raise GraphError(f"vertices without positions: {', '.join(missing)}")
    return {v: np.asarray(g.positions[v], dtype=float) for v in g.vertices}


def _curve_index(g: MetricGraph) -> list[int]:
    """For each edge, its rank among the curved edges joining the same pair."""
    count: dict = {}
    out = []
    for e in g.edges:
        if e.line_kind == "C":
            pair = frozenset((e.source, e.target))
            out.append(count.get(pair, 0))
            count[pair] = out[-1] + 1
        else:
            out.append(-1)
    return out


def _curve_side(e) -> float:
    # bulge side is fixed relative to the sorted vertex pair, so that the two
    # halves of a loop stay on opposite sides whatever their directions
    return 1.0 if e.source <= e.target else -1.0


def edge_path(p: np.ndarray, q: np.ndarray, t: np.ndarray, curved_rank: int = -1, flip: float = 1.0):
    """Points and unit normals at parameters ``t in [0, 1]`` along one edge."""
    d = q - p
    L = float(np.hypot(*d))
    if L == 0:
        raise GraphError("two vertices of an edge share a position")
    tang = d / L
    nrm = np.array([-tang[1], tang[0]])
    if curved_rank < 0:
        pts = p[None, :] + t[:, None] * d[None, :]
        return pts, np.repeat(nrm[None, :], t.size, axis=0)
    side = flip * (1.0 if curved_rank % 2 == 0 else -1.0)
    a = L / 2
    b = side * a * 0.5 * (1 + curved_rank // 2)
    phi = math.pi * (1.0 - t)
    centre = (p + q) / 2
    pts = centre[None, :] + (a * np.cos(phi))[:, None] * tang[None, :] + (b * np.sin(phi))[:, None] * nrm[None, :]
    # normal of the ellipse, pointing away from its centre
    n = (np.cos(phi) / a)[:, None] * tang[None, :] + (np.sin(phi) / b)[:, None] * nrm[None, :]
    n /= np.linalg.norm(n, axis=1)[:, None]
    return pts, n


def render_svg(g: MetricGraph, u: WaveFunction | None = None, path=None, width: int = 800,
               height: int = 600, labels: bool = True) -> str:
    """Return the SVG document and write it to ``path`` when given."""
    if u is not None and u.graph is not g:
        raise GraphMismatchError("function lives on a different graph")
    pos = _positions(g)
    ranks = _curve_index(g)
    t_ends = np.linspace(0.0, 1.0, CURVE_SAMPLES + 1)
    edges_pts = []
    for e, r in zip(g.edges, ranks):
        pts, _ = edge_path(pos[e.source], pos[e.target], t_ends, r, _curve_side(e))
        edges_pts.append(pts)
    allpts = np.vstack(edges_pts + [np.array(list(pos.values()))])
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-12))

    curves = []
    if u is not None:
        amp = np.abs(u.values)
        ends = np.abs(g.operator.trace_matrix @ u.values).reshape(-1, 2)
        top = max(float(amp.max(initial=0.0)), float(ends.max(initial=0.0)))
        scale = PLOT_FRACTION * span / top if top > 0 else 0.0
        for i, (e, r) in enumerate(zip(g.edges, ranks)):
            s = g.mesh.edge_slice(i)
            t = np.concatenate([[0.0], g.edge_x(i) / e.length, [1.0]])
            a = np.concatenate([[ends[i, 0]], amp[s], [ends[i, 1]]])
            pts, nrm = edge_path(pos[e.source], pos[e.target], t, r, _curve_side(e))
            curves.append(pts + (scale * a)[:, None] * nrm)
        extra = np.vstack(curves)
        lo, hi = np.minimum(lo, extra.min(axis=0)), np.maximum(hi, extra.max(axis=0))
        span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-12))

    margin = 40.0
    k = min((width - 2 * margin) / max(hi[0] - lo[0], 1e-12 * span), (height - 2 * margin) / max(hi[1] - lo[1], 1e-12 * span))

    def tx(pts):
        x = margin + (pts[:, 0] - lo[0]) * k
        y = height - margin - (pts[:, 1] - lo[1]) * k
        return " ".join(f"{a:.3f},{b:.3f}" for a, b in zip(x, y))

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        '<g id="edges" fill="none" stroke="#444" stroke-width="1.5">',
    ]
    for e, pts in zip(g.edges, edges_pts):
        out.append(f'<polyline data-edge="{escape("/".join(e.key))}" points="{tx(pts)}"/>')
    out.append("</g>")
    if curves:
        out.append('<g id="modulus" fill="none" stroke="#c0392b" stroke-width="1.5">')
        for e, pts in zip(g.edges, curves):
            out.append(f'<polyline data-edge="{escape("/".join(e.key))}" points="{tx(pts)}"/>')
        out.append("</g>")
    out.append('<g id="vertices" font-family="sans-serif" font-size="12">')
    for v in g.vertices:
        x, y = tx(pos[v][None, :]).split(",")
        out.append(f'<circle cx="{x}" cy="{y}" r="3" fill="black"/>')
        if labels:
            out.append(f'<text x="{float(x) + 5:.3f}" y="{float(y) - 5:.3f}">{escape(v)}</text>')
    out.append("</g>")
    out.append("</svg>")
    doc = "\n".join(out) + "\n"
    if path is not None:
        try:
            Path(path).write_text(doc)
        except OSError as exc:
            raise OSError(f"cannot write SVG to {path}: {exc}") from None
    return doc
