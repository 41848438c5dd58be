"""Finite-difference discretisation of -d^2/dx^2 on a metric graph.

Vertex values are eliminated: at each vertex the condition ``A u + B u' = 0``
is combined with a one-sided difference for the outgoing derivative, which
expresses the traces of all incident edges as a linear combination of the
first interior nodes.  The rows next to a vertex then use the reconstructed
trace in the usual three-point stencil.  The resulting matrix is generally not
symmetric.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import GraphError, MetricGraph, condition_matrices

# one-sided outgoing derivative (c0 u0 + c1 u1 + ...)/dx, u_k k nodes inside the edge
ONE_SIDED = {
    2: (1.5, -2.0, 0.5),
    3: (11.0 / 6.0, -3.0, 1.5, -1.0 / 3.0),
}


@dataclass(frozen=True)
class VertexTrace:
    """Trace map at one vertex: ``u(v) = coeffs @ u[nodes.T.ravel()]``.

    ``nodes[j, k]`` is the global index of the ``k+1``-th interior node of
    incident end ``j`` counted from the vertex; ``coeffs`` has shape
    ``(d, order * d)`` with column blocks matching ``nodes[:, k]``.
    """

    vertex: str
    ends: tuple
    nodes: np.ndarray
    coeffs: np.ndarray


class GraphOperator:
    """Assembled operator and the trace/quadrature data derived from it.

    Attributes
    ----------
    H : scipy.sparse.csc_matrix
        Approximation of ``-u''`` acting on interior nodes.
    identity : scipy.sparse.csc_matrix
    traces : dict[str, VertexTrace]
    trace_matrix : scipy.sparse.csr_matrix
        Maps interior values to edge-end values, row ``2*e + side``.
    weights : numpy.ndarray
        Trapezoid weights including the reconstructed end values, so that
        ``integral(f) = weights @ f``.
    dirichlet_form : scipy.sparse.csr_matrix
        Symmetric kinetic-energy matrix, see :func:`dirichlet_form`.
    """

    def __init__(self, graph, H, traces, trace_matrix, weights):
        self.graph = graph
        self.H = H
        self.identity = sp.identity(graph.size, format="csc")
        self.traces = traces
        self.trace_matrix = trace_matrix
        self.weights = weights
        self.dirichlet_form = None

    @property
    def lap(self):
        """The second-derivative operator, ``-H``."""
        return -self.H

    def ends(self, u: np.ndarray) -> np.ndarray:
        """End values, shape ``(n_edges, 2)``: columns are x=0 and x=length."""
        return (self.trace_matrix @ u).reshape(-1, 2)


def _end_nodes(mesh, e: int, side: int, order: int) -> np.ndarray:
    if side == 0:
        return mesh.offsets[e] + np.arange(order)
    return mesh.offsets[e + 1] - 1 - np.arange(order)


def vertex_trace(g: MetricGraph, v: str) -> VertexTrace:
    order = g.closure_order
    coef = ONE_SIDED[order]
    ends = tuple(g.incident(v))
    d = len(ends)
    A, B = condition_matrices(g.condition(v), d)
    if np.linalg.matrix_rank(np.hstack([A, B])) < d:
        raise GraphError(f"vertex {v!r}: condition matrix (A|B) is rank deficient")
    inv_dx = np.array([1.0 / g.mesh.dx[e] for e, _ in ends])
    BL = B * inv_dx[None, :]
    M = A + coef[0] * BL
    if np.linalg.cond(M) > 1e13:
        raise GraphError(f"vertex {v!r}: closure matrix is singular for this mesh")
    Minv_BL = np.linalg.solve(M, BL)
    coeffs = np.hstack([-c * Minv_BL for c in coef[1:]])
    nodes = np.array([_end_nodes(g.mesh, e, s, order) for e, s in ends])
    return VertexTrace(v, ends, nodes, coeffs)


def assemble(g: MetricGraph) -> GraphOperator:
    """Assemble ``H``, the vertex traces and the quadrature weights of ``g``."""
    mesh = g.mesh
    n = mesh.size
    n_ends = 2 * len(g.edges)

    rows, cols, vals = [], [], []
    for e in range(len(g.edges)):
        s = mesh.edge_slice(e)
        idx = np.arange(s.start, s.stop)
        h2 = 1.0 / mesh.dx[e] ** 2
        rows += [idx, idx[1:], idx[:-1]]
        cols += [idx, idx[:-1], idx[1:]]
        vals += [np.full(idx.size, 2 * h2), np.full(idx.size - 1, -h2), np.full(idx.size - 1, -h2)]
    interior = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))

    traces = {}
    t_rows, t_cols, t_vals = [], [], []
    for v in g.vertices:
        tr = vertex_trace(g, v)
        traces[v] = tr
        d = len(tr.ends)
        flat_nodes = tr.nodes.T.ravel()  # block k holds the k-th node of every end
        for j, (e, side) in enumerate(tr.ends):
            t_rows.append(np.full(flat_nodes.size, 2 * e + side))
            t_cols.append(flat_nodes)
            t_vals.append(tr.coeffs[j])
        assert tr.coeffs.shape == (d, flat_nodes.size)
    T = sp.csr_matrix((np.concatenate(t_vals), (np.concatenate(t_rows), np.concatenate(t_cols))), shape=(n_ends, n))

    # row of the first interior node at each end picks up -trace/dx^2
    sel_rows = np.empty(n_ends, dtype=int)
    sel_vals = np.empty(n_ends)
    for e in range(len(g.edges)):
        for side in (0, 1):
            sel_rows[2 * e + side] = _end_nodes(mesh, e, side, 1)[0]
            sel_vals[2 * e + side] = -1.0 / mesh.dx[e] ** 2
    S = sp.csr_matrix((sel_vals, (sel_rows, np.arange(n_ends))), shape=(n, n_ends))
    H = (interior + S @ T).tocsc()
    H.sum_duplicates()
    H.eliminate_zeros()

    w = np.repeat(mesh.dx, mesh.counts)
    half = np.repeat(mesh.dx / 2.0, 2)
    weights = w + T.T @ half
    weights.flags.writeable = False
    op = GraphOperator(g, H, traces, T, weights)
    op.dirichlet_form = dirichlet_form(g, T, traces)
    return op


def dirichlet_form(g: MetricGraph, T, traces) -> sp.csr_matrix:
    """Symmetric matrix ``K`` with ``u^* K u`` approximating ``<Hu, u>``.

    Squared difference quotients over every mesh interval, end values included,
    plus the vertex contribution ``-sum_v <u'(v), u(v)>`` written through the
    traces where the condition allows it.  Unlike ``W H`` for any diagonal
    weight ``W``, this form has no spurious negative directions near vertices.
    """
    mesh = g.mesh
    n = mesh.size
    T = T.tocsr()
    blocks = []
    for e in range(len(g.edges)):
        s = mesh.edge_slice(e)
        full = sp.vstack([T[2 * e], sp.eye(mesh.counts[e], n, k=s.start, format="csr"), T[2 * e + 1]]).tocsr()
        blocks.append((full[1:] - full[:-1]) / np.sqrt(mesh.dx[e]))
    D = sp.vstack(blocks).tocsr()
    K = D.T @ D
    coef = ONE_SIDED[g.closure_order]
    for v, tr in traces.items():
        cond = g.condition(v)
        rows = sp.vstack([T[2 * e + side] for e, side in tr.ends]).tocsr()
        if cond.kind == "delta" and cond.strength != 0:
            t = sp.csr_matrix(rows.mean(axis=0))
            K = K - cond.strength * (t.T @ t)
        elif cond.kind == "delta_prime" and cond.strength != 0:
            t = sp.csr_matrix(rows.sum(axis=0))
            K = K - (t.T @ t) / cond.strength
        elif cond.kind == "custom":
            for j, (e, side) in enumerate(tr.ends):
                d = coef[0] * rows[j]
                for k, c in enumerate(coef[1:]):
                    d = d + c * sp.csr_matrix(([1.0], ([0], [tr.nodes[j, k]])), shape=(1, n))
                d = d / mesh.dx[e]
                K = K - 0.5 * (rows[j].T @ d + d.T @ rows[j])
    return K.tocsr()


def diag_operator(g: MetricGraph, d: np.ndarray):
    """Sparse diagonal matrix with ``d`` on its diagonal."""
    d = np.asarray(getattr(d, "values", d))
    if d.shape != (g.size,):
        raise ValueError(f"diagonal has length {d.shape}, graph has {g.size} nodes")
    return sp.diags(d, 0, format="csc")


def vertex_values(g: MetricGraph, u) -> dict[str, np.ndarray]:
    """Reconstructed trace of ``u`` at every vertex, one entry per incident end."""
    vals = g.operator.trace_matrix @ np.asarray(getattr(u, "values", u))
    return {v: np.array([vals[2 * e + s] for e, s in tr.ends]) for v, tr in g.operator.traces.items()}
