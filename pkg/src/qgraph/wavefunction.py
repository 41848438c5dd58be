"""Functions sampled on the interior nodes of a metric graph."""
from __future__ import annotations

import numbers
from typing import Callable, Mapping

import numpy as np

from .graph import MetricGraph


class GraphMismatchError(ValueError):
    pass


class WaveFunction:
    """Nodal values of a (possibly complex) function on the edges of a graph.

    Arithmetic is elementwise.  Both operands of a binary operation must live
    on the same graph object.
    """

    __array_priority__ = 100  # make numpy scalars defer to our operators

    def __init__(self, graph: MetricGraph, values):
        vals = np.asarray(values)
        if not np.iscomplexobj(vals):
            vals = vals.astype(float, copy=False)
        if vals.shape != (graph.size,):
            raise ValueError(f"expected {graph.size} values, got shape {vals.shape}")
        self.graph = graph
        self.values = vals

    def __repr__(self):
        return f"WaveFunction(n={self.values.size}, dtype={self.values.dtype})"

    def __len__(self):
        return self.values.size

    def copy(self) -> "WaveFunction":
        return WaveFunction(self.graph, self.values.copy())

    def edge_values(self, key) -> np.ndarray:
        r = self.graph.node_range(key)
        return self.values[r.start:r.stop]

    # arithmetic -------------------------------------------------------------
    def _other(self, other):
        if isinstance(other, WaveFunction):
            if other.graph is not self.graph:
                raise GraphMismatchError("operands live on different graphs")
            return other.values
        if isinstance(other, numbers.Number) or (isinstance(other, np.ndarray) and other.ndim == 0):
            return other
        return NotImplemented

    def _binary(self, other, op):
        o = self._other(other)
        if o is NotImplemented:
            return NotImplemented
        return WaveFunction(self.graph, op(self.values, o))

    def __add__(self, other):
        return self._binary(other, np.add)

    def __radd__(self, other):
        return self._binary(other, lambda a, b: b + a)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    def __rmul__(self, other):
        return self._binary(other, lambda a, b: b * a)

    def __truediv__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return NotImplemented
        if np.any(np.asarray(o) == 0):
            raise ZeroDivisionError("division by a function or scalar with zeros")
        return WaveFunction(self.graph, self.values / o)

    def __rtruediv__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return NotImplemented
        if np.any(self.values == 0):
            raise ZeroDivisionError("division by a function with zeros")
        return WaveFunction(self.graph, o / self.values)

    def __pow__(self, p):
        return power(self, p)

    def __neg__(self):
        return WaveFunction(self.graph, -self.values)

    def __abs__(self):
        return WaveFunction(self.graph, np.abs(self.values))

    @property
    def real(self):
        return WaveFunction(self.graph, self.values.real.copy())

    @property
    def imag(self):
        return WaveFunction(self.graph, self.values.imag.copy())

    def conj(self):
        return WaveFunction(self.graph, np.conj(self.values))


def from_edge_functions(graph: MetricGraph, funcs: Mapping | Callable) -> WaveFunction:
    """Sample per-edge callables ``f(x)`` at the interior nodes of every edge.

    ``funcs`` maps edge keys to callables (missing edges are zero), or is a
    single callable ``f(edge, x)`` applied to every edge.
    """
    g = graph
    parts = []
    is_complex = False
    if callable(funcs) and not isinstance(funcs, Mapping):
        table = {e.key: (lambda x, _e=e: funcs(_e, x)) for e in g.edges}
    else:
        table = {}
        for k, f in funcs.items():
            key = tuple(str(c) for c in k)
            g.edge_index(key)  # raises on unknown edges
            table[key] = f
    for i, e in enumerate(g.edges):
        x = g.edge_x(i)
        f = table.get(e.key)
        if f is None:
            parts.append(np.zeros_like(x))
            continue
        vals = np.broadcast_to(np.asarray(f(x)), x.shape).copy()
        is_complex |= np.iscomplexobj(vals)
        parts.append(vals)
    vals = np.concatenate(parts)
    return WaveFunction(g, vals if is_complex else vals.astype(float))


def _vals(u):
    if not isinstance(u, WaveFunction):
        raise TypeError(f"expected a WaveFunction, got {type(u).__name__}")
    return u.values


def integral(u: WaveFunction) -> complex | float:
    """Trapezoid rule on every edge using reconstructed vertex values."""
    r = u.graph.operator.weights @ _vals(u)
    return complex(r) if np.iscomplexobj(r) else float(r)


def dot(u: WaveFunction, v: WaveFunction) -> complex | float:
    """``integral(conj(u) * v)``."""
    if u.graph is not v.graph:
        raise GraphMismatchError("operands live on different graphs")
    r = u.graph.operator.weights @ (np.conj(u.values) * v.values)
    return complex(r) if np.iscomplexobj(r) else float(r)


def norm_p(u: WaveFunction, p: float = 2) -> float:
    if p == np.inf:
        return float(np.max(np.abs(_vals(u))))
    return float(max(integral(abs(u) ** p), 0.0) ** (1.0 / p))


def norm(u: WaveFunction) -> float:
    return norm_p(u, 2)


def mass(u: WaveFunction) -> float:
    """Squared L2 norm."""
    return float(u.graph.operator.weights @ (np.abs(u.values) ** 2))


def _apply(fn):
    def wrapped(u: WaveFunction) -> WaveFunction:
        return WaveFunction(u.graph, fn(_vals(u)))

    wrapped.__name__ = fn.__name__
    return wrapped


exp = _apply(np.exp)
cos = _apply(np.cos)
sin = _apply(np.sin)
real = _apply(np.real)
imag = _apply(np.imag)
conj = _apply(np.conj)


def log(u: WaveFunction) -> WaveFunction:
    v = _vals(u)
    if not np.iscomplexobj(v) and np.any(v <= 0):
        raise ValueError("log of a real function with non-positive values")
    if np.iscomplexobj(v) and np.any(v == 0):
        raise ValueError("log of a function with zeros")
    return WaveFunction(u.graph, np.log(v))


def power(u: WaveFunction, p: float) -> WaveFunction:
    v = _vals(u)
    if np.iscomplexobj(v) or float(p).is_integer() or np.all(v >= 0):
        return WaveFunction(u.graph, v ** p)
    raise ValueError("non-integer power of a real function with negative values")


def scale(u: WaveFunction, c) -> WaveFunction:
    return u * c
