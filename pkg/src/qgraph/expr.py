"""Small arithmetic expression language for edge functions in config files.

Supported: numbers, the variable ``x``, the constants ``pi`` and ``i``
(imaginary unit), ``+ - * / ^`` (``^`` and ``**`` are both powers), and the
functions ``exp cos sin cosh sinh tanh sqrt abs sech gaussian(x, c, w)``
and ``cis(t) = exp(i t)``.  Anything else is rejected before evaluation.

>>> f = compile_expr("2*x^2 + 1")
>>> float(f(3.0))
19.0
"""
from __future__ import annotations

import ast
import math
import operator

import numpy as np


class ExprError(ValueError):
    """Invalid expression; ``col`` is the 1-based column of the problem."""

    def __init__(self, msg: str, col: int | None = None):
        super().__init__(msg if col is None else f"{msg} (column {col})")
        self.col = col


def gaussian(x, c, w):
    return np.exp(-(((x - c) / w) ** 2))


FUNCTIONS = {
    "exp": np.exp,
    "cos": np.cos,
    "sin": np.sin,
    "cosh": np.cosh,
    "sinh": np.sinh,
    "tanh": np.tanh,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "sech": lambda t: 1.0 / np.cosh(t),
    "cis": lambda t: np.exp(1j * t),
    "gaussian": gaussian,
}
CONSTANTS = {"pi": math.pi, "i": 1j}
BINARY = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def _check(node):
    col = getattr(node, "col_offset", None)
    col = None if col is None else col + 1
    if isinstance(node, ast.Expression):
        return _check(node.body)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExprError(f"unsupported literal {node.value!r}", col)
        return
    if isinstance(node, ast.Name):
        if node.id != "x" and node.id not in CONSTANTS:
            raise ExprError(f"unknown name {node.id!r}", col)
        return
    if isinstance(node, ast.BinOp):
        if type(node.op) not in BINARY:
            raise ExprError(f"unsupported operator {type(node.op).__name__}", col)
        _check(node.left)
        _check(node.right)
        return
    if isinstance(node, ast.UnaryOp):
        if type(node.op) not in UNARY:
            raise ExprError(f"unsupported operator {type(node.op).__name__}", col)
        _check(node.operand)
        return
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
            raise ExprError("unknown function", col)
        if node.keywords:
            raise ExprError("keyword arguments are not allowed", col)
        want = 3 if node.func.id == "gaussian" else 1
        if len(node.args) != want:
            raise ExprError(f"{node.func.id} takes {want} argument(s), got {len(node.args)}", col)
        for a in node.args:
            _check(a)
        return
    raise ExprError(f"unsupported syntax {type(node).__name__}", col)


def _eval(node, x):
    if isinstance(node, ast.Expression):
        return _eval(node.body, x)
    if isinstance(node, ast.Constant):
        return node.value
    if isinstance(node, ast.Name):
        return x if node.id == "x" else CONSTANTS[node.id]
    if isinstance(node, ast.BinOp):
        return BINARY[type(node.op)](_eval(node.left, x), _eval(node.right, x))
    if isinstance(node, ast.UnaryOp):
        return UNARY[type(node.op)](_eval(node.operand, x))
    return FUNCTIONS[node.func.id](*(_eval(a, x) for a in node.args))


def compile_expr(text: str, allow_x: bool = True):
    """Parse ``text`` and return a vectorised function of ``x``."""
    if not isinstance(text, str):
        raise ExprError(f"expression must be a string, got {type(text).__name__}")
    src = text.replace("^", "**")
    try:
        tree = ast.parse(src.strip(), mode="eval")
    except SyntaxError as exc:
        raise ExprError(f"cannot parse {text!r}: {exc.msg}", exc.offset) from None
    _check(tree)
    if not allow_x:
        for n in ast.walk(tree):
            if isinstance(n, ast.Name) and n.id == "x":
                raise ExprError(f"{text!r} must not depend on x", n.col_offset + 1)

    def f(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            out = _eval(tree, x)
        return np.broadcast_to(out, x.shape) + np.zeros(x.shape)

    f.source = text
    return f


def parse_number(value) -> float:
    """Length-like config value: a number or an expression without ``x`` such as ``"pi/2"``."""
    if isinstance(value, bool):
        raise ExprError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    f = compile_expr(value, allow_x=False)
    out = complex(f(np.zeros(())))
    if out.imag != 0:
        raise ExprError(f"{value!r} is not real")
    return out.real
