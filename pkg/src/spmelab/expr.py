"""Closed-form coefficient expressions.

Grammar (Python-like, ``^`` accepted as power)::

    expr   := number | x | y | pi | e
            | expr (+|-|*) expr | expr / number | expr ^ nonneg-integer
            | -expr | sin(expr) | cos(expr) | exp(expr)

Every expression in this grammar is C-infinity, so gradients and Laplacians
are obtained by symbolic differentiation and compiled to numpy functions.
"""
from __future__ import annotations

import ast
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import sympy

from .errors import ExpressionError, InvalidArgument

COORDS = ("x", "y")
_FUNCS = {"sin": sympy.sin, "cos": sympy.cos, "exp": sympy.exp}
_CONSTS = {"pi": sympy.pi, "e": sympy.E}


class _Builder:
    def __init__(self, source: str, d: int):
        self.source = source
        self.symbols = sympy.symbols(COORDS[:d], real=True)
        self.names = {n: s for n, s in zip(COORDS[:d], self.symbols)}

    def fail(self, msg: str, node: ast.AST | None) -> ExpressionError:
        pos = getattr(node, "col_offset", 0) if node is not None else 0
        return ExpressionError(msg, self.source, pos)

    def const_value(self, node: ast.AST) -> sympy.Expr | None:
        """Value of a numeric-constant subtree, or None when it depends on coordinates."""
        val = self.build(node)
        return val if not val.free_symbols else None

    def build(self, node: ast.AST) -> sympy.Expr:
        if isinstance(node, ast.Expression):
            return self.build(node.body)
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise self.fail(f"unsupported literal {node.value!r}", node)
            return sympy.nsimplify(node.value) if isinstance(node.value, int) else sympy.Float(node.value)
        if isinstance(node, ast.Name):
            if node.id in self.names:
                return self.names[node.id]
            if node.id in _CONSTS:
                return _CONSTS[node.id]
            raise self.fail(f"unknown name {node.id!r}", node)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            inner = self.build(node.operand)
            return -inner if isinstance(node.op, ast.USub) else inner
        if isinstance(node, ast.BinOp):
            left = self.build(node.left)
            if isinstance(node.op, ast.Add):
                return left + self.build(node.right)
            if isinstance(node.op, ast.Sub):
                return left - self.build(node.right)
            if isinstance(node.op, ast.Mult):
                return left * self.build(node.right)
            if isinstance(node.op, ast.Div):
                den = self.const_value(node.right)
                if den is None:
                    raise self.fail("division is only allowed by constants", node.right)
                if den == 0:
                    raise self.fail("division by zero", node.right)
                return left / den
            if isinstance(node.op, ast.Pow):
                ex = self.const_value(node.right)
                if ex is None or not ex.is_integer or ex < 0:
                    raise self.fail("exponent must be a non-negative integer constant", node.right)
                return left ** int(ex)
            raise self.fail(f"unsupported operator {type(node.op).__name__}", node)
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
                raise self.fail("only sin, cos and exp may be called", node)
            if len(node.args) != 1 or node.keywords:
                raise self.fail(f"{node.func.id} takes exactly one argument", node)
            return _FUNCS[node.func.id](self.build(node.args[0]))
        raise self.fail(f"unsupported syntax {type(node).__name__}", node)


def parse_expression(source: str, d: int) -> sympy.Expr:
    """Parse ``source`` into a sympy expression in the coordinates of R^d."""
    if d not in (1, 2):
        raise InvalidArgument("expressions are defined for d in {1, 2}")
    if not isinstance(source, str) or not source.strip():
        raise ExpressionError("empty expression", str(source), 0)
    text = source.replace("^", "**")
    # column in ``text`` -> column in ``source`` (each "^" became two characters)
    origin = [i for i, ch in enumerate(source) for _ in range(2 if ch == "^" else 1)] + [len(source)]
    lead = len(text) - len(text.lstrip())

    def column(offset: int) -> int:
        return origin[min(max(offset, 0) + lead, len(origin) - 1)]

    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"syntax error: {exc.msg}", source, column((exc.offset or 1) - 1)) from None
    builder = _Builder(source, d)
    try:
        return builder.build(tree)
    except ExpressionError as exc:
        raise ExpressionError(exc.message, source, column(exc.position)) from None


@dataclass(frozen=True, eq=False)
class Coefficient:
    """One f_k with compiled value, gradient and Hessian."""

    source: str
    d: int
    expr: sympy.Expr = field(init=False, repr=False)
    _f: Callable = field(init=False, repr=False)
    _grad: tuple[Callable, ...] = field(init=False, repr=False)
    _hess: tuple[tuple[Callable, ...], ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        e = parse_expression(self.source, self.d)
        syms = sympy.symbols(COORDS[: self.d], real=True)
        grad = [sympy.diff(e, s) for s in syms]
        hess = [[sympy.diff(g, s) for s in syms] for g in grad]
        object.__setattr__(self, "expr", e)
        object.__setattr__(self, "_f", sympy.lambdify(syms, e, "numpy"))
        object.__setattr__(self, "_grad", tuple(sympy.lambdify(syms, g, "numpy") for g in grad))
        object.__setattr__(self, "_hess", tuple(tuple(sympy.lambdify(syms, h, "numpy") for h in row) for row in hess))

    @property
    def is_constant(self) -> bool:
        return not self.expr.free_symbols

    @staticmethod
    def _full(v, shape) -> np.ndarray:
        return np.broadcast_to(np.asarray(v, dtype=float), shape).astype(float)

    def _args(self, pts: np.ndarray):
        return [pts[..., i] for i in range(self.d)]

    def value(self, pts: np.ndarray) -> np.ndarray:
        """pts has shape (..., d)."""
        return self._full(self._f(*self._args(pts)), pts.shape[:-1])

    def gradient(self, pts: np.ndarray) -> np.ndarray:
        return np.stack([self._full(g(*self._args(pts)), pts.shape[:-1]) for g in self._grad], axis=-1)

    def hessian(self, pts: np.ndarray) -> np.ndarray:
        rows = [np.stack([self._full(h(*self._args(pts)), pts.shape[:-1]) for h in row], axis=-1) for row in self._hess]
        return np.stack(rows, axis=-2)

    def laplacian(self, pts: np.ndarray) -> np.ndarray:
        return sum(self._full(self._hess[i][i](*self._args(pts)), pts.shape[:-1]) for i in range(self.d))


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    sources: tuple[str, ...]
    d: int
    coefficients: tuple[Coefficient, ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if len(self.sources) == 0:
            raise InvalidArgument("at least one coefficient is required")
        object.__setattr__(self, "sources", tuple(self.sources))
        object.__setattr__(self, "coefficients", tuple(Coefficient(s, self.d) for s in self.sources))

    def __len__(self) -> int:
        return len(self.coefficients)

    @property
    def is_constant(self) -> bool:
        return all(c.is_constant for c in self.coefficients)
