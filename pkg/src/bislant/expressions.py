"""A small closed expression language for coordinate fields.

Grammar: variables ``x1 .. xn``, integer/decimal constants, ``+ - * /``,
integer-literal powers (``^`` or ``**``) and the functions ``sqrt``, ``sin``,
``cos``, ``exp``.  Compiled expressions accept floats, batched numpy arrays or
:class:`~bislant.jets.Jet` objects for every variable, which is what lets the
same source drive plain evaluation, finite differences and exact Taylor
arithmetic.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import jets
from .errors import ParseError

_FUNCS = {"sqrt": jets.sqrt, "sin": jets.sin, "cos": jets.cos, "exp": jets.exp}
_VAR = re.compile(r"^x([1-9][0-9]*)$")


def _build(node: ast.AST, nvars: int, src: str) -> tuple[Callable, bool, int]:
    """Return (evaluator, is_constant, max polynomial degree or -1 if not polynomial)."""
    if isinstance(node, ast.Expression):
        return _build(node.body, nvars, src)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        v = float(node.value)
        return (lambda x: v), True, 0
    if isinstance(node, ast.Name):
        m = _VAR.match(node.id)
        if not m:
            raise ParseError(f"unknown name {node.id!r} in {src!r}")
        i = int(m.group(1)) - 1
        if i >= nvars:
            raise ParseError(f"variable {node.id} exceeds dimension {nvars} in {src!r}")
        return (lambda x: x[i]), False, 1
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        f, c, d = _build(node.operand, nvars, src)
        if isinstance(node.op, ast.USub):
            return (lambda x: -f(x)), c, d
        return f, c, d
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Pow):
            exp_node = node.right
            sign = 1
            if isinstance(exp_node, ast.UnaryOp) and isinstance(exp_node.op, ast.USub):
                sign, exp_node = -1, exp_node.operand
            if not (isinstance(exp_node, ast.Constant) and isinstance(exp_node.value, int)):
                raise ParseError(f"only integer-literal exponents are allowed in {src!r}")
            n = sign * exp_node.value
            f, c, d = _build(node.left, nvars, src)
            deg = d * n if (d >= 0 and n >= 0) else -1
            return (lambda x: f(x) ** n), c, deg
        lf, lc, ld = _build(node.left, nvars, src)
        rf, rc, rd = _build(node.right, nvars, src)
        const = lc and rc
        if isinstance(node.op, ast.Add):
            return (lambda x: lf(x) + rf(x)), const, max(ld, rd) if min(ld, rd) >= 0 else -1
        if isinstance(node.op, ast.Sub):
            return (lambda x: lf(x) - rf(x)), const, max(ld, rd) if min(ld, rd) >= 0 else -1
        if isinstance(node.op, ast.Mult):
            return (lambda x: lf(x) * rf(x)), const, ld + rd if min(ld, rd) >= 0 else -1
        if isinstance(node.op, ast.Div):
            deg = ld if (rc and ld >= 0) else -1
            return (lambda x: lf(x) / rf(x)), const, deg
        raise ParseError(f"operator {type(node.op).__name__} not allowed in {src!r}")
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS or node.keywords or len(node.args) != 1:
            raise ParseError(f"unsupported call in {src!r}")
        fn = _FUNCS[node.func.id]
        f, c, _ = _build(node.args[0], nvars, src)
        return (lambda x: fn(f(x))), c, (0 if c else -1)
    raise ParseError(f"unsupported syntax {type(node).__name__} in {src!r}")


@dataclass(frozen=True)
class Expression:
    """A compiled scalar expression in ``nvars`` coordinates."""

    source: str
    nvars: int
    fn: Callable
    is_constant: bool
    degree: int  # polynomial degree, -1 when not polynomial

    def __call__(self, x):
        return self.fn(x)

    @property
    def is_affine(self) -> bool:
        return 0 <= self.degree <= 1


def parse(source: str | int | float, nvars: int) -> Expression:
    """Compile an expression string (numbers are accepted as constants)."""
    if isinstance(source, bool):
        raise ParseError(f"boolean is not an expression: {source!r}")
    if isinstance(source, (int, float)):
        source = repr(float(source))
    if not isinstance(source, str):
        raise ParseError(f"expression must be a string, got {type(source).__name__}")
    text = source.replace("^", "**").strip()
    if not text:
        raise ParseError("empty expression")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"cannot parse {source!r}: {exc.msg}") from None
    fn, const, deg = _build(tree, nvars, source)
    return Expression(source, nvars, fn, const, deg)


def evaluate_batch(exprs: Sequence[Expression], points: np.ndarray) -> np.ndarray:
    """Evaluate expressions at many points; ``points`` has shape (nvars, N)."""
    n = points.shape[1]
    out = np.empty((n, len(exprs)))
    for k, e in enumerate(exprs):
        out[:, k] = np.broadcast_to(np.asarray(e(points), dtype=float), (n,))
    return out
