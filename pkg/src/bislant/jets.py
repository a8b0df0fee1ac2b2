"""Truncated multivariate Taylor arithmetic (generalised dual numbers).

A :class:`Jet` stores the Taylor coefficients of an array-valued function of
``n`` variables around a base point, truncated at total degree ``order``.
Coefficients are indexed by multi-indices sorted by degree, so the basis of a
lower order is a prefix of the basis of a higher one.  Coefficients are plain
Taylor coefficients (``f_alpha = d^alpha f / alpha!``).

Every product of two jets keeps the smaller of the two orders and
differentiation lowers the order by one.  This "valid order" bookkeeping is
what lets nested covariant derivatives be evaluated exactly in floating point.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

MAX_ORDER = 3


class JetBasis:
    """Monomial basis in ``nvars`` variables up to total degree ``order``."""

    def __init__(self, nvars: int, order: int = MAX_ORDER):
        exps: list[tuple[int, ...]] = []
        for d in range(order + 1):
            for combo in itertools.combinations_with_replacement(range(nvars), d):
                e = [0] * nvars
                for i in combo:
                    e[i] += 1
                exps.append(tuple(e))
        self.nvars = nvars
        self.order = order
        self.exponents = np.array(exps, dtype=np.int64).reshape(len(exps), nvars)
        self.index = {e: i for i, e in enumerate(exps)}
        self.degree = self.exponents.sum(axis=1)
        self.sizes = [int(np.count_nonzero(self.degree <= k)) for k in range(order + 1)]
        self._prod: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        self._grad: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def size(self, order: int) -> int:
        return self.sizes[order]

    def product_table(self, order: int):
        """Index pairs ``(I, J)`` sorted by output monomial, plus reduce offsets."""
        if order not in self._prod:
            size = self.sizes[order]
            deg = self.degree[:size]
            pi, pj, po = [], [], []
            for i in range(size):
                ei = self.exponents[i]
                for j in range(size):
                    if deg[i] + deg[j] > order:
                        continue
                    pi.append(i)
                    pj.append(j)
                    po.append(self.index[tuple(ei + self.exponents[j])])
            out = np.array(po)
            perm = np.argsort(out, kind="stable")
            out = out[perm]
            starts = np.flatnonzero(np.r_[True, out[1:] != out[:-1]])
            self._prod[order] = (np.array(pi)[perm], np.array(pj)[perm], starts)
        return self._prod[order]

    def grad_table(self, order: int):
        """Source indices and factors mapping an order-``order`` jet to its gradient."""
        if order not in self._grad:
            size = self.sizes[order - 1]
            src = np.empty((size, self.nvars), dtype=np.int64)
            fac = np.empty((size, self.nvars))
            for a in range(size):
                alpha = self.exponents[a]
                for i in range(self.nvars):
                    beta = alpha.copy()
                    beta[i] += 1
                    src[a, i] = self.index[tuple(beta)]
                    fac[a, i] = alpha[i] + 1
            self._grad[order] = (src, fac)
        return self._grad[order]


@lru_cache(maxsize=None)
def basis_for(nvars: int, order: int = MAX_ORDER) -> JetBasis:
    return JetBasis(nvars, order)


def _pad(c: np.ndarray, ndim: int) -> np.ndarray:
    """Insert unit axes after the coefficient axis so value ranks match."""
    extra = ndim - (c.ndim - 1)
    if extra <= 0:
        return c
    return c.reshape((c.shape[0],) + (1,) * extra + c.shape[1:])


def _lead(x) -> np.ndarray:
    return np.asarray(x, dtype=float)[None]


class Jet:
    """Array-valued truncated Taylor polynomial."""

    __slots__ = ("basis", "order", "c", "const")
    __array_ufunc__ = None

    def __init__(self, basis: JetBasis, order: int, c: np.ndarray, const: bool = False):
        self.basis = basis
        self.order = order
        self.c = c
        # flat jets take the cheap product path
        self.const = const or not c[1:].any()

    # construction -----------------------------------------------------
    @classmethod
    def constant(cls, basis: JetBasis, value, order: int | None = None) -> "Jet":
        order = basis.order if order is None else order
        value = np.asarray(value, dtype=float)
        c = np.zeros((basis.size(order),) + value.shape)
        c[0] = value
        return cls(basis, order, c, const=True)

    @classmethod
    def variables(cls, basis: JetBasis, point, order: int | None = None) -> "Jet":
        """Coordinate functions ``x_i = p_i + delta_i`` as a vector jet."""
        order = basis.order if order is None else order
        point = np.asarray(point, dtype=float)
        n = basis.nvars
        c = np.zeros((basis.size(order), n))
        c[0] = point
        if order >= 1:
            c[1 : n + 1] = np.eye(n)
        return cls(basis, order, c)

    # views ----------------------------------------------------------------
    @property
    def value(self) -> np.ndarray:
        return self.c[0]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.c.shape[1:]

    @property
    def ndim(self) -> int:
        return self.c.ndim - 1

    def __len__(self) -> int:
        return self.shape[0]

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, shape={self.shape}, value={self.value!r})"

    def _wrap(self, c: np.ndarray) -> "Jet":
        return Jet(self.basis, self.order, c, self.const)

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        return Jet(self.basis, order, self.c[: self.basis.size(order)], self.const)

    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        return self._wrap(self.c[(slice(None),) + key])

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return self._wrap(self.c.reshape((self.c.shape[0],) + tuple(shape)))

    def transpose(self, *axes) -> "Jet":
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        return self._wrap(self.c.transpose((0,) + tuple(a + 1 for a in axes)))

    @property
    def T(self) -> "Jet":
        return self.transpose()

    def sum(self, axis=None) -> "Jet":
        if axis is None:
            axis = tuple(range(self.ndim))
        if isinstance(axis, int):
            axis = (axis,)
        axis = tuple(a % self.ndim + 1 for a in axis)
        return self._wrap(self.c.sum(axis=axis))

    # arithmetic ----------------------------------------------------------
    def _add(self, other, sign: float) -> "Jet":
        if isinstance(other, Jet):
            if other.const:
                return self._add(other.c[0], sign)
            if self.const:
                return (other if sign > 0 else -other)._add(self.c[0], 1.0)
            k = min(self.order, other.order)
            size = self.basis.size(k)
            nd = max(self.ndim, other.ndim)
            c = _pad(self.c[:size], nd) + sign * _pad(other.c[:size], nd)
            return Jet(self.basis, k, c, self.const and other.const)
        other = np.asarray(other, dtype=float)
        shape = np.broadcast_shapes(self.shape, other.shape)
        c = np.array(np.broadcast_to(_pad(self.c, len(shape)), (self.c.shape[0],) + shape))
        c[0] = c[0] + sign * other
        return Jet(self.basis, self.order, c, self.const)

    def __add__(self, other):
        return self._add(other, 1.0)

    def __radd__(self, other):
        return self._add(other, 1.0)

    def __sub__(self, other):
        return self._add(other, -1.0)

    def __rsub__(self, other):
        return (-self)._add(other, 1.0)

    def __neg__(self):
        return self._wrap(-self.c)

    def __pos__(self):
        return self

    def __mul__(self, other):
        return _bilinear(self, other, _mul)

    def __rmul__(self, other):
        return _bilinear(other, self, _mul)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        return self._wrap(_pad(self.c, np.ndim(other)) / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, n):
        if isinstance(n, float) and n.is_integer():
            n = int(n)
        if not isinstance(n, (int, np.integer)):
            raise TypeError("jets support integer powers only")
        n = int(n)
        if n < 0:
            return reciprocal(self) ** (-n)
        result = None
        base = self
        while n:
            if n & 1:
                result = base if result is None else result * base
            n >>= 1
            if n:
                base = base * base
        if result is None:
            return Jet.constant(self.basis, np.ones(self.shape), self.order)
        return result

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)


def _mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    nd = max(a.ndim, b.ndim) - 1
    return _pad(a, nd) * _pad(b, nd)


def _bilinear(a, b, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> Jet:
    """Apply a bilinear coefficient map to two operands, one of which is a jet."""
    a_jet = isinstance(a, Jet)
    b_jet = isinstance(b, Jet)
    if not a_jet and not b_jet:
        raise TypeError("at least one operand must be a Jet")
    if (not a_jet or a.const) and (not b_jet or b.const):
        ref = a if a_jet else b
        order = max(x.order for x in (a, b) if isinstance(x, Jet))
        v = fn(a.c[:1] if a_jet else _lead(a), b.c[:1] if b_jet else _lead(b))
        c = np.zeros((ref.basis.size(order),) + v.shape[1:])
        c[0] = v[0]
        return Jet(ref.basis, order, c, True)
    if not a_jet or a.const:
        a0 = a.c[:1] if a_jet else _lead(a)
        return Jet(b.basis, b.order, fn(a0, b.c), False)
    if not b_jet or b.const:
        b0 = b.c[:1] if b_jet else _lead(b)
        return Jet(a.basis, a.order, fn(a.c, b0), False)
    k = min(a.order, b.order)
    i, j, starts = a.basis.product_table(k)
    out = fn(a.c[i], b.c[j])
    return Jet(a.basis, k, np.add.reduceat(out, starts, axis=0), False)


_MATMUL_SPECS = {
    (2, 2): "...ij,...jk->...ik",
    (2, 1): "...ij,...j->...i",
    (1, 2): "...j,...jk->...k",
    (1, 1): "...j,...j->...",
}


def _ndim(x) -> int:
    return x.ndim if isinstance(x, Jet) else np.ndim(x)


def matmul(a, b):
    """Matrix product for jets and arrays (vectors allowed on either side)."""
    if not isinstance(a, Jet) and not isinstance(b, Jet):
        return np.asarray(a) @ np.asarray(b)
    spec = _MATMUL_SPECS.get((_ndim(a), _ndim(b)))
    if spec is None:
        return _bilinear(a, b, lambda x, y: np.matmul(x, y))
    return _bilinear(a, b, lambda x, y: np.einsum(spec, x, y))


def einsum(spec: str, *operands):
    """Einstein summation over jets and arrays (at most one contraction chain)."""
    if not any(isinstance(o, Jet) for o in operands):
        return np.einsum(spec, *operands, optimize=len(operands) > 2)
    ins, out = spec.split("->")
    terms = ins.split(",")
    if len(terms) == 1:
        (a,) = operands
        return a._wrap(np.einsum(f"...{terms[0]}->...{out}", a.c))
    if len(terms) > 2:
        # fold left to right; carry every index still needed later
        acc, acc_idx = operands[0], terms[0]
        for k in range(1, len(terms)):
            rest = "".join(terms[k + 1 :]) + out
            keep = "".join(dict.fromkeys(ch for ch in acc_idx + terms[k] if ch in rest))
            acc = einsum(f"{acc_idx},{terms[k]}->{keep}", acc, operands[k])
            acc_idx = keep
        if acc_idx != out:
            acc = einsum(f"{acc_idx}->{out}", acc)
        return acc
    full = f"...{terms[0]},...{terms[1]}->...{out}"
    return _bilinear(operands[0], operands[1], lambda x, y: np.einsum(full, x, y))


def value(x) -> np.ndarray:
    """Base-point value of a jet or array."""
    return x.value if isinstance(x, Jet) else np.asarray(x, dtype=float)


def grad(x: Jet) -> Jet:
    """Gradient; the derivative index is appended as the last axis."""
    if x.order < 1:
        raise ValueError("cannot differentiate an order-0 jet")
    if x.const:
        return Jet.constant(x.basis, np.zeros(x.shape + (x.basis.nvars,)), x.order - 1)
    src, fac = x.basis.grad_table(x.order)
    c = x.c[src]  # (size, n, *shape)
    c = c * fac.reshape(fac.shape + (1,) * x.ndim)
    c = np.moveaxis(c, 1, -1)
    return Jet(x.basis, x.order - 1, c, False)


def stack(items: Sequence, basis: JetBasis, order: int) -> Jet:
    """Stack jets and floats along a new leading value axis."""
    for it in items:
        if isinstance(it, Jet) and not it.const:
            order = min(order, it.order)
    parts = []
    for it in items:
        if isinstance(it, Jet) and not it.const:
            parts.append(it.truncate(order).c[: basis.size(order)])
        else:
            v = it.c[0] if isinstance(it, Jet) else it
            c = np.zeros((basis.size(order),) + np.shape(v))
            c[0] = v
            parts.append(c)
    const = all((not isinstance(it, Jet)) or it.const for it in items)
    shape = np.broadcast_shapes(*(p.shape[1:] for p in parts))
    parts = [np.broadcast_to(_pad(p, len(shape)), (p.shape[0],) + shape) for p in parts]
    return Jet(basis, order, np.stack(parts, axis=1), const)


# scalar series ---------------------------------------------------------------

def _series(x: Jet, taylor: Callable[[np.ndarray, int], list[np.ndarray]]) -> Jet:
    a0 = x.c[0]
    coeffs = taylor(a0, 0 if x.const else x.order)
    if x.const or x.order == 0:
        return Jet.constant(x.basis, coeffs[0], x.order) if x.const else x._wrap(coeffs[0][None])
    nil = x - a0
    res = coeffs[-1]
    for ck in reversed(coeffs[:-1]):
        res = nil * res + ck
    return res


def _sqrt_taylor(a, k):
    return [_binom_half(j) * a ** (0.5 - j) for j in range(k + 1)]


def _binom_half(j: int) -> float:
    out = 1.0
    for i in range(j):
        out *= (0.5 - i) / (i + 1)
    return out


def _recip_taylor(a, k):
    return [(-1.0) ** j * a ** (-(j + 1)) for j in range(k + 1)]


def _exp_taylor(a, k):
    e = np.exp(a)
    return [e / math.factorial(j) for j in range(k + 1)]


def _sin_taylor(a, k):
    cyc = [np.sin(a), np.cos(a), -np.sin(a), -np.cos(a)]
    return [cyc[j % 4] / math.factorial(j) for j in range(k + 1)]


def _cos_taylor(a, k):
    cyc = [np.cos(a), -np.sin(a), -np.cos(a), np.sin(a)]
    return [cyc[j % 4] / math.factorial(j) for j in range(k + 1)]


def sqrt(x):
    return _series(x, _sqrt_taylor) if isinstance(x, Jet) else np.sqrt(x)


def reciprocal(x):
    return _series(x, _recip_taylor) if isinstance(x, Jet) else 1.0 / np.asarray(x, dtype=float)


def exp(x):
    return _series(x, _exp_taylor) if isinstance(x, Jet) else np.exp(x)


def sin(x):
    return _series(x, _sin_taylor) if isinstance(x, Jet) else np.sin(x)


def cos(x):
    return _series(x, _cos_taylor) if isinstance(x, Jet) else np.cos(x)


def inv(a):
    """Matrix inverse via the Neumann-type fixed point ``S = A0^-1 - A0^-1 N S``."""
    if not isinstance(a, Jet):
        return np.linalg.inv(a)
    a0inv = np.linalg.inv(a.c[0])
    if a.const or a.order == 0:
        return Jet.constant(a.basis, a0inv, a.order) if a.const else a._wrap(a0inv[None])
    nil = a - a.c[0]
    left = matmul(a0inv, nil)
    s = Jet.constant(a.basis, a0inv, a.order)
    for _ in range(a.order):
        s = a0inv - matmul(left, s)
    return s
