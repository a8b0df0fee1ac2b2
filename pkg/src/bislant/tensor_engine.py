"""Fields, Levi-Civita connection, brackets and curvature at points.

Quantities are evaluated through local Taylor jets.  Two differentiation
engines produce the leaf jets of a field at a point:

* ``dual_number``: exact truncated Taylor arithmetic through the expression
  language (fields must be expression or constant fields);
* ``central_fd_4th``: fourth-order central stencils, tensor products for mixed
  partials, for any field including opaque callables.

Downstream algebra (Christoffel symbols, covariant derivatives, curvature) is
identical for both engines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Sequence

import numpy as np

from . import jets
from .errors import DegeneratePlane, OddDimension, OutOfDomain, SingularMetric
from .expressions import Expression, parse
from .jets import Jet, basis_for

DUAL = "dual_number"
FD = "central_fd_4th"
ENGINES = (DUAL, FD)
DEFAULT_FD_STEP = 1e-4
CONDITION_CAP = 1e12


# fields -------------------------------------------------------------------------

class Field:
    """Array-valued field on a coordinate chart of dimension ``arity``."""

    shape: tuple[int, ...]
    arity: int
    is_constant: bool = False
    is_affine: bool = False

    def __call__(self, p) -> np.ndarray:
        raise NotImplementedError

    def batch(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at points of shape (arity, N); returns (N, *shape)."""
        return np.stack([self(points[:, j]) for j in range(points.shape[1])])

    def taylor_exact(self, x: Jet) -> Jet | None:
        """Exact jet from coordinate jets, or None for opaque fields."""
        return None

    def sources(self):
        """Serializable description (nested expression strings), if any."""
        return None


class ExpressionField(Field):
    """Field whose entries are expression-language strings."""

    def __init__(self, entries, arity: int):
        arr = np.array(entries, dtype=object)
        self.shape = arr.shape
        self.arity = arity
        flat = [e if isinstance(e, Expression) else parse(e, arity) for e in arr.ravel()]
        self._flat = flat
        self.is_constant = all(e.is_constant for e in flat)
        self.is_affine = all(e.is_affine for e in flat)

    def sources(self):
        arr = np.array([e.source for e in self._flat], dtype=object).reshape(self.shape)
        return arr.tolist() if arr.ndim else arr.item()

    def __call__(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        vals = [float(e(p)) for e in self._flat]
        return np.array(vals).reshape(self.shape)

    def batch(self, points: np.ndarray) -> np.ndarray:
        n = points.shape[1]
        out = np.empty((n, len(self._flat)))
        for k, e in enumerate(self._flat):
            out[:, k] = np.broadcast_to(np.asarray(e(points), dtype=float), (n,))
        return out.reshape((n,) + self.shape)

    def taylor_exact(self, x: Jet) -> Jet:
        comps = [x[i] for i in range(self.arity)]
        vals = [e(comps) for e in self._flat]
        out = jets.stack(vals, x.basis, x.order)
        return out.reshape(self.shape)


class ConstantField(Field):
    """Field with the same value everywhere."""

    def __init__(self, value, arity: int, label: str | None = None):
        self.value = np.array(value, dtype=float)
        self.value.setflags(write=False)
        self.shape = self.value.shape
        self.arity = arity
        self.label = label
        self.is_constant = True
        self.is_affine = True

    def sources(self):
        if self.label is not None:
            return self.label
        arr = np.vectorize(lambda v: repr(float(v)), otypes=[object])(self.value)
        return arr.tolist()

    def __call__(self, p) -> np.ndarray:
        return self.value.copy()

    def batch(self, points: np.ndarray) -> np.ndarray:
        return np.broadcast_to(self.value, (points.shape[1],) + self.shape).copy()

    def taylor_exact(self, x: Jet) -> Jet:
        return Jet.constant(x.basis, self.value, x.order)


class CallableField(Field):
    """Opaque field given by a Python callable (always finite-differenced)."""

    def __init__(self, func: Callable[[np.ndarray], np.ndarray], shape, arity: int):
        self.func = func
        self.shape = tuple(shape)
        self.arity = arity

    def __call__(self, p) -> np.ndarray:
        return np.asarray(self.func(np.asarray(p, dtype=float)), dtype=float).reshape(self.shape)


ScalarField = VectorField = MatrixField = Field


def scalar_field(source, arity: int) -> ExpressionField:
    return ExpressionField(np.array(source, dtype=object).reshape(()), arity)


def vector_field(sources: Sequence, arity: int) -> ExpressionField:
    return ExpressionField(list(sources), arity)


def matrix_field(rows: Sequence[Sequence], arity: int) -> ExpressionField:
    return ExpressionField([list(r) for r in rows], arity)


def euclidean_metric(n: int) -> ConstantField:
    return ConstantField(np.eye(n), n, label="euclidean")


# finite-difference leaf jets --------------------------------------------------------

_S1 = {-2: 1.0 / 12.0, -1: -8.0 / 12.0, 1: 8.0 / 12.0, 2: -1.0 / 12.0}


@lru_cache(maxsize=None)
def _stencil_power(a: int) -> tuple[tuple[int, float], ...]:
    """Convolution power of the 4th-order first-derivative stencil."""
    out = {0: 1.0}
    for _ in range(a):
        nxt: dict[int, float] = {}
        for o1, w1 in out.items():
            for o2, w2 in _S1.items():
                nxt[o1 + o2] = nxt.get(o1 + o2, 0.0) + w1 * w2
        out = nxt
    return tuple(sorted((o, w) for o, w in out.items() if w != 0.0))


@lru_cache(maxsize=None)
def _fd_plan(nvars: int, order: int):
    """Integer offsets, weights and owning monomial for every stencil point."""
    basis = basis_for(nvars)
    offs, wts, owner = [], [], []
    for idx in range(basis.size(order)):
        alpha = basis.exponents[idx]
        axes = [(i, int(a)) for i, a in enumerate(alpha) if a > 0]
        pts = [(np.zeros(nvars, dtype=np.int64), 1.0 / math.prod(math.factorial(a) for _, a in axes))]
        for i, a in axes:
            nxt = []
            for off, w in pts:
                for o, sw in _stencil_power(a):
                    o2 = off.copy()
                    o2[i] = o
                    nxt.append((o2, w * sw))
            pts = nxt
        for off, w in pts:
            offs.append(off)
            wts.append(w)
            owner.append(idx)
    return (np.array(offs), np.array(wts), np.array(owner, dtype=np.int64),
            basis.degree[np.array(owner, dtype=np.int64)])


def fd_steps(p: np.ndarray, fd_step: float, degree: int) -> np.ndarray:
    """Per-axis step for derivatives of the given degree."""
    return fd_step ** (4.0 / (3.0 + degree)) * (1.0 + np.abs(p))


def fd_taylor(fieldobj: Field, p, order: int, fd_step: float = DEFAULT_FD_STEP) -> Jet:
    """Leaf jet of a field from fourth-order central differences."""
    p = np.asarray(p, dtype=float)
    m = p.size
    basis = basis_for(m)
    offs, wts, owner, deg = _fd_plan(m, order)
    steps = np.stack([fd_steps(p, fd_step, int(k)) if k > 0 else np.zeros(m) for k in range(order + 1)])
    h = steps[deg]  # (P, m)
    points = p[:, None] + (offs * h).T
    exps = basis.exponents[owner]
    inv_h = np.prod(np.where(exps > 0, h, 1.0) ** (-exps), axis=1)
    vals = fieldobj.batch(points).reshape(points.shape[1], -1)
    contrib = vals * (wts * inv_h)[:, None]
    size = basis.size(order)
    c = np.zeros((size, contrib.shape[1]))
    np.add.at(c, owner, contrib)
    return Jet(basis, order, c.reshape((size,) + fieldobj.shape))


def taylor(fieldobj: Field, p, order: int, engine: str = DUAL, fd_step: float = DEFAULT_FD_STEP) -> Jet:
    """Leaf jet of a field at ``p`` using the requested engine."""
    p = np.asarray(p, dtype=float)
    basis = basis_for(p.size)
    if isinstance(fieldobj, ConstantField):
        return Jet.constant(basis, fieldobj.value, order)
    if engine == DUAL:
        x = Jet.variables(basis, p, order)
        out = fieldobj.taylor_exact(x)
        if out is not None:
            return out
    return fd_taylor(fieldobj, p, order, fd_step)


# manifold model ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ManifoldModel:
    """Coordinate chart with metric and optional complex structure."""

    dim: int
    domain: np.ndarray
    metric: Field
    complex_structure: Field | None = None

    def __post_init__(self):
        dom = np.array(self.domain, dtype=float).reshape(self.dim, 2)
        dom.setflags(write=False)
        object.__setattr__(self, "domain", dom)
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if self.complex_structure is not None and self.dim % 2:
            raise OddDimension(f"complex structure on odd dimension {self.dim}")
        if self.metric.shape != (self.dim, self.dim):
            raise ValueError("metric shape does not match dimension")

    @property
    def is_flat_constant(self) -> bool:
        return self.metric.is_constant

    def contains(self, p, inset: float = 0.0) -> bool:
        p = np.asarray(p, dtype=float)
        lo, hi = self.domain[:, 0], self.domain[:, 1]
        return bool(np.all(p >= lo + inset) and np.all(p <= hi - inset))

    def check_point(self, p, inset: float = 0.0) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,) or not np.all(np.isfinite(p)):
            raise OutOfDomain(f"point {p.tolist()} has wrong shape or is not finite")
        if not self.contains(p, inset):
            raise OutOfDomain(f"point {p.tolist()} outside domain box")
        return p


def sample_points(domain, n: int, seed: int, inset: float = 0.05) -> np.ndarray:
    """Seeded uniform samples in the box shrunk by ``inset`` of each side length."""
    dom = np.asarray(domain, dtype=float)
    width = dom[:, 1] - dom[:, 0]
    lo = dom[:, 0] + inset * width
    hi = dom[:, 1] - inset * width
    rng = np.random.default_rng(seed)
    return lo + (hi - lo) * rng.random((n, dom.shape[0]))


# connection ---------------------------------------------------------------------------

_EXTRA = "abcdefgh"
_EXTRA_Y = "pqrstuvw"


def _as_jet(x, basis, order) -> Jet:
    return x if isinstance(x, Jet) else Jet.constant(basis, np.asarray(x, dtype=float), order)


def directional(X, Y: Jet) -> Jet:
    """``X(Y)``: componentwise derivative of the bundle ``Y`` along the bundle ``X``."""
    xe = _EXTRA[: X.ndim - 1 if isinstance(X, Jet) else np.ndim(X) - 1]
    ye = _EXTRA_Y[: Y.ndim - 1]
    dY = jets.grad(Y)
    return jets.einsum(f"k{ye}i,i{xe}->k{xe}{ye}", dY, X)


def nabla(gamma: Jet, X, Y) -> Jet:
    """Covariant derivative of bundle ``Y`` (m, ...) along bundle ``X`` (m, ...).

    Output shape is (m, *X.extra, *Y.extra).
    """
    Y = _as_jet(Y, gamma.basis, gamma.order + 1)
    xe = _EXTRA[: (X.ndim if isinstance(X, Jet) else np.ndim(X)) - 1]
    ye = _EXTRA_Y[: Y.ndim - 1]
    out = jets.einsum(f"kij,i{xe},j{ye}->k{xe}{ye}", gamma, X, Y)
    if not Y.const:
        out = out + directional(X, Y)
    return out


def bracket(X: Jet, Y: Jet) -> Jet:
    """Lie bracket ``[X_a, Y_b]`` of two bundles; shape (m, *X.extra, *Y.extra)."""
    nx, ny = X.ndim - 1, Y.ndim - 1
    b = directional(Y, X)
    b = b.transpose(0, *range(ny + 1, ny + nx + 1), *range(1, ny + 1))
    return directional(X, Y) - b


def christoffel_from_metric(g: Jet, ginv: Jet) -> Jet:
    """``Gamma^k_ij`` as a jet of one order lower than ``g``."""
    dg = jets.grad(g)  # dg[a, b, c] = d_c g_ab
    term = dg.transpose(1, 2, 0) + dg.transpose(1, 0, 2) - dg.transpose(2, 0, 1)
    # term[l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
    return 0.5 * jets.einsum("kl,lij->kij", ginv.truncate(dg.order), term)


def riemann_from_gamma(gamma: Jet, g0: np.ndarray) -> np.ndarray:
    """Fully covariant ``R[a, b, c, d] = g(R(d_a, d_b) d_c, d_d)`` at the base point."""
    G = gamma.value
    dG = jets.grad(gamma).value  # dG[l, j, k, i] = d_i Gamma^l_jk
    up = (np.einsum("ljki->lijk", dG) - np.einsum("likj->lijk", dG)
          + np.einsum("lis,sjk->lijk", G, G) - np.einsum("ljs,sik->lijk", G, G))
    return np.einsum("lijk,ld->ijkd", up, g0)


@dataclass(frozen=True, eq=False)
class ConnectionContext:
    """A model together with its differentiation settings."""

    model: ManifoldModel
    diff_engine: str = DUAL
    fd_step: float = DEFAULT_FD_STEP
    condition_cap: float = CONDITION_CAP
    residual_tolerance: float = 1e-9

    def __post_init__(self):
        if self.diff_engine not in ENGINES:
            raise ValueError(f"unknown engine {self.diff_engine!r}")
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")

    def inset(self) -> float:
        return self.fd_step if self.diff_engine == FD else 0.0

    def taylor(self, fieldobj: Field, p, order: int) -> Jet:
        return taylor(fieldobj, p, order, self.diff_engine, self.fd_step)

    def local(self, p, order: int = 3) -> "LocalGeometry":
        return LocalGeometry(self, p, order)


def check_metric_value(g0: np.ndarray, cap: float = CONDITION_CAP, where: str = "") -> None:
    if not np.all(np.isfinite(g0)):
        raise SingularMetric(f"metric not finite{where}")
    cond = np.linalg.cond(g0)
    if not np.isfinite(cond) or cond > cap:
        raise SingularMetric(f"metric condition number {cond:.3g} exceeds cap {cap:.3g}{where}")


class LocalGeometry:
    """Leaf jets of a model at one point and the connection built from them."""

    def __init__(self, ctx: ConnectionContext, p, order: int = 3):
        self.ctx = ctx
        self.model = ctx.model
        self.p = ctx.model.check_point(p, ctx.inset())
        self.order = order
        self.basis = basis_for(self.model.dim)
        self.g = ctx.taylor(self.model.metric, self.p, order)
        check_metric_value(self.g.value, ctx.condition_cap, f" at {self.p.tolist()}")
        self.ginv = jets.inv(self.g)

    @property
    def g0(self) -> np.ndarray:
        return self.g.value

    @cached_property
    def gamma(self) -> Jet:
        return christoffel_from_metric(self.g, self.ginv)

    @cached_property
    def J(self) -> Jet | None:
        if self.model.complex_structure is None:
            return None
        return self.ctx.taylor(self.model.complex_structure, self.p, self.order)

    @cached_property
    def riemann(self) -> np.ndarray:
        return riemann_from_gamma(self.gamma, self.g0)

    def field(self, f: Field) -> Jet:
        return self.ctx.taylor(f, self.p, self.order)

    def inner(self, a, b) -> float:
        return float(np.asarray(a) @ self.g0 @ np.asarray(b))

    def nabla(self, X, Y) -> Jet:
        return nabla(self.gamma, X, Y)


# public operations ------------------------------------------------------------------

def christoffel(ctx: ConnectionContext, p) -> np.ndarray:
    """Christoffel symbols ``Gamma[k, i, j]`` at ``p``."""
    return ctx.local(p, order=1).gamma.value.copy()


def covariant_derivative(ctx: ConnectionContext, X: Field, Y: Field, p) -> np.ndarray:
    """``(nabla_X Y)(p)``."""
    loc = ctx.local(p, order=1)
    Xj = loc.field(X) if isinstance(X, Field) else np.asarray(X, dtype=float)
    Yj = loc.field(Y) if isinstance(Y, Field) else np.asarray(Y, dtype=float)
    return jets.value(loc.nabla(jets.value(Xj), Yj)).copy()


def lie_bracket(X: Field, Y: Field, p, engine: str = DUAL, fd_step: float = DEFAULT_FD_STEP) -> np.ndarray:
    """``[X, Y](p) = X(Y) - Y(X)`` in coordinates."""
    Xj = taylor(X, p, 1, engine, fd_step)
    Yj = taylor(Y, p, 1, engine, fd_step)
    return jets.value(bracket(Xj, Yj)).copy()


def riemann(ctx: ConnectionContext, p, e1, e2, e3, e4) -> float:
    """``R(e1, e2, e3, e4) = g(R(e1, e2) e3, e4)``; unit spheres have K = +1."""
    vecs = [np.asarray(e, dtype=float) for e in (e1, e2, e3, e4)]
    if not all(np.all(np.isfinite(v)) for v in vecs):
        raise ValueError("curvature arguments must be finite")
    R = ctx.local(p, order=2).riemann
    return float(np.einsum("ijkl,i,j,k,l->", R, *vecs))


def plane_curvature(R: np.ndarray, g0: np.ndarray, U, V, *, orthogonal_tol: float | None = 1e-8) -> float:
    """``R(U, V, V, U)`` normalized by the Gram determinant of the plane."""
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    uu, vv, uv = U @ g0 @ U, V @ g0 @ V, U @ g0 @ V
    scale = max(np.sqrt(abs(uu * vv)), 1e-300)
    if uu <= 1e-24 or vv <= 1e-24:
        raise DegeneratePlane("zero vector in sectional curvature")
    if orthogonal_tol is not None and abs(uv) > orthogonal_tol * scale:
        raise DegeneratePlane("vectors are not orthogonal")
    area = uu * vv - uv * uv
    if area <= 1e-14 * uu * vv:
        raise DegeneratePlane("vectors are parallel")
    return float(np.einsum("ijkl,i,j,k,l->", R, U, V, V, U) / area)


def sectional_curvature(ctx: ConnectionContext, p, U, V, tol: float = 1e-8) -> float:
    """``K(U, V) = R(U, V, V, U) / (g(U, U) g(V, V))`` for a g-orthogonal pair."""
    loc = ctx.local(p, order=2)
    return plane_curvature(loc.riemann, loc.g0, U, V, orthogonal_tol=tol)
