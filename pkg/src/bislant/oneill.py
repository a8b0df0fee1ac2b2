"""O'Neill tensors T and A, the fiber connection and their covariant derivatives.

Vector fields are handled as *bundles*: jets of shape ``(m, r1, r2, ...)``
holding several fields at once (for instance a whole frame).  All operators
below act on the leading index and keep the bundle indices in order, so
``T(U, W)`` for bundles ``U`` of shape ``(m, a)`` and ``W`` of shape ``(m, b)``
returns ``(m, a, b)`` with ``[:, i, j] = T_{U_i} W_j``.
"""

from __future__ import annotations

from functools import cached_property
from typing import Sequence

import numpy as np

from . import jets
from .errors import NotVertical
from .jets import Jet
from .report import CheckResult, PREMISE, VerificationReport
from .submersion import LocalSubmersion, SubmersionScenario, scenario_tolerance
from .tensor_engine import Field, bracket, nabla

_IDX = "abcdefgh"


def apply(M, Y):
    """Apply a matrix field to the leading index of a bundle."""
    rest = _IDX[: (Y.ndim if isinstance(Y, Jet) else np.ndim(Y)) - 1]
    return jets.einsum(f"ij,j{rest}->i{rest}", M, Y)


def inner(G, X, Y):
    """``g(X_a, Y_b)`` for value bundles; result shape ``(*X.extra, *Y.extra)``."""
    xe = _IDX[: np.ndim(X) - 1]
    ye = "pqrstuvw"[: np.ndim(Y) - 1]
    return np.einsum(f"i{xe},ij,j{ye}->{xe}{ye}", X, G, Y)


def gnorms(G, X) -> np.ndarray:
    """g-norms of the vectors of a value bundle (leading index is the vector index)."""
    X = np.asarray(X)
    flat = X.reshape(X.shape[0], -1)
    return np.sqrt(np.maximum(np.einsum("ia,ij,ja->a", flat, G, flat), 0.0)).reshape(X.shape[1:])


def max_gnorm(G, X) -> float:
    n = gnorms(G, X)
    return float(np.max(n)) if n.size else 0.0


class PointCalculus:
    """O'Neill calculus at one point, built on a :class:`LocalSubmersion`."""

    def __init__(self, loc: LocalSubmersion):
        self.loc = loc
        self.gamma = loc.gamma
        self.V = loc.V
        self.H = loc.H
        self.g0 = loc.g0
        self.m = loc.m

    # field-level operators -------------------------------------------------------
    def nabla(self, X, Y):
        return nabla(self.gamma, X, Y)

    def vnabla(self, X, Y):
        """``V nabla_X Y`` (the fiber connection when both are vertical)."""
        return apply(self.V, self.nabla(X, Y))

    def hnabla(self, X, Y):
        return apply(self.H, self.nabla(X, Y))

    hat = vnabla

    def T(self, U, W):
        VU = apply(self.V, U)
        return (apply(self.V, self.nabla(VU, apply(self.H, W)))
                + apply(self.H, self.nabla(VU, apply(self.V, W))))

    def A(self, X, Y):
        HX = apply(self.H, X)
        return (apply(self.V, self.nabla(HX, apply(self.H, Y)))
                + apply(self.H, self.nabla(HX, apply(self.V, Y))))

    def _nabla_tensor(self, op, E, F, G):
        ne, nf = E.ndim - 1, F.ndim - 1
        first = self.nabla(E, op(F, G))
        second = op(self.nabla(E, F), G)
        third = op(F, self.nabla(E, G))
        # reorder (m, F.extra, E.extra, G.extra) -> (m, E.extra, F.extra, G.extra)
        axes = [0] + list(range(1 + nf, 1 + nf + ne)) + list(range(1, 1 + nf)) + list(
            range(1 + nf + ne, third.ndim))
        return first - second - third.transpose(*axes)

    def nabla_T(self, E, F, G):
        """``(nabla_E T)(F, G) = nabla_E(T_F G) - T_{nabla_E F} G - T_F(nabla_E G)``."""
        return self._nabla_tensor(self.T, E, F, G)

    def nabla_A(self, E, F, G):
        return self._nabla_tensor(self.A, E, F, G)

    # frames ----------------------------------------------------------------------
    @property
    def vframe(self):
        return self.loc.vframe

    @property
    def basic(self) -> Jet:
        return self.loc.basic_hframe

    @cached_property
    def full_frame(self) -> Jet:
        """Vertical frame followed by basic horizontal fields, shape (m, m)."""
        cols = []
        if self.vframe is not None:
            cols += [self.vframe[:, j] for j in range(self.vframe.shape[1])]
        cols += [self.basic[:, j] for j in range(self.basic.shape[1])]
        order = min(c.order for c in cols)
        return jets.stack([c.truncate(order) for c in cols], self.loc.basis, order).transpose(1, 0)

    @cached_property
    def frame_inverse(self) -> np.ndarray:
        return np.linalg.inv(self.full_frame.value)

    def _coords(self, tz: np.ndarray) -> np.ndarray:
        """Convert frame-indexed tensor components to coordinate components."""
        Zi = self.frame_inverse
        for axis in range(1, tz.ndim):
            tz = np.moveaxis(np.tensordot(tz, Zi, axes=([axis], [0])), -1, axis)
        return tz

    # coordinate tensors (values at the point) ------------------------------------
    @cached_property
    def Tc(self) -> np.ndarray:
        """``Tc[i, j, k] = (T_{d_j} d_k)^i``."""
        Z = self.full_frame
        return self._coords(jets.value(self.T(Z, Z)))

    @cached_property
    def Ac(self) -> np.ndarray:
        Z = self.full_frame
        return self._coords(jets.value(self.A(Z, Z)))

    @cached_property
    def DTc(self) -> np.ndarray:
        """``DTc[i, e, j, k] = ((nabla_{d_e} T)(d_j, d_k))^i``."""
        Z = self.full_frame
        return self._coords(jets.value(self.nabla_T(Z, Z, Z)))

    @cached_property
    def DAc(self) -> np.ndarray:
        Z = self.full_frame
        return self._coords(jets.value(self.nabla_A(Z, Z, Z)))

    def t(self, u, v) -> np.ndarray:
        return np.einsum("ijk,j,k->i", self.Tc, u, v)

    def a(self, u, v) -> np.ndarray:
        return np.einsum("ijk,j,k->i", self.Ac, u, v)

    def dt(self, e, u, v) -> np.ndarray:
        return np.einsum("iejk,e,j,k->i", self.DTc, e, u, v)

    def da(self, e, u, v) -> np.ndarray:
        return np.einsum("iejk,e,j,k->i", self.DAc, e, u, v)

    def g(self, u, v) -> float:
        return float(u @ self.g0 @ v)

    # fiber curvature --------------------------------------------------------------
    @cached_property
    def Rhat_frame(self) -> np.ndarray | None:
        """Intrinsic fiber curvature on the vertical frame, ``[a, b, c, d]``."""
        E = self.vframe
        if E is None:
            return None
        h1 = self.hat(E, E)                    # (m, b, c): hat_{E_b} E_c
        hh = self.hat(E, h1)                   # (m, a, b, c)
        br = bracket(E, E)                     # (m, a, b)
        hb = self.hat(br, E)                   # (m, a, b, c)
        Rv = jets.value(hh) - np.transpose(jets.value(hh), (0, 2, 1, 3)) - jets.value(hb)
        return np.einsum("iabc,ij,jd->abcd", Rv, self.g0, E.value)

    def vertical_coeffs(self, u) -> np.ndarray:
        E = self.vframe.value
        return E.T @ self.g0 @ np.asarray(u, dtype=float)

    def Rhat(self, e1, e2, e3, e4) -> float:
        Rf = self.Rhat_frame
        if Rf is None:
            return 0.0
        c = [self.vertical_coeffs(e) for e in (e1, e2, e3, e4)]
        return float(np.einsum("abcd,a,b,c,d->", Rf, *c))

    @cached_property
    def R(self) -> np.ndarray:
        return self.loc.geo.riemann


class OneillContext:
    """A scenario with a cache of point calculi and a tolerance."""

    def __init__(self, s: SubmersionScenario, tol: float | None = None, order: int = 3):
        self.s = s
        self.tol = scenario_tolerance(s) if tol is None else tol
        self.order = order
        self._cache: dict[bytes, PointCalculus] = {}

    def at(self, p) -> PointCalculus:
        p = np.asarray(p, dtype=float)
        key = p.tobytes()
        pc = self._cache.get(key)
        if pc is None:
            pc = PointCalculus(LocalSubmersion(self.s, p, self.order))
            self._cache[key] = pc
        return pc


# public operations ------------------------------------------------------------------

def _fields(pc: PointCalculus, *fs):
    return [pc.loc.geo.field(f) if isinstance(f, Field) else f for f in fs]


def tensor_T(octx: OneillContext, U, V, p) -> np.ndarray:
    pc = octx.at(p)
    U, V = _fields(pc, U, V)
    return jets.value(pc.T(U, V)).copy()


def tensor_A(octx: OneillContext, X, Y, p) -> np.ndarray:
    pc = octx.at(p)
    X, Y = _fields(pc, X, Y)
    return jets.value(pc.A(X, Y)).copy()


def hat_connection(octx: OneillContext, V, W, p, tol: float = 1e-9) -> np.ndarray:
    """``V nabla_V W`` for vertical fields ``V`` and ``W``."""
    pc = octx.at(p)
    Vj, Wj = _fields(pc, V, W)
    for x in (Vj, Wj):
        x0 = jets.value(x)
        if max_gnorm(pc.g0, pc.H.value @ x0) > tol * max(1.0, max_gnorm(pc.g0, x0)):
            raise NotVertical("hat connection needs vertical arguments")
    return jets.value(pc.hat(Vj, Wj)).copy()


def nabla_T(octx: OneillContext, E, F, G, p) -> np.ndarray:
    pc = octx.at(p)
    return jets.value(pc.nabla_T(*_fields(pc, E, F, G))).copy()


def nabla_A(octx: OneillContext, E, F, G, p) -> np.ndarray:
    pc = octx.at(p)
    return jets.value(pc.nabla_A(*_fields(pc, E, F, G))).copy()


# fundamental identities -------------------------------------------------------------

def basicness_residual(pc: PointCalculus, X) -> float:
    """``max ||H nabla_U X - A_X U||`` over the vertical frame ``U``; zero for basic ``X``."""
    E = pc.vframe
    if E is None:
        return 0.0
    lhs = jets.value(pc.hnabla(E, X))                       # (m, u, x)
    rhs = np.swapaxes(jets.value(pc.A(X, E)), 1, 2)         # (m, x, u) -> (m, u, x)
    return max_gnorm(pc.g0, lhs - rhs)


def verify_fundamental_identities(octx: OneillContext, samples: Sequence) -> VerificationReport:
    s, tol = octx.s, octx.tol
    rep = VerificationReport(s.id, "oneill", engine=s.diff_engine, tolerance=tol)
    for k, p in enumerate(samples):
        pc = octx.at(p)
        G = pc.g0
        E, B, Z = pc.vframe, pc.basic, pc.full_frame
        val = jets.value
        res = {}
        if E is not None:
            TEE = val(pc.T(E, E))
            res["oneill.T_symmetric"] = max_gnorm(G, TEE - np.swapaxes(TEE, 1, 2))
            res["oneill.split_vertical_vertical"] = max_gnorm(
                G, val(pc.nabla(E, E)) - TEE - val(pc.hat(E, E)))
            res["oneill.split_vertical_horizontal"] = max_gnorm(
                G, val(pc.nabla(E, B)) - val(pc.hnabla(E, B)) - val(pc.T(E, B)))
            res["oneill.split_horizontal_vertical"] = max_gnorm(
                G, val(pc.nabla(B, E)) - val(pc.A(B, E)) - val(pc.vnabla(B, E)))
            res["oneill.basic_field"] = basicness_residual(pc, B)
            res["oneill.A_horizontal_argument"] = max_gnorm(G, val(pc.A(E, Z)))
        ABB = val(pc.A(B, B))
        res["oneill.A_alternating"] = max_gnorm(G, ABB + np.swapaxes(ABB, 1, 2))
        res["oneill.A_bracket"] = max_gnorm(G, ABB - 0.5 * (pc.V.value @ val(bracket(B, B)).reshape(s.m, -1)
                                                           ).reshape(ABB.shape))
        res["oneill.split_horizontal_horizontal"] = max_gnorm(
            G, val(pc.nabla(B, B)) - val(pc.hnabla(B, B)) - ABB)
        res["oneill.T_horizontal_argument"] = max_gnorm(G, val(pc.T(B, Z)))
        Z0 = Z.value
        for name, tz in (("oneill.T_skew", val(pc.T(Z, Z))), ("oneill.A_skew", val(pc.A(Z, Z)))):
            gz = np.einsum("iab,ij,jc->abc", tz, G, Z0)
            res[name] = float(np.max(np.abs(gz + np.swapaxes(gz, 1, 2))))
        for name, r in res.items():
            rep.add(CheckResult.make(name, r, 0.0, r, tol, sample=k))
        if E is None:
            for name in ("oneill.T_symmetric", "oneill.split_vertical_vertical",
                         "oneill.split_vertical_horizontal", "oneill.split_horizontal_vertical",
                         "oneill.basic_field", "oneill.A_horizontal_argument"):
                rep.add(CheckResult.premise(name, tol, "fibers are points", sample=k))
    return rep
