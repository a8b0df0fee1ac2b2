"""Submersions: differential, vertical/horizontal projectors, frames, pushforward."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import jets
from .errors import NotHorizontal, OutOfDomain, PivotDegenerate, RankDeficient
from .jets import Jet
from .report import CheckResult
from .tensor_engine import (DEFAULT_FD_STEP, DUAL, CallableField, ConnectionContext, Field,
                            LocalGeometry, ManifoldModel, check_metric_value, taylor)

RANK_TOL = 1e-10
PIVOT_TOL = 1e-8
TIE_TOL = 1e-9


@dataclass(frozen=True)
class ProjectorPair:
    vertical: np.ndarray
    horizontal: np.ndarray


def greedy_pivots(proj: np.ndarray, g: np.ndarray, count: int) -> list[int]:
    """Columns of ``proj`` chosen by greedy g-Gram-Schmidt (largest residual first).

    Ties within a relative 1e-9 prefer the lowest index.  Returned sorted.
    """
    m = proj.shape[0]
    chosen: list[int] = []
    basis: list[np.ndarray] = []
    for _ in range(count):
        best, best_norm = None, -1.0
        for j in range(m):
            if j in chosen:
                continue
            v = proj[:, j].copy()
            for e in basis:
                v -= (e @ g @ v) * e
            nrm = float(np.sqrt(max(v @ g @ v, 0.0)))
            if nrm > best_norm * (1.0 + TIE_TOL) + 1e-300:
                best, best_norm = j, nrm
        if best is None or best_norm < PIVOT_TOL:
            raise RankDeficient("projector rank below the expected dimension at the anchor")
        v = proj[:, best].copy()
        for e in basis:
            v -= (e @ g @ v) * e
        basis.append(v / np.sqrt(v @ g @ v))
        chosen.append(best)
    return sorted(chosen)


def gram_schmidt(cols: Sequence, G, tol: float = PIVOT_TOL):
    """g-orthonormalize columns (jets or arrays) in the given order; returns (m, r)."""
    out = []
    for v in cols:
        for e in out:
            v = v - jets.einsum("i,ij,j->", e, G, v) * e
        n2 = jets.einsum("i,ij,j->", v, G, v)
        if float(jets.value(n2)) < tol * tol:
            raise PivotDegenerate("frame pivot lost rank; re-anchor required")
        out.append(v * jets.reciprocal(jets.sqrt(n2)))
    if not out:
        return None
    if any(isinstance(e, Jet) for e in out):
        basis = next(e.basis for e in out if isinstance(e, Jet))
        order = min(e.order for e in out if isinstance(e, Jet) and not e.const) if any(
            isinstance(e, Jet) and not e.const for e in out) else basis.order
        return jets.stack(out, basis, order).transpose(1, 0)
    return np.stack(out, axis=1)


def projected_frame(proj, G, pivots: Sequence[int]):
    """Frame from pivot columns of a projector field, Gram-Schmidt in pivot order."""
    if not pivots:
        return None
    return gram_schmidt([proj[:, j] for j in pivots], G)


class PushforwardMetric(Field):
    """Base metric induced by the submersion, evaluated through a local section."""

    def __init__(self, total: ManifoldModel, mapping: Field, anchor, engine: str = DUAL,
                 fd_step: float = DEFAULT_FD_STEP):
        self.total = total
        self.mapping = mapping
        self.anchor = np.asarray(anchor, dtype=float)
        self.engine = engine
        self.fd_step = fd_step
        self.arity = mapping.shape[0]
        self.shape = (self.arity, self.arity)

    def sources(self):
        return "pushforward"

    def _jac(self, x):
        return jets.grad(taylor(self.mapping, x, 1, self.engine, self.fd_step)).value

    def metric_at(self, x) -> np.ndarray:
        D = self._jac(x)
        Ginv = np.linalg.inv(self.total.metric(x))
        return np.linalg.inv(D @ Ginv @ D.T)

    def section(self, q, start=None, iters: int = 60) -> np.ndarray:
        """A point of the fiber over ``q`` reached by Gauss-Newton from ``start``."""
        x = self.anchor.copy() if start is None else np.asarray(start, dtype=float).copy()
        q = np.asarray(q, dtype=float)
        for _ in range(iters):
            r = q - self.mapping(x)
            if np.max(np.abs(r)) < 1e-14 * (1.0 + np.max(np.abs(q))):
                break
            D = self._jac(x)
            Ginv = np.linalg.inv(self.total.metric(x))
            L = Ginv @ D.T @ np.linalg.inv(D @ Ginv @ D.T)
            x = x + L @ r
        return x

    def __call__(self, q) -> np.ndarray:
        return self.metric_at(self.section(q))


@dataclass(frozen=True, eq=False)
class SubmersionScenario:
    """A map ``pi: M -> N`` between two models with differentiation settings."""

    total: ManifoldModel
    base: ManifoldModel
    map: Field
    diff_engine: str = DUAL
    fd_step: float = DEFAULT_FD_STEP
    anchor: np.ndarray | None = None
    id: str = "custom"

    def __post_init__(self):
        anchor = self.total.domain.mean(axis=1) if self.anchor is None else np.asarray(self.anchor, dtype=float)
        anchor = np.array(anchor, dtype=float)
        anchor.setflags(write=False)
        object.__setattr__(self, "anchor", anchor)
        if self.map.shape != (self.base.dim,):
            raise ValueError("map must have one component per base coordinate")
        if self.base.dim >= self.total.dim + 1:
            raise ValueError("base dimension must not exceed total dimension")

    @property
    def m(self) -> int:
        return self.total.dim

    @property
    def n(self) -> int:
        return self.base.dim

    @property
    def k(self) -> int:
        return self.total.dim - self.base.dim

    @property
    def has_J(self) -> bool:
        return self.total.complex_structure is not None

    @property
    def pushforward_base(self) -> bool:
        return isinstance(self.base.metric, PushforwardMetric)

    @cached_property
    def is_exact(self) -> bool:
        """Affine map, constant total metric and constant J: all derivatives vanish."""
        J = self.total.complex_structure
        return bool(self.map.is_affine and self.total.metric.is_constant and (J is None or J.is_constant))

    @cached_property
    def total_ctx(self) -> ConnectionContext:
        return ConnectionContext(self.total, self.diff_engine, self.fd_step)

    @cached_property
    def base_ctx(self) -> ConnectionContext:
        return ConnectionContext(self.base, self.diff_engine, self.fd_step)

    def with_engine(self, engine: str) -> "SubmersionScenario":
        base = self.base
        if isinstance(base.metric, PushforwardMetric):
            base = ManifoldModel(base.dim, base.domain,
                                 PushforwardMetric(self.total, self.map, self.anchor, engine, self.fd_step))
        return SubmersionScenario(self.total, base, self.map, engine, self.fd_step, self.anchor, self.id)

    @cached_property
    def anchor_pivots(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Pivot columns for the vertical and horizontal frames, fixed at the anchor."""
        loc = LocalSubmersion(self, self.anchor, order=1)
        g = loc.G.value
        vert = greedy_pivots(loc.V.value, g, self.k) if self.k else []
        hor = greedy_pivots(loc.H.value, g, self.n)
        return tuple(vert), tuple(hor)

    def local(self, p, order: int = 3) -> "LocalSubmersion":
        return LocalSubmersion(self, p, order)


class LocalSubmersion:
    """Jets of the submersion machinery at one point of the total space.

    ``order`` is the leaf Taylor order; derived objects lose one order per
    derivative (projectors and frames have order ``order - 1``).
    """

    def __init__(self, s: SubmersionScenario, p, order: int = 3):
        self.s = s
        self.geo = LocalGeometry(s.total_ctx, p, order)
        self.p = self.geo.p
        self.order = order
        self.basis = self.geo.basis
        self.G = self.geo.g
        self.Ginv = self.geo.ginv
        self.pi = s.total_ctx.taylor(s.map, self.p, order)
        self.D = jets.grad(self.pi)  # (n, m)
        D0 = self.D.value
        sv = np.linalg.svd(D0, compute_uv=False)
        if sv.size < s.n or sv[-1] <= RANK_TOL * max(sv[0], 1.0):
            raise RankDeficient(f"rank of the differential below {s.n} at {self.p.tolist()}")
        Gi = self.Ginv.truncate(self.D.order)
        M = jets.einsum("ai,ij,bj->ab", self.D, Gi, self.D)
        self.gN_pull = jets.inv(M)  # pushforward metric (D G^-1 D^T)^-1
        self.L = jets.einsum("ij,aj,ab->ib", Gi, self.D, self.gN_pull)  # horizontal lift (m, n)
        self.H = jets.matmul(self.L, self.D)
        self.V = np.eye(s.m) - self.H

    # basic data -------------------------------------------------------------
    @property
    def m(self) -> int:
        return self.s.m

    @property
    def gamma(self) -> Jet:
        return self.geo.gamma

    @property
    def J(self) -> Jet | None:
        return self.geo.J

    @property
    def g0(self) -> np.ndarray:
        return self.G.value

    @cached_property
    def q(self) -> np.ndarray:
        return self.pi.value.copy()

    @cached_property
    def vframe(self):
        """Vertical orthonormal frame fields (m, k) or None when fibers are points."""
        piv, _ = self.s.anchor_pivots
        return projected_frame(self.V, self.G, piv)

    @cached_property
    def hframe(self):
        _, piv = self.s.anchor_pivots
        return projected_frame(self.H, self.G, piv)

    def lift(self, c) -> Jet:
        """Basic fields: horizontal lifts ``L(x) c`` of constant base vectors."""
        return jets.matmul(self.L, np.asarray(c, dtype=float))

    @cached_property
    def basic_hframe(self) -> Jet:
        """Basic fields agreeing with the horizontal frame at the base point."""
        return self.lift(self.D.value @ jets.value(self.hframe))

    # slant operators as matrix fields ----------------------------------------
    @cached_property
    def P(self) -> Jet:
        return jets.matmul(jets.matmul(self.V, self.J), self.V)

    @cached_property
    def F(self) -> Jet:
        return jets.matmul(jets.matmul(self.H, self.J), self.V)

    @cached_property
    def phi(self) -> Jet:
        return jets.matmul(jets.matmul(self.V, self.J), self.H)

    @cached_property
    def omega(self) -> Jet:
        return jets.matmul(jets.matmul(self.H, self.J), self.H)

    # base ---------------------------------------------------------------------
    def base_metric(self) -> np.ndarray:
        q = self.q
        if not self.s.base.contains(q):
            raise OutOfDomain(f"image point {q.tolist()} outside base domain")
        gN = self.s.base.metric(q)
        check_metric_value(gN, where=f" on base at {q.tolist()}")
        return gN

    @cached_property
    def base_local(self) -> LocalGeometry:
        return LocalGeometry(self.s.base_ctx, self.q, min(self.order, 3))

    def inner(self, a, b) -> float:
        return float(np.asarray(a) @ self.g0 @ np.asarray(b))


# public operations ------------------------------------------------------------------

def differential(s: SubmersionScenario, p) -> np.ndarray:
    """Jacobian of the map at ``p``."""
    s.total.check_point(p)
    return jets.grad(s.total_ctx.taylor(s.map, p, 1)).value.copy()


def projectors(s: SubmersionScenario, p) -> ProjectorPair:
    loc = LocalSubmersion(s, p, order=1)
    return ProjectorPair(loc.V.value.copy() if isinstance(loc.V, Jet) else loc.V, loc.H.value.copy())


def vertical_frame(s: SubmersionScenario, p) -> list[np.ndarray]:
    fr = LocalSubmersion(s, p, order=1).vframe
    return [] if fr is None else [fr.value[:, j].copy() for j in range(fr.shape[1])]


def horizontal_frame(s: SubmersionScenario, p) -> list[np.ndarray]:
    fr = LocalSubmersion(s, p, order=1).hframe
    return [fr.value[:, j].copy() for j in range(fr.shape[1])]


def pushforward(s: SubmersionScenario, p, X, tol: float = 1e-9) -> np.ndarray:
    """``d pi(p) X`` for a horizontal vector ``X``."""
    loc = LocalSubmersion(s, p, order=1)
    X = np.asarray(X, dtype=float)
    vx = loc.V.value @ X
    if np.sqrt(max(loc.inner(vx, vx), 0.0)) > tol * max(1.0, np.sqrt(max(loc.inner(X, X), 0.0))):
        raise NotHorizontal("vector has a vertical component")
    return loc.D.value @ X


def check_riemannian_submersion(s: SubmersionScenario, samples: Sequence, seed: int = 0, tol: float = 1e-9,
                                trials: int = 8) -> CheckResult:
    """Rank condition and isometry of ``d pi`` on horizontal vectors."""
    rng = np.random.default_rng(seed)
    worst, lhs, rhs, where = 0.0, 0.0, 0.0, None
    ranks = []
    for k, p in enumerate(samples):
        try:
            loc = LocalSubmersion(s, p, order=1)
        except RankDeficient:
            ranks.append(int(np.linalg.matrix_rank(differential(s, p))))
            worst, where = max(worst, float(s.n - ranks[-1])), k
            continue
        ranks.append(s.n)
        gN = loc.base_metric()
        H, D, g = loc.H.value, loc.D.value, loc.g0
        for _ in range(trials):
            X = H @ rng.standard_normal(s.m)
            X = X / np.sqrt(X @ g @ X)
            dX = D @ X
            a, b = dX @ gN @ dX, X @ g @ X
            if abs(a - b) > worst:
                worst, lhs, rhs, where = abs(a - b), a, b, k
    return CheckResult.make("submersion.riemannian", lhs, rhs, worst, tol, sample=where,
                            context={"min_rank": min(ranks) if ranks else None, "expected_rank": s.n})


def check_pushforward_consistency(s: SubmersionScenario, samples: Sequence, seed: int = 0,
                                  tol: float = 1e-6, fiber_points: int = 8) -> CheckResult:
    """Fiber independence of the induced base metric at ``fiber_points`` per sample."""
    metric = s.base.metric
    if not isinstance(metric, PushforwardMetric):
        raise ValueError("base metric is explicit")
    rng = np.random.default_rng(seed)
    width = s.total.domain[:, 1] - s.total.domain[:, 0]
    worst, where = 0.0, None
    for k, p in enumerate(samples):
        loc = LocalSubmersion(s, p, order=1)
        q = loc.q
        ref = jets.value(loc.gN_pull)
        for _ in range(fiber_points):
            v = loc.V.value @ rng.standard_normal(s.m)
            x = np.asarray(p) + 0.05 * float(np.min(width)) * v / max(np.linalg.norm(v), 1e-300)
            x = metric.section(q, start=x)
            if not s.total.contains(x):
                continue
            r = float(np.max(np.abs(metric.metric_at(x) - ref)))
            if r > worst:
                worst, where = r, k
    return CheckResult.make("submersion.pushforward_fiber_independence", worst, 0.0, worst, tol, sample=where)


def scenario_tolerance(s: SubmersionScenario) -> float:
    """Default residual tolerance from the scenario's geometry and engine."""
    fd = s.diff_engine != DUAL or s.pushforward_base
    if s.is_exact:
        return 1e-6 if fd else 1e-9
    return 1e-4 if fd else 1e-6


def scenario_samples(s: SubmersionScenario, n: int, seed: int) -> list[np.ndarray]:
    """The anchor followed by ``n`` seeded points of the 5%-inset domain box."""
    from .tensor_engine import sample_points
    return [np.array(s.anchor)] + list(sample_points(s.total.domain, n, seed))
