"""Slant operators, spectral splitting of the vertical distribution, classification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import jets
from .errors import (MissingComplexStructure, NotBiSlant, NotInDistribution, PivotDegenerate,
                     ZeroVector)
from .jets import Jet
from .report import CheckResult, VerificationReport
from .submersion import (LocalSubmersion, SubmersionScenario, gram_schmidt, greedy_pivots,
                         projected_frame, scenario_tolerance)

CLUSTER_TOL = 1e-6
CONSTANCY_TOL = 1e-5
AXIS_WEIGHT = 0.1

INVARIANT = "invariant"
ANTI_INVARIANT = "anti_invariant"
SEMI_INVARIANT = "semi_invariant"
PROPER_SLANT = "proper_slant"
SEMI_SLANT = "semi_slant"
HEMI_SLANT = "hemi_slant"
PROPER_BI_SLANT = "proper_bi_slant"
CLASSES = (INVARIANT, ANTI_INVARIANT, SEMI_INVARIANT, PROPER_SLANT, SEMI_SLANT, HEMI_SLANT,
           PROPER_BI_SLANT)


@dataclass(frozen=True)
class SlantOperators:
    """``P, F, phi, omega`` as m x m matrices at a point (zero off their domains)."""

    P: np.ndarray
    F: np.ndarray
    phi: np.ndarray
    omega: np.ndarray


@dataclass(frozen=True)
class DistributionBasis:
    label: str
    frame: np.ndarray  # (m, dim), g-orthonormal columns
    dim: int

    def vectors(self) -> list[np.ndarray]:
        return [self.frame[:, j].copy() for j in range(self.dim)]


@dataclass(frozen=True)
class SlantAngles:
    theta1: float | None
    theta2: float | None
    cos2_1: float | None
    cos2_2: float | None
    constancy_residual: float

    @property
    def sorted(self) -> tuple[float, ...]:
        return tuple(sorted(t for t in (self.theta1, self.theta2) if t is not None))


@dataclass(frozen=True)
class Cluster:
    cos2: float
    dim: int
    eigvals: tuple[float, ...]

    @property
    def theta(self) -> float:
        return cos2_to_angle(self.cos2)


def cos2_to_angle(c2: float) -> float:
    """Angle from its squared cosine, snapping to 0 and pi/2 within the cluster tolerance."""
    c2 = min(max(c2, 0.0), 1.0)
    if c2 <= CLUSTER_TOL:
        return math.pi / 2
    if c2 >= 1.0 - CLUSTER_TOL:
        return 0.0
    return math.acos(math.sqrt(c2))


def _angle_kind(c2: float) -> str:
    if c2 >= 1.0 - CLUSTER_TOL:
        return "zero"
    if c2 <= CLUSTER_TOL:
        return "right"
    return "proper"


def _require_J(s: SubmersionScenario) -> None:
    if not s.has_J:
        raise MissingComplexStructure(f"scenario {s.id!r} has no complex structure")


def slant_operators(s: SubmersionScenario, p) -> SlantOperators:
    _require_J(s)
    loc = LocalSubmersion(s, p, order=1)
    return SlantOperators(*(jets.value(x).copy() for x in (loc.P, loc.F, loc.phi, loc.omega)))


def frame_matrix(loc: LocalSubmersion, frame: np.ndarray, op: np.ndarray) -> np.ndarray:
    """Matrix of ``op`` restricted to an orthonormal frame (coefficients ``E^T g op E``)."""
    return frame.T @ loc.g0 @ op @ frame


def cluster_eigenvalues(vals: np.ndarray, tol: float = CLUSTER_TOL) -> list[Cluster]:
    vals = np.sort(np.clip(vals, 0.0, 1.0))
    groups: list[list[float]] = []
    for v in vals:
        if groups and v - groups[-1][-1] <= tol:
            groups[-1].append(float(v))
        else:
            groups.append([float(v)])
    return [Cluster(float(np.mean(g)), len(g), tuple(g)) for g in groups]


def _lagrange_projector(Q, V, c: float, others: Sequence[float]):
    """Spectral projector of ``Q`` on the vertical bundle for the eigenvalue ``c``."""
    out = V
    for d in others:
        out = jets.matmul(out, Q - d * V) * (1.0 / (c - d))
    return out


class SlantStructure:
    """Spectral split of the vertical distribution fixed at the scenario anchor.

    ``D_theta1`` is the cluster whose eigenspace reaches the lowest coordinate
    axis; the other cluster is ``D_theta2``.  A single cluster is reported as
    ``D_theta2`` with ``m1 = 0``.  Suites that need two vertical
    pieces use :meth:`pair`, which sub-splits a single cluster into a
    ``P``-invariant plane and its complement.
    """

    def __init__(self, s: SubmersionScenario, samples: Sequence | None = None,
                 cluster_tol: float = CLUSTER_TOL, constancy_tol: float | None = None):
        _require_J(s)
        self.s = s
        self.cluster_tol = cluster_tol
        self.constancy_tol = (CONSTANCY_TOL if constancy_tol is None
                              else constancy_tol)
        anchor = LocalSubmersion(s, s.anchor, order=1)
        self.k = s.k
        if self.k:
            E = anchor.vframe.value
            Pk = frame_matrix(anchor, E, anchor.P.value)
            vals = np.linalg.eigvalsh(-Pk @ Pk)
        else:
            vals = np.zeros(0)
        self.anchor_eigvals = np.clip(vals, 0.0, 1.0)
        clusters = cluster_eigenvalues(vals, cluster_tol)
        if len(clusters) > 2:
            raise NotBiSlant(f"{len(clusters)} eigenvalue clusters of -P^2: {[c.cos2 for c in clusters]}")
        self.clusters = clusters
        self._label(anchor)
        self._fix_pivots(anchor)
        self.constancy_residual = 0.0
        if samples is not None:
            self.check_constancy(samples)

    # construction ------------------------------------------------------------
    def _label(self, anchor: LocalSubmersion) -> None:
        if len(self.clusters) == 2:
            projs = [jets.value(self._projector_for(anchor, c)) for c in self.clusters]
            first_axis = []
            for P in projs:
                d = np.diag(P)
                hits = np.nonzero(d > AXIS_WEIGHT)[0]
                first_axis.append(int(hits[0]) if hits.size else self.s.m)
            order = sorted(range(2), key=lambda i: (first_axis[i], self.clusters[i].cos2))
            self.d1, self.d2 = self.clusters[order[0]], self.clusters[order[1]]
        elif len(self.clusters) == 1:
            self.d1, self.d2 = None, self.clusters[0]
        else:
            self.d1 = self.d2 = None

    def _cluster_list(self) -> list[Cluster]:
        return [c for c in (self.d1, self.d2) if c is not None]

    def _projector(self, loc: LocalSubmersion, i: int):
        return self._projector_for(loc, self._cluster_list()[i])

    def _projector_for(self, loc: LocalSubmersion, c: Cluster):
        others = [d.cos2 for d in self.clusters if d is not c]
        Q = -jets.matmul(loc.P, loc.P)
        return _lagrange_projector(Q, loc.V, c.cos2, others)

    def _fix_pivots(self, anchor: LocalSubmersion) -> None:
        g = anchor.g0
        self.pivots = []
        for i, c in enumerate(self._cluster_list()):
            self.pivots.append(greedy_pivots(jets.value(self._projector(anchor, i)), g, c.dim))
        self.sub_pivots = None
        if len(self._cluster_list()) == 1 and self.k >= 2:
            first, _ = self._sub_first(anchor)
            proj2 = anchor.V.value - first @ first.T @ g
            self.sub_pivots = greedy_pivots(proj2, g, self.k - first.shape[1])

    def _sub_first(self, loc: LocalSubmersion):
        """First piece of the sub-split: ``span(e, Pe)`` for the leading frame vector."""
        E = self.frames(loc)["D_theta2"]
        e = E[:, 0]
        Pe = jets.matmul(loc.P, e)
        n2 = float(jets.value(jets.einsum("i,ij,j->", Pe, loc.G, Pe)))
        if n2 > self.cluster_tol:
            fr = gram_schmidt([e, Pe], loc.G)
        else:
            fr = E[:, 0:1]
        return jets.value(fr), fr

    # frames ------------------------------------------------------------------
    def frames(self, loc: LocalSubmersion) -> dict:
        """Frame jets of ``D_theta1`` and ``D_theta2`` (None when empty)."""
        out = {"D_theta1": None, "D_theta2": None}
        if not self.clusters:
            return out
        labels = ["D_theta1", "D_theta2"] if self.d1 is not None else ["D_theta2"]
        for i, lab in enumerate(labels):
            if len(self.clusters) == 1:
                out[lab] = loc.vframe
            else:
                out[lab] = projected_frame(self._projector(loc, i), loc.G, self.pivots[i])
        return out

    def pair(self, loc: LocalSubmersion):
        """Two orthogonal vertical pieces with their squared cosines, or None.

        Returns ``(X_frame, U_frame, cos2_x, cos2_u, sub_split)``.
        """
        if self.d1 is not None:
            fr = self.frames(loc)
            return fr["D_theta1"], fr["D_theta2"], self.d1.cos2, self.d2.cos2, False
        if self.sub_pivots is None:
            return None
        _, first = self._sub_first(loc)
        rest = loc.V - jets.einsum("ia,ja,jk->ik", first, first, loc.G)
        second = projected_frame(rest, loc.G, self.sub_pivots)
        return first, second, self.d2.cos2, self.d2.cos2, True

    # derived data ------------------------------------------------------------
    @property
    def m1(self) -> int:
        return 0 if self.d1 is None else self.d1.dim

    @property
    def m2(self) -> int:
        return 0 if self.d2 is None else self.d2.dim

    @property
    def angles(self) -> SlantAngles:
        c1 = None if self.d1 is None else self.d1.cos2
        c2 = None if self.d2 is None else self.d2.cos2
        return SlantAngles(None if c1 is None else cos2_to_angle(c1),
                           None if c2 is None else cos2_to_angle(c2), c1, c2, self.constancy_residual)

    @property
    def classification(self) -> str:
        cl = self._cluster_list()
        if not cl:
            return INVARIANT
        if len(cl) == 1:
            return {"zero": INVARIANT, "right": ANTI_INVARIANT, "proper": PROPER_SLANT}[_angle_kind(cl[0].cos2)]
        kinds = sorted(_angle_kind(c.cos2) for c in cl)
        table = {("right", "zero"): SEMI_INVARIANT, ("proper", "zero"): SEMI_SLANT,
                 ("proper", "right"): HEMI_SLANT, ("proper", "proper"): PROPER_BI_SLANT}
        if tuple(kinds) not in table:
            raise NotBiSlant(f"clusters with angle kinds {kinds} do not form a recognised class")
        return table[tuple(kinds)]

    def check_constancy(self, samples: Sequence) -> float:
        """Max drift of the -P^2 spectrum and of each cluster eigen-relation over samples."""
        worst = 0.0
        for p in samples:
            loc = LocalSubmersion(self.s, p, order=1)
            if not self.k:
                continue
            E = loc.vframe.value
            Pk = frame_matrix(loc, E, loc.P.value)
            vals = np.sort(np.clip(np.linalg.eigvalsh(-Pk @ Pk), 0.0, 1.0))
            worst = max(worst, float(np.max(np.abs(vals - np.sort(self.anchor_eigvals)))))
            P0 = loc.P.value
            for lab, fr in self.frames(loc).items():
                if fr is None:
                    continue
                c2 = (self.d1 if lab == "D_theta1" else self.d2).cos2
                X = jets.value(fr)
                r = P0 @ (P0 @ X) + c2 * X
                worst = max(worst, float(np.max(np.sqrt(np.einsum("ia,ij,ja->a", r, loc.g0, r)))))
        self.constancy_residual = worst
        if worst > self.constancy_tol:
            raise NotBiSlant(f"slant eigenvalues drift by {worst:.3g} across samples")
        return worst

    def summary(self) -> dict:
        a = self.angles
        return {"classification": self.classification, "m1": self.m1, "m2": self.m2,
                "theta1": a.theta1, "theta2": a.theta2, "cos2_theta1": a.cos2_1, "cos2_theta2": a.cos2_2,
                "constancy_residual": a.constancy_residual,
                "anchor_eigenvalues": sorted(float(v) for v in self.anchor_eigvals)}


def split_vertical(s: SubmersionScenario, samples: Sequence, constancy_tol: float | None = None):
    """Return ``(D_theta1, D_theta2, SlantAngles)`` with frames at the anchor."""
    st = SlantStructure(s, samples, constancy_tol=constancy_tol)
    dists = distributions(st, s.anchor)
    return dists.get("D_theta1"), dists.get("D_theta2"), st.angles


def distributions(st: SlantStructure, p) -> dict[str, DistributionBasis]:
    loc = LocalSubmersion(st.s, p, order=1)
    out = {}
    for lab, fr in st.frames(loc).items():
        if fr is not None:
            v = jets.value(fr)
            out[lab] = DistributionBasis(lab, v.copy(), v.shape[1])
    vf = loc.vframe
    out["vertical"] = DistributionBasis("vertical", np.zeros((st.s.m, 0)) if vf is None else vf.value.copy(), st.s.k)
    out["horizontal"] = DistributionBasis("horizontal", loc.hframe.value.copy(), st.s.n)
    return out


def _gnorm(g, v) -> float:
    return float(np.sqrt(max(v @ g @ v, 0.0)))


def slant_angle(s: SubmersionScenario, D: DistributionBasis, p, X, tol: float = 1e-8) -> float:
    """Angle between ``JX`` and ``D``; cross-checked against ``P^2 X = -cos^2 X``."""
    _require_J(s)
    loc = LocalSubmersion(s, p, order=1)
    g = loc.g0
    X = np.asarray(X, dtype=float)
    nx = _gnorm(g, X)
    if nx <= 1e-14:
        raise ZeroVector("slant angle of a zero vector")
    E = D.frame
    proj = E @ (E.T @ g @ X)
    if _gnorm(g, X - proj) > tol * max(1.0, nx):
        raise NotInDistribution(f"vector is not in {D.label}")
    JX = loc.J.value @ X
    c = min(_gnorm(g, E @ (E.T @ g @ JX)) / _gnorm(g, JX), 1.0)
    P = loc.P.value
    resid = _gnorm(g, P @ (P @ X) + c * c * X) / nx
    if resid > max(tol, 1e-6):
        raise NotBiSlant(f"{D.label} is not slant at this point (eigen residual {resid:.3g})")
    return cos2_to_angle(c * c)


def mu_distribution(s: SubmersionScenario, p, st: SlantStructure | None = None) -> tuple[DistributionBasis, dict]:
    """``mu``: complement of ``F(ker pi_*)`` in the horizontal space, with its checks."""
    _require_J(s)
    loc = LocalSubmersion(s, p, order=1)
    g = loc.g0
    H = loc.H.value
    cols = []
    if s.k:
        FE = loc.F.value @ loc.vframe.value
        for j in range(FE.shape[1]):
            v = FE[:, j].copy()
            for e in cols:
                v -= (e @ g @ v) * e
            n = _gnorm(g, v)
            if n > 1e-8:
                cols.append(v / n)
    proj = H - sum((np.outer(e, e) @ g for e in cols), np.zeros_like(H))
    basis = []
    for j in range(s.m):
        v = proj[:, j].copy()
        for e in basis:
            v -= (e @ g @ v) * e
        n = _gnorm(g, v)
        if n > 1e-8:
            basis.append(v / n)
    dim = s.n - len(cols)
    basis = basis[:dim]
    frame = np.stack(basis, axis=1) if basis else np.zeros((s.m, 0))
    phi_res = omega_res = 0.0
    for xi in basis:
        phi_res = max(phi_res, _gnorm(g, loc.phi.value @ xi))
        w = loc.omega.value @ xi
        omega_res = max(omega_res, _gnorm(g, w - frame @ (frame.T @ g @ w)))
    return DistributionBasis("mu", frame, dim), {"phi_mu": phi_res, "omega_mu_in_mu": omega_res,
                                                 "dim_F_vertical": len(cols)}


def classify(s: SubmersionScenario, samples: Sequence | None = None) -> tuple[str, dict]:
    """Classification and ``(m1, m2, theta1, theta2)``."""
    st = SlantStructure(s, samples)
    return st.classification, st.summary()


# algebraic identities on the slant pieces -------------------------------------------

_IDENTITIES = ("P_squared", "phi_F", "P_squared_plus_phi_F", "F_P_plus_omega_F")
_PIECES = {"D_theta1": "D1", "D_theta2": "D2"}


def verify_slant_algebra(s: SubmersionScenario, samples: Sequence, tol: float | None = None,
                             st: SlantStructure | None = None) -> VerificationReport:
    """The eight algebraic identities between ``P, F, phi, omega`` on each slant piece."""
    tol = scenario_tolerance(s) if tol is None else tol
    st = SlantStructure(s) if st is None else st
    rep = VerificationReport(s.id, "lemma3.2", engine=s.diff_engine, tolerance=tol)
    cos2 = {"D_theta1": None if st.d1 is None else st.d1.cos2, "D_theta2": None if st.d2 is None else st.d2.cos2}
    for k, p in enumerate(samples):
        loc = LocalSubmersion(s, p, order=1)
        g = loc.g0
        P, F, phi, om = (jets.value(x) for x in (loc.P, loc.F, loc.phi, loc.omega))
        frames = st.frames(loc)
        for kind, lab in ((kind, lab) for kind in _IDENTITIES for lab in _PIECES):
            name = f"slant_algebra.{kind}.{_PIECES[lab]}"
            fr = frames[lab]
            if fr is None:
                rep.add(CheckResult.premise(name, tol, f"{lab} is empty", sample=k))
                continue
            X = jets.value(fr)
            c2 = cos2[lab]
            if kind == "P_squared":
                lhs, rhs = P @ P @ X, -c2 * X
            elif kind == "phi_F":
                lhs, rhs = phi @ F @ X, -(1.0 - c2) * X
            elif kind == "P_squared_plus_phi_F":
                lhs, rhs = P @ P @ X + phi @ F @ X, -X
            else:
                lhs, rhs = F @ P @ X + om @ F @ X, np.zeros_like(X)
            r = lhs - rhs
            res = float(np.max(np.sqrt(np.einsum("ia,ij,ja->a", r, g, r))))
            rep.add(CheckResult.make(name, lhs.T, rhs.T, res, tol, sample=k, context={"distribution": lab}))
    return rep
