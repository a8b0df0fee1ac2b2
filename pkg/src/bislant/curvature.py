"""Curvature of the total space in terms of fiber, base and O'Neill tensors.

All relations are evaluated on the orthonormal vertical frame ``e`` and
horizontal frame ``E`` at each sample point.  Base curvature ``R*`` is taken
at the image point on pushed-forward horizontal vectors.
"""

from __future__ import annotations

from itertools import combinations
from typing import Sequence

import numpy as np

from . import jets
from .errors import MissingComplexStructure, NotVertical
from .oneill import OneillContext, PointCalculus
from .report import CheckResult, VerificationReport

NONDEGENERATE = 1e-8


def _r4(R, *vs):
    return np.einsum("ijkl,ia,jb,kc,ld->abcd", R, *vs, optimize=True)


class FrameCurvature:
    """Frame components of every tensor entering the curvature relations at one point."""

    def __init__(self, pc: PointCalculus):
        self.pc = pc
        loc = pc.loc
        self.G = G = pc.g0
        self.e = loc.vframe.value if loc.vframe is not None else np.zeros((pc.m, 0))
        self.h = h = loc.hframe.value
        e = self.e
        self.R = pc.R
        Rs = loc.base_local.riemann
        self.D0 = loc.D.value
        self.Rstar_coord = Rs
        self.Rs = _r4(Rs, *(self.D0 @ h,) * 4)
        self.Rh = pc.Rhat_frame if pc.Rhat_frame is not None else np.zeros((0,) * 4)
        T, A = pc.Tc, pc.Ac
        self.Tee = np.einsum("ijk,ja,kb->iab", T, e, e)
        self.The = np.einsum("ijk,ja,kx->iax", T, e, h)       # T_{e_a} E_x
        self.Ahh = np.einsum("ijk,jx,ky->ixy", A, h, h)
        self.Ahe = np.einsum("ijk,jx,ka->ixa", A, h, e)       # A_{E_x} e_a
        self.DTeee = np.einsum("iejk,ea,jb,kc->iabc", pc.DTc, e, e, e)
        self.DThee = np.einsum("iejk,ex,ja,kb->ixab", pc.DTc, h, e, e)
        self.DAhhh = np.einsum("iejk,ez,jx,ky->izxy", pc.DAc, h, h, h)
        self.DAehh = np.einsum("iejk,ea,jx,ky->iaxy", pc.DAc, e, h, h)

    def gg(self, X, Y):
        return np.einsum("iab,ij,jcd->abcd", X, self.G, Y)

    # relations: each returns (lhs, rhs) arrays -------------------------------------
    def vvvv(self):
        e = self.e
        W = self.gg(self.Tee, self.Tee)                      # [a, d, b, c] = g(T_a e_d, T_b e_c)
        rhs = self.Rh - np.einsum("adbc->abcd", W) + np.einsum("bdac->abcd", W)
        return _r4(self.R, e, e, e, e), rhs

    def vvvh(self):
        e, h = self.e, self.h
        gh = np.einsum("iabc,ij,jx->abcx", self.DTeee, self.G, h)
        return _r4(self.R, e, e, e, h), gh - gh.transpose(1, 0, 2, 3)

    def hhhv(self, literal: bool = False):
        e, h = self.e, self.h
        t1 = -np.einsum("izxy,ij,ja->xyza", self.DAhhh, self.G, e)
        M = np.einsum("ixy,ij,jaz->xyaz", self.Ahh, self.G, self.The)  # g(A_x E_y, T_a E_z)
        rhs = t1 - np.einsum("xyaz->xyza", M) + np.einsum("zxay->xyza", M)
        if not literal:
            rhs = rhs + np.einsum("yzax->xyza", M)
        return _r4(self.R, h, h, h, e), rhs

    def hhhh(self):
        h = self.h
        N = self.gg(self.Ahh, self.Ahh)
        rhs = self.Rs + 2 * N - np.einsum("yzxw->xyzw", N) + np.einsum("xzyw->xyzw", N)
        return _r4(self.R, h, h, h, h), rhs

    def _mixed(self):
        Q = np.einsum("iaxy,ij,jb->xyab", self.DAehh, self.G, self.e)  # g((nabla_a A)(x, y), e_b)
        AA = self.gg(self.Ahe, self.Ahe)                                 # [x, a, y, b]
        TT = self.gg(self.The, self.The)                                 # [a, x, b, y]
        return Q, AA, TT

    def hhvv(self):
        e, h = self.e, self.h
        Q, AA, TT = self._mixed()
        rhs = (-Q + np.einsum("xyba->xyab", Q) - np.einsum("xayb->xyab", AA) + np.einsum("xbya->xyab", AA)
               + np.einsum("axby->xyab", TT) - np.einsum("bxay->xyab", TT))
        return _r4(self.R, h, h, e, e), rhs

    def hvhv(self, literal: bool = False):
        e, h = self.e, self.h
        Q, AA, TT = self._mixed()
        rhs = (-np.einsum("ixab,ij,jy->xayb", self.DThee, self.G, h) - np.einsum("xyab->xayb", Q) - AA)
        if not literal:
            rhs = rhs + np.einsum("axby->xayb", TT)
        return _r4(self.R, h, e, h, e), rhs

    # sectional relations ------------------------------------------------------------
    def sectional_vertical(self):
        W = self.gg(self.Tee, self.Tee)
        out = []
        for a, b in combinations(range(self.e.shape[1]), 2):
            lhs = float(np.einsum("ijkl,i,j,k,l->", self.R, self.e[:, a], self.e[:, b], self.e[:, b], self.e[:, a]))
            rhs = self.Rh[a, b, b, a] - W[a, a, b, b] + W[a, b, a, b]
            out.append(((a, b), lhs, float(rhs)))
        return out

    def sectional_mixed(self):
        e, h, G = self.e, self.h, self.G
        out = []
        for x in range(h.shape[1]):
            for a in range(e.shape[1]):
                lhs = float(np.einsum("ijkl,i,j,k,l->", self.R, h[:, x], e[:, a], e[:, a], h[:, x]))
                t = self.DThee[:, x, a, a] @ G @ h[:, x]
                an = self.Ahe[:, x, a] @ G @ self.Ahe[:, x, a]
                tn = self.The[:, a, x] @ G @ self.The[:, a, x]
                out.append(((x, a), lhs, float(t + an - tn)))
        return out

    def sectional_horizontal(self):
        N = self.gg(self.Ahh, self.Ahh)
        out = []
        for x, y in combinations(range(self.h.shape[1]), 2):
            lhs = float(np.einsum("ijkl,i,j,k,l->", self.R, self.h[:, x], self.h[:, y], self.h[:, y], self.h[:, x]))
            out.append(((x, y), lhs, float(self.Rs[x, y, y, x] - 3 * N[x, y, x, y])))
        return out

    # general vectors ------------------------------------------------------------------
    def norm2(self, u) -> float:
        return float(u @ self.G @ u)

    def Khat(self, u, v) -> float:
        """Fiber curvature of two vertical vectors, normalized by their squared lengths."""
        return self.pc.Rhat(u, v, v, u) / (self.norm2(u) * self.norm2(v))

    def Kstar(self, X, Y) -> float:
        """Base curvature of the images of two horizontal vectors, normalized likewise."""
        a, b = self.D0 @ X, self.D0 @ Y
        return float(np.einsum("ijkl,i,j,k,l->", self.Rstar_coord, a, b, b, a)) / (self.norm2(X) * self.norm2(Y))

    def K(self, u, v) -> float:
        return float(np.einsum("ijkl,i,j,k,l->", self.R, u, v, v, u)) / (self.norm2(u) * self.norm2(v))


_EQUATIONS = (
    ("curvature.vertical_four", "vvvv", {}),
    ("curvature.vertical_three_horizontal_one", "vvvh", {}),
    ("curvature.horizontal_three_vertical_one", "hhhv", {}),
    ("curvature.horizontal_three_vertical_one_literal", "hhhv", {"literal": True}),
    ("curvature.horizontal_four", "hhhh", {}),
    ("curvature.horizontal_pair_vertical_pair", "hhvv", {}),
    ("curvature.alternating", "hvhv", {}),
    ("curvature.alternating_literal", "hvhv", {"literal": True}),
)


def _frames(octx: OneillContext, p) -> FrameCurvature:
    pc = octx.at(p)
    fc = getattr(pc, "_frame_curvature", None)
    if fc is None:
        fc = pc._frame_curvature = FrameCurvature(pc)
    return fc


def _maxabs(x) -> float:
    return float(np.max(np.abs(x))) if np.size(x) else 0.0


def verify_curvature_equations(octx: OneillContext, samples: Sequence) -> VerificationReport:
    """Total curvature on every frame 4-tuple against its O'Neill expression."""
    s, tol = octx.s, octx.tol
    rep = VerificationReport(s.id, "curvature-eqs", engine=s.diff_engine, tolerance=tol)
    for k, p in enumerate(samples):
        fc = _frames(octx, p)
        for name, method, kw in _EQUATIONS:
            lhs, rhs = getattr(fc, method)(**kw)
            literal = kw.get("literal", False)
            if lhs.size == 0:
                rep.add(CheckResult.premise(name, tol, "no frame tuples of this type", sample=k,
                                            informational=literal))
                continue
            rep.add(CheckResult.make(name, None, None, _maxabs(lhs - rhs), tol, sample=k, informational=literal))
    return rep


def verify_sectional_relations(octx: OneillContext, samples: Sequence) -> VerificationReport:
    s, tol = octx.s, octx.tol
    rep = VerificationReport(s.id, "sectional", engine=s.diff_engine, tolerance=tol)
    for k, p in enumerate(samples):
        fc = _frames(octx, p)
        for name, rows in (("sectional.vertical_plane", fc.sectional_vertical()),
                           ("sectional.mixed_plane", fc.sectional_mixed()),
                           ("sectional.horizontal_plane", fc.sectional_horizontal())):
            if not rows:
                rep.add(CheckResult.premise(name, tol, "no frame planes of this type", sample=k))
            for idx, lhs, rhs in rows:
                rep.add(CheckResult.make(name, lhs, rhs, abs(lhs - rhs), tol, sample=k, context={"frame": list(idx)}))
    return rep


# curvature of slant planes -------------------------------------------------------------

def _split(fc: FrameCurvature):
    loc = fc.pc.loc
    if loc.J is None:
        raise MissingComplexStructure(f"scenario {loc.s.id!r} has no complex structure")
    P0, F0 = jets.value(loc.P), jets.value(loc.F)
    phi0, om0 = jets.value(loc.phi), jets.value(loc.omega)
    return P0, F0, phi0, om0


def _small(fc, *vs) -> bool:
    return any(np.sqrt(max(fc.norm2(v), 0.0)) <= NONDEGENERATE for v in vs)


def _slant_planes(octx: OneillContext, p):
    """Yield ``(kind, index, vectors)`` for every frame plane with its slant components."""
    fc = _frames(octx, p)
    P0, F0, phi0, om0 = _split(fc)
    e, h = fc.e, fc.h
    for a, b in combinations(range(e.shape[1]), 2):
        yield "vertical", (a, b), (e[:, a], e[:, b], P0 @ e[:, a], P0 @ e[:, b], F0 @ e[:, a], F0 @ e[:, b])
    for a in range(e.shape[1]):
        for x in range(h.shape[1]):
            yield "mixed", (a, x), (e[:, a], h[:, x], P0 @ e[:, a], phi0 @ h[:, x], F0 @ e[:, a], om0 @ h[:, x])
    for x, y in combinations(range(h.shape[1]), 2):
        yield "horizontal", (x, y), (h[:, x], h[:, y], phi0 @ h[:, x], phi0 @ h[:, y], om0 @ h[:, x], om0 @ h[:, y])


def _slant_terms(fc: FrameCurvature, kind: str, vecs):
    """Return ``(K, decomposed, bound_lhs, bound_rhs)`` for one plane."""
    pc, g, n2 = fc.pc, fc.pc.g, fc.norm2
    t, a, dt = pc.t, pc.a, pc.dt
    u, v, Pu, Pv, Fu, Fv = vecs
    if kind == "vertical":
        Kh = fc.Khat(Pu, Pv) / (n2(Pu) * n2(Pv))
        Ks = fc.Kstar(Fu, Fv) / (n2(Fu) * n2(Fv))
        rhs = (Kh + Ks - g(t(Pu, Pu), t(Pv, Pv)) + n2(a(Fu, Pv)) + g(dt(Fv, Pu, Pv), Fv)
               - n2(t(Pu, Fv)) - 3 * n2(a(Fu, Fv)) + n2(t(Pv, Pu)))
        c_lhs = Kh + Ks - fc.Khat(u, v)
        c_rhs = g(t(Pu, Pu), t(Pv, Pv)) + n2(t(Pu, Fv))
    elif kind == "mixed":
        e1, E1, Pe, phiE, Fe, omE = u, v, Pu, Pv, Fu, Fv
        Kh = fc.Khat(Pe, phiE)
        Ks = fc.Kstar(Fe, omE)
        rhs = (Kh / (n2(Pe) * n2(phiE)) + Ks / (n2(Fe) * n2(omE)) - n2(t(phiE, Pe)) - n2(t(Pe, omE))
               - 3 * n2(a(Fe, omE)) + n2(a(omE, Pe)) - n2(t(phiE, Fe)) - g(t(Pe, Pe), t(phiE, phiE))
               + n2(a(Fe, phiE)) + g(dt(omE, Pe, Pe), omE) + g(dt(Fe, phiE, phiE), Fe))
        c_lhs = Kh + Ks
        c_rhs = (g(dt(E1, e1, e1), E1) + n2(a(E1, e1)) + n2(t(Pe, omE)) + n2(t(phiE, Pe))
                 + 3 * n2(a(Fe, omE)) + g(t(Pe, Pe), t(phiE, phiE)))
    else:
        phi1, phi2, om1, om2 = Pu, Pv, Fu, Fv
        Kh = fc.Khat(phi1, phi2) / (n2(phi1) * n2(phi2))
        Ks = fc.Kstar(om1, om2) / (n2(om1) * n2(om2))
        rhs = (Kh + Ks + n2(t(phi2, phi1)) - g(t(phi1, phi1), t(phi2, phi2)) + g(dt(om2, phi1, phi2), om2)
               - n2(t(phi1, om2)) + n2(a(om2, phi1)) + g(dt(om1, phi2, phi2), om1) - n2(t(phi2, om1))
               + n2(a(om1, phi2)) - 3 * n2(a(om1, om2)))
        c_lhs = Kh + Ks - fc.Kstar(u, v)
        c_rhs = (g(t(phi1, phi1), t(phi2, phi2)) + n2(t(phi1, om2)) + n2(t(phi2, om1)) + 3 * n2(a(om1, om2)))
    return fc.K(u, v), float(rhs), float(c_lhs), float(c_rhs)


_PLANE_NAMES = {"vertical": "vertical_plane", "mixed": "mixed_plane", "horizontal": "horizontal_plane"}


def verify_slant_plane_curvature(octx: OneillContext, samples: Sequence) -> VerificationReport:
    """Sectional curvature of frame planes decomposed along the slant components."""
    s, tol = octx.s, octx.tol
    rep = VerificationReport(s.id, "theorem41", engine=s.diff_engine, tolerance=tol)
    for k, p in enumerate(samples):
        fc = _frames(octx, p)
        for kind, idx, vecs in _slant_planes(octx, p):
            name = f"theorem41.{_PLANE_NAMES[kind]}"
            if _small(fc, *vecs[2:]):
                rep.add(CheckResult.premise(name, tol, "a slant component of the plane vanishes", sample=k,
                                            context={"frame": list(idx)}))
                continue
            K, rhs, _, _ = _slant_terms(fc, kind, vecs)
            rep.add(CheckResult.make(name, K, rhs, abs(K - rhs), tol, sample=k, context={"frame": list(idx)}))
    return rep


def _inequality(name: str, lhs: float, rhs: float, tol: float, **kw) -> CheckResult:
    slack = rhs - lhs
    res = CheckResult.make(name, lhs, rhs, max(0.0, -slack), tol, **kw)
    res.context = {**(res.context or {}), "slack": slack}
    return res


def verify_curvature_inequalities(octx: OneillContext, samples: Sequence) -> VerificationReport:
    """Curvature inequalities ``lhs <= rhs`` for slant planes (horizontal analogue without ``J``)."""
    s, tol = octx.s, octx.tol
    rep = VerificationReport(s.id, "inequalities", engine=s.diff_engine, tolerance=tol)
    for k, p in enumerate(samples):
        fc = _frames(octx, p)
        if not s.has_J:
            N = fc.gg(fc.Ahh, fc.Ahh)
            for x, y in combinations(range(fc.h.shape[1]), 2):
                lhs = fc.Kstar(fc.h[:, x], fc.h[:, y]) - float(fc.Rs[x, y, y, x])
                rep.add(_inequality("inequalities.horizontal_analogue", lhs, 3 * float(N[x, y, x, y]), tol,
                                    sample=k, context={"frame": [x, y]}))
            continue
        for kind, idx, vecs in _slant_planes(octx, p):
            name = f"inequalities.{_PLANE_NAMES[kind]}"
            if _small(fc, *vecs[2:]):
                rep.add(CheckResult.premise(name, tol, "a slant component of the plane vanishes", sample=k,
                                            context={"frame": list(idx)}))
                continue
            _, _, lhs, rhs = _slant_terms(fc, kind, vecs)
            rep.add(_inequality(name, lhs, rhs, tol, sample=k, context={"frame": list(idx)}))
    return rep


# point-level operations ------------------------------------------------------------------

def fiber_curvature(octx: OneillContext, p, e1, e2, e3, e4, method: str = "intrinsic", tol: float = 1e-9) -> float:
    """``R^(e1, e2, e3, e4)`` of the fiber through ``p``.

    ``"intrinsic"`` differentiates the fiber connection along the vertical
    frame; ``"gauss"`` corrects the total curvature by the ``T`` terms.
    """
    pc = octx.at(p)
    vs = [np.asarray(v, dtype=float) for v in (e1, e2, e3, e4)]
    H0 = jets.value(pc.H)
    for v in vs:
        if np.linalg.norm(H0 @ v) > tol * max(1.0, np.linalg.norm(v)):
            raise NotVertical("fiber curvature needs vertical arguments")
    if method == "intrinsic":
        return pc.Rhat(*vs)
    if method == "gauss":
        R = float(np.einsum("ijkl,i,j,k,l->", pc.R, *vs))
        t, g = pc.t, pc.g
        return R + g(t(vs[0], vs[3]), t(vs[1], vs[2])) - g(t(vs[1], vs[3]), t(vs[0], vs[2]))
    raise ValueError(f"unknown method {method!r}")


def base_curvature(s, q, E1, E2, E3, E4) -> float:
    """``R*(E1, E2, E3, E4)`` at the base point ``q`` for base tangent vectors."""
    R = s.base_ctx.local(np.asarray(q, dtype=float), order=2).riemann
    return float(np.einsum("ijkl,i,j,k,l->", R, *(np.asarray(v, dtype=float) for v in (E1, E2, E3, E4))))


def horizontal_values(octx: OneillContext, p) -> dict:
    """Sectional curvatures of the first horizontal frame plane and its base image."""
    fc = _frames(octx, p)
    if fc.h.shape[1] < 2:
        return {}
    X, Y = fc.h[:, 0], fc.h[:, 1]
    return {"K_total": fc.K(X, Y), "K_base": fc.Kstar(X, Y),
            "A_norm_sq": fc.norm2(fc.Ahh[:, 0, 1])}
