"""Structure equations, Gauss-Weingarten relations, integrability, foliations, parallelism.

Every suite is premise-guarded: if a hypothesis of a statement fails (no
complex structure, not Kaehler, a field that should be basic is not, an
undefined cosecant) the affected checks carry the ``premise_not_met`` status.
Checks reporting a geometric *property* (is a distribution integrable, are
the fibers totally geodesic) are informational: the verified content is the
agreement between the criterion and the direct computation.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import jets
from .complex_structure import KAEHLER_TOL, check_hermitian, check_kaehler
from .errors import KaehlerViolated, MissingComplexStructure, UndefinedCosecant
from .oneill import OneillContext, PointCalculus, apply, basicness_residual, gnorms, inner, max_gnorm
from .report import CheckResult, VerificationReport
from .slant import CLUSTER_TOL, SlantStructure
from .tensor_engine import bracket

AGREE_TOL = 0.5


def csc2(cos2: float) -> float:
    """``csc^2`` from ``cos^2``; raises for a zero angle."""
    if cos2 >= 1.0 - CLUSTER_TOL:
        raise UndefinedCosecant("cosecant of a zero slant angle")
    return 1.0 / (1.0 - cos2)


def require_kaehler(octx: OneillContext, samples: Sequence) -> None:
    """Certify the total space once per context; raises on failure."""
    cached = getattr(octx, "_kaehler", None)
    if cached is None:
        s = octx.s
        if not s.has_J:
            raise MissingComplexStructure(f"scenario {s.id!r} has no complex structure")
        tol = max(KAEHLER_TOL, octx.tol)
        herm = check_hermitian(s.total, samples, tol=max(1e-9, octx.tol))
        kae = check_kaehler(s.total_ctx, samples, tol=tol)
        cached = (herm, kae)
        octx._kaehler = cached
    herm, kae = cached
    if not (herm.passed and kae.passed):
        raise KaehlerViolated(f"Hermitian residual {herm.residual:.3g}, Kaehler residual {kae.residual:.3g}")


def structure_of(octx: OneillContext, samples: Sequence) -> SlantStructure:
    st = getattr(octx, "_slant", None)
    if st is None:
        st = SlantStructure(octx.s, samples, constancy_tol=max(1e-5, octx.tol))
        octx._slant = st
    return st


def _ops(pc: PointCalculus):
    loc = pc.loc
    return loc.P, loc.F, loc.phi, loc.omega


def _agreement(name: str, direct_ok: bool, criterion_ok: bool, k=None, **ctx) -> CheckResult:
    same = bool(direct_ok) == bool(criterion_ok)
    return CheckResult.make(name, bool(direct_ok), bool(criterion_ok), 0.0 if same else 1.0, AGREE_TOL,
                            sample=k, context=ctx)


def _prop(name: str, value: float, tol: float, k=None, lhs=None, **kw) -> CheckResult:
    """Informational property record: passes iff the quantity vanishes."""
    return CheckResult.make(name, value if lhs is None else lhs, 0.0, value, tol, sample=k,
                            informational=True, **kw)


def _swap(x):
    return np.swapaxes(x, 1, 2)


# structure equations ---------------------------------------------------------------

def verify_structure_equations(octx: OneillContext, samples: Sequence) -> VerificationReport:
    """Relations between ``J`` and the O'Neill tensors on frame and basic fields."""
    s, tol = octx.s, octx.tol
    require_kaehler(octx, samples)
    rep = VerificationReport(s.id, "structure", engine=s.diff_engine, tolerance=tol)
    val = jets.value
    for k, p in enumerate(samples):
        pc = octx.at(p)
        G = pc.g0
        P, F, phi, om = _ops(pc)
        P0, F0, phi0, om0 = (val(x) for x in (P, F, phi, om))
        E, B = pc.vframe, pc.basic

        def rec(name, lhs, rhs, premise=None, informational=False, **ctx):
            if premise is not None:
                rep.add(CheckResult.premise(name, tol, premise, sample=k, informational=informational))
                return
            rep.add(CheckResult.make(name, None, None, max_gnorm(G, lhs - rhs), tol, sample=k,
                                     informational=informational, context=ctx))

        basic_B = basicness_residual(pc, B)
        if E is not None:
            TEE = val(pc.T(E, E))
            hatEE = val(pc.hat(E, E))
            PE, FE = apply(P, E), apply(F, E)
            rec("structure.vertical_pair.vertical_part",
                apply(phi0, TEE) + apply(P0, hatEE), val(pc.hat(E, PE)) + val(pc.T(E, FE)))
            basic_FE = basicness_residual(pc, FE)
            rec("structure.vertical_pair.horizontal_part",
                apply(om0, TEE) + apply(F0, hatEE), val(pc.T(E, PE)) + _swap(val(pc.A(FE, E))),
                premise=None if basic_FE <= tol else f"F V not basic (residual {basic_FE:.3g})",
                basic_residual=basic_FE)
            TEB = val(pc.T(E, B))
            AxU = _swap(val(pc.A(B, E)))  # [:, u, x] = A_{xi_x} U_u
            rec("structure.mixed_pair.vertical_part",
                apply(P0, TEB) + apply(phi0, AxU), val(pc.hat(E, apply(phi, B))) + val(pc.T(E, apply(om, B))),
                premise=None if basic_B <= tol else f"xi not basic (residual {basic_B:.3g})",
                basic_residual=basic_B)
            omB = apply(om, B)
            basic_omB = basicness_residual(pc, omB)
            rec("structure.mixed_pair.horizontal_part",
                apply(F0, TEB) + apply(om0, AxU), val(pc.T(E, apply(phi, B))) + _swap(val(pc.A(omB, E))),
                premise=None if max(basic_B, basic_omB) <= tol else
                f"xi or omega xi not basic (residuals {basic_B:.3g}, {basic_omB:.3g})",
                basic_residual=max(basic_B, basic_omB))
        else:
            for name in ("structure.vertical_pair.vertical_part", "structure.vertical_pair.horizontal_part",
                         "structure.mixed_pair.vertical_part", "structure.mixed_pair.horizontal_part"):
                rec(name, None, None, premise="fibers are points")
        HBB = val(pc.hnabla(B, B))
        ABB = val(pc.A(B, B))
        phiB, omB = apply(phi, B), apply(om, B)
        lhs = apply(phi0, HBB) + apply(P0, ABB)
        rec("structure.horizontal_pair.vertical_part", lhs, val(pc.vnabla(B, phiB)) + val(pc.A(B, omB)))
        rec("structure.horizontal_pair.vertical_part_literal", lhs, val(pc.vnabla(B, phiB)) + ABB,
            informational=True)
        rec("structure.horizontal_pair.horizontal_part",
            apply(om0, HBB) + apply(F0, ABB), val(pc.A(B, phiB)) + val(pc.hnabla(B, omB)))
    return rep


# Gauss-Weingarten, integrability and foliations of the slant pieces -----------------------

def _criterion(pc: PointCalculus, Y0, X0, U0):
    """``g(T_{PU} FY - T_U FPY + A_{FU} FY, X)`` as an array ``[x, y, u]``."""
    P0, F0 = jets.value(pc.loc.P), jets.value(pc.loc.F)
    FY, FPY = F0 @ Y0, F0 @ P0 @ Y0
    PU, FU = P0 @ U0, F0 @ U0
    C = (np.einsum("ijk,ju,ky->iuy", pc.Tc, PU, FY) - np.einsum("ijk,ju,ky->iuy", pc.Tc, U0, FPY)
         + np.einsum("ijk,ju,ky->iuy", pc.Ac, FU, FY))
    return np.einsum("iuy,ij,jx->xyu", C, pc.g0, X0)


def _pieces(pc: PointCalculus, st: SlantStructure):
    pr = st.pair(pc.loc)
    if pr is None or pr[0] is None or pr[1] is None:
        return None
    return pr


def _slant_pieces(pc, st, which: int):
    """Frames ``(own, other)`` and ``cos^2`` of the own piece for D1 (which=1) or D2."""
    X, U, c1, c2, sub = _pieces(pc, st)
    return (X, U, c1, sub) if which == 1 else (U, X, c2, sub)


def verify_gauss_weingarten(octx: OneillContext, samples: Sequence) -> VerificationReport:
    s, tol = octx.s, octx.tol
    require_kaehler(octx, samples)
    st = structure_of(octx, samples)
    rep = VerificationReport(s.id, "gauss-weingarten", engine=s.diff_engine, tolerance=tol)
    for k, p in enumerate(samples):
        pc = octx.at(p)
        for which in (1, 2):
            name = f"gauss_weingarten.D{which}"
            if _pieces(pc, st) is None:
                rep.add(CheckResult.premise(name, tol, "vertical distribution has fewer than two pieces", sample=k))
                continue
            Xf, Uf, c2, sub = _slant_pieces(pc, st, which)
            try:
                factor = csc2(c2)
            except UndefinedCosecant as exc:
                rep.add(CheckResult.premise(name, tol, str(exc), sample=k))
                continue
            basic = basicness_residual(pc, apply(pc.loc.F, Xf))
            if basic > tol:
                rep.add(CheckResult.premise(name, tol, f"F Y not basic (residual {basic:.3g})", sample=k))
                continue
            X0, U0 = Xf.value, Uf.value
            lhs = inner(pc.g0, jets.value(pc.nabla(Xf, Xf)), U0)        # [x, y, u]
            rhs = factor * _criterion(pc, X0, X0, U0)
            rep.add(CheckResult.make(name, lhs, rhs, float(np.max(np.abs(lhs - rhs))), tol, sample=k,
                                     context={"sub_split": sub, "basic_residual": basic}))
    return rep


def integrability_report(octx: OneillContext, samples: Sequence) -> VerificationReport:
    s, tol = octx.s, octx.tol
    require_kaehler(octx, samples)
    st = structure_of(octx, samples)
    rep = VerificationReport(s.id, "integrability", engine=s.diff_engine, tolerance=tol)
    for k, p in enumerate(samples):
        pc = octx.at(p)
        for which in (1, 2):
            base = f"integrability.D{which}"
            if _pieces(pc, st) is None:
                for suffix in ("direct", "criterion", "agreement"):
                    rep.add(CheckResult.premise(f"{base}.{suffix}", tol, "vertical distribution has fewer than two pieces",
                                                sample=k))
                continue
            Xf, Uf, c2, sub = _slant_pieces(pc, st, which)
            X0, U0 = Xf.value, Uf.value
            direct = inner(pc.g0, jets.value(bracket(Xf, Xf)), U0)  # [x, y, u]
            crit = _criterion(pc, X0, X0, U0)
            diff = crit - np.swapaxes(crit, 0, 1)
            d, c = float(np.max(np.abs(direct))), float(np.max(np.abs(diff)))
            rep.add(_prop(f"{base}.direct", d, tol, k))
            rep.add(_prop(f"{base}.criterion", c, tol, k))
            rep.add(_agreement(f"{base}.agreement", d <= tol, c <= tol, k, sub_split=sub))
            basic = basicness_residual(pc, apply(pc.loc.F, Xf))
            name = f"{base}.identity"
            try:
                factor = csc2(c2)
            except UndefinedCosecant as exc:
                rep.add(CheckResult.premise(name, tol, str(exc), sample=k))
                continue
            if basic > tol:
                rep.add(CheckResult.premise(name, tol, f"F Y not basic (residual {basic:.3g})", sample=k))
                continue
            rep.add(CheckResult.make(name, direct, factor * diff, float(np.max(np.abs(direct - factor * diff))),
                                     tol, sample=k))
    return rep


def geodesic_foliation_report(octx: OneillContext, samples: Sequence) -> VerificationReport:
    s, tol = octx.s, octx.tol
    require_kaehler(octx, samples)
    st = structure_of(octx, samples)
    rep = VerificationReport(s.id, "foliation", engine=s.diff_engine, tolerance=tol)
    val = jets.value
    for k, p in enumerate(samples):
        pc = octx.at(p)
        G = pc.g0
        P, F, phi, om = _ops(pc)
        E, B = pc.vframe, pc.basic
        # slant pieces as leaves inside the fibers
        piece_ok = {}
        if _pieces(pc, st) is not None:
            for which in (1, 2):
                base = f"foliation.D{which}"
                Xf, Uf, _, sub = _slant_pieces(pc, st, which)
                X0, U0 = Xf.value, Uf.value
                direct = inner(G, val(pc.hat(Xf, Xf)), U0)
                crit = _criterion(pc, X0, X0, U0)
                d, c = float(np.max(np.abs(direct))), float(np.max(np.abs(crit)))
                rep.add(_prop(f"{base}.direct", d, tol, k))
                rep.add(_prop(f"{base}.criterion", c, tol, k))
                rep.add(_agreement(f"{base}.agreement", d <= tol, c <= tol, k, sub_split=sub))
                piece_ok[which] = (d <= tol, c <= tol)
            rep.add(_agreement("foliation.fiber_product.agreement", piece_ok[1][0] and piece_ok[2][0],
                               piece_ok[1][1] and piece_ok[2][1], k))
        else:
            for name in ("foliation.D1.agreement", "foliation.D2.agreement", "foliation.fiber_product.agreement"):
                rep.add(CheckResult.premise(name, tol, "vertical distribution has fewer than two pieces", sample=k))
        # vertical distribution
        if E is not None:
            PE, FE = apply(P, E), apply(F, E)
            crit = (apply(om, pc.T(E, PE) + _swap_jet(pc.A(FE, E)))
                    + apply(F, pc.hat(E, PE) + pc.T(E, FE)))
            crit0 = val(crit)
            direct0 = val(pc.hnabla(E, E))
            dv, cv = max_gnorm(G, direct0), max_gnorm(G, crit0)
            rep.add(_prop("foliation.vertical.direct", dv, tol, k, lhs=gnorms(G, direct0)))
            rep.add(_prop("foliation.vertical.criterion", cv, tol, k, lhs=gnorms(G, crit0)))
            rep.add(_agreement("foliation.vertical.agreement", dv <= tol, cv <= tol, k))
            basic = basicness_residual(pc, FE)
            if basic <= tol:
                rep.add(CheckResult.make("foliation.vertical.identity", None, None,
                                         max_gnorm(G, direct0 + crit0), tol, sample=k))
            else:
                rep.add(CheckResult.premise("foliation.vertical.identity", tol,
                                            f"F Z not basic (residual {basic:.3g})", sample=k))
        else:
            dv = cv = 0.0
        # horizontal distribution
        phiB, omB = apply(phi, B), apply(om, B)
        crit_h = (apply(phi, pc.A(B, phiB) + pc.hnabla(B, omB))
                  + apply(P, pc.A(B, omB) + pc.vnabla(B, phiB)))
        crit_h0 = val(crit_h)
        direct_h0 = val(pc.vnabla(B, B))
        dh, ch = max_gnorm(G, direct_h0), max_gnorm(G, crit_h0)
        rep.add(_prop("foliation.horizontal.direct", dh, tol, k))
        rep.add(_prop("foliation.horizontal.criterion", ch, tol, k))
        rep.add(_agreement("foliation.horizontal.agreement", dh <= tol, ch <= tol, k))
        rep.add(CheckResult.make("foliation.horizontal.identity", None, None, max_gnorm(G, direct_h0 + crit_h0),
                                 tol, sample=k))
        # locally product total space, totally geodesic map, criteria
        hess = _map_hessian(pc)
        rep.add(_prop("foliation.totally_geodesic_map.direct", hess, tol, k))
        product = dv <= tol and dh <= tol
        criteria = cv <= tol and ch <= tol
        same = product == (hess <= tol) == criteria
        rep.add(CheckResult.make("foliation.product_equivalence.agreement", product, criteria,
                                 0.0 if same else 1.0, AGREE_TOL, sample=k,
                                 context={"locally_product": product, "totally_geodesic_map": hess <= tol,
                                          "criteria_vanish": criteria}))
    return rep


def _swap_jet(x):
    return x.transpose(0, 2, 1)


def _map_hessian(pc: PointCalculus) -> float:
    """Norm of the second fundamental form ``nabla d pi`` on an orthonormal frame."""
    loc = pc.loc
    D = loc.D
    dD = jets.grad(D).value                                   # [a, i, j] = d_j d_i pi^a
    gam = pc.gamma.value
    D0 = D.value
    gamN = loc.base_local.gamma.value
    h = dD - np.einsum("kij,ak->aij", gam, D0) + np.einsum("abc,bi,cj->aij", gamN, D0, D0)
    Z = np.concatenate([x for x in (loc.vframe.value if loc.vframe is not None else None,
                                    loc.hframe.value) if x is not None], axis=1)
    hz = np.einsum("aij,ix,jy->axy", h, Z, Z)
    gN = loc.base_metric()
    return float(np.max(np.sqrt(np.maximum(np.einsum("axy,ab,bxy->xy", hz, gN, hz), 0.0))))


# parallelism ---------------------------------------------------------------------------

def parallelism_report(octx: OneillContext, samples: Sequence) -> VerificationReport:
    s, tol = octx.s, octx.tol
    require_kaehler(octx, samples)
    st = structure_of(octx, samples)
    rep = VerificationReport(s.id, "parallelism", engine=s.diff_engine, tolerance=tol)
    val = jets.value
    norms = {"P": 0.0, "F": 0.0, "phi": 0.0, "omega": 0.0}
    mixed = []
    for k, p in enumerate(samples):
        pc = octx.at(p)
        G = pc.g0
        P, F, phi, om = _ops(pc)
        P0, F0, phi0, om0 = (val(x) for x in (P, F, phi, om))
        E, B = pc.vframe, pc.basic
        if E is None:
            for name in ("parallelism.P_identity", "parallelism.F_identity", "parallelism.phi_identity",
                         "parallelism.omega_identity"):
                rep.add(CheckResult.premise(name, tol, "fibers are points", sample=k))
            continue
        TEE, TEB = val(pc.T(E, E)), val(pc.T(E, B))
        hatEE, hEB = val(pc.hat(E, E)), val(pc.hnabla(E, B))
        PE, FE = apply(P, E), apply(F, E)
        phiB, omB = apply(phi, B), apply(om, B)
        defs = {
            "P": (val(pc.hat(E, PE)) - apply(P0, hatEE),
                  apply(phi0, TEE) - val(pc.T(E, FE))),
            "F": (val(pc.hnabla(E, FE)) - apply(F0, hatEE),
                  apply(om0, TEE) - val(pc.T(E, PE))),
            "phi": (val(pc.hat(E, phiB)) - apply(phi0, hEB),
                    apply(P0, TEB) - val(pc.T(E, omB))),
            "omega": (val(pc.hnabla(E, omB)) - apply(om0, hEB),
                      apply(F0, TEB) - val(pc.T(E, phiB))),
        }
        for key, (lhs, rhs) in defs.items():
            rep.add(CheckResult.make(f"parallelism.{key}_identity", None, None, max_gnorm(G, lhs - rhs), tol,
                                     sample=k))
            norms[key] = max(norms[key], max_gnorm(G, lhs))
        pr = _pieces(pc, st)
        if pr is not None:
            X0, U0 = pr[0].value, pr[1].value
            mixed.append((float(np.max(gnorms(G, np.einsum("ijk,jx,ku->ixu", pc.Tc, X0, U0)))),
                          abs(pr[2] - pr[3])))
    for key, n in norms.items():
        rep.add(_prop(f"parallelism.{key}_norm", n, tol))
    F_par, phi_par = norms["F"] <= tol, norms["phi"] <= tol
    rep.add(_agreement("parallelism.F_phi.agreement", F_par, phi_par))
    name = "parallelism.mixed_geodesic"
    if not mixed:
        rep.add(CheckResult.premise(name, tol, "vertical distribution has fewer than two pieces"))
    elif not F_par:
        rep.add(CheckResult.premise(name, tol, f"F is not parallel (norm {norms['F']:.3g})"))
    elif min(gap for _, gap in mixed) <= CLUSTER_TOL:
        rep.add(CheckResult.premise(name, tol, "the two pieces share one slant angle"))
    else:
        worst = max(v for v, _ in mixed)
        rep.add(CheckResult.make(name, worst, 0.0, worst, tol))
    return rep
