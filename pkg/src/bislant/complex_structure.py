"""Almost complex structures: canonical J, Hermitian and Kaehler certification."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import jets
from .errors import MissingComplexStructure, OddDimension
from .jets import Jet
from .report import CheckResult
from .tensor_engine import ConnectionContext, ConstantField, ManifoldModel, nabla

HERMITIAN_TOL = 1e-9
KAEHLER_TOL = 1e-7
ComplexStructureField = ConstantField


def canonical_matrix(n: int) -> np.ndarray:
    """``J e_{2i-1} = e_{2i}``, ``J e_{2i} = -e_{2i-1}`` (adjacent pairing)."""
    if n <= 0 or n % 2:
        raise OddDimension(f"canonical J needs an even positive dimension, got {n}")
    J = np.zeros((n, n))
    for i in range(0, n, 2):
        J[i + 1, i] = 1.0
        J[i, i + 1] = -1.0
    return J


def canonical_J(n: int) -> ConstantField:
    """Constant canonical complex structure on an ``n``-dimensional chart."""
    return ConstantField(canonical_matrix(n), n, label="canonical")


def _require_J(model: ManifoldModel) -> None:
    if model.complex_structure is None:
        raise MissingComplexStructure("model has no complex structure")


def _gnorm(g: np.ndarray, v: np.ndarray) -> float:
    return float(np.sqrt(max(v @ g @ v, 0.0)))


def check_hermitian(model: ManifoldModel, samples: Sequence, seed: int = 0, pairs: int = 8,
                    tol: float = HERMITIAN_TOL) -> CheckResult:
    """Max over samples of ``|g(JX, JY) - g(X, Y)|`` and ``||J^2 + I||``."""
    _require_J(model)
    rng = np.random.default_rng(seed)
    worst_metric = worst_square = 0.0
    lhs = rhs = 0.0
    where = None
    for k, p in enumerate(samples):
        g = model.metric(p)
        J = model.complex_structure(p)
        sq = float(np.max(np.abs(J @ J + np.eye(model.dim))))
        if sq > worst_square:
            worst_square, where = sq, k
        for _ in range(pairs):
            X, Y = rng.standard_normal(model.dim), rng.standard_normal(model.dim)
            a, b = (J @ X) @ g @ (J @ Y), X @ g @ Y
            scale = max(1.0, _gnorm(g, X) * _gnorm(g, Y))
            r = abs(a - b) / scale
            if r > worst_metric:
                worst_metric, lhs, rhs, where = r, a, b, k
    return CheckResult.make("complex_structure.hermitian", lhs, rhs, max(worst_metric, worst_square), tol,
                            sample=where,
                            context={"j_squared_residual": worst_square, "metric_residual": worst_metric})


def random_polynomial_field(basis, p, order: int, rng, degree: int = 2, shape=None) -> Jet:
    """Random polynomial vector field of the given degree in ``x - p``."""
    shape = (basis.nvars,) if shape is None else tuple(shape)
    c = np.zeros((basis.size(order),) + shape)
    top = basis.size(min(degree, order))
    c[:top] = rng.standard_normal((top,) + shape)
    return Jet(basis, order, c)


def kaehler_residual(loc, X: Jet, Y: Jet) -> np.ndarray:
    """``(nabla_X J) Y = nabla_X (J Y) - J nabla_X Y`` at the base point."""
    J = loc.J
    lhs = nabla(loc.gamma, X, jets.matmul(J, Y))
    rhs = jets.matmul(J, nabla(loc.gamma, X, Y))
    return jets.value(lhs - rhs)


def check_kaehler(ctx: ConnectionContext, samples: Sequence, seed: int = 0, pairs: int = 16,
                  tol: float = KAEHLER_TOL) -> CheckResult:
    """Max over samples and random degree-2 field pairs of ``||(nabla_X J) Y||``."""
    _require_J(ctx.model)
    rng = np.random.default_rng(seed)
    worst, where = 0.0, None
    for k, p in enumerate(samples):
        loc = ctx.local(p, order=2)
        for _ in range(pairs):
            X = random_polynomial_field(loc.basis, loc.p, 2, rng)
            Y = random_polynomial_field(loc.basis, loc.p, 2, rng)
            scale = max(1.0, _gnorm(loc.g0, X.value) * _gnorm(loc.g0, Y.value))
            r = _gnorm(loc.g0, kaehler_residual(loc, X, Y)) / scale
            if r > worst:
                worst, where = r, k
    return CheckResult.make("complex_structure.kaehler", worst, 0.0, worst, tol, sample=where)
