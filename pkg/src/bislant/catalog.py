"""Builtin scenarios, the linear bi-slant generator and the scenario file format."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .complex_structure import canonical_J, canonical_matrix
from .errors import (BislantError, DegenerateAngle, DomainError, OddDimension, ParseError,
                     SchemaError, UnknownScenario)
from .report import dumps
from .submersion import PushforwardMetric, SubmersionScenario
from .tensor_engine import (DEFAULT_FD_STEP, DUAL, ENGINES, FD, ConstantField, ExpressionField,
                            Field, ManifoldModel, euclidean_metric, matrix_field, sample_points,
                            vector_field)

BUILTINS = ("paper-r8", "torus-fibration", "hopf-s3", "identity-trivial")
DEFAULT_SEED = 42
DEFAULT_SAMPLES = 32

THETA2_NOTE = ("computed theta2 = arccos(sqrt(3)/2) = pi/6 under the adjacent-pair canonical J; "
               "the reference value pi/3 is not reproduced")


@dataclass(frozen=True, eq=False)
class Scenario:
    """A submersion scenario with its expectations and run defaults."""

    id: str
    submersion: SubmersionScenario
    expected: dict = field(default_factory=dict)
    provenance: str = ""
    seed: int = DEFAULT_SEED
    samples: int = DEFAULT_SAMPLES
    tolerances: dict = field(default_factory=dict)

    @property
    def generic_only(self) -> bool:
        return not self.submersion.has_J


def _box(*intervals) -> np.ndarray:
    return np.array(intervals, dtype=float)


def _paper_r8() -> Scenario:
    total = ManifoldModel(8, _box(*[[-1, 1]] * 8), euclidean_metric(8), canonical_J(8))
    base = ManifoldModel(4, _box(*[[-3, 3]] * 4), euclidean_metric(4))
    mp = vector_field(["(-x1+x4)/sqrt(2)", "-x2", "(-sqrt(3)*x5+x8)/2", "-x6"], 8)
    sub = SubmersionScenario(total, base, mp, DUAL, id="paper-r8")
    expected = {
        "classification": "proper_bi_slant",
        "m1": 2, "m2": 2,
        "theta1": math.pi / 4,
        "theta2": math.acos(math.sqrt(3) / 2),
        "theta2_reference": math.pi / 3,
        "theta2_note": THETA2_NOTE,
        "oracle": "eigen-decomposition of -P^2 on the kernel of the constant Jacobian",
    }
    return Scenario("paper-r8", sub, expected, "linear map R^8 -> R^4 with canonical J")


def _torus() -> Scenario:
    total = ManifoldModel(4, _box([1, 5], [1, 5], [0.5, 2], [-1, 1]), euclidean_metric(4), canonical_J(4))
    base = ManifoldModel(2, _box([0.5, 8], [0.25, 3]), euclidean_metric(2))
    mp = vector_field(["sqrt(x1^2+x2^2)", "sqrt(x3^2+x4^2)"], 4)
    sub = SubmersionScenario(total, base, mp, DUAL, anchor=np.array([3.0, 4.0, 1.0, 0.0]), id="torus-fibration")
    expected = {
        "classification": "anti_invariant",
        "m1": 0, "m2": 2,
        "theta2": math.pi / 2,
        "T_VV_anchor": [-3 / 25, -4 / 25, 0.0, 0.0],
        "oracle": "circle of radius 5 has curvature 1/5 toward the origin",
    }
    return Scenario("torus-fibration", sub, expected, "radius map of flat C^2 onto (R+)^2")


def _hopf() -> Scenario:
    total = ManifoldModel(3, _box([0.3, 1.2], [-1, 1], [-1, 1]),
                          matrix_field([["1", "0", "0"], ["0", "sin(x1)^2", "0"], ["0", "0", "cos(x1)^2"]], 3))
    base = ManifoldModel(2, _box([0.5, 2.5], [-2.5, 2.5]),
                         matrix_field([["1/4", "0"], ["0", "sin(x1)^2/4"]], 2))
    mp = vector_field(["2*x1", "x2-x3"], 3)
    sub = SubmersionScenario(total, base, mp, FD, id="hopf-s3")
    expected = {
        "K_total": 1.0, "K_base": 4.0, "A_norm_sq": 1.0,
        "oracle": "round S^3(1) over S^2(1/2)",
        "generic_only": True,
    }
    return Scenario("hopf-s3", sub, expected, "Hopf fibration in Hopf coordinates")


def _identity() -> Scenario:
    total = ManifoldModel(4, _box(*[[-1, 1]] * 4), euclidean_metric(4), canonical_J(4))
    base = ManifoldModel(4, _box(*[[-1, 1]] * 4), euclidean_metric(4))
    mp = vector_field(["x1", "x2", "x3", "x4"], 4)
    sub = SubmersionScenario(total, base, mp, DUAL, id="identity-trivial")
    return Scenario("identity-trivial", sub, {"classification": "invariant", "m1": 0, "m2": 0},
                    "identity of R^4")


_FACTORIES = {"paper-r8": _paper_r8, "torus-fibration": _torus, "hopf-s3": _hopf,
              "identity-trivial": _identity}


def builtin(scenario_id: str) -> Scenario:
    try:
        return _FACTORIES[scenario_id]()
    except KeyError:
        raise UnknownScenario(f"unknown scenario {scenario_id!r}; choose from {', '.join(BUILTINS)}") from None


def _random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """Real form of a random unitary on C^n (commutes with the canonical J)."""
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    U = np.zeros((2 * n, 2 * n))
    U[0::2, 0::2] = q.real
    U[1::2, 1::2] = q.real
    U[0::2, 1::2] = -q.imag
    U[1::2, 0::2] = q.imag
    return U


def _linear_row(coeffs: np.ndarray) -> str:
    terms = [f"({float(c)!r})*x{i + 1}" for i, c in enumerate(coeffs) if c != 0.0]
    return " + ".join(terms) if terms else "0"


def make_linear_bislant(theta1: float, theta2: float, seed: int | None = None) -> Scenario:
    """Linear map R^8 -> R^4 whose kernel has slant angles ``theta1`` and ``theta2``.

    The kernel is ``span{sin t1 d1 + cos t1 d4, d3} + span{sin t2 d5 + cos t2 d8, d7}``.
    With ``seed`` the construction is rotated by a random unitary, which
    preserves ``g`` and ``J`` and hence the angles.
    """
    for t in (theta1, theta2):
        if not 0.0 < t < math.pi / 2:
            raise DegenerateAngle(f"angle {t!r} must lie strictly between 0 and pi/2")
    A = np.zeros((4, 8))
    A[0, 0], A[0, 3] = -math.cos(theta1), math.sin(theta1)
    A[1, 1] = -1.0
    A[2, 4], A[2, 7] = -math.cos(theta2), math.sin(theta2)
    A[3, 5] = -1.0
    if seed is not None:
        A = A @ _random_unitary(np.random.default_rng(seed), 4).T
    total = ManifoldModel(8, _box(*[[-1, 1]] * 8), euclidean_metric(8), canonical_J(8))
    base = ManifoldModel(4, _box(*[[-4, 4]] * 4), euclidean_metric(4))
    mp = vector_field([_linear_row(row) for row in A], 8)
    sid = f"linear-bislant({theta1:.6g},{theta2:.6g})" + ("" if seed is None else f"#{seed}")
    sub = SubmersionScenario(total, base, mp, DUAL, id=sid)
    expected = {"angles_sorted": sorted([theta1, theta2]),
                "oracle": "construction fixes the -P^2 eigenvalues"}
    equal = math.isclose(math.cos(theta1) ** 2, math.cos(theta2) ** 2, abs_tol=1e-6)
    expected["classification"] = "proper_slant" if equal else "proper_bi_slant"
    return Scenario(sid, sub, expected, "linear bi-slant generator")


# file format ----------------------------------------------------------------------

_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": ["string", "number"]}}}

SCHEMA = {
    "type": "object",
    "required": ["dim_total", "dim_base", "domain", "metric_total", "metric_base", "map"],
    "additionalProperties": False,
    "properties": {
        "id": {"type": "string"},
        "dim_total": {"type": "integer", "minimum": 1},
        "dim_base": {"type": "integer", "minimum": 1},
        "domain": {"type": "array", "items": {"type": "array", "items": {"type": "number"},
                                              "minItems": 2, "maxItems": 2}},
        "domain_base": {"type": "array", "items": {"type": "array", "items": {"type": "number"},
                                                   "minItems": 2, "maxItems": 2}},
        "metric_total": {"oneOf": [{"enum": ["euclidean"]}, _MATRIX]},
        "metric_base": {"oneOf": [{"enum": ["euclidean", "pushforward"]}, _MATRIX]},
        "complex_structure": {"oneOf": [{"enum": ["canonical"]}, {"type": "null"}, _MATRIX]},
        "map": {"type": "array", "items": {"type": ["string", "number"]}},
        "anchor": {"type": "array", "items": {"type": "number"}},
        "expected": {"type": "object"},
        "provenance": {"type": "string"},
        "seed": {"type": "integer"},
        "samples": {"type": "integer", "minimum": 0},
        "engine": {"enum": list(ENGINES)},
        "fd_step": {"type": "number", "exclusiveMinimum": 0},
        "tolerances": {"type": "object", "additionalProperties": {"type": "number"}},
    },
}


def _matrix(spec, n: int, fieldname: str, *, allow_pushforward=False) -> Field:
    if spec == "euclidean":
        return euclidean_metric(n)
    if spec == "canonical":
        return canonical_J(n)
    arr = np.array(spec, dtype=object)
    if arr.shape != (n, n):
        raise SchemaError(f"{fieldname} must be {n}x{n}, got shape {arr.shape}")
    try:
        return matrix_field(arr.tolist(), n)
    except ParseError as exc:
        raise ParseError(str(exc), field=fieldname) from None


def _sources(f: Field):
    if isinstance(f, PushforwardMetric):
        return "pushforward"
    src = f.sources()
    if src is None:
        raise ValueError("opaque fields cannot be serialized")
    return src


def _probe(model: ManifoldModel, name: str, seed: int) -> None:
    pts = [model.domain.mean(axis=1)] + list(sample_points(model.domain, 16, seed))
    for p in pts:
        try:
            g = model.metric(p)
        except (ZeroDivisionError, FloatingPointError, ValueError) as exc:
            raise DomainError(f"{name} metric cannot be evaluated at {np.round(p, 12).tolist()}: {exc}") from None
        if not np.all(np.isfinite(g)) or np.max(np.abs(g - g.T)) > 1e-9 * max(1.0, np.max(np.abs(g))):
            raise DomainError(f"{name} metric not symmetric at {np.round(p, 12).tolist()}")
        if np.min(np.linalg.eigvalsh(0.5 * (g + g.T))) <= 0.0:
            raise DomainError(f"{name} metric not positive definite at point {np.round(p, 12).tolist()}")


def scenario_from_dict(doc: dict, default_id: str = "custom") -> Scenario:
    """Build a scenario from a parsed document (validated against :data:`SCHEMA`)."""
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(x) for x in exc.absolute_path) or "<root>"
        raise SchemaError(f"schema violation at {path}: {exc.message}") from None
    m, n = doc["dim_total"], doc["dim_base"]
    if n > m:
        raise SchemaError("dim_base exceeds dim_total")
    if len(doc["domain"]) != m or len(doc["map"]) != n:
        raise SchemaError("domain must have dim_total rows and map dim_base entries")
    J_spec = doc.get("complex_structure")
    if J_spec is not None and m % 2:
        raise SchemaError(f"complex structure on odd-dimensional total space (dim {m})")
    dom = np.array(doc["domain"], dtype=float)
    if np.any(dom[:, 0] >= dom[:, 1]):
        raise SchemaError("domain intervals must satisfy lo < hi")
    engine = doc.get("engine", DUAL)
    fd_step = float(doc.get("fd_step", DEFAULT_FD_STEP))
    try:
        mp = vector_field(doc["map"], m)
    except ParseError as exc:
        raise ParseError(str(exc), field="map") from None
    g = _matrix(doc["metric_total"], m, "metric_total")
    J = None if J_spec is None else _matrix(J_spec, m, "complex_structure")
    try:
        total = ManifoldModel(m, dom, g, J)
    except OddDimension as exc:
        raise SchemaError(str(exc)) from None
    anchor = np.array(doc["anchor"], dtype=float) if "anchor" in doc else dom.mean(axis=1)
    if anchor.shape != (m,) or not total.contains(anchor):
        raise DomainError(f"anchor {anchor.tolist()} outside the total domain")
    seed = int(doc.get("seed", DEFAULT_SEED))
    _probe(total, "metric_total", seed)
    if "domain_base" in doc:
        bdom = np.array(doc["domain_base"], dtype=float)
        if bdom.shape != (n, 2):
            raise SchemaError("domain_base must have dim_base rows")
    else:
        imgs = mp.batch(sample_points(dom, 256, seed, inset=0.0).T)
        lo, hi = imgs.min(axis=0), imgs.max(axis=0)
        pad = 0.1 * np.maximum(hi - lo, 1.0)
        bdom = np.stack([lo - pad, hi + pad], axis=1)
    if doc["metric_base"] == "pushforward":
        gN = PushforwardMetric(total, mp, anchor, engine, fd_step)
        base = ManifoldModel(n, bdom, gN)
    else:
        base = ManifoldModel(n, bdom, _matrix(doc["metric_base"], n, "metric_base"))
        _probe(base, "metric_base", seed)
    sid = doc.get("id", default_id)
    sub = SubmersionScenario(total, base, mp, engine, fd_step, anchor, sid)
    return Scenario(sid, sub, dict(doc.get("expected", {})), doc.get("provenance", ""), seed,
                    int(doc.get("samples", DEFAULT_SAMPLES)), dict(doc.get("tolerances", {})))


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise SchemaError("scenario document must be an object")
    return scenario_from_dict(doc, default_id=path.stem)


def scenario_to_dict(sc: Scenario) -> dict:
    s = sc.submersion
    J = s.total.complex_structure
    doc = {
        "id": sc.id,
        "dim_total": s.m,
        "dim_base": s.n,
        "domain": s.total.domain.tolist(),
        "domain_base": s.base.domain.tolist(),
        "metric_total": _sources(s.total.metric),
        "metric_base": _sources(s.base.metric),
        "complex_structure": None if J is None else _sources(J),
        "map": _sources(s.map),
        "anchor": s.anchor.tolist(),
        "expected": sc.expected,
        "provenance": sc.provenance,
        "seed": sc.seed,
        "samples": sc.samples,
        "engine": s.diff_engine,
        "fd_step": s.fd_step,
        "tolerances": sc.tolerances,
    }
    return doc


def dump_scenario(sc: Scenario, path=None) -> str:
    text = dumps(scenario_to_dict(sc)) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def resolve(scenario_id: str | None = None, path=None) -> Scenario:
    """Builtin by id or scenario file by path (exactly one must be given)."""
    if (scenario_id is None) == (path is None):
        raise SchemaError("give exactly one of a builtin id or a scenario file")
    return builtin(scenario_id) if path is None else load_scenario(path)
