"""Exception hierarchy for the submersion laboratory."""

from __future__ import annotations


class BislantError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(BislantError):
    """Invalid scenario or run configuration (CLI exit status 2)."""


class OutOfDomain(BislantError):
    """A point lies outside the coordinate box of a model."""


class SingularMetric(BislantError):
    """Metric not invertible or condition number above the configured cap."""


class DegeneratePlane(BislantError):
    """Sectional curvature requested on a zero or non-orthogonal pair."""


class OddDimension(BislantError):
    """A complex structure was requested on an odd-dimensional space."""


class MissingComplexStructure(BislantError):
    """The total space carries no complex structure."""


class RankDeficient(BislantError):
    """The differential of the map has rank below the base dimension."""


class PivotDegenerate(BislantError):
    """The anchor pivot order loses rank at the requested point."""


class NotHorizontal(BislantError):
    """A vector expected to be horizontal has a vertical component."""


class NotVertical(BislantError):
    """A vector expected to be vertical has a horizontal component."""


class ZeroVector(BislantError):
    """A numerically zero vector where a direction was required."""


class NotInDistribution(BislantError):
    """A vector does not lie in the requested distribution."""


class NotBiSlant(BislantError):
    """The vertical distribution does not split into two constant-angle slant pieces."""


class DegenerateAngle(BislantError):
    """A slant angle of 0 or pi/2 was requested where a proper angle is needed."""


class UndefinedCosecant(BislantError):
    """csc of a zero angle was requested."""


class KaehlerViolated(BislantError):
    """The total space failed the Hermitian or Kaehler certification."""


class UnknownScenario(ConfigError):
    """No builtin scenario with the given id."""


class ParseError(ConfigError):
    """Malformed scenario text or expression."""

    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        where = []
        if field is not None:
            where.append(f"field {field!r}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.field = field


class SchemaError(ConfigError):
    """Scenario document violates the schema or a structural rule."""


class DomainError(ConfigError):
    """Scenario data invalid at a probe point (e.g. non positive-definite metric)."""
