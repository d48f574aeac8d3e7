"""
| Error taxonomy of nullgeo. Every failure is a ValueError so callers may catch the family or the specific case.
"""


class NullGeoError(ValueError):
    """
    | Base class for all nullgeo errors.
    """


class InvalidAxisError(NullGeoError):
    """
    | Rotation axis or unit imaginary is not of unit norm.
    """


class InvalidOrderError(NullGeoError):
    """
    | Group order is not a positive integer.
    """


class DomainError(NullGeoError):
    """
    | Point lies outside the chart domain of a metric.
    """


class SignatureError(NullGeoError):
    """
    | Metric components violate g11 > 0, g22 > 0, g33 < 0.
    """


class MarginError(NullGeoError):
    """
    | Finite difference stencil reaches outside the declared domain.
    """


class DegenerateConeError(NullGeoError):
    """
    | Null direction samples do not determine a unique quadric.
    """


class NotLorentzConeError(NullGeoError):
    """
    | Recovered quadric does not have signature (2, 1).
    """


class SeparabilityError(NullGeoError):
    """
    | Operation requires a separable metric.
    """


class TransversalityError(NullGeoError):
    """
    | Flow direction is tangent to the quotient slice.
    """


class BranchError(NullGeoError):
    """
    | Orbit representative switched branch inside a difference stencil.
    """


class RankError(NullGeoError):
    """
    | Frame vectors are linearly dependent.
    """


class MetricConfigError(NullGeoError):
    """
    | Metric config file or metric id cannot be parsed.
    """


class UnknownCheckError(NullGeoError):
    """
    | Verification check id is not registered.
    """
