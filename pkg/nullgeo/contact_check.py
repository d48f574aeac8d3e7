import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .helpers.exceptions import MarginError, RankError
from .helpers.finite_differences import central_jacobian, directional_derivative, vector_field_bracket
from .helpers.settings import FD_STEP
from .internal_checks import check_samples
from .lorentz_core import DiagonalMetric, metric_values

logger = logging.getLogger(__name__)

VectorField = Callable[[np.ndarray], np.ndarray]
Domain = Optional[Sequence[Tuple[float, float]]]


@dataclass(frozen=True)
class OneFormField:
    """
    | One-form on a box of R^dim, given by its covector components at each point.
    """
    dim: int
    alpha: Callable[[np.ndarray], np.ndarray]
    domain: Domain = None

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.alpha(np.asarray(x, dtype=float)), dtype=float)


@dataclass(frozen=True)
class DistributionFrame:
    """
    | Rank r distribution on a box of R^dim, given by r spanning vector fields.
    """
    dim: int
    rank: int
    frame: Callable[[np.ndarray], np.ndarray]
    domain: Domain = None

    def vectors(self, x) -> np.ndarray:
        F = np.asarray(self.frame(np.asarray(x, dtype=float)), dtype=float).reshape(self.rank, self.dim)
        sv = np.linalg.svd(F, compute_uv=False)
        if sv[-1] <= 1e-8:
            raise RankError(f"Frame vectors are dependent at {x}, smallest singular value {sv[-1]:.3e}")
        return F

    def field(self, a: int) -> VectorField:
        return lambda y: np.asarray(self.frame(y), dtype=float).reshape(self.rank, self.dim)[a]


@dataclass
class WedgeReport:
    """
    | Smallest |alpha ^ d alpha| coefficient over a sample set, with the signed coefficient of every sample.
    """
    min_abs: float
    argmin: np.ndarray
    n_samples: int
    coefficients: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _check_margin(x: np.ndarray, domain: Domain, h: float):
    if domain is None:
        return
    for xi, (lo, hi) in zip(x, domain):
        if xi - h < lo or xi + h > hi:
            raise MarginError(f"Point {x} is closer than {h} to the boundary of {list(domain)}")


def exterior_d(alpha: OneFormField, x, h: float = FD_STEP) -> np.ndarray:
    """
    | Exterior derivative of a one-form at x by central differences, (d alpha)_ij = d_i alpha_j - d_j alpha_i.

    :param alpha: one-form field.
    :param x: interior point.
    :param h: finite difference step.
    :return: antisymmetric dim x dim matrix.
    """
    x = np.asarray(x, dtype=float)
    _check_margin(x, alpha.domain, h)
    # J[a, b] = d alpha_a / d x_b
    J = central_jacobian(alpha, x, h)
    return J.T - J


def wedge_coefficient(alpha: OneFormField, x, h: float = FD_STEP) -> float:
    """
    | Coefficient of alpha ^ d alpha against dx1 ^ dx2 ^ dx3 at x.
    """
    a = alpha(x)
    D = exterior_d(alpha, x, h)
    return float(a[0] * D[1, 2] + a[1] * D[2, 0] + a[2] * D[0, 1])


def contact_condition_3d(alpha: OneFormField, samples, h: float = FD_STEP) -> WedgeReport:
    """
    | Evaluate the alpha ^ d alpha coefficient at every sample and report its smallest absolute value. The
    coefficient is signed in the chart orientation dx1 ^ dx2 ^ dx3.

    :param alpha: one-form on a 3-dimensional box.
    :param samples: list of points.
    :param h: finite difference step.
    :return: WedgeReport.
    """
    if alpha.dim != 3:
        raise ValueError(f"contact_condition_3d needs a 3-dimensional one-form, got dim {alpha.dim}")
    points = check_samples(samples)
    coefficients = np.array([wedge_coefficient(alpha, p, h) for p in points])
    k = int(np.argmin(np.abs(coefficients)))
    logger.debug(f"Contact coefficient range [{coefficients.min():.6g}, {coefficients.max():.6g}] "
                 f"on {len(points)} points")
    return WedgeReport(float(abs(coefficients[k])), points[k], len(points), coefficients)


def lie_bracket_numeric(X: VectorField, Y: VectorField, x, h: float = FD_STEP, domain: Domain = None) -> np.ndarray:
    """
    | Lie bracket [X, Y] = (DY) X - (DX) Y with central differences.

    :param X: vector field.
    :param Y: vector field.
    :param x: interior point.
    :param h: finite difference step.
    :param domain: optional box to check the stencil against.
    :return: bracket vector.
    """
    x = np.asarray(x, dtype=float)
    _check_margin(x, domain, h)
    return vector_field_bracket(X, Y, x, h)


def _residual_off_span(F: np.ndarray, w: np.ndarray) -> float:
    # F holds the spanning vectors as rows
    Q, _ = np.linalg.qr(F.T)
    return float(np.linalg.norm(w - Q @ (Q.T @ w)))


def frobenius_check(D: DistributionFrame, samples, h: float = FD_STEP) -> float:
    """
    | Largest component of a frame bracket off the distribution. Close to zero for an integrable distribution.

    :param D: distribution with rank < dim.
    :param samples: list of points.
    :param h: finite difference step.
    :return: max residual over samples and frame pairs.
    """
    if not D.rank < D.dim:
        raise ValueError(f"Distribution rank {D.rank} must be smaller than dimension {D.dim}")
    points = check_samples(samples)
    worst = 0.0
    for p in points:
        F = D.vectors(p)
        for a in range(D.rank):
            for b in range(a + 1, D.rank):
                bracket = lie_bracket_numeric(D.field(a), D.field(b), p, h, D.domain)
                worst = max(worst, _residual_off_span(F, bracket))
    return worst


def bracket_form_identity(alpha: OneFormField, X: VectorField, Y: VectorField, x, h: float = FD_STEP) -> float:
    """
    | Residual of d alpha(X, Y) = X alpha(Y) - Y alpha(X) - alpha([X, Y]) with
    d alpha(X, Y) = sum_ij (d_i alpha_j - d_j alpha_i) X_i Y_j.
    """
    x = np.asarray(x, dtype=float)
    D = exterior_d(alpha, x, h)
    left = float(X(x) @ D @ Y(x))
    x_alpha_y = float(directional_derivative(lambda y: alpha(y) @ Y(y), x, X(x), h))
    y_alpha_x = float(directional_derivative(lambda y: alpha(y) @ X(y), x, Y(x), h))
    right = x_alpha_y - y_alpha_x - float(alpha(x) @ lie_bracket_numeric(X, Y, x, h, alpha.domain))
    return abs(left - right)


def standard_contact_form(domain: Domain = None) -> OneFormField:
    """
    | dz + x dy on R^3.
    """
    return OneFormField(3, lambda p: np.array([0.0, p[0], 1.0]), domain)


def standard_contact_kernel(domain: Domain = None) -> DistributionFrame:
    """
    | Kernel of dz + x dy spanned by d/dx and d/dy - x d/dz.
    """
    return DistributionFrame(3, 2, lambda p: np.array([[1.0, 0.0, 0.0], [0.0, 1.0, -p[0]]]), domain)


def isothermal_contact_form(m: DiagonalMetric, x3: float = 0.0) -> OneFormField:
    """
    | Unit cotangent contact form cos(theta) sqrt(g11) dx1 + sin(theta) sqrt(g22) dx2 of the spatial metric of m,
    on coordinates (x1, x2, theta). Its alpha ^ d alpha coefficient is -sqrt(g11 g22).

    :param m: metric whose spatial part is used at time x3.
    :param x3: time coordinate.
    :return: OneFormField of dimension 3.
    """
    def alpha(p: np.ndarray) -> np.ndarray:
        g = metric_values(m, np.array([p[0], p[1], x3]))
        return np.array([math.cos(p[2]) * math.sqrt(g[0]), math.sin(p[2]) * math.sqrt(g[1]), 0.0])

    domain = [m.domain[0], m.domain[1], (-math.inf, math.inf)]
    return OneFormField(3, alpha, domain)


def isothermal_coefficient(m: DiagonalMetric, p, x3: float = 0.0) -> float:
    """
    | Analytic alpha ^ d alpha coefficient of isothermal_contact_form, -1 / (|dx1| |dx2|) = -sqrt(g11 g22).
    """
    g = metric_values(m, np.array([p[0], p[1], x3]))
    return -math.sqrt(g[0] * g[1])
