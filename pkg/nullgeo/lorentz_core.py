import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import polars as pl
from scipy.linalg import null_space

from .helpers.exceptions import DegenerateConeError, DomainError, NotLorentzConeError, SeparabilityError, \
    SignatureError
from .helpers.finite_differences import central_jacobian, vector_field_bracket
from .helpers.ode import rk4_integrate
from .helpers.settings import DEFAULT_STEP, FD_STEP
from .trace_handling import trace_frame

logger = logging.getLogger(__name__)

Box = Tuple[Tuple[float, float], Tuple[float, float], Tuple[float, float]]
UNBOUNDED: Box = ((-math.inf, math.inf),) * 3


class ChartPoint(NamedTuple):
    x1: float
    x2: float
    x3: float


class TangentVector(NamedTuple):
    v1: float
    v2: float
    v3: float


@dataclass(frozen=True)
class DiagonalMetric:
    """
    | Lorentzian metric g11 dx1^2 + g22 dx2^2 + g33 dx3^2 on a box chart.

    | The components are callables of a point array of shape (3,). The optional partials callable returns the 3x3
    array dg with dg[i, j] = d g_ii / d x_j; central differences are used when it is missing. A metric flagged as
    separable has spatial components independent of x3 and a time component depending on x3 only.

    | Signature and separability are spot checked on a grid of the domain when the metric is built.
    """
    g11: Callable[[np.ndarray], float]
    g22: Callable[[np.ndarray], float]
    g33: Callable[[np.ndarray], float]
    partials: Optional[Callable[[np.ndarray], np.ndarray]] = None
    separable: bool = False
    domain: Box = UNBOUNDED
    metric_id: str = "custom"
    check_points: int = field(default=4, compare=False)

    def __post_init__(self):
        for lo, hi in self.domain:
            if not lo < hi:
                raise ValueError(f"Domain intervals must satisfy lo < hi, got {self.domain}")
        for x in self.grid(self.check_points):
            g = metric_values(self, x)
            if self.separable:
                dg = metric_partials(self, x)
                if max(abs(dg[0, 2]), abs(dg[1, 2]), abs(dg[2, 0]), abs(dg[2, 1])) > 1e-8:
                    raise SeparabilityError(
                        f"Metric '{self.metric_id}' is flagged separable but has mixed dependence at {x}: {dg}"
                    )
            logger.debug(f"Metric '{self.metric_id}' components at {x}: {g}")

    def grid(self, n: int) -> List[np.ndarray]:
        """
        | Interior grid of n points per axis; unbounded axes are sampled on [-1, 1].
        """
        axes = []
        for lo, hi in self.domain:
            lo = lo if math.isfinite(lo) else -1.0
            hi = hi if math.isfinite(hi) else 1.0
            axes.append(np.linspace(lo, hi, n + 2)[1:-1])
        return [np.array([a, b, c]) for a in axes[0] for b in axes[1] for c in axes[2]]

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return all(lo <= xi <= hi for xi, (lo, hi) in zip(x[:3], self.domain))

    def without_partials(self) -> "DiagonalMetric":
        return replace(self, partials=None, metric_id=f"{self.metric_id}+fd")


@dataclass(frozen=True)
class ChristoffelTensor:
    """
    | Christoffel symbols gamma[k, i, j] of the Levi-Civita connection, symmetric in i and j.
    """
    gamma: np.ndarray

    def __getitem__(self, item):
        return self.gamma[item]


@dataclass(frozen=True)
class ConeQuadric:
    """
    | Symmetric 3x3 matrix of determinant -1 and signature (2, 1).
    """
    G: np.ndarray

    def __post_init__(self):
        G = np.asarray(self.G, dtype=float)
        if G.shape != (3, 3) or not np.allclose(G, G.T, atol=1e-12):
            raise ValueError(f"ConeQuadric needs a symmetric 3x3 matrix, got {G}")
        if abs(abs(np.linalg.det(G)) - 1.0) > 1e-10:
            raise ValueError(f"ConeQuadric must have |det| = 1, got {np.linalg.det(G)}")
        if _signature(G) != (2, 1):
            raise NotLorentzConeError(f"ConeQuadric must have signature (2, 1), got {_signature(G)}")


@dataclass
class GeodesicTrace:
    """
    | Sampled geodesic: parameters s, points x and velocities v, with the step used and the chart exit flag.
    """
    s: np.ndarray
    x: np.ndarray
    v: np.ndarray
    step: float
    exited: bool = False
    metric_id: str = "custom"

    @property
    def samples(self) -> List[Tuple[float, ChartPoint, TangentVector]]:
        return [(float(s), ChartPoint(*x), TangentVector(*v)) for s, x, v in zip(self.s, self.x, self.v)]

    def to_frame(self) -> pl.DataFrame:
        return trace_frame("geodesic", self.s, np.hstack([self.x, self.v]))


def _signature(G: np.ndarray) -> Tuple[int, int]:
    ev = np.linalg.eigvalsh(G)
    return int(np.sum(ev > 0)), int(np.sum(ev < 0))


def _point(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (3,):
        raise ValueError(f"Chart points have 3 coordinates, got shape {x.shape}")
    return x


def metric_values(m: DiagonalMetric, x) -> np.ndarray:
    """
    | Components (g11, g22, g33) at x.

    :param m: metric.
    :param x: chart point.
    :return: array of shape (3,).
    """
    x = _point(x)
    if not m.contains(x):
        raise DomainError(f"Point {x} is outside the domain {m.domain} of metric '{m.metric_id}'")
    g = np.array([m.g11(x), m.g22(x), m.g33(x)], dtype=float)
    if not (g[0] > 0 and g[1] > 0 and g[2] < 0):
        raise SignatureError(f"Metric '{m.metric_id}' has components {g} at {x}, expected (+, +, -)")
    return g


def _fd_partials(m: DiagonalMetric, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    comps = (m.g11, m.g22, m.g33)
    return central_jacobian(lambda y: np.array([g(y) for g in comps], dtype=float), x, h)


def metric_partials(m: DiagonalMetric, x, h: float = FD_STEP) -> np.ndarray:
    """
    | Partials dg[i, j] = d g_ii / d x_j, analytic when the metric provides them, else central differences.

    :param m: metric.
    :param x: chart point.
    :param h: finite difference step when the metric has no analytic partials.
    :return: array of shape (3, 3).
    """
    x = _point(x)
    if m.partials is not None:
        return np.asarray(m.partials(x), dtype=float)
    return _fd_partials(m, x, h)


def christoffel(m: DiagonalMetric, x) -> ChristoffelTensor:
    """
    | Christoffel symbols of a diagonal metric,
    Gamma^k_ij = (delta_jk d_i g_kk + delta_ik d_j g_kk - delta_ij d_k g_ii) / (2 g_kk).

    :param m: metric.
    :param x: chart point inside the domain.
    :return: ChristoffelTensor with gamma[k, i, j].
    """
    g = metric_values(m, x)
    dg = metric_partials(m, x)
    eye = np.eye(3)
    t1 = np.einsum("jk,ki->kij", eye, dg)
    t2 = np.einsum("ik,kj->kij", eye, dg)
    t3 = np.einsum("ij,ik->kij", eye, dg)
    return ChristoffelTensor((0.5 / g)[:, None, None] * (t1 + t2 - t3))


def geodesic_rhs(m: DiagonalMetric, x, v) -> Tuple[np.ndarray, np.ndarray]:
    """
    | Geodesic equation in the chart, (x', v') = (v, -Gamma(v, v)).

    :param m: metric.
    :param x: chart point.
    :param v: velocity.
    :return: pair (x', v').
    """
    v = np.asarray(v, dtype=float)
    gamma = christoffel(m, x).gamma
    return v.copy(), -np.einsum("kij,i,j->k", gamma, v, v)


def integrate_geodesic(m: DiagonalMetric, x0, v0, s_max: float, h: float = DEFAULT_STEP) -> GeodesicTrace:
    """
    | Classical RK4 integration of the geodesic through (x0, v0) up to parameter s_max. A negative s_max integrates
    backwards. A trace leaving the chart is truncated and flagged.

    :param m: metric.
    :param x0: initial point.
    :param v0: initial velocity.
    :param s_max: final parameter.
    :param h: step.
    :return: GeodesicTrace.
    """
    x0 = _point(x0)
    v0 = np.asarray(v0, dtype=float)
    # raises DomainError / SignatureError on bad initial data
    metric_values(m, x0)

    def rhs(y: np.ndarray) -> np.ndarray:
        dx, dv = geodesic_rhs(m, y[:3], y[3:])
        return np.concatenate([dx, dv])

    s, y, exited = rk4_integrate(rhs, np.concatenate([x0, v0]), s_max, h, inside=lambda y: m.contains(y[:3]))
    if exited:
        logger.warning(f"Geodesic from {x0} left the chart of '{m.metric_id}' at s = {s[-1]:.6g}")
    return GeodesicTrace(s=s, x=y[:, :3], v=y[:, 3:], step=h, exited=exited, metric_id=m.metric_id)


def null_cone_vector(m: DiagonalMetric, x, theta: float) -> np.ndarray:
    """
    | Future null vector (cos theta / sqrt g11, sin theta / sqrt g22, 1 / sqrt(-g33)) at x.
    """
    g = metric_values(m, x)
    return np.array([math.cos(theta) / math.sqrt(g[0]), math.sin(theta) / math.sqrt(g[1]), 1.0 / math.sqrt(-g[2])])


def norm_sq(m: DiagonalMetric, x, v) -> float:
    """
    | g(v, v) = g11 v1^2 + g22 v2^2 + g33 v3^2.
    """
    v = np.asarray(v, dtype=float)
    return float(np.dot(metric_values(m, x), v * v))


def trace_norm_drift(m: DiagonalMetric, trace: GeodesicTrace) -> float:
    """
    | Largest deviation of g(v, v) along a trace from its initial value.
    """
    values = np.array([norm_sq(m, x, v) for x, v in zip(trace.x, trace.v)])
    return float(np.max(np.abs(values - values[0])))


def geodesic_spray(m: DiagonalMetric) -> Callable[[np.ndarray], np.ndarray]:
    """
    | Geodesic spray X_g(x, v) = (v, -Gamma(v, v)) on the tangent bundle chart.
    """
    def spray(y: np.ndarray) -> np.ndarray:
        dx, dv = geodesic_rhs(m, y[:3], y[3:])
        return np.concatenate([dx, dv])
    return spray


def euler_field(y: np.ndarray) -> np.ndarray:
    """
    | Euler field (x, v) -> (0, v) generating fibrewise dilation.
    """
    y = np.asarray(y, dtype=float)
    return np.concatenate([np.zeros(3), y[3:]])


def spray_euler_bracket(m: DiagonalMetric, x, v, h: float = FD_STEP) -> float:
    """
    | Residual of the homogeneity identity between the Euler field and the geodesic spray.

    | With [A, B] = (DB) A - (DA) B the bracket [Delta, X_g] equals X_g because the spray is quadratic in v.
    The opposite ordering differs only by sign.

    :param m: metric.
    :param x: chart point.
    :param v: velocity.
    :param h: finite difference step.
    :return: max norm of [Delta, X_g] - X_g.
    """
    y = np.concatenate([_point(x), np.asarray(v, dtype=float)])
    spray = geodesic_spray(m)
    bracket = vector_field_bracket(euler_field, spray, y, h)
    return float(np.max(np.abs(bracket - spray(y))))


def sample_cone(G, n: int, offset: float = 0.0) -> List[np.ndarray]:
    """
    | n null directions of the quadric G, equally spaced in the angle of its positive eigenplane.

    :param G: symmetric 3x3 matrix of signature (2, 1).
    :param n: number of directions.
    :param offset: angle of the first direction.
    :return: list of vectors v with v^T G v = 0.
    """
    G = np.asarray(G, dtype=float)
    ev, Q = np.linalg.eigh(G)
    if _signature(G) != (2, 1):
        raise NotLorentzConeError(f"Cannot sample the cone of a quadric with signature {_signature(G)}")
    # eigh sorts ascending, the negative eigenvalue comes first
    lam_t, lam_a, lam_b = ev
    out = []
    for k in range(n):
        t = offset + 2.0 * math.pi * k / n
        coeffs = np.array([1.0 / math.sqrt(-lam_t), math.cos(t) / math.sqrt(lam_a), math.sin(t) / math.sqrt(lam_b)])
        out.append(Q @ coeffs)
    return out


def metric_from_cone(samples: Sequence) -> ConeQuadric:
    """
    | Recover the quadric of determinant -1 and signature (2, 1) whose null cone contains the given directions.

    | Each sample v contributes the row (v1^2, v2^2, v3^2, 2 v1 v2, 2 v1 v3, 2 v2 v3) of a homogeneous system in the
    six coefficients of G. The one dimensional null space of the system is rescaled to |det| = 1 and its sign is
    fixed to give two positive eigenvalues.

    :param samples: at least five null directions.
    :return: ConeQuadric.
    """
    vs = np.asarray([np.asarray(v, dtype=float) for v in samples])
    if vs.ndim != 2 or vs.shape[1] != 3:
        raise ValueError(f"Samples must be 3-vectors, got array of shape {vs.shape}")
    if vs.shape[0] < 5:
        raise DegenerateConeError(f"At least 5 null directions are needed, got {vs.shape[0]}")

    # normalise rows so the rank decision is scale free
    vs = vs / np.linalg.norm(vs, axis=1)[:, None]
    rows = np.column_stack([
        vs[:, 0] ** 2, vs[:, 1] ** 2, vs[:, 2] ** 2,
        2.0 * vs[:, 0] * vs[:, 1], 2.0 * vs[:, 0] * vs[:, 2], 2.0 * vs[:, 1] * vs[:, 2],
    ])
    basis = null_space(rows, rcond=1e-9)
    if basis.shape[1] != 1:
        raise DegenerateConeError(
            f"Null directions determine a {basis.shape[1]}-dimensional family of quadrics, expected exactly one"
        )

    c = basis[:, 0]
    G = np.array([[c[0], c[3], c[4]], [c[3], c[1], c[5]], [c[4], c[5], c[2]]])
    det = np.linalg.det(G)
    if abs(det) < 1e-14:
        raise DegenerateConeError("Recovered quadric is degenerate")
    G = G / abs(det) ** (1.0 / 3.0)

    pos, neg = _signature(G)
    if (pos, neg) == (1, 2):
        G = -G
    elif (pos, neg) != (2, 1):
        raise NotLorentzConeError(f"Recovered quadric has signature ({pos}, {neg}), expected (2, 1)")

    return ConeQuadric(G)
