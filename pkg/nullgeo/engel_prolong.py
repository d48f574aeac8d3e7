import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np
import polars as pl
from scipy.linalg import orth
from scipy.optimize import minimize_scalar

from .contact_check import lie_bracket_numeric
from .helpers.exceptions import DomainError, RankError, SeparabilityError, TransversalityError
from .helpers.ode import rk4_integrate, rk4_step
from .helpers.settings import DEFAULT_STEP, FD_STEP, RANK_TOL
from .lorentz_core import DiagonalMetric, GeodesicTrace, integrate_geodesic, metric_partials, metric_values, \
    null_cone_vector
from .trace_handling import hausdorff_distance, pointwise_distance, trace_frame

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
THETA_DIR = np.array([0.0, 0.0, 0.0, 1.0])

VectorField = Callable[[np.ndarray], np.ndarray]


class ProlongationPoint(NamedTuple):
    """
    | Point (x1, x2, x3, theta) of the projectivized null cone bundle; theta labels the null line
    (cos theta / sqrt g11, sin theta / sqrt g22, 1 / sqrt(-g33)).
    """
    x1: float
    x2: float
    x3: float
    theta: float

    @classmethod
    def make(cls, x, theta: float) -> "ProlongationPoint":
        return cls(float(x[0]), float(x[1]), float(x[2]), float(theta) % TWO_PI)

    def chart_point(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3])


@dataclass(frozen=True)
class EngelFlag:
    """
    | Engel flag at a point: D = <X, theta_dir>, E = <X, Xdot, theta_dir>, and the kernel direction Z of E.
    """
    X: np.ndarray
    Xdot: np.ndarray
    theta_dir: np.ndarray
    Z: np.ndarray

    def __post_init__(self):
        D = np.vstack([self.X, self.theta_dir])
        E = np.vstack([self.X, self.Xdot, self.theta_dir])
        if np.linalg.matrix_rank(D, tol=RANK_TOL) != 2:
            raise RankError("X and theta_dir do not span a plane")
        if np.linalg.matrix_rank(E, tol=RANK_TOL) != 3:
            raise RankError("X, Xdot and theta_dir do not span a 3-space")
        if _off_span(D, self.Z) > 1e-10:
            raise RankError(f"Z is not in D, residual {_off_span(D, self.Z):.3e}")

    def D(self) -> np.ndarray:
        return np.vstack([self.X, self.theta_dir])

    def E(self) -> np.ndarray:
        return np.vstack([self.X, self.Xdot, self.theta_dir])


@dataclass
class KernelFlowTrace:
    """
    | Sampled Z-flow. points hold theta reduced to [0, 2 pi); theta_unwrapped is the continuous angle.
    """
    s: np.ndarray
    points: np.ndarray
    theta_unwrapped: np.ndarray
    step: float
    exited: bool = False
    metric_id: str = "custom"

    @property
    def samples(self) -> List[ProlongationPoint]:
        return [ProlongationPoint(*row) for row in self.points]

    def to_frame(self) -> pl.DataFrame:
        return trace_frame("kernel_flow", self.s, np.column_stack([self.points, self.theta_unwrapped]))


@dataclass
class DeprolongResult:
    """
    | Outcome of the flow equivalence search. equivalent is None when the trace left the chart before a decision.
    """
    equivalent: Optional[bool]
    distance: float
    s_best: float
    indeterminate: bool = False

    def __bool__(self) -> bool:
        return bool(self.equivalent)


@dataclass
class GeodesicComparison:
    """
    | Projected Z-flow against the null geodesic with the same initial null direction.
    """
    flow: KernelFlowTrace
    geodesic: GeodesicTrace
    distances: pl.DataFrame
    max_distance: float
    hausdorff: float


def _off_span(F: np.ndarray, w: np.ndarray) -> float:
    Q, _ = np.linalg.qr(np.atleast_2d(F).T)
    return float(np.linalg.norm(w - Q @ (Q.T @ w)))


def _split(p) -> Tuple[np.ndarray, float]:
    p = np.asarray(p, dtype=float)
    if p.shape != (4,):
        raise ValueError(f"Prolongation points have 4 coordinates, got shape {p.shape}")
    return p[:3], float(p[3])


def lorentz_X(m: DiagonalMetric, p) -> np.ndarray:
    """
    | Null line field X = (cos theta / sqrt g11, sin theta / sqrt g22, 1 / sqrt(-g33), 0) spanning D with d/dtheta.
    """
    x, theta = _split(p)
    g = metric_values(m, x)
    return np.array([math.cos(theta) / math.sqrt(g[0]), math.sin(theta) / math.sqrt(g[1]),
                     1.0 / math.sqrt(-g[2]), 0.0])


def lorentz_Xdot(m: DiagonalMetric, p) -> np.ndarray:
    """
    | Xdot = [d/dtheta, X] = (-sin theta / sqrt g11, cos theta / sqrt g22, 0, 0).
    """
    x, theta = _split(p)
    g = metric_values(m, x)
    return np.array([-math.sin(theta) / math.sqrt(g[0]), math.cos(theta) / math.sqrt(g[1]), 0.0, 0.0])


def kernel_Z_general(m: DiagonalMetric, p, h: float = FD_STEP) -> np.ndarray:
    """
    | Kernel field Z = X + (A sqrt(g11) cos theta + B sqrt(g22) sin theta - C sqrt(-g33)) d/dtheta of the even
    contact structure E on the prolongation of any diagonal metric, with

    | A = d2 g11 / (2 g11 sqrt(g11 g22)) + sin theta d3 g11 / (2 g11 sqrt(-g11 g33))
    | B = -d1 g22 / (2 g22 sqrt(g11 g22)) - cos theta d3 g22 / (2 g22 sqrt(-g22 g33))
    | C = -sin theta d1 g33 / (2 g33 sqrt(-g11 g33)) + cos theta d2 g33 / (2 g33 sqrt(-g22 g33))

    :param m: metric.
    :param p: prolongation point.
    :param h: finite difference step for metric partials when they are not analytic.
    :return: 4-vector.
    """
    x, theta = _split(p)
    g11, g22, g33 = metric_values(m, x)
    dg = metric_partials(m, x, h)
    c, s = math.cos(theta), math.sin(theta)
    A = dg[0, 1] / (2 * g11 * math.sqrt(g11 * g22)) + s * dg[0, 2] / (2 * g11 * math.sqrt(-g11 * g33))
    B = -dg[1, 0] / (2 * g22 * math.sqrt(g11 * g22)) - c * dg[1, 2] / (2 * g22 * math.sqrt(-g22 * g33))
    C = -s * dg[2, 0] / (2 * g33 * math.sqrt(-g11 * g33)) + c * dg[2, 1] / (2 * g33 * math.sqrt(-g22 * g33))
    Z = lorentz_X(m, p)
    Z[3] = A * math.sqrt(g11) * c + B * math.sqrt(g22) * s - C * math.sqrt(-g33)
    return Z


def kernel_Z_separable(m: DiagonalMetric, p, h: float = FD_STEP) -> np.ndarray:
    """
    | Kernel field of a separable metric,
    Z = (cos theta / sqrt g11, sin theta / sqrt g22, 1 / sqrt(-g33),
    cos theta d2 g11 / (2 g11 sqrt g22) - sin theta d1 g22 / (2 g22 sqrt g11)).
    """
    if not m.separable:
        raise SeparabilityError(f"Metric '{m.metric_id}' is not separable")
    x, theta = _split(p)
    g11, g22, _ = metric_values(m, x)
    dg = metric_partials(m, x, h)
    Z = lorentz_X(m, p)
    Z[3] = (math.cos(theta) * dg[0, 1] / (2 * g11 * math.sqrt(g22))
            - math.sin(theta) * dg[1, 0] / (2 * g22 * math.sqrt(g11)))
    return Z


def engel_flag(m: DiagonalMetric, p) -> EngelFlag:
    """
    | Engel flag of the Lorentz prolongation at p, with the general formula kernel.
    """
    return EngelFlag(lorentz_X(m, p), lorentz_Xdot(m, p), THETA_DIR.copy(), kernel_Z_general(m, p))


def _domain4(m: DiagonalMetric):
    return [*m.domain, (-math.inf, math.inf)]


def _rank(vectors) -> int:
    return int(np.linalg.matrix_rank(np.vstack(vectors), tol=RANK_TOL))


def engel_rank_ladder(m: DiagonalMetric, p, h: float = FD_STEP) -> Tuple[int, int, int]:
    """
    | Ranks of D, D + [D, D] and E + [E, E] at p with finite difference brackets. An Engel structure gives (2, 3, 4).

    :param m: metric.
    :param p: prolongation point.
    :param h: finite difference step.
    :return: the three ranks.
    """
    p = np.asarray(p, dtype=float)
    X = lambda q: lorentz_X(m, q)
    Xdot = lambda q: lorentz_Xdot(m, q)
    T = lambda q: THETA_DIR
    domain = _domain4(m)

    D = [X(p), T(p)]
    DD = D + [lie_bracket_numeric(T, X, p, h, domain)]
    fields = [X, Xdot, T]
    EE = [f(p) for f in fields]
    for a in range(3):
        for b in range(a + 1, 3):
            EE.append(lie_bracket_numeric(fields[a], fields[b], p, h, domain))
    return _rank(D), _rank(DD), _rank(EE)


def kernel_invariance_residual(m: DiagonalMetric, p, h: float = FD_STEP,
                               z_field: Optional[VectorField] = None) -> float:
    """
    | Largest component off E of the brackets of Z with X, Xdot and d/dtheta. Vanishes for the kernel field.

    :param m: metric.
    :param p: prolongation point.
    :param h: finite difference step.
    :param z_field: field to test in place of the general formula kernel.
    :return: max residual.
    """
    p = np.asarray(p, dtype=float)
    Z = z_field if z_field is not None else (lambda q: kernel_Z_general(m, q))
    fields = [lambda q: lorentz_X(m, q), lambda q: lorentz_Xdot(m, q), lambda q: THETA_DIR]
    E = np.vstack([f(p) for f in fields])
    domain = _domain4(m)
    return max(_off_span(E, lie_bracket_numeric(Z, f, p, h, domain)) for f in fields)


def _flow_rhs(m: DiagonalMetric) -> Callable[[np.ndarray], np.ndarray]:
    return lambda y: kernel_Z_separable(m, y)


def integrate_kernel_flow(m: DiagonalMetric, p0, s_max: float, h: float = DEFAULT_STEP) -> KernelFlowTrace:
    """
    | RK4 integration of the Z-flow of a separable metric from p0. theta is integrated unwrapped and reduced
    modulo 2 pi on output. A negative s_max flows backwards.

    :param m: separable metric.
    :param p0: initial prolongation point.
    :param s_max: final flow parameter.
    :param h: step.
    :return: KernelFlowTrace, truncated and flagged when the chart is left.
    """
    if not m.separable:
        raise SeparabilityError(f"Metric '{m.metric_id}' is not separable")
    y0 = np.asarray(p0, dtype=float)
    _split(y0)
    metric_values(m, y0[:3])
    s, y, exited = rk4_integrate(_flow_rhs(m), y0, s_max, h, inside=lambda q: m.contains(q[:3]))
    points = y.copy()
    points[:, 3] = np.mod(points[:, 3], TWO_PI)
    if exited:
        logger.warning(f"Kernel flow from {y0} left the chart of '{m.metric_id}' at s = {s[-1]:.6g}")
    return KernelFlowTrace(s=s, points=points, theta_unwrapped=y[:, 3], step=h, exited=exited,
                           metric_id=m.metric_id)


def flow_point(m: DiagonalMetric, p, s: float, h: float = DEFAULT_STEP) -> np.ndarray:
    """
    | Endpoint of the Z-flow from p after parameter s, with unwrapped theta.
    """
    trace = integrate_kernel_flow(m, p, s, h)
    if trace.exited:
        raise DomainError(f"Flow from {p} left the chart before s = {s}")
    return np.append(trace.points[-1, :3], trace.theta_unwrapped[-1])


def prolongation_distance(a, b) -> float:
    """
    | Euclidean distance on the prolongation chart with the theta difference taken on the circle.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    dtheta = math.remainder(a[3] - b[3], TWO_PI)
    return math.sqrt(float(np.sum((a[:3] - b[:3]) ** 2)) + dtheta * dtheta)


def deprolong_equivalent(m: DiagonalMetric, p, q, s_window: float, tol: float,
                         h: float = DEFAULT_STEP) -> DeprolongResult:
    """
    | Decide whether q lies on the Z-flow line through p within parameter distance s_window.

    | The flow is sampled forward and backward at step h; the closest sample is refined by a bounded scalar
    minimisation over one partial RK4 step on either side.

    :param m: separable metric.
    :param p: prolongation point.
    :param q: prolongation point.
    :param s_window: half width of the searched flow interval.
    :param tol: distance below which q counts as on the flow line.
    :param h: step.
    :return: DeprolongResult.
    """
    q = np.asarray(q, dtype=float)
    rhs = _flow_rhs(m)
    distance, s_best, state, step = math.inf, 0.0, None, h
    exited = False
    for direction in (1.0, -1.0):
        trace = integrate_kernel_flow(m, p, direction * s_window, h)
        exited = exited or trace.exited
        states = np.column_stack([trace.points[:, :3], trace.theta_unwrapped])
        d = np.array([prolongation_distance(y, q) for y in states])
        k = int(np.argmin(d))
        if d[k] < distance:
            distance, s_best, state = float(d[k]), float(trace.s[k]), states[k]
            if len(trace.s) > 1:
                step = abs(float(trace.s[1] - trace.s[0]))

    # refine between the neighbouring samples
    def partial(delta: float) -> float:
        try:
            return prolongation_distance(rk4_step(rhs, state, delta), q)
        except ValueError:
            return math.inf

    refined = minimize_scalar(partial, bounds=(-step, step), method="bounded", options={"xatol": 1e-12})
    if refined.success and refined.fun < distance:
        distance, s_best = float(refined.fun), s_best + float(refined.x)

    if distance < tol:
        return DeprolongResult(True, distance, s_best)
    if exited:
        logger.warning(f"Flow left the chart before deciding equivalence, closest distance {distance:.3e}")
        return DeprolongResult(None, distance, s_best, indeterminate=True)
    return DeprolongResult(False, distance, s_best)


def _project_to_slice(Z: np.ndarray, w: np.ndarray) -> np.ndarray:
    # along Z onto {x3 = const}, coordinates (x1, x2, theta)
    v = w - (w[2] / Z[2]) * Z
    return np.array([v[0], v[1], v[3]])


def _plane(vectors) -> np.ndarray:
    basis = orth(np.column_stack(vectors), rcond=1e-8)
    if basis.shape[1] != 2:
        raise RankError(f"Projected vectors span a {basis.shape[1]}-dimensional space, expected a plane")
    return basis


def pushforward_contact_plane(m: DiagonalMetric, p, h: float = FD_STEP) -> np.ndarray:
    """
    | Image of E under the quotient by the Z-flow, in the slice chart x3 = const with coordinates (x1, x2, theta).

    :param m: separable metric.
    :param p: prolongation point.
    :param h: finite difference step for metric partials when they are not analytic.
    :return: 3x2 matrix with orthonormal columns spanning the plane.
    """
    Z = kernel_Z_separable(m, p, h)
    if abs(Z[2]) < 1e-12:
        raise TransversalityError(f"Z is tangent to the slice x3 = {p[2]}")
    return _plane([_project_to_slice(Z, w) for w in (lorentz_X(m, p), lorentz_Xdot(m, p), THETA_DIR)])


def sky_transport_plane(m: DiagonalMetric, p, s: float = 0.5, eps: float = FD_STEP,
                        h: float = DEFAULT_STEP) -> np.ndarray:
    """
    | Plane spanned at p by the tangents of two skies: d/dtheta at p, and d/dtheta at the flow point after s carried
    back along the flow by a difference quotient of the inverse flow. Both are projected onto the slice x3 = const.

    :param m: separable metric.
    :param p: prolongation point.
    :param s: flow parameter of the second sky point.
    :param eps: difference quotient step.
    :param h: integration step.
    :return: 3x2 matrix with orthonormal columns.
    """
    p = np.asarray(p, dtype=float)
    ahead = flow_point(m, p, s, h)
    back_plus = flow_point(m, ahead + eps * THETA_DIR, -s, h)
    back_minus = flow_point(m, ahead - eps * THETA_DIR, -s, h)
    transported = (back_plus - back_minus) / (2.0 * eps)
    Z = kernel_Z_separable(m, p)
    return _plane([_project_to_slice(Z, THETA_DIR), _project_to_slice(Z, transported)])


def compare_with_geodesic(m: DiagonalMetric, p0, s_max: float, h: float = DEFAULT_STEP) -> GeodesicComparison:
    """
    | Project the Z-flow from p0 to the chart and compare it with the null geodesic launched from
    null_cone_vector(m, x0, theta0) with the same step.

    :param m: separable metric.
    :param p0: prolongation point.
    :param s_max: final parameter.
    :param h: step.
    :return: GeodesicComparison with pointwise and image distances.
    """
    x0, theta0 = _split(p0)
    flow = integrate_kernel_flow(m, p0, s_max, h)
    geodesic = integrate_geodesic(m, x0, null_cone_vector(m, x0, theta0), s_max, h)

    columns = ["x1", "x2", "x3"]
    distances = pointwise_distance(flow.to_frame(), geodesic.to_frame(), columns)
    max_distance = float(distances["distance"].max())
    hausdorff = hausdorff_distance(flow.points[:, :3], geodesic.x)

    varying = abs(metric_partials(m, x0)[2, 2]) > 0.0
    logger.info(f"Z-flow vs null geodesic on '{m.metric_id}': pointwise {max_distance:.3e}, image {hausdorff:.3e}"
                f"{' (g33 varies)' if varying else ''}")
    if varying and max_distance > 1e-6:
        warnings.warn(f"Z-flow and null geodesic parametrizations differ on '{m.metric_id}' "
                      f"(pointwise {max_distance:.3e}, image {hausdorff:.3e})")
    return GeodesicComparison(flow, geodesic, distances, max_distance, hausdorff)


def cartan_vector_fields(Y: VectorField, Zc: VectorField) -> Tuple[VectorField, VectorField]:
    """
    | Fields X(x, t) = Y cos t + Zc sin t and Xdot(x, t) = -Y sin t + Zc cos t on the Cartan prolongation chart.
    """
    def X(q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        return np.append(np.asarray(Y(q[:-1])) * math.cos(q[-1]) + np.asarray(Zc(q[:-1])) * math.sin(q[-1]), 0.0)

    def Xdot(q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        return np.append(-np.asarray(Y(q[:-1])) * math.sin(q[-1]) + np.asarray(Zc(q[:-1])) * math.cos(q[-1]), 0.0)

    return X, Xdot


def cartan_prolongation_frame(Y: VectorField, Zc: VectorField, x, t: float) -> EngelFlag:
    """
    | Engel flag of the Cartan prolongation of the contact plane <Y, Zc> at (x, t): D = <d/dt, X(t)>,
    E = <d/dt> + <Y, Zc>, kernel W = <d/dt>.

    :param Y: first contact plane field.
    :param Zc: second contact plane field.
    :param x: base point.
    :param t: angle of the line.
    :return: EngelFlag with Z = d/dt.
    """
    x = np.asarray(x, dtype=float)
    y, z = np.asarray(Y(x), dtype=float), np.asarray(Zc(x), dtype=float)
    if np.linalg.matrix_rank(np.vstack([y, z]), tol=RANK_TOL) != 2:
        raise RankError(f"Contact plane frame is degenerate at {x}")
    X, Xdot = cartan_vector_fields(Y, Zc)
    q = np.append(x, t)
    dt = np.zeros(len(q))
    dt[-1] = 1.0
    return EngelFlag(X(q), Xdot(q), dt, dt.copy())
