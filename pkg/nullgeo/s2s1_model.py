import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy.linalg import null_space, orth, subspace_angles
from scipy.optimize import brentq

from .helpers.exceptions import BranchError
from .helpers.metrics import stereographic_gc
from .helpers.settings import CLASS_GRID, DEFAULT_SEED, DEFAULT_STEP, FD_STEP, LEX_TOL, UNIT_TOL
from .internal_checks import check_order
from .lorentz_core import integrate_geodesic
from .quat_hopf import STANDARD_FRAME, Quaternion, lens_orbit, phi
from .trace_handling import ReportFile, build_report

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
# limits for the sky tangent residual, the plane angle (tighter on ST S^2 itself) and the well-definedness angle
SKY_TANGENCY_TOL = 1e-6
NC_ANGLE_TOL = 1e-5
NC_ANGLE_TOL_C1 = 1e-6
NC_WELL_DEFINED_TOL = 1e-5
# contact-Nc residuals are reported as multiples of their own limits
NC_CONTACT_TOL = 1.0


def _vec(v) -> Tuple[float, float, float]:
    return float(v[0]), float(v[1]), float(v[2])


@dataclass(frozen=True)
class UnitTangent:
    """
    | Point (x, u) of the unit tangent bundle of S^2, held extrinsically in R^3 x R^3.
    """
    x: Tuple[float, float, float]
    u: Tuple[float, float, float]

    def __post_init__(self):
        x, u = np.array(self.x), np.array(self.u)
        if abs(np.linalg.norm(x) - 1.0) > UNIT_TOL or abs(np.linalg.norm(u) - 1.0) > UNIT_TOL:
            raise ValueError(f"UnitTangent needs unit vectors, got |x| = {np.linalg.norm(x)}, "
                             f"|u| = {np.linalg.norm(u)}")
        if abs(float(np.dot(x, u))) > UNIT_TOL:
            raise ValueError(f"UnitTangent needs orthogonal vectors, got <x, u> = {np.dot(x, u)}")

    @classmethod
    def normalized(cls, x, u) -> "UnitTangent":
        """
        | Project x to the sphere, Gram-Schmidt u against x and renormalize.
        """
        x = np.asarray(x, dtype=float)
        x = x / np.linalg.norm(x)
        u = np.asarray(u, dtype=float)
        u = u - np.dot(u, x) * x
        return cls(_vec(x), _vec(u / np.linalg.norm(u)))

    @property
    def xv(self) -> np.ndarray:
        return np.array(self.x)

    @property
    def uv(self) -> np.ndarray:
        return np.array(self.u)

    def to_array(self) -> np.ndarray:
        return np.array(self.x + self.u)


@dataclass(frozen=True)
class EventPoint:
    """
    | Event (x, t) of S^2 x S^1 with t in [0, 2 pi).
    """
    x: Tuple[float, float, float]
    t: float

    @classmethod
    def make(cls, x, t: float) -> "EventPoint":
        x = np.asarray(x, dtype=float)
        if abs(np.linalg.norm(x) - 1.0) > UNIT_TOL:
            raise ValueError(f"EventPoint needs a unit vector, got norm {np.linalg.norm(x)}")
        return cls(_vec(x), float(t) % TWO_PI)

    @property
    def xv(self) -> np.ndarray:
        return np.array(self.x)


@dataclass(frozen=True)
class NullGeodesicClass:
    """
    | Null geodesic of g_c as a point of the quotient of ST S^2 by Z_c, stored by its canonical representative.
    """
    rep: UnitTangent
    c: int


@dataclass(frozen=True)
class TangentToSTS2:
    """
    | Tangent vector (a, b) to ST S^2 at (x, u): <x, a> = 0, <u, b> = 0 and <x, b> + <u, a> = 0.
    """
    a: np.ndarray
    b: np.ndarray

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.a, self.b])

    def residual(self, p: UnitTangent) -> float:
        return float(np.max(np.abs(st_tangent_constraints(p) @ self.to_array())))


@dataclass
class IntersectionResult:
    """
    | Parameters in [0, 2 pi) where a null geodesic meets t = 0, the spatial points there and the angular gaps.
    """
    count: int
    s: np.ndarray
    points: np.ndarray
    gaps: np.ndarray


def random_unit_tangent(rng: np.random.Generator) -> UnitTangent:
    """
    | Uniform sample of ST S^2.
    """
    x = rng.standard_normal(3)
    u = rng.standard_normal(3)
    return UnitTangent.normalized(x, u)


def great_circle(p: UnitTangent, t: float) -> np.ndarray:
    """
    | Unit speed great circle x cos t + u sin t.
    """
    return p.xv * math.cos(t) + p.uv * math.sin(t)


def great_circle_velocity(p: UnitTangent, t: float) -> np.ndarray:
    return -p.xv * math.sin(t) + p.uv * math.cos(t)


def null_geodesic(p: UnitTangent, c: int, s: float) -> EventPoint:
    """
    | Null geodesic s -> (x cos s + u sin s, c s mod 2 pi) of g_c through (x, 0).

    :param p: initial point and direction.
    :param c: positive integer.
    :param s: parameter.
    :return: EventPoint.
    """
    c = check_order(c)
    return EventPoint.make(great_circle(p, s), c * s)


def _exact_cos_sin(j: int, c: int) -> Tuple[float, float]:
    # quarter turns are exact
    k = j % c
    if (4 * k) % c == 0:
        return [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)][(4 * k) // c]
    a = TWO_PI * k / c
    return math.cos(a), math.sin(a)


def _rotate_pair(a: np.ndarray, b: np.ndarray, j: int, c: int) -> Tuple[np.ndarray, np.ndarray]:
    co, si = _exact_cos_sin(j, c)
    return a * co + b * si, -a * si + b * co


def zc_action(p: UnitTangent, c: int, j: int) -> UnitTangent:
    """
    | Generator power j of the Z_c action on ST S^2, the rotation of the pair (x, u) by 2 pi j / c.

    :param p: point of ST S^2.
    :param c: order.
    :param j: power.
    :return: UnitTangent.
    """
    c = check_order(c)
    x, u = _rotate_pair(p.xv, p.uv, j, c)
    return UnitTangent.normalized(x, u)


def orbit(p: UnitTangent, c: int) -> List[UnitTangent]:
    """
    | The c images of p under the Z_c action, in order j = 0, ..., c - 1.
    """
    c = check_order(c)
    return [zc_action(p, c, j) for j in range(c)]


def binormal(p: UnitTangent) -> np.ndarray:
    """
    | x cross u, the unit normal of the great circle of p, constant along Z_c orbits.
    """
    return np.cross(p.xv, p.uv)


def _lex_less(a: np.ndarray, b: np.ndarray) -> bool:
    for ai, bi in zip(a, b):
        if abs(ai - bi) > LEX_TOL:
            return ai < bi
    return False


def _orbit_representative(p: UnitTangent, c: int) -> Tuple[UnitTangent, int]:
    # lexicographically smallest orbit element and its power, ties to the smaller power
    best, best_j = p, 0
    for j in range(1, c):
        q = zc_action(p, c, j)
        if _lex_less(q.to_array(), best.to_array()):
            best, best_j = q, j
    return best, best_j


def _snap(p: UnitTangent) -> UnitTangent:
    v = np.round(p.to_array() / CLASS_GRID) * CLASS_GRID
    return UnitTangent.normalized(v[:3], v[3:])


def canonical_class(p: UnitTangent, c: int) -> NullGeodesicClass:
    """
    | Canonical representative of the Z_c orbit of p: the lexicographically smallest orbit element in
    (x1, x2, x3, u1, u2, u3) order, compared with tolerance 1e-12, rounded to a CLASS_GRID = 1e-8 grid and
    renormalized so that every orbit element yields the identical representative.

    | The representative is therefore not an orbit element itself but lies within about CLASS_GRID of the
    lexicographic minimum. Two orbits whose minima fall in the same grid cell share a representative.

    :param p: point of ST S^2.
    :param c: order.
    :return: NullGeodesicClass.
    """
    c = check_order(c)
    rep, _ = _orbit_representative(p, c)
    return NullGeodesicClass(_snap(rep), c)


def sky_basis(x) -> Tuple[np.ndarray, np.ndarray]:
    """
    | Orthonormal basis of the plane orthogonal to x, by Gram-Schmidt of the two standard axes least aligned with x.
    """
    x = np.asarray(x, dtype=float)
    axes = np.argsort(np.abs(x), kind="stable")[:2]
    e = np.eye(3)
    b1 = e[axes[0]] - np.dot(e[axes[0]], x) * x
    b1 /= np.linalg.norm(b1)
    b2 = e[axes[1]] - np.dot(e[axes[1]], x) * x - np.dot(e[axes[1]], b1) * b1
    b2 /= np.linalg.norm(b2)
    return b1, b2


def sky_direction(x, theta: float) -> np.ndarray:
    b1, b2 = sky_basis(x)
    return b1 * math.cos(theta) + b2 * math.sin(theta)


def sky_angle(x, d) -> float:
    """
    | Angle of the direction d in the sky basis at x.
    """
    b1, b2 = sky_basis(x)
    return math.atan2(float(np.dot(d, b2)), float(np.dot(d, b1)))


def sky_crossing(e: EventPoint, c: int, theta: float) -> UnitTangent:
    """
    | Point of ST S^2 where the null geodesic through e with spatial direction at angle theta meets t = 0, tracking
    back by the parameter t / c.

    :param e: event.
    :param c: order.
    :param theta: sky angle.
    :return: UnitTangent before the quotient.
    """
    c = check_order(c)
    d = sky_direction(e.xv, theta)
    s0 = -e.t / c
    x = e.xv
    return UnitTangent.normalized(x * math.cos(s0) + d * math.sin(s0), -x * math.sin(s0) + d * math.cos(s0))


def sky(e: EventPoint, c: int, theta: float) -> NullGeodesicClass:
    """
    | Class of the null geodesic through e whose spatial direction at e makes angle theta in the sky basis.
    """
    return canonical_class(sky_crossing(e, c, theta), c)


def sky_circle_residual(e: EventPoint, c: int, point) -> float:
    """
    | Distance of a point of S^2 from the circle of centre x and angular radius t / c, which holds the t = 0
    crossings of the sky of e = (x, t).
    """
    r = e.t / check_order(c)
    point = np.asarray(point, dtype=float)
    along = float(np.dot(point, e.xv))
    return max(abs(along - math.cos(r)), abs(float(np.linalg.norm(point - along * e.xv)) - abs(math.sin(r))))


def st_tangent_constraints(p: UnitTangent) -> np.ndarray:
    """
    | 3x6 linearised constraints of ST S^2 at p acting on (a, b).
    """
    x, u, z = p.xv, p.uv, np.zeros(3)
    return np.vstack([np.concatenate([x, z]), np.concatenate([z, u]), np.concatenate([u, x])])


def chi_constraints(p: UnitTangent) -> np.ndarray:
    """
    | 4x6 constraints cutting the canonical contact plane: tangency to ST S^2 and <u, a> = 0.
    """
    return np.vstack([st_tangent_constraints(p), np.concatenate([p.uv, np.zeros(3)])])


def chi_plane(p: UnitTangent) -> Tuple[TangentToSTS2, TangentToSTS2]:
    """
    | Orthonormal frame of the canonical contact plane at p, the tangent vectors (a, b) whose footpoint part a is
    orthogonal to u.
    """
    basis = null_space(chi_constraints(p))
    if basis.shape[1] != 2:
        raise ValueError(f"Contact plane constraints at {p} leave a {basis.shape[1]}-dimensional space")
    return TangentToSTS2(basis[:3, 0], basis[3:, 0]), TangentToSTS2(basis[:3, 1], basis[3:, 1])


def _plane_matrix(vectors) -> np.ndarray:
    return np.column_stack([v.to_array() if isinstance(v, (TangentToSTS2, UnitTangent)) else np.asarray(v) for v in vectors])


def max_principal_angle(a, b) -> float:
    """
    | Largest principal angle between the spans of two lists of vectors.
    """
    return float(np.max(subspace_angles(_plane_matrix(a), _plane_matrix(b))))


def _raw_sky_tangent(e: EventPoint, c: int, theta: float, h: float) -> Tuple[UnitTangent, np.ndarray]:
    # derivative of the crossing curve before the quotient
    plus = sky_crossing(e, c, theta + h).to_array()
    minus = sky_crossing(e, c, theta - h).to_array()
    return sky_crossing(e, c, theta), (plus - minus) / (2.0 * h)


def push_tangent(v: np.ndarray, c: int, j: int) -> np.ndarray:
    """
    | Differential of zc_action(., c, j) applied to a tangent vector (a, b).
    """
    a, b = _rotate_pair(v[:3], v[3:], j, c)
    return np.concatenate([a, b])


def sky_tangent(e: EventPoint, c: int, theta: float, h: float = FD_STEP) -> TangentToSTS2:
    """
    | Tangent of the sky curve of e at theta, lifted to the orbit representative and expressed in its tangent space.

    :param e: event.
    :param c: order.
    :param theta: sky angle.
    :param h: difference step.
    :return: TangentToSTS2 at the representative.
    """
    c = check_order(c)
    branches = {_orbit_representative(sky_crossing(e, c, theta + k * h), c)[1] for k in (-1, 0, 1)}
    if len(branches) != 1:
        raise BranchError(f"Orbit representative changes branch within the stencil at theta = {theta}, h = {h}")
    j = branches.pop()
    _, raw = _raw_sky_tangent(e, c, theta, h)
    v = push_tangent(raw, c, j)
    return TangentToSTS2(v[:3], v[3:])


def _sky_tangent_retry(e: EventPoint, c: int, theta: float, h: float) -> TangentToSTS2:
    for k in range(4):
        try:
            return sky_tangent(e, c, theta, h / 10 ** k)
        except BranchError:
            logger.warning(f"Branch switch in sky tangent at theta = {theta}, retrying with h = {h / 10 ** (k + 1)}")
    raise BranchError(f"Sky tangent at theta = {theta} keeps switching branch")


def second_sky_offset(c: int) -> float:
    """
    | Parameter of the second sky point on the geodesic, pi / (2 c + 2).
    """
    return math.pi / (2 * c + 2)


def nc_contact_residuals(p: UnitTangent, c: int, h: float = FD_STEP) -> Tuple[float, float, float]:
    """
    | For the class of p: the largest sky tangent residual off the contact plane, the largest principal angle between
    the plane of two sky tangents and the contact plane at the representative, and the same angle for the plane
    rebuilt at the next orbit element and carried back by the group action.

    :param p: point of ST S^2.
    :param c: order.
    :param h: difference step.
    :return: (tangency residual, plane angle, well-definedness angle).
    """
    rep = canonical_class(p, c).rep
    tau = second_sky_offset(c)
    chi = chi_plane(rep)
    chi_basis = _plane_matrix(chi)

    tangents = []
    for s in (0.0, tau):
        e = null_geodesic(rep, c, s)
        theta = sky_angle(e.xv, great_circle_velocity(rep, s))
        tangents.append(_sky_tangent_retry(e, c, theta, h))

    tangency = 0.0
    for t in tangents:
        v = t.to_array()
        tangency = max(tangency, float(np.linalg.norm(v - chi_basis @ (chi_basis.T @ v))) / float(np.linalg.norm(v)))
    angle = max_principal_angle(tangents, chi)

    # same geodesic class seen from the orbit element at j = 1, carried back with j = c - 1
    other = zc_action(rep, c, 1)
    pushed = []
    for s in (0.0, tau):
        e = null_geodesic(other, c, s)
        theta = sky_angle(e.xv, great_circle_velocity(other, s))
        _, raw = _raw_sky_tangent(e, c, theta, h)
        pushed.append(push_tangent(raw, c, c - 1))
    pushed_chi = [push_tangent(v.to_array(), c, c - 1) for v in chi_plane(other)]
    well_defined = max(max_principal_angle(pushed, chi), max_principal_angle(pushed_chi, chi))

    return tangency, angle, well_defined


def nc_contact_score(residuals: Tuple[float, float, float], c: int) -> float:
    """
    | Largest of the three contact residuals divided by its own limit, so that a class passes below 1.
    """
    tangency, angle, well_defined = residuals
    angle_tol = NC_ANGLE_TOL_C1 if c == 1 else NC_ANGLE_TOL
    return max(tangency / SKY_TANGENCY_TOL, angle / angle_tol, well_defined / NC_WELL_DEFINED_TOL)


def verify_contact_on_Nc(c: int, n_samples: int, seed: int = DEFAULT_SEED) -> ReportFile:
    """
    | Sweep random geodesic classes and compare the plane of two sky tangents with the canonical contact plane at
    the representative, including the plane rebuilt from another orbit element.

    :param c: order.
    :param n_samples: number of classes.
    :param seed: random seed.
    :return: ReportFile with residual nc_contact_score per class against tolerance 1.
    """
    c = check_order(c)
    rng = np.random.default_rng(seed)
    points, residuals = [], []
    for _ in range(n_samples):
        p = random_unit_tangent(rng)
        points.append(p.to_array())
        residuals.append(nc_contact_score(nc_contact_residuals(p, c), c))
    return build_report("contact-Nc", points, residuals, NC_CONTACT_TOL, seed, {"c": c})


def _signed_time(p: UnitTangent, c: int, s: float) -> float:
    # time of the geodesic folded into (-pi, pi], continuous through t = 0 and jumping at t = pi
    return math.remainder(null_geodesic(p, c, s).t, TWO_PI)


def intersection_count(p: UnitTangent, c: int) -> IntersectionResult:
    """
    | Parameters s in [0, 2 pi) where the null geodesic through (x, 0) meets t = 0 again. The time component of
    null_geodesic is folded into (-pi, pi], sign changes are bracketed on a grid of 64 c cells and refined with brentq.
    Brackets across the fold at t = pi are dropped since the folded time stays near +-pi there.

    :param p: initial point and direction.
    :param c: order.
    :return: IntersectionResult with count, parameters, spatial points and gaps.
    """
    c = check_order(c)
    f = lambda s: _signed_time(p, c, s)
    lo = -math.pi / c
    grid = np.linspace(lo, lo + TWO_PI, 64 * c + 1)
    roots = []
    for a, b in zip(grid[:-1], grid[1:]):
        fa, fb = f(a), f(b)
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0 and max(abs(fa), abs(fb)) < 0.5 * math.pi:
            root = brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
            if abs(f(root)) < 1e-9:
                roots.append(root)
    s = np.sort(np.mod(np.array(roots), TWO_PI))
    # snap roots within rounding of 2 pi back to 0
    s[np.isclose(s, TWO_PI, rtol=0.0, atol=1e-12)] = 0.0
    s = np.sort(s)
    gaps = np.diff(np.append(s, s[0] + TWO_PI))
    points = np.array([great_circle(p, si) for si in s])
    return IntersectionResult(len(s), s, points, gaps)


def stereographic_chart(X) -> np.ndarray:
    """
    | Stereographic projection from (0, 0, 1), y = (X1, X2) / (1 - X3).
    """
    X = np.asarray(X, dtype=float)
    return X[:2] / (1.0 - X[2])


def stereographic_inverse(y) -> np.ndarray:
    """
    | Point (2 y1, 2 y2, |y|^2 - 1) / (1 + |y|^2) of the sphere.
    """
    y = np.asarray(y, dtype=float)
    r2 = float(np.dot(y, y))
    return np.array([2.0 * y[0], 2.0 * y[1], r2 - 1.0]) / (1.0 + r2)


def stereographic_velocity(X, U) -> np.ndarray:
    """
    | Chart velocity of a curve through X with velocity U.
    """
    X = np.asarray(X, dtype=float)
    U = np.asarray(U, dtype=float)
    w = 1.0 - X[2]
    return U[:2] / w + X[:2] * U[2] / (w * w)


def analytic_vs_chart_geodesic(p: UnitTangent, c: int, s_max: float, h: float = DEFAULT_STEP) -> float:
    """
    | Largest chart distance between the analytic null geodesic and its integration in the stereographic chart of
    g_c, over the part of the trace the chart covers.
    """
    m = stereographic_gc(check_order(c))
    x0 = np.append(stereographic_chart(p.xv), 0.0)
    v0 = np.append(stereographic_velocity(p.xv, p.uv), float(c))
    trace = integrate_geodesic(m, x0, v0, s_max, h)
    expected = np.array([np.append(stereographic_chart(great_circle(p, s)), c * s) for s in trace.s])
    return float(np.max(np.linalg.norm(trace.x - expected, axis=1)))


def frame_to_unit_tangent(frame) -> UnitTangent:
    return UnitTangent.normalized(frame.u.vector(), frame.v.vector())


def lens_orbit_classes(q: Quaternion, c: int) -> Tuple[List[UnitTangent], List[NullGeodesicClass]]:
    """
    | Images in ST S^2 of the Z_{2c} orbit of q under phi for the frame (j, k), with their classes. All classes
    coincide and the images form one Z_c orbit.

    :param q: unit quaternion.
    :param c: order.
    :return: (images, classes), one entry per quaternion in the orbit.
    """
    c = check_order(c)
    images = [frame_to_unit_tangent(phi(g, STANDARD_FRAME)) for g in lens_orbit(q, 2 * c)]
    return images, [canonical_class(p, c) for p in images]


def orbit_span(vectors) -> np.ndarray:
    """
    | Orthonormal basis of the span of a list of 6-vectors.
    """
    return orth(_plane_matrix(vectors))
