import math
from dataclasses import dataclass
from typing import Callable, List, Tuple, Union

import numpy as np

from .helpers.exceptions import InvalidAxisError
from .helpers.settings import COLINEAR_TOL, UNIT_TOL
from .internal_checks import check_order


@dataclass(frozen=True)
class Quaternion:
    """
    | Element w + x i + y j + z k of the quaternions. Pure imaginary quaternions are Quaternions with w = 0.
    """
    w: float
    x: float
    y: float
    z: float

    def __mul__(self, other: "Quaternion") -> "Quaternion":
        return qmul(self, other)

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.w + other.w, self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.w - other.w, self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self) -> "Quaternion":
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def scale(self, a: float) -> "Quaternion":
        return Quaternion(a * self.w, a * self.x, a * self.y, a * self.z)

    def conj(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def norm_sq(self) -> float:
        # real part of q q*
        return self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def inverse(self) -> "Quaternion":
        n2 = self.norm_sq()
        if n2 == 0.0:
            raise ZeroDivisionError("The zero quaternion has no inverse")
        return self.conj().scale(1.0 / n2)

    def normalized(self) -> "Quaternion":
        return self.scale(1.0 / self.norm())

    def vector(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def to_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    @classmethod
    def from_array(cls, a) -> "Quaternion":
        a = np.asarray(a, dtype=float)
        if a.shape != (4,):
            raise ValueError(f"Quaternion needs 4 components, got shape {a.shape}")
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))

    @classmethod
    def pure(cls, v) -> "Quaternion":
        return cls(0.0, float(v[0]), float(v[1]), float(v[2]))


ONE = Quaternion(1.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class UnitImaginary:
    """
    | Unit pure imaginary quaternion, a point of the unit sphere S V of the imaginary quaternions.
    """
    x: float
    y: float
    z: float

    def __post_init__(self):
        n = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if abs(n - 1.0) > UNIT_TOL:
            raise InvalidAxisError(f"UnitImaginary must have norm 1, got {n}")

    @classmethod
    def from_vector(cls, v, normalize: bool = False) -> "UnitImaginary":
        v = np.asarray(v, dtype=float)
        if normalize:
            n = np.linalg.norm(v)
            if n == 0.0:
                raise InvalidAxisError("Cannot normalize the zero vector")
            v = v / n
        return cls(float(v[0]), float(v[1]), float(v[2]))

    def quaternion(self) -> Quaternion:
        return Quaternion(0.0, self.x, self.y, self.z)

    def vector(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


I = UnitImaginary(1.0, 0.0, 0.0)
J = UnitImaginary(0.0, 1.0, 0.0)
K = UnitImaginary(0.0, 0.0, 1.0)


@dataclass(frozen=True)
class FramePair:
    """
    | Orthonormal pair (u, v) of unit imaginaries, a point of ST(S V).
    """
    u: UnitImaginary
    v: UnitImaginary

    def __post_init__(self):
        d = float(np.dot(self.u.vector(), self.v.vector()))
        if abs(d) > UNIT_TOL:
            raise ValueError(f"FramePair vectors must be orthogonal, got inner product {d}")

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.u.vector(), self.v.vector()])

    @classmethod
    def from_vectors(cls, u, v) -> "FramePair":
        return cls(UnitImaginary.from_vector(u), UnitImaginary.from_vector(v))


STANDARD_FRAME = FramePair(J, K)

QuaternionLike = Union[Quaternion, UnitImaginary]


def _as_quaternion(q: QuaternionLike) -> Quaternion:
    if isinstance(q, UnitImaginary):
        return q.quaternion()
    if isinstance(q, Quaternion):
        return q
    raise TypeError(f"Expected Quaternion or UnitImaginary, got {type(q).__name__}")


def _as_pure(q: QuaternionLike, name: str) -> Quaternion:
    q = _as_quaternion(q)
    if abs(q.w) > UNIT_TOL:
        raise ValueError(f"{name} must be pure imaginary, got real part {q.w}")
    return q


def qmul(a: Quaternion, b: Quaternion) -> Quaternion:
    """
    | Hamilton product a b.

    :param a: left factor.
    :param b: right factor.
    :return: the product quaternion.
    """
    a = _as_quaternion(a)
    b = _as_quaternion(b)
    return Quaternion(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )


def cross(u: QuaternionLike, v: QuaternionLike) -> Quaternion:
    """
    | Cross product of pure imaginaries, (uv - vu) / 2.

    :param u: pure imaginary quaternion.
    :param v: pure imaginary quaternion.
    :return: pure imaginary quaternion.
    """
    u = _as_pure(u, "u")
    v = _as_pure(v, "v")
    d = qmul(u, v) - qmul(v, u)
    return Quaternion(0.0, 0.5 * d.x, 0.5 * d.y, 0.5 * d.z)


def inner(u: QuaternionLike, v: QuaternionLike) -> float:
    """
    | Inner product of pure imaginaries, -(uv + vu) / 2.

    :param u: pure imaginary quaternion.
    :param v: pure imaginary quaternion.
    :return: real number.
    """
    u = _as_pure(u, "u")
    v = _as_pure(v, "v")
    return -0.5 * (qmul(u, v).w + qmul(v, u).w)


def exp_pure(alpha: float, z: QuaternionLike) -> Quaternion:
    """
    | Exponential e^{alpha z} = cos(alpha) + z sin(alpha) of a unit imaginary axis z.

    :param alpha: angle in radians.
    :param z: unit imaginary axis.
    :return: unit quaternion.
    """
    z = _as_quaternion(z)
    n = math.sqrt(z.x * z.x + z.y * z.y + z.z * z.z)
    if abs(z.w) > UNIT_TOL or abs(n - 1.0) > UNIT_TOL:
        raise InvalidAxisError(f"Axis must be a unit imaginary quaternion, got {z}")
    s = math.sin(alpha)
    return Quaternion(math.cos(alpha), z.x * s, z.y * s, z.z * s)


def rotate(s: Quaternion, r: QuaternionLike) -> Quaternion:
    """
    | Conjugation s r s^{-1}. For s = e^{(alpha / 2) z} this is the rotation of r by alpha about z.

    :param s: unit quaternion.
    :param r: pure imaginary quaternion.
    :return: pure imaginary quaternion.
    """
    r = _as_pure(r, "r")
    out = qmul(qmul(s, r), s.inverse())
    return Quaternion(0.0, out.x, out.y, out.z)


def _unit(q: Quaternion) -> UnitImaginary:
    return UnitImaginary(q.x, q.y, q.z)


def phi(q: Quaternion, frame: FramePair) -> FramePair:
    """
    | Double cover S^3 -> ST(S V), q -> (q u q^{-1}, q v q^{-1}) for the fixed frame (u, v).

    :param q: unit quaternion.
    :param frame: the base frame (u, v).
    :return: the rotated frame.
    """
    return FramePair(_unit(rotate(q, frame.u)), _unit(rotate(q, frame.v)))


def canonical_sign(q: Quaternion) -> Quaternion:
    """
    | Representative of {q, -q} with nonnegative real part. When the real part vanishes the first nonzero
    imaginary component is made positive.
    """
    if abs(q.w) > COLINEAR_TOL:
        return q if q.w > 0 else -q
    for c in (q.x, q.y, q.z):
        if abs(c) > COLINEAR_TOL:
            return q if c > 0 else -q
    return q


def _rotor_between(a: np.ndarray, b: np.ndarray, fallback_axis: np.ndarray) -> Quaternion:
    """
    | Unit quaternion turning unit vector a onto unit vector b about an axis orthogonal to a.

    | Only |a x b| < COLINEAR_TOL takes the fixed branches (1, or a half turn about fallback_axis). Pairs inside the
    band |<a, b>| > 1 - 1e-10 with a larger sine still get the rotor about a x b, exact to about 1e-16 / |a x b|.
    """
    c = np.cross(a, b)
    sin_t = float(np.linalg.norm(c))
    cos_t = float(np.dot(a, b))
    if sin_t < COLINEAR_TOL:
        if cos_t > 0:
            return ONE
        return exp_pure(math.pi / 2.0, UnitImaginary.from_vector(fallback_axis, normalize=True))
    z = c - np.dot(c, a) * a
    z = z / np.linalg.norm(z)
    return exp_pure(0.5 * math.atan2(sin_t, cos_t), UnitImaginary.from_vector(z))


def phi_inverse(target: FramePair, frame: FramePair) -> Quaternion:
    """
    | One of the two antipodal preimages of target under phi(., frame).

    | The first factor q1 turns u onto w = target.u (q1 = 1 when u = w, a half turn about v when u = -w). The
    second factor q2 turns q1 v q1^{-1} onto target.v about w (q2 = 1 or a half turn about w in the colinear
    cases). The product q2 q1 is returned with nonnegative real part.

    :param target: frame to reach.
    :param frame: base frame (u, v).
    :return: unit quaternion q with phi(q, frame) = target.
    """
    u = frame.u.vector()
    w = target.u.vector()

    q1 = _rotor_between(u, w, frame.v.vector())
    v1 = rotate(q1, frame.v).vector()
    q2 = _rotor_between(v1, target.v.vector(), w)

    return canonical_sign(qmul(q2, q1).normalized())


def hopf(q: Quaternion, w: UnitImaginary) -> UnitImaginary:
    """
    | Hopf fibration tau_w(q) = q w q^{-1}.

    :param q: unit quaternion.
    :param w: unit imaginary defining the fibration.
    :return: point of S V.
    """
    return _unit(rotate(q, w))


def fiber_projection(frame: FramePair) -> UnitImaginary:
    """
    | Bundle map f(u, v) = u x v of ST(S V) onto S V.
    """
    return _unit(cross(frame.u, frame.v))


def hopf_commutes(q: Quaternion, frame: FramePair) -> float:
    """
    | Residual of f o phi = tau_{u x v} at q.

    :param q: unit quaternion.
    :param frame: base frame.
    :return: Euclidean distance between both sides.
    """
    left = fiber_projection(phi(q, frame)).vector()
    right = hopf(q, fiber_projection(frame)).vector()
    return float(np.linalg.norm(left - right))


def f_fiber(frame: FramePair, theta: float) -> FramePair:
    """
    | Point at angle theta on the fibre of f through frame, (e^{-w theta} u e^{w theta}, e^{-w theta} v e^{w theta})
    with w = u x v.
    """
    w = fiber_projection(frame)
    return phi(exp_pure(-theta, w), frame)


def lens_generator(p: int) -> Callable[[Quaternion], Quaternion]:
    """
    | Generator q -> q e^{2 pi i / p} of the cyclic action on S^3 whose quotient is the lens space L(p, p - 1).

    :param p: order of the group.
    :return: the generating map.
    """
    p = check_order(p, "p")
    g = exp_pure(2.0 * math.pi / p, I)

    def generator(q: Quaternion) -> Quaternion:
        return qmul(q, g)

    return generator


def lens_orbit(q: Quaternion, p: int) -> List[Quaternion]:
    """
    | The p elements q, g(q), ..., g^{p-1}(q) of the Z_p orbit of q.
    """
    generator = lens_generator(p)
    out = [q]
    for _ in range(p - 1):
        out.append(generator(out[-1]))
    return out


def lens_descends(q: Quaternion, c: int) -> float:
    """
    | Residual of the descent of the Z_{2c} action to ST S^2: phi(q e^{pi i / c}) against the block rotation by
    2 pi / c applied to phi(q), both for the frame (j, k).

    :param q: unit quaternion.
    :param c: order of the descended action.
    :return: max componentwise difference.
    """
    c = check_order(c)
    left = phi(qmul(q, exp_pure(math.pi / c, I)), STANDARD_FRAME)
    base = phi(q, STANDARD_FRAME)
    a = 2.0 * math.pi / c
    u, v = base.u.vector(), base.v.vector()
    right = np.concatenate([u * math.cos(a) + v * math.sin(a), -u * math.sin(a) + v * math.cos(a)])
    return float(np.max(np.abs(left.to_array() - right)))


def quaternion_from_complex_pair(z0: complex, z1: complex) -> Quaternion:
    """
    | Identification of C^2 with the quaternions, (z0, z1) -> z0 + z1 j.
    """
    return Quaternion(z0.real, z0.imag, z1.real, z1.imag)


def complex_pair_from_quaternion(q: Quaternion) -> Tuple[complex, complex]:
    return complex(q.w, q.x), complex(q.y, q.z)


def lens_action_c2(z0: complex, z1: complex, p: int, q: int) -> Tuple[complex, complex]:
    """
    | Generator (z0, z1) -> (e^{2 pi i / p} z0, e^{2 pi i q / p} z1) of L(p, q) for q in {1, p - 1}.

    | Under z0 + z1 j the case q = p - 1 is right multiplication by e^{2 pi i / p} (lens_generator) and the case
    q = 1 is left multiplication.

    :param z0: first complex coordinate.
    :param z1: second complex coordinate.
    :param p: order.
    :param q: twist, 1 or p - 1.
    :return: image pair.
    """
    p = check_order(p, "p")
    if q not in (1, p - 1):
        raise ValueError(f"Only L(p, 1) and L(p, p - 1) are supported, got q = {q} for p = {p}")
    a = 2.0 * math.pi / p
    return z0 * complex(math.cos(a), math.sin(a)), z1 * complex(math.cos(q * a), math.sin(q * a))


def random_unit_quaternion(rng: np.random.Generator) -> Quaternion:
    """
    | Uniform sample of S^3.
    """
    a = rng.standard_normal(4)
    return Quaternion.from_array(a / np.linalg.norm(a))


def random_frame(rng: np.random.Generator) -> FramePair:
    """
    | Uniform sample of ST(S V).
    """
    u = rng.standard_normal(3)
    u /= np.linalg.norm(u)
    v = rng.standard_normal(3)
    v -= np.dot(v, u) * u
    v /= np.linalg.norm(v)
    return FramePair.from_vectors(u, v)
