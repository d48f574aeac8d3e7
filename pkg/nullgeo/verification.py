import logging
import math
from typing import Callable, Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.linalg import subspace_angles
from scipy.spatial import cKDTree

from .contact_check import isothermal_coefficient, isothermal_contact_form, wedge_coefficient
from .engel_prolong import compare_with_geodesic, deprolong_equivalent, engel_rank_ladder, flow_point, \
    kernel_invariance_residual, kernel_Z_general, kernel_Z_separable, pushforward_contact_plane, sky_transport_plane
from .helpers.exceptions import NullGeoError, UnknownCheckError
from .helpers.metrics import minkowski3, round_sphere, stereographic_gc, tilted_conformal, warped_time
from .helpers.settings import DEFAULT_SEED, worker_count
from .internal_checks import check_order
from .lorentz_core import christoffel, integrate_geodesic, metric_from_cone, sample_cone
from .quat_hopf import STANDARD_FRAME, exp_pure, hopf_commutes, lens_descends, phi, phi_inverse, qmul, \
    random_frame, random_unit_quaternion
from .s2s1_model import NC_CONTACT_TOL, canonical_class, frame_to_unit_tangent, intersection_count, \
    lens_orbit_classes, nc_contact_residuals, nc_contact_score, orbit, random_unit_tangent, zc_action
from .trace_handling import ReportFile, build_report

logger = logging.getLogger(__name__)

# a sample is (point recorded in the report, residual)
Sample = Tuple[np.ndarray, float]


class CheckEntry(NamedTuple):
    draw: Callable[[np.random.Generator, int, int], List[tuple]]
    evaluate: Callable[..., Sample]
    tolerance: float
    uses_c: bool
    description: str


# residual recorded for a sample whose evaluation raised
SAMPLE_ERROR_RESIDUAL = float(np.finfo(float).max)


def _sample_point(arg) -> np.ndarray:
    if hasattr(arg, "to_array"):
        return arg.to_array()
    return np.ravel(np.asarray(arg, dtype=float))


def _guarded(evaluate: Callable[..., Sample]) -> Callable[..., Sample]:
    def run_sample(*args) -> Sample:
        try:
            return evaluate(*args)
        except NullGeoError as e:
            logger.warning(f"Sample at {_sample_point(args[0]).tolist()} failed with {type(e).__name__}: {e}")
            return _sample_point(args[0]), SAMPLE_ERROR_RESIDUAL

    return run_sample


def _run(evaluate: Callable[..., Sample], inputs: List[tuple]) -> List[Sample]:
    evaluate = _guarded(evaluate)
    n_jobs = worker_count()
    if n_jobs == 1:
        return [evaluate(*args) for args in inputs]
    # results come back in input order
    return Parallel(n_jobs=n_jobs, prefer="threads")(delayed(evaluate)(*args) for args in inputs)


def _intersections_draw(rng, c, n):
    return [(random_unit_tangent(rng), c) for _ in range(n)]


def _intersections(p, c) -> Sample:
    result = intersection_count(p, c)
    if result.count != c:
        return p.to_array(), float(abs(result.count - c))
    return p.to_array(), float(np.max(np.abs(result.gaps - 2.0 * math.pi / c)))


def _quotient_draw(rng, c, n):
    return [(random_unit_tangent(rng), c) for _ in range(n)]


def _quotient(p, c) -> Sample:
    rep = canonical_class(p, c).rep.to_array()
    worst = max(float(np.max(np.abs(canonical_class(q, c).rep.to_array() - rep))) for q in orbit(p, c))
    return rep, worst


def _double_cover_draw(rng, c, n):
    inputs = []
    for k in range(n):
        frame = random_frame(rng)
        q = random_unit_quaternion(rng)
        # every fifth sample forces phi(q).u = u, the next one phi(q).u = -u
        if k % 5 == 3:
            q = exp_pure(rng.uniform(-math.pi, math.pi), frame.u)
        elif k % 5 == 4:
            q = qmul(exp_pure(math.pi / 2.0, frame.v), exp_pure(rng.uniform(-math.pi, math.pi), frame.u))
        inputs.append((q, frame))
    return inputs


def _double_cover(q, frame) -> Sample:
    back = phi_inverse(phi(q, frame), frame).to_array()
    a = q.to_array()
    return np.concatenate([a, frame.to_array()]), float(min(np.linalg.norm(back - a), np.linalg.norm(back + a)))


def _commuting_draw(rng, c, n):
    return [(random_unit_quaternion(rng), random_frame(rng)) for _ in range(n)]


def _commuting(q, frame) -> Sample:
    return np.concatenate([q.to_array(), frame.to_array()]), hopf_commutes(q, frame)


def _lens_draw(rng, c, n):
    return [(random_unit_quaternion(rng), c) for _ in range(n)]


def _lens(q, c) -> Sample:
    residual = lens_descends(q, c)
    images, classes = lens_orbit_classes(q, c)
    base = frame_to_unit_tangent(phi(q, STANDARD_FRAME))
    for k, image in enumerate(images):
        residual = max(residual, float(np.max(np.abs(image.to_array() - zc_action(base, c, k).to_array()))))
    rep = classes[0].rep.to_array()
    for cls in classes[1:]:
        residual = max(residual, float(np.max(np.abs(cls.rep.to_array() - rep))))
    return q.to_array(), residual


def _contact_utb_draw(rng, c, n):
    return [(np.array([rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0, 2 * math.pi)]),) for _ in range(n)]


def _contact_utb(p) -> Sample:
    m = round_sphere()
    alpha = isothermal_contact_form(m)
    return p, abs(wedge_coefficient(alpha, p) - isothermal_coefficient(m, p))


def _contact_nc_draw(rng, c, n):
    return [(random_unit_tangent(rng), c) for _ in range(n)]


def _contact_nc(p, c) -> Sample:
    return p.to_array(), nc_contact_score(nc_contact_residuals(p, c), c)


def _prolongation_points(rng, n, box: float = 1.0):
    return [np.array([rng.uniform(-box, box), rng.uniform(-box, box), rng.uniform(-box, box),
                      rng.uniform(0, 2 * math.pi)]) for _ in range(n)]


def _engel_ladder_draw(rng, c, n):
    return [(p, c) for p in _prolongation_points(rng, n)]


def _engel_ladder(p, c) -> Sample:
    residual = 0.0
    for m in (stereographic_gc(c), warped_time()):
        if engel_rank_ladder(m, p) != (2, 3, 4):
            return p, 1.0
        residual = max(residual, kernel_invariance_residual(m, p),
                       float(np.max(np.abs(kernel_Z_general(m, p) - kernel_Z_separable(m, p)))))
    return p, residual


def _kernel_invariance_draw(rng, c, n):
    return [(p,) for p in _prolongation_points(rng, n)]


def _kernel_invariance(p) -> Sample:
    return p, max(kernel_invariance_residual(m, p) for m in (tilted_conformal(), warped_time()))


def _deprolong_draw(rng, c, n):
    # close to the south pole so that the searched flow window stays in the chart
    return [(p, c, rng.uniform(-1.0, 1.0)) for p in _prolongation_points(rng, n, box=0.5)]


def _deprolong(p, c, s) -> Sample:
    # pointwise limit 1e-6 on g_c and flat space, image limit 1e-5 on the warped metric, reported as multiples
    m = stereographic_gc(c)
    residual = max(compare_with_geodesic(m, p, 2.0 * math.pi).max_distance / 1e-6,
                   compare_with_geodesic(minkowski3(), p, 2.0).max_distance / 1e-6,
                   compare_with_geodesic(warped_time(), p, 2.0).hausdorff / 1e-5)
    on_line = flow_point(m, p, s)
    off_line = on_line + np.array([0.0, 0.0, 0.0, 0.1])
    if not deprolong_equivalent(m, p, on_line, 1.5, 1e-6):
        residual = max(residual, 10.0)
    if deprolong_equivalent(m, p, off_line, 1.5, 1e-6).equivalent is not False:
        residual = max(residual, 10.0)
    return p, residual


def _pushforward_draw(rng, c, n):
    return [(p, c) for p in _prolongation_points(rng, n)]


def _pushforward(p, c) -> Sample:
    m = stereographic_gc(c)
    return p, float(np.max(subspace_angles(pushforward_contact_plane(m, p), sky_transport_plane(m, p))))


def _random_quadric(rng) -> np.ndarray:
    Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    a, b = rng.uniform(0.5, 2.0, size=2)
    return Q @ np.diag([a, b, -1.0 / (a * b)]) @ Q.T


def _cone_draw(rng, c, n):
    return [(_random_quadric(rng), rng.uniform(0, 2 * math.pi)) for _ in range(n)]


def _cone(G, offset) -> Sample:
    recovered = metric_from_cone(sample_cone(G, 8, offset)).G
    return G.ravel(), float(np.max(np.abs(recovered - G)))


def _minkowski_draw(rng, c, n):
    return [(rng.uniform(-5, 5, size=3), rng.standard_normal(3)) for _ in range(n)]


def _minkowski(x, v) -> Sample:
    m = minkowski3()
    residual = max(float(np.max(np.abs(christoffel(m, x).gamma))),
                   float(np.max(np.abs(christoffel(m.without_partials(), x).gamma))))
    trace = integrate_geodesic(m, x, v, 1.0, 0.1)
    straight = x[None, :] + trace.s[:, None] * v[None, :]
    residual = max(residual, float(np.max(np.abs(trace.x - straight))))
    return np.concatenate([x, v]), residual


CHECKS: Dict[str, CheckEntry] = {
    "intersections": CheckEntry(_intersections_draw, _intersections, 1e-9, True,
                                "c crossings of t = 0 at gaps 2 pi / c"),
    "quotient": CheckEntry(_quotient_draw, _quotient, 1e-12, True,
                           "canonical class constant on orbits, no collisions across orbits"),
    "double-cover": CheckEntry(_double_cover_draw, _double_cover, 1e-10, False,
                               "phi_inverse o phi in {q, -q}, colinear branches included"),
    "commuting-diagram": CheckEntry(_commuting_draw, _commuting, 1e-12, False, "f o phi = tau_{u x v}"),
    "lens-descent": CheckEntry(_lens_draw, _lens, 1e-10, True,
                               "Z_2c action descends to zc_action and its orbits give one class"),
    "contact-utb": CheckEntry(_contact_utb_draw, _contact_utb, 1e-6, False,
                              "isothermal alpha ^ d alpha coefficient equals -sqrt(g11 g22)"),
    "contact-Nc": CheckEntry(_contact_nc_draw, _contact_nc, NC_CONTACT_TOL, True,
                             "sky tangents span the contact plane in every orbit chart, residuals over limits"),
    "engel-ladder": CheckEntry(_engel_ladder_draw, _engel_ladder, 1e-4, True,
                               "rank ladder 2/3/4, kernel invariance and general = separable kernel"),
    "kernel-invariance": CheckEntry(_kernel_invariance_draw, _kernel_invariance, 1e-4, False,
                                    "[Z, E] in E for non separable and warped metrics"),
    "deprolong": CheckEntry(_deprolong_draw, _deprolong, 1.0, True,
                            "Z-flow projects to null geodesics of g_c, flat and warped metrics, residuals over limits"),
    "pushforward": CheckEntry(_pushforward_draw, _pushforward, 1e-5, True,
                              "quotient image of E equals the two sky tangent plane"),
    "cone": CheckEntry(_cone_draw, _cone, 1e-8, False, "Lorentz quadric recovered from 8 null directions"),
    "minkowski": CheckEntry(_minkowski_draw, _minkowski, 1e-6, False,
                            "vanishing Christoffel symbols and straight geodesics"),
}


def _collision_residuals(points: List[np.ndarray], resolution: float = 1e-6) -> np.ndarray:
    # 1 where another class representative lies closer than resolution
    if len(points) < 2:
        return np.zeros(len(points))
    distances, _ = cKDTree(np.vstack(points)).query(np.vstack(points), k=2)
    return (distances[:, 1] < resolution).astype(float)


def run_check(check_id: str, c: int = 1, n: int = 100, seed: int = DEFAULT_SEED,
              tolerance: Optional[float] = None) -> ReportFile:
    """
    | Run a registered verification sweep over n seeded samples and aggregate it into a ReportFile.

    :param check_id: key of CHECKS.
    :param c: group order for checks on S^2 x S^1.
    :param n: number of samples.
    :param seed: seed of the sample generator.
    :param tolerance: overrides the declared tolerance of the check.
    :return: ReportFile.
    """
    if check_id not in CHECKS:
        raise UnknownCheckError(f"Check '{check_id}' not found. Use one of {sorted(CHECKS)}")
    entry = CHECKS[check_id]
    c = check_order(c)
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")

    rng = np.random.default_rng(seed)
    inputs = entry.draw(rng, c, n)
    logger.debug(f"Check {check_id}: {len(inputs)} samples drawn with seed {seed}")
    points, residuals = zip(*_run(entry.evaluate, inputs))
    residuals = np.asarray(residuals, dtype=float)

    if check_id == "quotient":
        residuals = np.maximum(residuals, _collision_residuals(list(points)))

    params = {"c": c} if entry.uses_c else {}
    tol = entry.tolerance if tolerance is None else float(tolerance)
    return build_report(check_id, list(points), residuals, tol, seed, params)
