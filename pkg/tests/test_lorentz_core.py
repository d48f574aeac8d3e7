import math

import numpy as np
import pytest

from nullgeo.helpers.exceptions import DegenerateConeError, DomainError, NotLorentzConeError, SeparabilityError, \
    SignatureError
from nullgeo.helpers.metrics import minkowski3, round_sphere, stereographic_gc, tilted_conformal, warped_time
from nullgeo.lorentz_core import ConeQuadric, DiagonalMetric, christoffel, geodesic_rhs, integrate_geodesic, \
    metric_from_cone, metric_partials, norm_sq, null_cone_vector, sample_cone, spray_euler_bracket, \
    trace_norm_drift
from nullgeo.s2s1_model import UnitTangent, great_circle, stereographic_chart, stereographic_velocity


def chart_path(p: UnitTangent, s: float) -> np.ndarray:
    return np.append(stereographic_chart(great_circle(p, s)), 0.0)


def random_chart_points(rng, n, box=2.0):
    return [rng.uniform(-box, box, size=3) for _ in range(n)]


def random_quadric(rng) -> np.ndarray:
    Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    a, b = rng.uniform(0.5, 2.0, size=2)
    return Q @ np.diag([a, b, -1.0 / (a * b)]) @ Q.T


@pytest.mark.lorentz
class TestDiagonalMetric:
    def test_signature_is_checked(self):

        # g33 > 0 on the grid
        with pytest.raises(SignatureError):
            DiagonalMetric(lambda x: 1.0, lambda x: 1.0, lambda x: 1.0)

        # g11 < 0 for x1 > 0.5
        with pytest.raises(SignatureError):
            DiagonalMetric(lambda x: 0.5 - x[0], lambda x: 1.0, lambda x: -1.0, domain=((-1, 1), (-1, 1), (-1, 1)))

    def test_separability_is_checked(self):
        m = tilted_conformal()
        with pytest.raises(SeparabilityError):
            DiagonalMetric(m.g11, m.g22, m.g33, partials=m.partials, separable=True, domain=m.domain)

    def test_domain(self):
        m = stereographic_gc(2)
        with pytest.raises(DomainError):
            christoffel(m, [20.0, 0.0, 0.0])
        with pytest.raises(ValueError):
            christoffel(m, [0.0, 0.0])
        with pytest.raises(ValueError):
            DiagonalMetric(lambda x: 1.0, lambda x: 1.0, lambda x: -1.0, domain=((1, -1), (-1, 1), (-1, 1)))


@pytest.mark.lorentz
class TestChristoffel:
    def test_minkowski_vanishes(self):
        rng = np.random.default_rng(0)
        m = minkowski3()
        for x in random_chart_points(rng, 100, 5.0):
            assert np.max(np.abs(christoffel(m, x).gamma)) < 1e-10
            assert np.max(np.abs(christoffel(m.without_partials(), x).gamma)) < 1e-6

    def test_analytic_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        for m in (round_sphere(), warped_time(), tilted_conformal()):
            for x in random_chart_points(rng, 50):
                assert np.max(np.abs(metric_partials(m, x) - metric_partials(m.without_partials(), x))) < 1e-6
                diff = christoffel(m, x).gamma - christoffel(m.without_partials(), x).gamma
                assert np.max(np.abs(diff)) < 1e-6

    def test_symmetry_is_exact(self):
        rng = np.random.default_rng(2)
        for m in (round_sphere(), tilted_conformal(), warped_time().without_partials()):
            for x in random_chart_points(rng, 20):
                gamma = christoffel(m, x).gamma
                assert np.array_equal(gamma, np.transpose(gamma, (0, 2, 1)))

    def test_separable_time_index(self):
        rng = np.random.default_rng(3)
        for m in (stereographic_gc(3), warped_time()):
            for x in random_chart_points(rng, 20):
                gamma = christoffel(m, x)
                for k in range(3):
                    for i in range(3):
                        for j in range(3):
                            if 2 in (k, i, j) and (k, i, j) != (2, 2, 2):
                                assert abs(gamma[k, i, j]) < 1e-12

        # only the warped metric has a time self coupling
        x = np.array([0.3, -0.2, 0.7])
        assert abs(christoffel(warped_time(), x)[2, 2, 2]) > 1e-3
        assert christoffel(stereographic_gc(3), x)[2, 2, 2] == 0.0


@pytest.mark.lorentz
class TestGeodesics:
    def test_minkowski_rhs(self):
        rng = np.random.default_rng(4)
        m = minkowski3()
        for x in random_chart_points(rng, 10):
            v = rng.standard_normal(3)
            dx, dv = geodesic_rhs(m, x, v)
            assert np.array_equal(dx, v)
            assert np.max(np.abs(dv)) == 0.0

        dx, dv = geodesic_rhs(round_sphere(), [0.4, 0.1, 0.0], np.zeros(3))
        assert np.max(np.abs(dx)) == 0.0 and np.max(np.abs(dv)) == 0.0

    def test_round_sphere_acceleration(self):
        m = round_sphere()
        rng = np.random.default_rng(5)
        h = 1e-4
        for _ in range(20):
            p = UnitTangent.normalized(rng.standard_normal(3) + np.array([0.0, 0.0, -2.0]), rng.standard_normal(3))
            y = chart_path(p, 0.0)
            v = np.append(stereographic_velocity(p.xv, p.uv), 0.0)
            acc = (chart_path(p, h) - 2.0 * y + chart_path(p, -h)) / (h * h)
            _, dv = geodesic_rhs(m, y, v)
            assert np.max(np.abs(dv - acc)) < 1e-5 * max(1.0, np.max(np.abs(acc)))

    def test_minkowski_straight_line(self):
        trace = integrate_geodesic(minkowski3(), [0, 0, 0], [1, 0, 1], 1.0, 1e-3)
        assert np.allclose(trace.x[-1], [1.0, 0.0, 1.0], atol=1e-12)
        assert np.allclose(trace.x, np.column_stack([trace.s, np.zeros_like(trace.s), trace.s]), atol=1e-12)
        assert not trace.exited

    def test_zero_length(self):
        trace = integrate_geodesic(minkowski3(), [1, 2, 3], [1, 0, 1], 0.0)
        assert len(trace.s) == 1
        assert np.array_equal(trace.x[0], [1.0, 2.0, 3.0])
        assert np.array_equal(trace.v[0], [1.0, 0.0, 1.0])

    def test_great_circle_oracle(self):
        m = round_sphere()

        # equator through (1, 0, 0) is the unit circle of the chart
        p = UnitTangent((1.0, 0.0, 0.0), (0.0, 1.0, 0.0))
        v0 = np.append(stereographic_velocity(p.xv, p.uv), 0.0)
        trace = integrate_geodesic(m, chart_path(p, 0.0), v0, 2 * math.pi, 1e-3)
        expected = np.array([chart_path(p, s) for s in trace.s])
        assert np.max(np.abs(trace.x - expected)) < 1e-7
        assert trace_norm_drift(m, trace) < 1e-8

    def test_rk4_order(self):
        m = round_sphere()
        p = UnitTangent.normalized([1.0, 0.0, 0.0], [0.0, math.cos(0.5), math.sin(0.5)])
        v0 = np.append(stereographic_velocity(p.xv, p.uv), 0.0)
        errors = []
        for h in (0.04, 0.02):
            trace = integrate_geodesic(m, chart_path(p, 0.0), v0, 2.0, h)
            errors.append(np.linalg.norm(trace.x[-1] - chart_path(p, 2.0)))
        assert 12.0 <= errors[0] / errors[1] <= 20.0

    def test_null_preservation(self):
        m = stereographic_gc(2)
        x0 = np.array([1.0, 0.0, 0.0])
        v0 = null_cone_vector(m, x0, math.pi / 2)
        trace = integrate_geodesic(m, x0, v0, 2 * math.pi, 1e-3)
        assert not trace.exited
        assert max(abs(norm_sq(m, x, v)) for x, v in zip(trace.x, trace.v)) < 1e-8

    def test_chart_exit(self):
        m = stereographic_gc(1)

        # straight towards the north pole
        trace = integrate_geodesic(m, [0.0, 0.0, 0.0], null_cone_vector(m, [0.0, 0.0, 0.0], 0.0), 2 * math.pi, 1e-2)
        assert trace.exited
        assert trace.s[-1] < math.pi
        assert all(m.contains(x) for x in trace.x)

    def test_trace_frame(self):
        trace = integrate_geodesic(minkowski3(), [0, 0, 0], [1, 0, 1], -1.0, 0.25)
        df = trace.to_frame()
        assert df.columns == ["s", "x1", "x2", "x3", "v1", "v2", "v3"]
        assert df["s"].to_list() == [-1.0, -0.75, -0.5, -0.25, 0.0]
        assert df["x1"][0] == pytest.approx(-1.0, abs=1e-12)


@pytest.mark.lorentz
class TestNullCone:
    def test_null_cone_vector(self):
        m = minkowski3()
        assert np.allclose(null_cone_vector(m, [0, 0, 0], 0.0), [1, 0, 1], atol=1e-15)
        assert np.allclose(null_cone_vector(m, [0, 0, 0], math.pi / 2), [0, 1, 1], atol=1e-15)

        for c in (1, 2, 5):
            m = stereographic_gc(c)
            v = null_cone_vector(m, [0, 0, 0], 0.0)
            assert np.allclose(v, [0.5, 0.0, c], atol=1e-15)
            assert abs(norm_sq(m, [0, 0, 0], v)) < 1e-12

    def test_norm_sq(self):
        m = minkowski3()
        assert norm_sq(m, [0, 0, 0], [1, 0, 1]) == 0.0
        assert norm_sq(m, [0, 0, 0], [0, 0, 1]) == -1.0
        assert norm_sq(warped_time(), [0.1, 0.2, 0.3], [0, 0, 0]) == 0.0

    def test_null_directions_everywhere(self):
        rng = np.random.default_rng(6)
        for m in (warped_time(), tilted_conformal()):
            for x in random_chart_points(rng, 50):
                v = null_cone_vector(m, x, rng.uniform(0, 2 * math.pi))
                assert abs(norm_sq(m, x, v)) < 1e-12
                assert v[2] > 0


@pytest.mark.lorentz
class TestSprayAndCone:
    def test_spray_euler_bracket(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            x, v = rng.uniform(-2, 2, size=3), rng.standard_normal(3)
            assert spray_euler_bracket(minkowski3(), x, v) < 1e-10
            assert spray_euler_bracket(round_sphere(), x, v) < 1e-4
        assert spray_euler_bracket(round_sphere(), [0.3, 0.4, 0.0], np.zeros(3)) == 0.0

    def test_minkowski_cone(self):
        samples = [np.array([math.cos(t), math.sin(t), 1.0]) for t in np.linspace(0, 2 * math.pi, 8, endpoint=False)]
        G = metric_from_cone(samples).G
        assert np.allclose(G, np.diag([1.0, 1.0, -1.0]), atol=1e-8)

    def test_cone_round_trip(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            G0 = random_quadric(rng)
            samples = sample_cone(G0, 8, rng.uniform(0, 2 * math.pi))
            G = metric_from_cone(samples).G
            assert np.max(np.abs(G - G0)) < 1e-8
            assert max(abs(v @ G @ v) for v in samples) < 1e-9

    def test_cone_errors(self):
        rng = np.random.default_rng(9)
        G0 = random_quadric(rng)
        with pytest.raises(DegenerateConeError):
            metric_from_cone(sample_cone(G0, 4))

        # five directions on one plane leave a pencil of quadrics
        planar = [np.array([math.cos(t), math.sin(t), 0.0]) for t in np.linspace(0, math.pi, 5, endpoint=False)]
        with pytest.raises(DegenerateConeError):
            metric_from_cone(planar)

        # a definite quadric has no cone to sample
        with pytest.raises(NotLorentzConeError):
            sample_cone(np.eye(3), 8)
        with pytest.raises(NotLorentzConeError):
            ConeQuadric(np.eye(3))
