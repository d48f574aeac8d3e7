import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nullgeo.helpers.exceptions import BranchError, InvalidOrderError
from nullgeo.quat_hopf import STANDARD_FRAME, random_unit_quaternion
from nullgeo.s2s1_model import EventPoint, TangentToSTS2, UnitTangent, analytic_vs_chart_geodesic, binormal, \
    canonical_class, chi_constraints, chi_plane, frame_to_unit_tangent, great_circle, great_circle_velocity, \
    intersection_count, lens_orbit_classes, max_principal_angle, nc_contact_residuals, nc_contact_score, \
    null_geodesic, orbit, orbit_span, random_unit_tangent, second_sky_offset, sky, sky_angle, sky_basis, \
    sky_circle_residual, sky_crossing, sky_tangent, stereographic_chart, stereographic_inverse, \
    stereographic_velocity, verify_contact_on_Nc, zc_action

P0 = UnitTangent((1.0, 0.0, 0.0), (0.0, 1.0, 0.0))

angles = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)


def random_tangents(seed, n):
    rng = np.random.default_rng(seed)
    return [random_unit_tangent(rng) for _ in range(n)]


def circle_gap(a: float, b: float) -> float:
    return abs(math.remainder(a - b, 2 * math.pi))


@pytest.mark.model
class TestTypes:
    def test_unit_tangent(self):
        with pytest.raises(ValueError):
            UnitTangent((1.0, 0.0, 0.0), (1.0, 0.0, 0.0))
        with pytest.raises(ValueError):
            UnitTangent((2.0, 0.0, 0.0), (0.0, 1.0, 0.0))

        p = UnitTangent.normalized([3.0, 0.0, 0.0], [1.0, 2.0, 0.0])
        assert p == P0
        assert np.array_equal(p.to_array(), [1.0, 0.0, 0.0, 0.0, 1.0, 0.0])

    def test_event_point(self):
        e = EventPoint.make([0.0, 0.0, 1.0], -0.5)
        assert e.t == pytest.approx(2 * math.pi - 0.5, abs=1e-15)
        with pytest.raises(ValueError):
            EventPoint.make([0.0, 0.0, 0.5], 0.0)

    def test_tangent_residual(self):
        assert TangentToSTS2(np.array([0.0, 0.0, 1.0]), np.zeros(3)).residual(P0) == 0.0
        assert TangentToSTS2(np.array([1.0, 0.0, 0.0]), np.zeros(3)).residual(P0) == 1.0

    def test_frame_to_unit_tangent(self):
        assert frame_to_unit_tangent(STANDARD_FRAME) == UnitTangent((0.0, 1.0, 0.0), (0.0, 0.0, 1.0))


@pytest.mark.model
class TestNullGeodesics:
    def test_great_circle(self):
        assert np.allclose(great_circle(P0, math.pi / 2), [0.0, 1.0, 0.0], atol=1e-15)
        assert np.array_equal(great_circle(P0, 0.0), P0.xv)
        assert np.allclose(great_circle(P0, 2 * math.pi), P0.xv, atol=1e-12)
        for p in random_tangents(0, 20):
            assert abs(np.linalg.norm(great_circle(p, 1.234)) - 1.0) < 1e-12

    def test_null_geodesic(self):
        e = null_geodesic(P0, 1, 0.0)
        assert e.x == P0.x and e.t == 0.0

        e = null_geodesic(P0, 2, math.pi)
        assert np.allclose(e.xv, -P0.xv, atol=1e-15)
        assert e.t == 0.0

        # crossings of t = 0 for c = 3
        for s in (0.0, 2 * math.pi / 3, 4 * math.pi / 3):
            assert circle_gap(null_geodesic(P0, 3, s).t, 0.0) < 1e-12

        with pytest.raises(InvalidOrderError):
            null_geodesic(P0, 0, 1.0)

    @given(s=angles)
    @settings(max_examples=50, deadline=None)
    def test_closure(self, s):
        p = UnitTangent.normalized([0.3, -0.5, 0.8], [1.0, 0.2, 0.0])
        for c in (1, 2, 5):
            a, b = null_geodesic(p, c, s), null_geodesic(p, c, s + 2 * math.pi)
            assert np.max(np.abs(a.xv - b.xv)) < 1e-12
            assert circle_gap(a.t, b.t) < 1e-12

    @pytest.mark.parametrize("c", [1, 2, 3, 4])
    def test_intersections(self, c):
        for p in random_tangents(c, 50):
            result = intersection_count(p, c)
            assert result.count == c
            assert np.max(np.abs(result.gaps - 2 * math.pi / c)) < 1e-9
            assert np.all((result.s >= 0) & (result.s < 2 * math.pi))
            for s, x in zip(result.s, result.points):
                assert circle_gap(null_geodesic(p, c, s).t, 0.0) < 1e-9
                assert np.allclose(x, great_circle(p, s), atol=1e-15)

    def test_intersection_examples(self):
        assert intersection_count(P0, 1).s.tolist() == [0.0]
        result = intersection_count(P0, 2)
        assert np.allclose(result.points, [P0.xv, -P0.xv], atol=1e-12)

    def test_intersections_follow_geodesic_time(self, monkeypatch):
        # a geodesic winding three times faster in t meets t = 0 three times as often
        monkeypatch.setattr("nullgeo.s2s1_model.null_geodesic",
                            lambda p, c, s: EventPoint.make(great_circle(p, s), 3 * c * s))
        result = intersection_count(P0, 2)
        assert result.count == 6
        assert np.max(np.abs(result.gaps - math.pi / 3)) < 1e-9


@pytest.mark.model
class TestQuotient:
    def test_zc_action_examples(self):
        p = UnitTangent.normalized([0.3, -0.5, 0.8], [1.0, 0.2, 0.0])
        assert np.allclose(zc_action(p, 1, 5).to_array(), p.to_array(), atol=1e-15)
        assert np.allclose(zc_action(p, 7, 0).to_array(), p.to_array(), atol=1e-15)
        q = zc_action(p, 2, 1)
        assert np.allclose(q.to_array(), -p.to_array(), atol=1e-15)
        q = zc_action(p, 4, 1)
        assert np.allclose(q.to_array(), np.concatenate([p.uv, -p.xv]), atol=1e-15)

    @pytest.mark.parametrize("c", [1, 2, 3, 5])
    def test_orbit(self, c):
        for p in random_tangents(10 + c, 20):
            elements = orbit(p, c)
            assert len(elements) == c
            for j, q in enumerate(elements):
                t = 2 * math.pi * j / c
                assert np.allclose(q.xv, great_circle(p, t), atol=1e-12)
                assert np.allclose(q.uv, great_circle_velocity(p, t), atol=1e-12)
            if c > 1:
                arr = np.array([q.to_array() for q in elements])
                distances = np.linalg.norm(arr[:, None, :] - arr[None, :, :], axis=-1)
                assert np.min(distances[~np.eye(c, dtype=bool)]) > 1e-8

    def test_binormal(self):
        assert np.array_equal(binormal(P0), [0.0, 0.0, 1.0])

        # the whole orbit lies on one great circle
        for p in random_tangents(15, 20):
            n = binormal(p)
            assert np.linalg.norm(n) == pytest.approx(1.0, abs=1e-12)
            for q in orbit(p, 5):
                assert np.allclose(binormal(q), n, atol=1e-12)

    @pytest.mark.parametrize("c", [1, 2, 3, 4, 6])
    def test_canonical_class_is_constant_on_orbits(self, c):
        for p in random_tangents(20 + c, 200):
            rep = canonical_class(p, c).rep
            for j in range(c):
                assert canonical_class(zc_action(p, c, j), c).rep == rep

    @pytest.mark.parametrize("c", [2, 3, 5])
    def test_representative_is_on_the_grid_near_the_orbit(self, c):
        for p in random_tangents(25 + c, 100):
            rep = canonical_class(p, c).rep.to_array()
            elements = np.array([q.to_array() for q in orbit(p, c)])
            distances = np.linalg.norm(elements - rep, axis=1)
            assert np.min(distances) < 3e-8
            assert np.sort(distances)[1] > 1e-6

            # the nearest element is the lexicographic minimum
            nearest = elements[np.argmin(distances)]
            assert all(tuple(nearest) <= tuple(e) for e in elements)

    def test_canonical_class_examples(self):
        p = UnitTangent.normalized([0.3, -0.5, 0.8], [1.0, 0.2, 0.0])
        assert np.allclose(canonical_class(p, 1).rep.to_array(), p.to_array(), atol=1e-8)
        assert canonical_class(p, 3).c == 3

        # c = 2 picks the element with the smaller first coordinate
        rep = canonical_class(p, 2).rep
        assert rep.x[0] < 0

    def test_quotient_has_no_collisions(self):
        c = 3
        reps = np.array([canonical_class(p, c).rep.to_array() for p in random_tangents(30, 1000)])
        distances = np.linalg.norm(reps[:, None, :] - reps[None, :, :], axis=-1)
        np.fill_diagonal(distances, np.inf)
        assert np.min(distances) > 1e-6

    def test_orbit_span(self):
        p = random_tangents(40, 1)[0]
        assert orbit_span(orbit(p, 2)).shape == (6, 1)
        assert orbit_span(orbit(p, 5)).shape == (6, 2)

    @pytest.mark.parametrize("c", [1, 2, 3, 4])
    def test_lens_orbit_classes(self, c):
        rng = np.random.default_rng(50 + c)
        for _ in range(20):
            q = random_unit_quaternion(rng)
            images, classes = lens_orbit_classes(q, c)
            assert len(images) == 2 * c
            assert all(cls.rep == classes[0].rep for cls in classes)
            distinct = {tuple(np.round(p.to_array(), 8)) for p in images}
            assert len(distinct) == c


@pytest.mark.model
class TestSkies:
    def test_sky_basis(self):
        b1, b2 = sky_basis([1.0, 0.0, 0.0])
        assert np.array_equal(b1, [0.0, 1.0, 0.0]) and np.array_equal(b2, [0.0, 0.0, 1.0])
        for p in random_tangents(60, 20):
            b1, b2 = sky_basis(p.xv)
            assert abs(np.dot(b1, p.xv)) < 1e-12 and abs(np.dot(b2, p.xv)) < 1e-12
            assert abs(np.dot(b1, b2)) < 1e-12
            assert sky_angle(p.xv, b1 * math.cos(0.4) + b2 * math.sin(0.4)) == pytest.approx(0.4, abs=1e-12)

    def test_sky_examples(self):
        e = EventPoint.make([1.0, 0.0, 0.0], 0.0)
        assert sky(e, 1, 0.0).rep == canonical_class(P0, 1).rep
        for c in (1, 2, 3):
            for theta in (0.0, 0.7, 2.5):
                a, b = sky(e, c, theta).rep.to_array(), sky(e, c, theta + 2 * math.pi).rep.to_array()
                assert np.max(np.abs(a - b)) < 1e-7

    def test_sky_circle(self):
        rng = np.random.default_rng(70)
        for c in (1, 2, 3):
            for p in random_tangents(70 + c, 10):
                e = null_geodesic(p, c, rng.uniform(0, 2 * math.pi))
                for theta in np.linspace(0, 2 * math.pi, 13):
                    assert sky_circle_residual(e, c, sky_crossing(e, c, theta).xv) < 1e-10

        # a quarter turn downstream the sky of the round sphere projects to the great circle orthogonal to u
        for p in random_tangents(80, 10):
            e = null_geodesic(p, 1, math.pi / 2)
            for theta in np.linspace(0, 2 * math.pi, 13):
                assert abs(np.dot(sky_crossing(e, 1, theta).xv, p.uv)) < 1e-10

    def test_sky_tangent_at_crossing(self):

        # the sky of (x, 0) keeps x fixed
        for p in random_tangents(90, 10):
            e = EventPoint.make(p.xv, 0.0)
            theta = sky_angle(p.xv, p.uv)
            v = sky_tangent(e, 1, theta)
            assert np.max(np.abs(v.a)) < 1e-9
            assert abs(abs(np.dot(v.b, np.cross(p.xv, p.uv))) - 1.0) < 1e-8
            assert v.residual(canonical_class(p, 1).rep) < 1e-6

    def test_branch_switch(self):

        # first coordinate of the crossing changes sign at theta = pi / 2
        e = EventPoint.make([0.0, 0.0, 1.0], math.pi)
        with pytest.raises(BranchError):
            sky_tangent(e, 2, math.pi / 2, 0.1)
        theta = math.pi / 2 + 0.3
        assert sky_tangent(e, 2, theta).residual(sky(e, 2, theta).rep) < 1e-6


@pytest.mark.model
class TestContactPlane:
    def test_chi_plane_example(self):
        e3, z = np.array([0.0, 0.0, 1.0]), np.zeros(3)
        expected = [np.concatenate([e3, z]), np.concatenate([z, e3])]
        assert max_principal_angle(chi_plane(P0), expected) < 1e-10

    def test_chi_plane_frames(self):
        for p in random_tangents(100, 100):
            assert np.linalg.matrix_rank(chi_constraints(p)) == 4
            frame = chi_plane(p)
            for v in frame:
                assert v.residual(p) < 1e-12
                assert abs(np.dot(v.a, p.uv)) < 1e-12
            assert abs(np.dot(frame[0].to_array(), frame[1].to_array())) < 1e-12

            # spanned by (n, 0) and (0, n) with n = x cross u
            n = np.cross(p.xv, p.uv)
            assert max_principal_angle(frame, [np.concatenate([n, np.zeros(3)]), np.concatenate([np.zeros(3), n])]) \
                < 1e-10

    def test_second_sky_offset(self):
        assert second_sky_offset(1) == pytest.approx(math.pi / 4, abs=1e-15)
        assert second_sky_offset(3) == pytest.approx(math.pi / 8, abs=1e-15)

    @pytest.mark.parametrize("c", [1, 2, 3])
    def test_two_skies_span_the_contact_plane(self, c):
        for p in random_tangents(110 + c, 20):
            tangency, angle, well_defined = nc_contact_residuals(p, c)
            assert tangency < 1e-6
            assert angle < 1e-5
            assert well_defined < 1e-5

    def test_two_sky_tangents_are_independent(self):
        for p in random_tangents(120, 10):
            rep = canonical_class(p, 1).rep
            tangents = []
            for s in (0.0, math.pi / 4):
                e = null_geodesic(rep, 1, s)
                tangents.append(sky_tangent(e, 1, sky_angle(e.xv, great_circle_velocity(rep, s))).to_array())
            cos = abs(np.dot(tangents[0], tangents[1])) / (np.linalg.norm(tangents[0]) * np.linalg.norm(tangents[1]))
            assert math.acos(min(cos, 1.0)) > 0.1

    @pytest.mark.parametrize("c", [1, 2])
    def test_verify_contact_on_Nc(self, c):
        report = verify_contact_on_Nc(c, 20, seed=3)
        assert report.passed
        assert report.check_id == "contact-Nc"
        assert report.n_samples == 20
        assert report.params == {"c": c}
        assert report.tolerance == 1.0
        assert report.max_residual < 1.0

    def test_contact_score_limits(self):
        # tangency is held to 1e-6 for every c, the plane angle to 1e-6 only on ST S^2 itself
        assert nc_contact_score((5e-7, 5e-6, 5e-6), 2) < 1.0
        assert nc_contact_score((5e-6, 0.0, 0.0), 2) > 1.0
        assert nc_contact_score((0.0, 5e-6, 0.0), 1) > 1.0
        assert nc_contact_score((0.0, 0.0, 5e-6), 1) < 1.0
        assert nc_contact_score((0.0, 0.0, 2e-5), 3) == pytest.approx(2.0)

    def test_unit_tangent_bundle_plane_is_the_contact_plane(self):
        for p in random_tangents(3, 10):
            assert nc_contact_residuals(p, 1)[1] < 1e-6


@pytest.mark.model
class TestStereographicChart:
    def test_examples(self):
        assert np.array_equal(stereographic_chart([0.0, 0.0, -1.0]), [0.0, 0.0])
        assert np.array_equal(stereographic_inverse([0.0, 0.0]), [0.0, 0.0, -1.0])
        assert np.allclose(stereographic_chart([1.0, 0.0, 0.0]), [1.0, 0.0], atol=1e-15)

    def test_inverse(self):
        rng = np.random.default_rng(130)
        for _ in range(50):
            y = rng.uniform(-5, 5, size=2)
            X = stereographic_inverse(y)
            assert abs(np.linalg.norm(X) - 1.0) < 1e-12
            assert np.allclose(stereographic_chart(X), y, atol=1e-10)

    def test_velocity(self):
        h = 1e-6
        for p in random_tangents(140, 20):
            if p.x[2] > 0.9:
                continue
            fd = (stereographic_chart(great_circle(p, h)) - stereographic_chart(great_circle(p, -h))) / (2 * h)
            assert np.allclose(stereographic_velocity(p.xv, p.uv), fd, atol=1e-6)

    @pytest.mark.parametrize("c", [1, 2, 3])
    def test_analytic_vs_chart_geodesic(self, c):
        assert analytic_vs_chart_geodesic(P0, c, 2 * math.pi) < 1e-6
        for p in random_tangents(150 + c, 3):
            p = UnitTangent.normalized(p.xv - np.array([0.0, 0.0, 2.0]), p.uv)
            assert analytic_vs_chart_geodesic(p, c, 1.0) < 1e-6
