import math

import numpy as np
import pytest

from extsphere.geom import GeometryError
from extsphere.sets import (
    AffineSubspace,
    BallComplement,
    ClosedBall,
    ClosedSetDesc,
    HalfSpace,
    Intersection,
    SetError,
    Slab,
    Union,
)
from extsphere.proximal import directional_distance, directional_distance_marched

from conftest import make_ball, make_lineplane, make_strip


class TestMembership:
    def test_halfspace(self, halfplane):
        assert halfplane.desc.contains((3, -1))

    def test_union_gap(self, strip):
        assert not strip.desc.contains((0, 1))
        assert strip.desc.contains((0, 0)) and strip.desc.contains((0, 2))

    def test_point_set(self, pointset):
        assert pointset.desc.contains((0, 0))
        assert not pointset.desc.contains((0, 1e-6))


class TestDistance:
    def test_symmetric_midpoint(self, strip):
        assert strip.desc.distance((0, 1)) == pytest.approx(1.0)

    def test_ball(self, ball):
        assert ball.desc.distance((2, 0)) == pytest.approx(1.0)

    def test_ball_complement_center(self, ballcomplement):
        assert ballcomplement.desc.distance((0, 0)) == pytest.approx(1.0)


class TestProjection:
    def test_two_sided_projection(self, strip):
        proj = strip.desc.project((0, 1))
        pts = sorted(tuple(np.round(p, 9)) for p in proj.points)
        assert pts == [(0.0, 0.0), (0.0, 2.0)]
        assert proj.distance == pytest.approx(1.0)
        assert set(l for labs in proj.labels for l in labs) == {"bottom", "top"}

    def test_lineplane_midlevel_projection(self, lineplane):
        # The equidistant level between the line and the half-plane projects
        # onto both components.
        for x0 in (-1.3, 0.0, 2.5):
            proj = lineplane.desc.project((x0, 2))
            pts = sorted(tuple(np.round(p, 6)) for p in proj.points)
            assert pts == [(x0, 0.0), (x0, 4.0)]

    def test_ball_projection(self, ball):
        proj = ball.desc.project((0, 3))
        assert len(proj.points) == 1
        assert tuple(np.round(proj.points[0], 12)) == (0.0, 1.0)

    def test_projection_points_lie_in_set(self, strip, lineplane, ballcomplement):
        rng = np.random.default_rng(5)
        for fix in (strip, lineplane, ballcomplement):
            desc = fix.desc
            for x in desc.sample_exterior(50, seed=3):
                proj = desc.project(x)
                assert proj.points
                for p in proj.points:
                    assert desc.contains(p)
                    assert np.linalg.norm(x - p) == pytest.approx(
                        proj.distance, abs=desc.cluster_tol
                    )


class TestInterior:
    def test_halfspace_interior(self, halfplane):
        assert halfplane.desc.interior_contains((0, -1))
        assert not halfplane.desc.interior_contains((0, 0))

    def test_thin_leaves_have_empty_interior(self, lineplane, pointset):
        assert not lineplane.desc.interior_contains((0, 0))
        assert not pointset.desc.interior_contains((0, 0))

    def test_halfplane_component_interior(self, lineplane):
        assert lineplane.desc.interior_contains((0, 5))

    def test_interior_implies_membership(self, strip, lineplane, ball):
        rng = np.random.default_rng(2)
        for fix in (strip, lineplane, ball):
            lo, hi = fix.desc.box
            pts = rng.uniform(lo, hi, size=(300, fix.desc.dim))
            inside = fix.desc.interior_many(pts)
            member = fix.desc.contains_many(pts)
            assert not np.any(inside & ~member)


class TestBoundaryOfInterior:
    def test_strip_boundary_is_boundary_of_interior(self, strip):
        assert strip.desc.in_boundary_of_interior((0, 2))
        assert strip.desc.in_boundary_of_interior((1.5, 0))

    def test_line_component_is_not(self, lineplane):
        assert not lineplane.desc.in_boundary_of_interior((0, 0))
        assert lineplane.desc.in_boundary_of_interior((0, 4))

    def test_point_set_is_not(self, pointset):
        assert not pointset.desc.in_boundary_of_interior((0, 0))

    def test_rejects_non_boundary_points(self, strip):
        with pytest.raises(GeometryError):
            strip.desc.in_boundary_of_interior((0, 1))

    def test_sampling_route_agrees(self, strip, lineplane):
        for fix, pts in ((strip, [(0, 2), (1, 0)]), (lineplane, [(0, 0), (2, 4)])):
            for a in pts:
                analytic = fix.desc.in_boundary_of_interior(a)
                sampled = fix.desc.in_boundary_of_interior(
                    a, method="sampling", samples_per_eps=1000, seed=4
                )
                assert analytic == sampled


class TestBoundarySampling:
    def test_ball_boundary_norms(self, ball):
        samples = ball.desc.sample_boundary(4, seed=7)
        assert len(samples) == 4
        for p, label in samples:
            assert label == "disk"
            assert np.linalg.norm(p) == pytest.approx(1.0, abs=1e-9)

    def test_strip_labels_match_lines(self, strip):
        for p, label in strip.desc.sample_boundary(10, seed=1):
            assert label in ("bottom", "top")
            assert p[1] == pytest.approx(0.0 if label == "bottom" else 2.0, abs=1e-9)

    def test_lineplane_labels_partition(self, lineplane):
        labels = {label for _, label in lineplane.desc.sample_boundary(10, seed=1)}
        assert labels == {"line", "plane"}

    def test_samples_near_complement(self, strip):
        oracle = strip.desc.oracle
        for p, _ in strip.desc.sample_boundary(20, seed=9):
            assert strip.desc.contains(p)
            assert oracle.complement_distance(p) <= 2 * oracle.h

    def test_deterministic_under_seed(self, strip):
        a = strip.desc.sample_boundary(12, seed=42)
        b = strip.desc.sample_boundary(12, seed=42)
        assert all(np.array_equal(p, q) and l1 == l2 for (p, l1), (q, l2) in zip(a, b))


class TestGridOracle:
    @pytest.mark.parametrize("maker", [make_strip, make_lineplane, make_ball])
    def test_analytic_distance_matches_grid(self, maker):
        fix = maker()
        desc = fix.desc
        oracle = desc.oracle
        rng = np.random.default_rng(17)
        lo, hi = desc.box
        pts = rng.uniform(lo, hi, size=(1000, desc.dim))
        analytic = desc.distance_many(pts)
        brute = oracle.distance_many(pts)
        assert np.all(np.abs(brute - analytic) <= 2 * oracle.h)

    def test_intersection_distance_certified_by_grid(self):
        quad = ClosedSetDesc(
            Intersection([HalfSpace((1, 0), 0.0, label="hx"), HalfSpace((0, 1), 0.0, label="hy")]),
            box=((-5, -5), (5, 5)),
        )
        oracle = quad.oracle
        rng = np.random.default_rng(19)
        lo, hi = quad.box
        pts = rng.uniform(lo, hi, size=(1000, 2))
        analytic = quad.distance_many(pts)
        brute = oracle.distance_many(pts)
        assert np.all(np.abs(brute - analytic) <= 2 * oracle.h)

    def test_membership_bitmap_consistent(self, strip):
        oracle = strip.desc.oracle
        idx = np.random.default_rng(0).choice(len(oracle.grid_points), 500, replace=False)
        pts = oracle.grid_points[idx]
        assert np.array_equal(oracle.membership[idx], strip.desc.contains_many(pts))

    def test_interior_has_positive_complement_distance(self, strip):
        oracle = strip.desc.oracle
        for x in [(0, -1.0), (0, 3.0), (2, -0.5)]:
            assert strip.desc.interior_contains(x)
            assert oracle.complement_distance(x) > 0.4 * oracle.h


class TestDistanceContainsConsistency:
    @pytest.mark.parametrize("maker", [make_strip, make_lineplane, make_ball])
    def test_zero_distance_iff_member(self, maker):
        fix = maker()
        desc = fix.desc
        rng = np.random.default_rng(3)
        lo, hi = desc.box
        pts = rng.uniform(lo, hi, size=(500, desc.dim))
        dist = desc.distance_many(pts)
        member = desc.contains_many(pts)
        tol = 1e-9 * desc.diameter
        assert np.all((dist <= tol) == member)


class TestIntersection:
    def test_quadrant_distance_and_projection(self):
        quad = ClosedSetDesc(
            Intersection([HalfSpace((1, 0), 0.0, label="hx"), HalfSpace((0, 1), 0.0, label="hy")]),
            box=((-5, -5), (5, 5)),
        )
        assert quad.contains((-1, -1))
        assert quad.distance((1, 1)) == pytest.approx(math.sqrt(2))
        proj = quad.project((1, 1))
        assert len(proj.points) == 1
        assert np.allclose(proj.points[0], [0, 0], atol=1e-9)
        assert quad.distance((-3, 2)) == pytest.approx(2.0)

    def test_ball_halfspace_intersection(self):
        lens = ClosedSetDesc(
            Intersection([
                ClosedBall((0, 0), 2.0, label="disk"),
                HalfSpace((0, 1), 0.0, label="lower"),
            ]),
            box=((-4, -4), (4, 4)),
        )
        proj = lens.project((0, 1))
        assert np.allclose(proj.points[0], [0, 0], atol=1e-9)
        assert lens.distance((3, -0.0)) == pytest.approx(1.0)

    def test_nonconvex_children_rejected(self):
        with pytest.raises(SetError):
            ClosedSetDesc(
                Intersection([
                    BallComplement((0, 0), 1.0, label="shell"),
                    HalfSpace((0, 1), 0.0, label="h"),
                ]),
                box=((-4, -4), (4, 4)),
            )


class TestSceneValidation:
    def test_touching_components_rejected(self):
        touching = ClosedSetDesc(
            Union([
                HalfSpace((0, 1), 0.0, label="lower"),
                HalfSpace((0, -1), 0.0, label="upper"),
            ]),
            box=((-4, -4), (4, 4)),
        )
        with pytest.raises(SetError):
            touching.validate()

    def test_disjoint_components_pass(self, strip):
        strip.desc.validate()

    def test_duplicate_labels_rejected(self):
        with pytest.raises(SetError):
            ClosedSetDesc(
                Union([HalfSpace((0, 1), 0.0, label="h"), HalfSpace((0, -1), -2.0, label="h")]),
                box=((-4, -4), (4, 4)),
            )


class TestRayIntervals:
    def test_matches_marched_reference_on_full_dim_sets(self, strip, ball):
        rng = np.random.default_rng(23)
        for fix in (strip, ball):
            desc = fix.desc
            for _ in range(40):
                x = desc.sample_exterior(1, seed=int(rng.integers(2**31)))[0]
                angle = rng.uniform(0, 2 * math.pi)
                zeta = np.array([math.cos(angle), math.sin(angle)])
                exact = directional_distance(desc, x, zeta, t_max=12.0)
                marched = directional_distance_marched(desc, x, zeta, t_max=12.0)
                if math.isinf(exact) or math.isinf(marched):
                    assert exact == marched
                else:
                    assert exact == pytest.approx(marched, abs=2e-9 + desc.oracle.h * 0)

    def test_thin_component_is_hit_exactly(self, lineplane):
        # Marching cannot see the line; the interval route must.
        assert directional_distance(lineplane.desc, (0.3, 1), (0, -1), 10.0) == pytest.approx(1.0)

    def test_rotated_line_hit_in_general_position(self):
        # Regression: the residual of the closest approach must be computed
        # in vector form, or cancellation noise swallows oblique hits.
        c, s = math.cos(0.7), math.sin(0.7)
        tilted = ClosedSetDesc(
            AffineSubspace((1.3, -0.4), [(c, s)], label="tilt"), box=((-8, -8), (8, 8))
        )
        x = np.array([0.33, 2.17])
        d = np.array([0.2, -0.98])
        d = d / np.linalg.norm(d)
        p, ld = np.array([1.3, -0.4]), np.array([c, s])
        expected = ((p[0] - x[0]) * ld[1] - (p[1] - x[1]) * ld[0]) / (d[0] * ld[1] - d[1] * ld[0])
        assert directional_distance(tilted, x, d, 10.0) == pytest.approx(expected, abs=1e-9)


class TestDistanceProperties:
    from hypothesis import given, settings, strategies as st

    coord = st.floats(min_value=-5.5, max_value=5.5, allow_nan=False)

    @given(p=st.tuples(coord, coord), q=st.tuples(coord, coord))
    @settings(max_examples=150, deadline=None)
    def test_distance_is_one_lipschitz(self, strip, p, q):
        # |d(p) - d(q)| <= |p - q| for any closed set.
        dp = strip.desc.distance(p)
        dq = strip.desc.distance(q)
        gap = float(np.linalg.norm(np.asarray(p) - np.asarray(q)))
        assert abs(dp - dq) <= gap + 1e-9

    @given(p=st.tuples(coord, coord))
    @settings(max_examples=100, deadline=None)
    def test_projection_is_idempotent(self, lineplane, p):
        proj = lineplane.desc.project(p)
        for q in proj.points:
            again = lineplane.desc.project(q)
            assert again.distance <= lineplane.desc.cluster_tol
            assert np.linalg.norm(again.points[0] - q) <= lineplane.desc.cluster_tol


class TestSlabAndAffine:
    def test_slab_queries(self):
        slab = ClosedSetDesc(Slab((0, 1), -1.0, 1.0, label="band"), box=((-4, -4), (4, 4)))
        assert slab.contains((0, 0.5)) and not slab.contains((0, 1.5))
        assert slab.distance((0, 3)) == pytest.approx(2.0)
        assert slab.interior_contains((0, 0.0)) and not slab.interior_contains((0, 1.0))

    def test_line_in_3d(self):
        line = ClosedSetDesc(
            AffineSubspace((0, 0, 0), [(1, 0, 0)], label="axis"), box=((-3, -3, -3), (3, 3, 3))
        )
        assert line.contains((2, 0, 0))
        assert line.distance((0, 3, 4)) == pytest.approx(5.0)
        proj = line.project((1, 1, 0))
        assert np.allclose(proj.points[0], [1, 0, 0])
