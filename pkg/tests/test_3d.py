"""Dimension-generic behavior: the same machinery in three dimensions."""

import math

import numpy as np
import pytest

from extsphere.conditions import check_extended_condition, cover_radius
from extsphere.cover import construct_witness
from extsphere.geom import INF
from extsphere.proximal import (
    RadiusField,
    directional_distance,
    realization_radius,
    sample_unit_normals,
)
from extsphere.sconvex import is_s_convex
from extsphere.sets import AffineSubspace, ClosedBall, ClosedSetDesc, HalfSpace, Union


@pytest.fixture(scope="module")
def slab3d():
    """Two parallel half-spaces in 3D with a gap of width 2."""
    desc = ClosedSetDesc(
        Union([
            HalfSpace((0, 0, 1), 0.0, label="bottom"),
            HalfSpace((0, 0, -1), -2.0, label="top"),
        ]),
        box=((-4, -4, -3), (4, 4, 5)),
        name="slab3d",
    )
    return desc, RadiusField.from_sources({"bottom": 0.5, "top": 1})


@pytest.fixture(scope="module")
def ball3d():
    desc = ClosedSetDesc(ClosedBall((0, 0, 0), 1.0, label="sphere"), box=((-3, -3, -3), (3, 3, 3)))
    return desc, RadiusField.from_sources({"sphere": 4})


def test_cover_radius_and_witnesses(slab3d):
    desc, rf = slab3d
    assert cover_radius(desc, rf, (0, 0, 1)) == pytest.approx(0.25, abs=1e-9)
    w = construct_witness(desc, rf, (0, 0, 1.75))
    assert w.ok and w.ball.radius == pytest.approx(0.5, abs=1e-9)
    assert np.allclose(w.ball.center, [0, 0, 1.25], atol=1e-9)


def test_cone_sampling_finds_the_axis(slab3d):
    desc, _ = slab3d
    normals = sample_unit_normals(desc, (0.5, -0.3, 2.0), density=500, rho_max=50.0)
    assert len(normals) == 1
    assert np.allclose(normals[0].direction, [0, 0, -1], atol=1e-9)
    assert normals[0].realization == pytest.approx(1.0, abs=1e-6)


def test_ball_realization_and_check(ball3d):
    desc, rf = ball3d
    a = np.array([0.0, 1.0, 0.0])
    assert realization_radius(desc, a, (0, 1, 0), rho_max=40.0) == INF
    report = check_extended_condition(desc, rf, boundary_samples=30, density=400, seed=3, rho_max=40.0)
    assert report.verdict == "holds"


def test_directional_distance_hits_a_line_in_space():
    desc = ClosedSetDesc(
        AffineSubspace((0, 0, 0), [(1, 0, 0)], label="axis"),
        box=((-3, -3, -3), (3, 3, 3)),
    )
    assert directional_distance(desc, (0, 2, 0), (0, -1, 0), 10.0) == pytest.approx(2.0)
    assert directional_distance(desc, (0, 2, 0), (0, 1, 0), 10.0) == INF


def test_sconvexity_in_space(ball3d):
    desc, rf = ball3d
    report = is_s_convex(desc, lambda p: True, rf, boundary_samples=30, density=300, seed=3, rho_max=40.0)
    assert report.verdict == "holds"


def test_touching_spheres_cross_in_space():
    desc = ClosedSetDesc(
        Union([
            ClosedBall((-1, 0, 0), 1.0, label="west"),
            ClosedBall((1, 0, 0), 1.0, label="east"),
        ]),
        box=((-3.5, -2.5, -2.5), (3.5, 2.5, 2.5)),
    )
    rf = RadiusField.constant(desc, math.inf)
    report = is_s_convex(desc, lambda p: True, rf, boundary_samples=60, density=300, seed=3, rho_max=30.0)
    assert report.verdict == "fails"
    assert abs(report.violations[0].point[0]) < 0.7
