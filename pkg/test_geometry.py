"""
Tests for planar-circle incidence geometry: circles, null planes, cone
relations and direction classification.
"""
import math

import numpy as np
import pytest

from correspondence.services.geometry import (
    CausalType, ConeRelation, CylinderPoint, GeometryError, MinkowskiVector, SpacetimePoint,
    circle_height, circles_meet, classify_direction, cone_relation, cone_relation_sampled,
    lorentz_interval, normalize_angle, null_plane, side_of_circle,
)


def test_circle_height_examples():
    assert circle_height(SpacetimePoint(0, 0, 0), 1.234) == 0.0
    c = SpacetimePoint(1, 1, 0)
    assert circle_height(c, 0.0) == pytest.approx(2.0)
    assert circle_height(c, math.pi) == pytest.approx(0.0, abs=1e-15)
    assert circle_height(SpacetimePoint(0.5, 0.3, -0.4), math.pi / 2) == pytest.approx(0.1)


def test_circle_height_vectorized():
    theta = np.linspace(0, 2 * np.pi, 7)
    c = SpacetimePoint(0.2, -0.7, 1.1)
    expected = [c.t + c.x1 * math.cos(a) + c.x2 * math.sin(a) for a in theta]
    np.testing.assert_allclose(circle_height(c, theta), expected, rtol=0, atol=1e-15)


def test_side_of_circle_examples():
    assert side_of_circle(SpacetimePoint(0, 0, 0), CylinderPoint(0.0, 0.0)) == 0.0
    assert side_of_circle(SpacetimePoint(1, 0, 0), CylinderPoint(math.pi, 0.0)) == pytest.approx(1.0)
    assert side_of_circle(SpacetimePoint(0, 1, 0), CylinderPoint(math.pi / 3, 1.0)) == pytest.approx(-0.5)


def test_points_on_the_circle_are_incident(rng):
    for _ in range(100):
        c = SpacetimePoint(*rng.uniform(-5, 5, 3))
        theta = rng.uniform(0, 2 * math.pi)
        p = CylinderPoint(theta, float(circle_height(c, theta)))
        assert side_of_circle(c, p) == pytest.approx(0.0, abs=1e-13)


def test_angles_are_normalized():
    assert CylinderPoint(-math.pi / 2, 0).theta == pytest.approx(3 * math.pi / 2)
    assert CylinderPoint(4 * math.pi + 0.25, 0).theta == pytest.approx(0.25)
    assert 0.0 <= normalize_angle(-1e-18) < 2 * math.pi


def test_spacetime_point_rejects_non_finite():
    with pytest.raises(GeometryError):
        SpacetimePoint(float('nan'), 0, 0)
    assert SpacetimePoint(1, 2, 3).z == complex(2, 3)


def test_cone_relation_examples():
    origin = SpacetimePoint(0, 0, 0)
    assert cone_relation(SpacetimePoint(1, 0, 0), origin) == ConeRelation.FUTURE
    assert cone_relation(origin, SpacetimePoint(1, 0, 0)) == ConeRelation.PAST
    assert cone_relation(origin, SpacetimePoint(0.5, 1, 0)) == ConeRelation.NEITHER
    assert cone_relation(origin, SpacetimePoint(0.5, 1, 0)) == cone_relation_sampled(
        origin, SpacetimePoint(0.5, 1, 0), n_theta=10_000)
    assert cone_relation(origin, origin) == ConeRelation.EQUAL


def test_cone_relation_is_closed_on_the_light_cone():
    c = SpacetimePoint(1.0, 0.0, 0.0)
    c2 = SpacetimePoint(0.0, 0.0, -1.0)
    assert cone_relation(c, c2) == ConeRelation.FUTURE
    assert cone_relation(c2, c) == ConeRelation.PAST


def test_cone_relation_antisymmetry(rng):
    for _ in range(1000):
        c = SpacetimePoint(*rng.uniform(-5, 5, 3))
        c2 = SpacetimePoint(*rng.uniform(-5, 5, 3))
        forward = cone_relation(c, c2)
        backward = cone_relation(c2, c)
        assert (forward == ConeRelation.FUTURE) == (backward == ConeRelation.PAST)


def test_cone_relation_agrees_with_sampling(rng):
    mismatches = 0
    for _ in range(10_000):
        c = SpacetimePoint(*rng.uniform(-5, 5, 3))
        c2 = SpacetimePoint(*rng.uniform(-5, 5, 3))
        dt = c.t - c2.t
        spatial = math.hypot(c.x1 - c2.x1, c.x2 - c2.x2)
        if abs(abs(dt) - spatial) <= 1e-5 * max(1.0, spatial):
            continue
        mismatches += cone_relation(c, c2) != cone_relation_sampled(c, c2, n_theta=1000)
    assert mismatches == 0


def test_classify_direction_examples():
    spacelike = classify_direction(MinkowskiVector(0, 1, 0))
    assert spacelike.by_metric == spacelike.by_axis == CausalType.SPACELIKE
    assert spacelike.axis_distance == 0.0
    assert spacelike.crossings == 2

    null = classify_direction(MinkowskiVector(1, 1, 0))
    assert null.by_metric == null.by_axis == CausalType.NULL
    assert null.crossings == 1

    timelike = classify_direction(MinkowskiVector(2, 1, 1))
    assert timelike.by_metric == timelike.by_axis == CausalType.TIMELIKE
    assert timelike.axis_distance == pytest.approx(math.sqrt(2))


def test_pure_time_direction_is_timelike():
    result = classify_direction(MinkowskiVector(1, 0, 0))
    assert result.by_axis == CausalType.TIMELIKE
    assert result.axis_distance == math.inf


def test_zero_direction_is_rejected():
    with pytest.raises(GeometryError):
        classify_direction(MinkowskiVector(0, 0, 0))


def test_classifications_agree_on_random_directions(rng):
    directions = rng.normal(size=(10_000, 3))
    assert all(classify_direction(MinkowskiVector(*d)).consistent for d in directions)


def test_analytic_null_directions_are_null(rng):
    for _ in range(200):
        r = rng.uniform(0.01, 100.0)
        angle = rng.uniform(0, 2 * math.pi)
        result = classify_direction(MinkowskiVector(r, r * math.cos(angle), r * math.sin(angle)))
        assert result.by_metric == result.by_axis == CausalType.NULL


def test_null_plane_has_null_normal(rng):
    for _ in range(100):
        p = CylinderPoint(rng.uniform(0, 2 * math.pi), rng.uniform(-3, 3))
        plane = null_plane(p)
        assert plane.normal_norm == pytest.approx(0.0, abs=1e-15)
        c = SpacetimePoint(p.v, 0.0, 0.0)
        assert plane.contains(c)


def test_lorentz_interval_and_circle_meetings():
    origin = SpacetimePoint(0, 0, 0)
    assert lorentz_interval(origin, SpacetimePoint(0, 1, 0)) == 1.0
    assert circles_meet(origin, SpacetimePoint(0, 1, 0)) == 2
    assert circles_meet(origin, SpacetimePoint(1, 1, 0)) == 1
    assert circles_meet(origin, SpacetimePoint(2, 1, 0)) == 0
    assert circles_meet(origin, origin) == -1
