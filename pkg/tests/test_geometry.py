from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import random_contour
from lvamm.errors import DegenerateGeometryError, PlacementError
from lvamm.geometry import (
    ContourEstimate,
    Line2D,
    LongAxisFitConfig,
    Point2D,
    ScanLine,
    fit_long_axis,
    lvid_midpoints,
    perpendicular,
    place_scanline,
    ray_exit_distance,
    scanline_distance_angle,
)


def test_point_rejects_nonfinite():
    with pytest.raises(ValueError):
        Point2D(math.nan, 0.0)
    with pytest.raises(ValueError):
        Point2D(0.0, math.inf)


def test_scanline_midpoint_is_exact_average():
    sl = ScanLine(Point2D(1.0, 2.0), Point2D(5.0, 10.0))
    assert sl.midpoint == Point2D(3.0, 6.0)
    assert sl.length == pytest.approx(math.hypot(4.0, 8.0))


def test_scanline_rejects_zero_length():
    with pytest.raises(ValueError):
        ScanLine(Point2D(1.0, 1.0), Point2D(1.0, 1.0))


def test_scanline_angle_is_undirected():
    down = ScanLine(Point2D(0, 0), Point2D(0, 5)).angle_deg
    up = ScanLine(Point2D(0, 5), Point2D(0, 0)).angle_deg
    assert down == pytest.approx(90.0)
    assert up == pytest.approx(90.0)
    assert ScanLine(Point2D(5, 0), Point2D(0, 0)).angle_deg == pytest.approx(0.0)


def test_line_normalizes_direction():
    line = Line2D(Point2D(0, 0), Point2D(3.0, 4.0))
    assert line.direction.norm() == pytest.approx(1.0, abs=1e-12)
    assert line.direction.x == pytest.approx(0.6)
    with pytest.raises(DegenerateGeometryError):
        Line2D(Point2D(0, 0), Point2D(0.0, 0.0))


def test_perpendicular_points_toward_positive_y():
    for angle in (0.0, 30.0, 90.0, 135.0, 179.0):
        d = Point2D(math.cos(math.radians(angle)), math.sin(math.radians(angle)))
        n = perpendicular(d)
        assert n.dot(d) == pytest.approx(0.0, abs=1e-12)
        assert n.y > 0 or (n.y == 0 and n.x > 0)


def test_contour_validates_shape_and_ere():
    pair = (Point2D(0, 0), Point2D(1, 0))
    with pytest.raises(ValueError):
        ContourEstimate((pair,), (pair,), np.zeros((3, 2)))  # only 1 basal pair
    with pytest.raises(ValueError):
        ContourEstimate((pair,), (pair, pair), np.zeros((2, 2)))  # wrong ere shape
    with pytest.raises(ValueError):
        ContourEstimate((pair,), (pair, pair), -np.ones((3, 2)))  # negative ere
    contour = ContourEstimate((pair,), (pair, pair), np.full((3, 2), np.inf))
    assert contour.n_lv == 1
    assert not contour.valid_lvid_mask().any()


def test_lvid_midpoints_trivial_pairs():
    contour = ContourEstimate(
        ((Point2D(0, 0), Point2D(2, 0)), (Point2D(1, 1), Point2D(1, 3))),
        ((Point2D(0, 0), Point2D(1, 0)), (Point2D(0, 1), Point2D(1, 1))),
        np.zeros((4, 2)),
    )
    mids = lvid_midpoints(contour)
    assert mids == [Point2D(1.0, 0.0), Point2D(1.0, 2.0)]


def test_lvid_midpoints_random_pairs_match_elementwise_average():
    rng = np.random.default_rng(7)
    contour = random_contour(rng, 128, 128, n_lv=20)
    mids = lvid_midpoints(contour)
    assert len(mids) == 20
    for (septal, posterior), mid in zip(contour.lvid_pairs, mids):
        assert mid.x == pytest.approx((septal.x + posterior.x) / 2, abs=1e-12)
        assert mid.y == pytest.approx((septal.y + posterior.y) / 2, abs=1e-12)


def test_fit_long_axis_exact_collinear_at_zero_alpha():
    points = [Point2D(0, 0), Point2D(1, 1), Point2D(2, 2)]
    line = fit_long_axis(points, LongAxisFitConfig(alpha=0.0))
    assert line.point == Point2D(1.0, 1.0)
    assert line.direction.y / line.direction.x == pytest.approx(1.0, abs=1e-12)


def test_fit_long_axis_symmetric_points_have_zero_slope():
    points = [Point2D(-1, 1), Point2D(1, -1), Point2D(-1, -1), Point2D(1, 1)]
    for alpha in (0.0, 1.0, 17.5):
        line = fit_long_axis(points, LongAxisFitConfig(alpha))
        assert line.direction.y == pytest.approx(0.0, abs=1e-12)


def test_fit_long_axis_five_point_ridge_matches_closed_form():
    points = [
        Point2D(0, 0.0),
        Point2D(1, 0.5),
        Point2D(2, 1.2),
        Point2D(3, 1.4),
        Point2D(4, 2.1),
    ]
    # Independent evaluation of the centered normal equation.
    xs = np.array([p.x for p in points])
    ys = np.array([p.y for p in points])
    u = xs - xs.mean()
    v = ys - ys.mean()
    expected_slope = float((u * v).sum() / ((u**2).sum() + 1.0))

    line = fit_long_axis(points, LongAxisFitConfig(alpha=1.0))
    assert line.direction.y / line.direction.x == pytest.approx(expected_slope, abs=1e-9)
    assert line.point.x == pytest.approx(2.0, abs=1e-12)
    assert line.point.y == pytest.approx(float(ys.mean()), abs=1e-12)


def test_fit_long_axis_translation_equivariance():
    rng = np.random.default_rng(3)
    for _ in range(25):
        points = [Point2D(*rng.uniform(-50, 50, 2)) for _ in range(12)]
        shift = Point2D(*rng.uniform(-100, 100, 2))
        base = fit_long_axis(points)
        moved = fit_long_axis([p + shift for p in points])
        assert moved.point.x == pytest.approx(base.point.x + shift.x, abs=1e-9)
        assert moved.point.y == pytest.approx(base.point.y + shift.y, abs=1e-9)
        assert moved.direction.x == pytest.approx(base.direction.x, abs=1e-9)
        assert moved.direction.y == pytest.approx(base.direction.y, abs=1e-9)


def test_fit_long_axis_tiny_alpha_recovers_collinear_direction():
    rng = np.random.default_rng(11)
    for _ in range(20):
        angle = float(rng.uniform(0, 180))
        d = Point2D(math.cos(math.radians(angle)), math.sin(math.radians(angle)))
        origin = Point2D(*rng.uniform(-10, 10, 2))
        points = [origin + d.scaled(t) for t in np.linspace(-20, 20, 9)]
        line = fit_long_axis(points, LongAxisFitConfig(alpha=1e-12))
        diff = abs(line.angle_deg - angle) % 180.0
        assert min(diff, 180.0 - diff) <= 1e-6


def test_fit_long_axis_handles_vertical_points():
    points = [Point2D(3, 0), Point2D(3, 1), Point2D(3, 2)]
    line = fit_long_axis(points, LongAxisFitConfig(alpha=0.0))
    assert abs(line.direction.y) == pytest.approx(1.0, abs=1e-12)
    assert line.direction.x == pytest.approx(0.0, abs=1e-12)


def test_fit_long_axis_degenerate_inputs():
    with pytest.raises(DegenerateGeometryError):
        fit_long_axis([Point2D(1, 1)])
    with pytest.raises(DegenerateGeometryError):
        fit_long_axis([Point2D(1, 1)] * 5)


def _basal_contour(points4):
    return ContourEstimate(
        (),
        ((points4[0], points4[1]), (points4[2], points4[3])),
        np.zeros((2, 2)),
    )


def test_place_scanline_centroid_and_perpendicularity():
    contour = _basal_contour(
        [Point2D(10, 10), Point2D(10, 20), Point2D(12, 10), Point2D(12, 20)]
    )
    axis = Line2D(Point2D(0, 0), Point2D(1.0, 0.0))
    sl = place_scanline(contour, axis, 5.0, (64, 64))
    assert sl.midpoint.x == pytest.approx(11.0, abs=1e-12)
    assert sl.midpoint.y == pytest.approx(15.0, abs=1e-12)
    assert abs(sl.direction.x) == pytest.approx(0.0, abs=1e-12)


def test_place_scanline_vertical_axis_gives_horizontal_line():
    contour = _basal_contour(
        [Point2D(20, 20), Point2D(24, 20), Point2D(20, 24), Point2D(24, 24)]
    )
    axis = Line2D(Point2D(0, 0), Point2D(0.0, 1.0))
    sl = place_scanline(contour, axis, 8.0, (64, 64))
    assert sl.angle_deg == pytest.approx(0.0, abs=1e-9)


def test_place_scanline_perpendicular_over_random_inputs():
    rng = np.random.default_rng(23)
    for _ in range(300):
        contour = random_contour(rng, 128, 160, n_lv=1)
        angle = float(rng.uniform(0, 180))
        axis = Line2D(
            Point2D(0, 0),
            Point2D(math.cos(math.radians(angle)), math.sin(math.radians(angle))),
        )
        sl = place_scanline(contour, axis, float(rng.uniform(2, 300)), (128, 160))
        assert abs(sl.direction.dot(axis.direction)) <= 1e-9
        points = [p for pair in contour.basal_pairs for p in pair]
        cx = sum(p.x for p in points) / 4
        cy = sum(p.y for p in points) / 4
        assert math.hypot(sl.midpoint.x - cx, sl.midpoint.y - cy) <= 1e-9


def test_place_scanline_clipping_preserves_midpoint():
    contour = _basal_contour(
        [Point2D(2, 2), Point2D(2, 4), Point2D(4, 2), Point2D(4, 4)]
    )
    axis = Line2D(Point2D(0, 0), Point2D(1.0, 0.0))
    sl = place_scanline(contour, axis, 1000.0, (64, 64))
    assert sl.midpoint.x == pytest.approx(3.0, abs=1e-9)
    assert sl.midpoint.y == pytest.approx(3.0, abs=1e-9)
    for p in (sl.p1, sl.p2):
        assert 0.0 <= p.x <= 63.0 and 0.0 <= p.y <= 63.0


def test_place_scanline_rejects_centroid_outside_image():
    contour = _basal_contour(
        [Point2D(100, 10), Point2D(100, 20), Point2D(102, 10), Point2D(102, 20)]
    )
    axis = Line2D(Point2D(0, 0), Point2D(1.0, 0.0))
    with pytest.raises(PlacementError):
        place_scanline(contour, axis, 5.0, (64, 64))


def test_place_scanline_rejects_nonpositive_half_length():
    contour = _basal_contour(
        [Point2D(10, 10), Point2D(10, 20), Point2D(12, 10), Point2D(12, 20)]
    )
    axis = Line2D(Point2D(0, 0), Point2D(1.0, 0.0))
    with pytest.raises(ValueError):
        place_scanline(contour, axis, 0.0, (64, 64))


def test_scanline_distance_angle_trivial_cases():
    a = ScanLine(Point2D(0, 0), Point2D(10, 0))
    assert scanline_distance_angle(a, a, 0.1) == (0.0, 0.0)
    vertical = ScanLine(Point2D(5, -5), Point2D(5, 5))
    d, ang = scanline_distance_angle(a, vertical, 0.1)
    assert d == pytest.approx(0.0, abs=1e-12)
    assert ang == pytest.approx(90.0)


def test_scanline_distance_angle_hand_case():
    # Midpoints 3 px apart, directions 10 degrees apart, 0.1 cm/px.
    a = ScanLine(Point2D(-5, 0), Point2D(5, 0))
    c, s = math.cos(math.radians(10)), math.sin(math.radians(10))
    b = ScanLine(Point2D(3 - 5 * c, -5 * s), Point2D(3 + 5 * c, 5 * s))
    d, ang = scanline_distance_angle(a, b, 0.1)
    assert d == pytest.approx(0.3, abs=1e-12)
    assert ang == pytest.approx(10.0, abs=1e-9)


def test_scanline_distance_angle_symmetric_and_bounded():
    rng = np.random.default_rng(5)
    from conftest import random_scanline

    for _ in range(100):
        a = random_scanline(rng, 100, 100)
        b = random_scanline(rng, 100, 100)
        d_ab, ang_ab = scanline_distance_angle(a, b, 0.07)
        d_ba, ang_ba = scanline_distance_angle(b, a, 0.07)
        assert d_ab == pytest.approx(d_ba, abs=1e-12)
        assert ang_ab == pytest.approx(ang_ba, abs=1e-9)
        assert 0.0 <= ang_ab <= 90.0


def test_ray_exit_distance_axis_aligned():
    origin = Point2D(10.0, 20.0)
    assert ray_exit_distance(origin, Point2D(1, 0), (64, 100)) == pytest.approx(89.0)
    assert ray_exit_distance(origin, Point2D(-1, 0), (64, 100)) == pytest.approx(10.0)
    assert ray_exit_distance(origin, Point2D(0, 1), (64, 100)) == pytest.approx(43.0)
    assert ray_exit_distance(origin, Point2D(0, -1), (64, 100)) == pytest.approx(20.0)
