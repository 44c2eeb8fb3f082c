import math

import numpy as np
import pytest

from selfaffine.geometry import (
    ConvexPolygon,
    Disc,
    box_polygon,
    convex_hull_indices,
    convex_vertices_distance,
    points_to_polygon_distance,
    polygon_distance,
)


def brute_chebyshev_to_disc(center, radius, point, n=200_000):
    angles = np.linspace(0, 2 * math.pi, n, endpoint=False)
    xs = center[0] + radius * np.cos(angles)
    ys = center[1] + radius * np.sin(angles)
    return float(np.minimum.reduce(np.maximum(np.abs(xs - point[0]), np.abs(ys - point[1]))))


class TestHullIndices:
    def test_square_with_interior_points(self, rng):
        corners = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
        interior = rng.uniform(0.1, 0.9, size=(50, 2))
        pts = np.vstack([corners, interior])
        idx = convex_hull_indices(pts)
        assert sorted(idx) == [0, 1, 2, 3]

    def test_collinear_dropped(self):
        pts = np.array([[0, 0], [0.5, 0.0], [1, 0], [1, 1], [0, 1]], dtype=float)
        idx = convex_hull_indices(pts)
        assert 1 not in idx


class TestPolygon:
    def test_contains_with_slack(self):
        box = box_polygon(0, 1, 0, 1)
        assert box.contains((0.5, 0.5))
        assert not box.contains((1.1, 0.5))
        assert box.contains((1.05, 0.5), slack=0.06)

    def test_distance_matches_vectorized(self, rng):
        box = box_polygon(-1, 1, -2, 2)
        for _ in range(50):
            p = rng.uniform(-4, 4, size=2)
            d = box.distance(p)
            expect = math.hypot(max(abs(p[0]) - 1, 0), max(abs(p[1]) - 2, 0))
            assert d == pytest.approx(expect, abs=1e-12)

    def test_chebyshev_distance_box(self, rng):
        box = box_polygon(-1, 1, -1, 1)
        for _ in range(50):
            p = rng.uniform(-4, 4, size=2)
            d = box.distance_chebyshev(p)
            expect = max(max(abs(p[0]) - 1, 0), max(abs(p[1]) - 1, 0))
            assert d == pytest.approx(expect, abs=1e-12)

    def test_orientation_rejected(self):
        with pytest.raises(ValueError):
            ConvexPolygon(np.array([[0, 0], [0, 1], [1, 1], [1, 0]], dtype=float))

    def test_transform_flips_orientation_back(self):
        box = box_polygon(0, 1, 0, 1)
        mirrored = box.transform(np.diag([-1.0, 1.0]), np.zeros(2))
        assert mirrored.strict_convexity_margin() > 0


class TestDistances:
    def test_polygon_distance_disjoint(self):
        a = box_polygon(0, 1, 0, 1)
        b = box_polygon(3, 4, 0, 1)
        assert polygon_distance(a, b) == pytest.approx(2.0)
        assert convex_vertices_distance(a.vertices, b.vertices) == pytest.approx(2.0)

    def test_polygon_distance_touching_and_overlap(self):
        a = box_polygon(0, 1, 0, 1)
        assert polygon_distance(a, box_polygon(1, 2, 0, 1)) == 0.0
        assert polygon_distance(a, box_polygon(0.5, 2, 0.5, 2)) == 0.0

    def test_diagonal_separation(self):
        a = box_polygon(0, 1, 0, 1)
        b = box_polygon(2, 3, 2, 3)
        assert polygon_distance(a, b) == pytest.approx(math.sqrt(2.0))

    def test_points_to_polygon_vectorized(self, rng):
        tri = ConvexPolygon(np.array([[0, 0], [2, 0], [1, 2]], dtype=float))
        pts = rng.uniform(-3, 5, size=(100, 2))
        batch = points_to_polygon_distance(tri.vertices, pts)
        for p, d in zip(pts, batch):
            edges = list(zip(tri.vertices, np.roll(tri.vertices, -1, axis=0)))
            expect = min(
                _seg_dist_brute(p, a, b) for a, b in edges
            )
            assert d == pytest.approx(expect, abs=1e-7)  # brute-force grid resolution


def _seg_dist_brute(p, a, b, n=20001):
    ts = np.linspace(0, 1, n)
    xs = a[0] + ts * (b[0] - a[0])
    ys = a[1] + ts * (b[1] - a[1])
    return float(np.min(np.hypot(xs - p[0], ys - p[1])))


class TestDisc:
    def test_contains_and_distance(self):
        d = Disc((1.0, 1.0), 2.0)
        assert d.contains((2.0, 2.0))
        assert d.distance((5.0, 1.0)) == pytest.approx(2.0)
        assert d.support((1.0, 0.0)) == pytest.approx(3.0)

    def test_chebyshev_closed_form(self, rng):
        for _ in range(40):
            center = rng.uniform(-2, 2, size=2)
            radius = rng.uniform(0.2, 2.0)
            point = rng.uniform(-6, 6, size=2)
            got = Disc(tuple(center), radius).distance_chebyshev(point)
            expect = brute_chebyshev_to_disc(center, radius, point)
            if math.hypot(*(point - center)) <= radius:
                assert got == 0.0
            else:
                assert got == pytest.approx(expect, abs=2e-4)
