import itertools

import numpy as np
import pytest

from overlapseg.exceptions import DegenerateInput, DegeneratePolygon
from overlapseg.geometry import (convex_hull, ensure_ccw, hull_area, max_diameter,
                                 points_in_polygon, polygon_area, rasterize_polygon, signed_area)

SQUARE = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)


def random_polygon(rng, n=10, r=(20, 40), center=(50, 50)):
    """Star-shaped simple polygon with sorted random angles."""
    t = np.sort(rng.uniform(0, 2 * np.pi, n))
    rad = rng.uniform(*r, n)
    return np.column_stack([center[0] + rad * np.cos(t), center[1] + rad * np.sin(t)])


def test_signed_area_unit_square():
    assert signed_area(SQUARE) == 1.0
    assert signed_area(SQUARE[::-1]) == -1.0


def test_signed_area_needs_three_points():
    with pytest.raises(DegeneratePolygon):
        signed_area(SQUARE[:2])


def test_signed_area_matches_monte_carlo(rng):
    poly = random_polygon(rng)
    pts = rng.uniform(0, 100, size=(400_000, 2))
    inside = points_in_polygon(poly, pts[:, 0], pts[:, 1])
    mc = inside.mean() * 100 * 100
    assert abs(signed_area(poly)) == pytest.approx(mc, rel=0.01)


def test_hull_of_triangle_is_triangle():
    tri = np.array([[0, 0], [4, 0], [1, 3]], float)
    hull = convex_hull(tri)
    assert len(hull) == 3
    assert {tuple(p) for p in hull} == {tuple(p) for p in tri}
    assert signed_area(hull) > 0


def test_hull_drops_interior_point():
    pts = np.vstack([SQUARE, [[0.5, 0.5]]])
    assert {tuple(p) for p in convex_hull(pts)} == {tuple(p) for p in SQUARE}


def test_hull_drops_collinear_boundary_points():
    pts = np.vstack([SQUARE * 2, [[1, 0], [2, 1]]])
    assert len(convex_hull(pts)) == 4


def test_hull_collinear_input_raises():
    with pytest.raises(DegenerateInput):
        convex_hull(np.column_stack([np.arange(5.0), 2 * np.arange(5.0)]))


def brute_force_hull(pts):
    """Vertices v such that some edge (v, w) has every other point strictly left
    or on the segment interior; O(n^3)."""
    out = set()
    for i, j in itertools.permutations(range(len(pts)), 2):
        a, b = pts[i], pts[j]
        cross = (b[0] - a[0]) * (pts[:, 1] - a[1]) - (b[1] - a[1]) * (pts[:, 0] - a[0])
        if np.all(cross >= 0):
            # on-edge points must lie between a and b, else (a, b) is not an edge
            on = np.abs(cross) == 0
            t = np.dot(pts[on] - a, b - a) / np.dot(b - a, b - a)
            if np.all((t >= 0) & (t <= 1)):
                out.add(i)
                out.add(j)
    return {tuple(pts[k]) for k in out}


def test_hull_matches_brute_force(rng):
    pts = rng.uniform(0, 100, size=(50, 2))
    assert {tuple(p) for p in convex_hull(pts)} == brute_force_hull(pts)


def test_hull_idempotent(rng):
    hull = convex_hull(rng.normal(size=(80, 2)))
    np.testing.assert_array_equal(convex_hull(hull), hull)


def test_hull_area_bounds_polygon_area(rng):
    for _ in range(20):
        poly = random_polygon(rng, n=int(rng.integers(3, 15)))
        assert hull_area(poly) >= polygon_area(poly) - 1e-9


def test_rasterize_square():
    sq = np.array([[0, 0], [10, 0], [10, 10], [0, 10]], float)
    mask = rasterize_polygon(sq, 20, 20)
    assert mask.shape == (20, 20)
    assert 90 <= mask.sum() <= 110


def test_rasterize_outside_canvas_is_empty():
    sq = np.array([[50, 50], [60, 50], [60, 60], [50, 60]], float)
    assert not rasterize_polygon(sq, 20, 20).any()


def test_rasterize_disc_area():
    t = np.linspace(0, 2 * np.pi, 720, endpoint=False)
    disc = np.column_stack([50 + 30 * np.cos(t), 50 + 30 * np.sin(t)])
    count = rasterize_polygon(disc, 100, 100).sum()
    assert count == pytest.approx(np.pi * 900, rel=0.02)


def test_rasterize_degenerate_polygon():
    with pytest.raises(DegeneratePolygon):
        rasterize_polygon(SQUARE[:2], 10, 10)


def test_rasterize_orientation_independent(rng):
    poly = random_polygon(rng)
    np.testing.assert_array_equal(rasterize_polygon(poly, 100, 100),
                                  rasterize_polygon(poly[::-1], 100, 100))


def test_ensure_ccw_and_diameter():
    cw = SQUARE[::-1]
    assert signed_area(ensure_ccw(cw)) > 0
    assert max_diameter(SQUARE) == pytest.approx(np.sqrt(2))
