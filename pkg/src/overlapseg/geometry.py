"""Geometric primitives on point arrays.

Points are ``(n, 2)`` float arrays of ``(x, y)`` pairs where ``x`` is the
column and ``y`` the row of the pixel grid; pixel ``(row, col)`` has its
center at ``(col, row)``.  "Counter-clockwise" means a positive shoelace area
in these coordinates.
"""
import numpy as np

from ._validation import check_points
from .exceptions import DegenerateInput, DegeneratePolygon


def signed_area(polygon):
    """Shoelace area, positive iff the vertices run counter-clockwise."""
    p = check_points(polygon)
    if len(p) < 3:
        raise DegeneratePolygon(f"polygon needs at least 3 vertices, got {len(p)}")
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def polygon_area(polygon):
    return abs(signed_area(polygon))


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points):
    """Counter-clockwise convex hull without collinear vertices.

    Andrew's monotone chain, O(n log n).
    """
    p = check_points(points)
    pts = sorted(set(map(tuple, p.tolist())))
    if len(pts) < 3:
        raise DegenerateInput("convex hull needs at least 3 distinct points")

    def half(seq):
        chain = []
        for q in seq:
            while len(chain) >= 2 and _cross(chain[-2], chain[-1], q) <= 0:
                chain.pop()
            chain.append(q)
        return chain

    lower = half(pts)
    upper = half(reversed(pts))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateInput("all points are collinear")
    return np.array(hull, dtype=float)


def hull_area(points):
    """Area of the convex hull, 0 for collinear input."""
    try:
        return signed_area(convex_hull(points))
    except DegenerateInput:
        return 0.0


def max_diameter(points):
    """Largest distance between any two points (computed on the hull)."""
    p = check_points(points, min_points=1)
    try:
        h = convex_hull(p)
    except DegenerateInput:
        h = p
    d = h[:, None, :] - h[None, :, :]
    return float(np.sqrt((d ** 2).sum(-1)).max())


def ensure_ccw(points):
    """Return ``points`` reordered counter-clockwise if needed."""
    p = check_points(points, min_points=3)
    return p if signed_area(p) > 0 else p[::-1].copy()


def points_in_polygon(polygon, px, py):
    """Even-odd test with the half-open rule used for rasterization.

    A point on a left/bottom edge counts as inside, on a right/top edge as
    outside, so that polygons sharing an edge never claim the same pixel.
    """
    poly = np.asarray(polygon, dtype=float)
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    inside = np.zeros(np.broadcast(px, py).shape, dtype=bool)
    x1, y1 = poly[:, 0], poly[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    for a, b, c, d in zip(x1, y1, x2, y2):
        if b == d:
            continue
        crosses = (b > py) != (d > py)
        xint = a + (py - b) * (c - a) / (d - b)
        inside ^= crosses & (px < xint)
    return inside


def rasterize_polygon(polygon, width, height):
    """Boolean ``(height, width)`` mask of pixel centers inside ``polygon``."""
    p = check_points(polygon)
    if len(p) < 3:
        raise DegeneratePolygon("polygon needs at least 3 vertices")
    if width <= 0 or height <= 0:
        raise ValueError("canvas dimensions must be positive")
    mask = np.zeros((height, width), dtype=bool)
    x0 = max(int(np.floor(p[:, 0].min())), 0)
    x1 = min(int(np.ceil(p[:, 0].max())), width - 1)
    y0 = max(int(np.floor(p[:, 1].min())), 0)
    y1 = min(int(np.ceil(p[:, 1].max())), height - 1)
    if x0 > x1 or y0 > y1:
        return mask
    ys, xs = np.mgrid[y0:y1 + 1, x0:x1 + 1]
    mask[y0:y1 + 1, x0:x1 + 1] = points_in_polygon(p, xs, ys)
    return mask


def point_segment_distance(p, a, b):
    """Distance from ``p`` to the closed segment ``ab``."""
    p, a, b = (np.asarray(v, dtype=float) for v in (p, a, b))
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.hypot(*(p - a)))
    t = np.clip(float((p - a) @ ab) / denom, 0.0, 1.0)
    return float(np.hypot(*(p - a - t * ab)))


def point_line_distance(p, a, b):
    """Perpendicular distance from ``p`` to the infinite line through ``a``, ``b``."""
    ab = (b[0] - a[0], b[1] - a[1])
    norm = np.hypot(*ab)
    if norm == 0.0:
        return float(np.hypot(p[0] - a[0], p[1] - a[1]))
    return abs(ab[0] * (p[1] - a[1]) - ab[1] * (p[0] - a[0])) / norm


def distance_to_polygon_boundary(polygon, p):
    poly = np.asarray(polygon, dtype=float)
    nxt = np.roll(poly, -1, axis=0)
    return min(point_segment_distance(p, a, b) for a, b in zip(poly, nxt))
