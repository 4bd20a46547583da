"""Parameter-free concave point detection and contour splitting.

Dominant points come from co-linearity suppression with a digitization
tolerance derived from the chord itself; concave dominant points are the
reflex vertices of the resulting polygon.
"""
import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_points
from .exceptions import ZeroLengthLine
from .geometry import points_in_polygon, signed_area


@dataclass
class ContourSegment:
    """Open run of contour points between two consecutive concave points."""

    points: np.ndarray
    parent_component: int = 0
    start_index: int = 0
    end_index: int = 0

    def __len__(self):
        return len(self.points)


@dataclass
class ConcavePointSet:
    indices: np.ndarray
    points: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    def __len__(self):
        return len(self.indices)


def _angle_diff(a, b):
    return abs(math.remainder(a - b, 2 * math.pi))


def digitization_threshold(p_prev, p_next):
    """Chord length times the tangent change caused by rounding its endpoints."""
    x0, y0 = map(float, p_prev)
    x1, y1 = map(float, p_next)
    s = math.hypot(x1 - x0, y1 - y0)
    if s == 0.0:
        raise ZeroLengthLine("chord endpoints coincide")
    dx, dy = round(x1) - round(x0), round(y1) - round(y0)
    if dx == 0 and dy == 0:
        # the digital line degenerates to a point; its tangent is undefined
        return s * math.pi / 2
    return s * _angle_diff(math.atan2(y1 - y0, x1 - x0), math.atan2(dy, dx))


def max_digitization_threshold(p_prev, p_next):
    """Worst-case :func:`digitization_threshold` over all real endpoints that
    round to the given (pixel) endpoints.

    The real chord differs from the digital one by a vector in ``[-1, 1]^2``;
    the angular deviation peaks at a corner of that box.
    """
    x0, y0 = map(float, p_prev)
    x1, y1 = map(float, p_next)
    dx, dy = round(x1) - round(x0), round(y1) - round(y0)
    if dx == 0 and dy == 0:
        raise ZeroLengthLine("chord endpoints coincide")
    phi = math.atan2(dy, dx)
    best = 0.0
    for ex in (-1.0, 1.0):
        for ey in (-1.0, 1.0):
            rx, ry = dx + ex, dy + ey
            s = math.hypot(rx, ry)
            if s == 0.0:
                continue
            best = max(best, s * _angle_diff(math.atan2(ry, rx), phi))
    return best


def _line_distance(p, a, b):
    ax, ay = a
    bx, by = b
    n = math.hypot(bx - ax, by - ay)
    if n == 0.0:
        return math.hypot(p[0] - ax, p[1] - ay)
    return abs((bx - ax) * (p[1] - ay) - (by - ay) * (p[0] - ax)) / n


_THRESHOLDS = {"worst_case": max_digitization_threshold, "rounding": digitization_threshold}


def dominant_points(contour, threshold="worst_case"):
    """Indices of the points surviving co-linearity suppression.

    A point is suppressed while its distance to the chord joining its
    currently retained neighbours does not exceed the chord's digitization
    tolerance.  Removal proceeds most-collinear-first until a fixpoint, which
    makes the result independent of where the closed contour starts.
    """
    pts = check_points(contour, min_points=3, name="contour")
    tol = _THRESHOLDS[threshold]
    n = len(pts)
    P = [tuple(p) for p in pts.tolist()]
    prev = [(i - 1) % n for i in range(n)]
    nxt = [(i + 1) % n for i in range(n)]
    alive = [True] * n
    version = [0] * n

    def score(i):
        a, b = P[prev[i]], P[nxt[i]]
        try:
            th = tol(a, b)
        except ZeroLengthLine:
            # spike: neighbours coincide, the point is a genuine extremum
            return math.inf
        return _line_distance(P[i], a, b) - th

    heap = [(score(i), i, 0) for i in range(n)]
    heapq.heapify(heap)
    remaining = n
    while heap and remaining > 3:
        s, i, ver = heapq.heappop(heap)
        if not alive[i] or ver != version[i]:
            continue
        if s > 0:
            break
        alive[i] = False
        remaining -= 1
        a, b = prev[i], nxt[i]
        nxt[a], prev[b] = b, a
        for j in (a, b):
            version[j] += 1
            heapq.heappush(heap, (score(j), j, version[j]))
    return np.flatnonzero(alive)


def zhang_is_concave(p_prev, p_cur, p_next):
    """Reflex test for a vertex of a counter-clockwise contour.

    Vertices of a counter-clockwise convex polygon turn left (positive cross
    product); a concave vertex turns right.
    """
    ux, uy = p_cur[0] - p_prev[0], p_cur[1] - p_prev[1]
    vx, vy = p_next[0] - p_cur[0], p_next[1] - p_cur[1]
    return ux * vy - uy * vx < 0


def _line_angle(dx, dy):
    if dx == 0:
        return math.pi / 2
    return math.atan(dy / dx)


def bai_concavity_angle(p_prev, p_cur, p_next):
    """Angle between the lines (prev, cur) and (next, cur)."""
    g1 = _line_angle(p_prev[0] - p_cur[0], p_prev[1] - p_cur[1])
    g2 = _line_angle(p_next[0] - p_cur[0], p_next[1] - p_cur[1])
    d = abs(g1 - g2)
    return d if d < math.pi else math.pi - d


def chord_outside(polygon, a, b, samples=9):
    """True if the open chord ``ab`` runs mostly outside ``polygon``."""
    t = np.linspace(0, 1, samples + 2)[1:-1]
    x = a[0] + t * (b[0] - a[0])
    y = a[1] + t * (b[1] - a[1])
    return points_in_polygon(polygon, x, y).mean() < 0.5


def bai_is_concave(polygon, p_prev, p_cur, p_next, a1=math.pi / 18, a2=8 * math.pi / 9):
    angle = bai_concavity_angle(p_prev, p_cur, p_next)
    return a1 < angle < a2 and chord_outside(polygon, p_prev, p_next)


def _arc_lengths(pts):
    step = np.hypot(*np.diff(np.vstack([pts, pts[:1]]), axis=0).T)
    return np.concatenate([[0.0], np.cumsum(step)])


def merge_close_points(contour, indices, depth, min_separation=3.0):
    """Collapse concave points closer than ``min_separation`` along the contour,
    keeping the deepest of each cluster."""
    if len(indices) < 2:
        return np.asarray(indices, dtype=int)
    pts = np.asarray(contour, dtype=float)
    arc = _arc_lengths(pts)
    total = arc[-1]
    idx = list(indices)
    dep = dict(zip(indices, depth))
    changed = True
    while changed and len(idx) > 1:
        changed = False
        for k in range(len(idx)):
            i, j = idx[k], idx[(k + 1) % len(idx)]
            gap = (arc[j] - arc[i]) % total
            if gap < min_separation:
                drop = i if dep[i] < dep[j] else j
                idx.remove(drop)
                changed = True
                break
    return np.array(sorted(idx), dtype=int)


class ConcavePointDetector(BaseEstimator):
    """Concave point detector for closed counter-clockwise contours.

    Parameters
    ----------
    classifier : {"zhang", "bai"}
        Concavity test applied to consecutive dominant points.
    threshold : {"worst_case", "rounding"}
        Digitization tolerance used by co-linearity suppression.
    merge_distance : float
        Concave points closer than this (pixels, along the contour) merge.
    bai_range : tuple of float
        Accepted concavity angle range for the ``"bai"`` classifier.
    """

    def __init__(self, classifier="zhang", threshold="worst_case", merge_distance=3.0,
                 bai_range=(math.pi / 18, 8 * math.pi / 9)):
        self.classifier = classifier
        self.threshold = threshold
        self.merge_distance = merge_distance
        self.bai_range = bai_range

    def fit(self, X=None, y=None):
        if self.classifier not in ("zhang", "bai"):
            raise ValueError(f"unknown classifier {self.classifier!r}")
        if self.threshold not in _THRESHOLDS:
            raise ValueError(f"unknown threshold {self.threshold!r}")
        return self

    def detect(self, contour):
        self.fit()
        pts = check_points(contour, min_points=3, name="contour")
        if signed_area(pts) < 0:
            raise ValueError("contour must be counter-clockwise")
        dom = dominant_points(pts, self.threshold)
        if len(dom) < 3:
            return ConcavePointSet(np.empty(0, dtype=int), np.empty((0, 2)))
        P = pts.tolist()
        found, depth = [], []
        for k, i in enumerate(dom):
            a, b = P[dom[k - 1]], P[dom[(k + 1) % len(dom)]]
            c = P[i]
            if self.classifier == "zhang":
                hit = zhang_is_concave(a, c, b)
            else:
                hit = bai_is_concave(pts, a, c, b, *self.bai_range)
            if hit:
                found.append(int(i))
                depth.append(_line_distance(c, a, b))
        idx = merge_close_points(pts, found, depth, self.merge_distance)
        return ConcavePointSet(idx, pts[idx] if len(idx) else np.empty((0, 2)))

    def transform(self, X):
        """Concave point coordinates for each contour in ``X``."""
        return [self.detect(c).points for c in X]


def detect_concave_points(contour, **params):
    return ConcavePointDetector(**params).detect(contour)


def split_contour(contour, concave, parent_component=0):
    """Cut a closed contour at its concave points.

    ``k`` concave points give ``k`` segments that share their endpoints;
    without concave points the whole contour is one segment.
    """
    pts = check_points(contour, min_points=3, name="contour")
    idx = np.asarray(getattr(concave, "indices", concave), dtype=int)
    n = len(pts)
    if idx.size == 0:
        return [ContourSegment(pts.copy(), parent_component, 0, n - 1)]
    idx = np.sort(idx)
    segs = []
    for k in range(len(idx)):
        i, j = int(idx[k]), int(idx[(k + 1) % len(idx)])
        if j > i:
            run = np.arange(i, j + 1)
        else:
            run = np.concatenate([np.arange(i, n), np.arange(0, j + 1)])
        segs.append(ContourSegment(pts[run], parent_component, i, j))
    return segs
