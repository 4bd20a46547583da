"""Segment grouping: hybrid cost and branch-and-bound over set partitions.

A grouping is a canonical membership vector (restricted growth string):
``labels[0] == 0`` and every label is at most one more than the largest
label before it.  Labels are 0-based in code; +1 gives the 1-based form.
"""
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_mask
from .ellipse import fit_ellipse_lesf, point_ellipse_distance
from .exceptions import DegenerateSegment, EmptyVoteMap, FitFailure, TooManySegments
from .geometry import hull_area, max_diameter, polygon_area


@dataclass(frozen=True)
class GroupingConfig:
    """Weights and search limits for grouping.

    ``radial_range`` of ``None`` derives the symmetry-transform radii from the
    component as ``radial_range_factors`` times its equivalent radius.
    ``group_penalty`` is charged once per group.  Without it a partition into
    singletons costs almost nothing whenever every segment is a clean arc,
    because a lone arc is convex and fits an ellipse exactly.
    """

    alpha: float = 0.1
    beta: float = 0.9
    radial_range: tuple = None
    radial_range_factors: tuple = (0.3, 1.2)
    max_exact_segments: int = 10
    node_budget: int = 20000
    group_penalty: float = 0.05
    nst_percentile: float = 99.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.group_penalty < 0:
            raise ValueError("weights must be non-negative")
        if self.radial_range is not None:
            lo, hi = self.radial_range
            if lo < 1 or hi < lo:
                raise ValueError("radial_range needs 1 <= R_min <= R_max")


@dataclass(frozen=True)
class CostBreakdown:
    concavity: float
    ellipticity: float
    symmetry: float
    total: float


def _points(segment):
    return np.asarray(getattr(segment, "points", segment), dtype=float)


def _area_ratio_cost(polygon):
    hull = hull_area(polygon)
    if hull <= 0:
        return 0.0
    return float(np.clip(1.0 - polygon_area(polygon) / hull, 0.0, 1.0))


def pair_concavity(seg_a, seg_b, concave_adjacent=False):
    """Concavity cost of two segments: 1 across a concave point, otherwise one
    minus the ratio of the area they enclose to their convex hull area."""
    if concave_adjacent:
        return 1.0
    a, b = _points(seg_a), _points(seg_b)
    if len(a) + len(b) < 3:
        raise DegenerateSegment("segments too short to enclose an area")
    return _area_ratio_cost(np.vstack([a, b]))


def singleton_concavity(segment):
    p = _points(segment)
    if len(p) < 3:
        raise DegenerateSegment("segment has fewer than 3 points")
    return _area_ratio_cost(p)


def concavity_cost(group, concave_adjacency=None):
    """Group concavity: singleton ratio, or the maximum over all pairs.

    ``concave_adjacency[i][j]`` flags pairs separated by a concave point.
    """
    if len(group) == 0:
        raise ValueError("empty group")
    if len(group) == 1:
        return singleton_concavity(group[0])
    best = 0.0
    for i in range(len(group)):
        for j in range(i + 1, len(group)):
            flag = bool(concave_adjacency[i][j]) if concave_adjacency is not None else False
            best = max(best, pair_concavity(group[i], group[j], flag))
    return best


def ellipticity_cost(group):
    """Mean point-to-ellipse distance of the jointly fitted ellipse, in units
    of its semi-major axis; ``inf`` when no ellipse can be fitted."""
    pts = np.vstack([_points(s) for s in group])
    try:
        ell = fit_ellipse_lesf(pts)
    except FitFailure:
        return math.inf
    return float(point_ellipse_distance(pts, ell).mean() / ell.semi_major)


def _tangents(pts, step=2):
    n = len(pts)
    hi = np.minimum(np.arange(n) + step, n - 1)
    lo = np.maximum(np.arange(n) - step, 0)
    t = pts[hi] - pts[lo]
    norm = np.hypot(t[:, 0], t[:, 1])
    norm[norm == 0] = 1.0
    return t / norm[:, None]


def inward_normals(points, mask):
    """Unit normals pointing into ``mask`` (left of the traversal direction
    for counter-clockwise contours, flipped if the mask disagrees)."""
    pts = _points(points)
    t = _tangents(pts)
    n = np.column_stack([-t[:, 1], t[:, 0]])
    h, w = mask.shape

    def inside(q):
        c = np.clip(np.rint(q[:, 0]).astype(int), 0, w - 1)
        r = np.clip(np.rint(q[:, 1]).astype(int), 0, h - 1)
        return mask[r, c].mean()

    if inside(pts - 3 * n) > inside(pts + 3 * n):
        n = -n
    return n


def nst_symmetry_center(segment, mask, radial_range, percentile=99.0):
    """Center of radial symmetry of a segment by the normal symmetry transform.

    Every segment point votes at distance ``r`` along its inward normal for
    each integer ``r`` in ``radial_range``; the vote maps are clipped at the
    ``percentile`` of all non-zero counts, normalized and averaged over radii.  The
    center is the response-weighted centroid of pixels within 80 % of the
    peak response.

    Raises
    ------
    EmptyVoteMap
        If no vote lands inside the image.
    """
    mask = check_mask(mask)
    pts = _points(segment)
    if len(pts) < 5:
        raise DegenerateSegment("symmetry transform needs at least 5 points")
    lo, hi = radial_range
    radii = np.arange(int(math.floor(lo)), int(math.ceil(hi)) + 1)
    normals = inward_normals(pts, mask)
    h, w = mask.shape
    maps = []
    for r in radii:
        votes = np.rint(pts + r * normals).astype(int)
        ok = (votes[:, 0] >= 0) & (votes[:, 0] < w) & (votes[:, 1] >= 0) & (votes[:, 1] < h)
        if ok.any():
            maps.append(np.bincount(votes[ok, 1] * w + votes[ok, 0], minlength=h * w))
    if not maps:
        raise EmptyVoteMap("all symmetry votes fall outside the image")
    O = np.array(maps, dtype=float)
    # one clamp level for all radii: a per-radius level lets radii whose votes
    # never converge score as high as the radius that does
    k = np.percentile(O[O > 0], percentile)
    S = np.minimum(O, k).sum(axis=0) / (k * len(radii))
    keep = np.flatnonzero(S >= 0.8 * S.max())
    wts = S[keep]
    ys, xs = np.divmod(keep, w)
    return np.array([np.dot(xs, wts) / wts.sum(), np.dot(ys, wts) / wts.sum()])


def default_radial_range(mask, factors=(0.3, 1.2), n_objects=1):
    """Radii scaled by the equivalent radius of one of ``n_objects`` objects
    sharing the area of ``mask``."""
    r_eq = math.sqrt(max(np.count_nonzero(mask), 1) / (math.pi * max(n_objects, 1)))
    lo = max(1.0, factors[0] * r_eq)
    return lo, max(lo, factors[1] * r_eq)


def symmetry_cost(center_a, center_b, diameter):
    """Distance between symmetry centers over the component diameter, in [0, 1].

    A missing center (``None``) costs 1.
    """
    if center_a is None or center_b is None:
        return 1.0
    if diameter <= 0:
        return 0.0
    d = math.hypot(center_a[0] - center_b[0], center_a[1] - center_b[1])
    return min(1.0, d / diameter)


def consecutive_adjacency(n):
    """Concave-adjacency flags for segments cut from one closed contour:
    neighbours in contour order are separated by a concave point."""
    adj = np.zeros((n, n), dtype=bool)
    if n >= 2:
        for i in range(n):
            j = (i + 1) % n
            adj[i, j] = adj[j, i] = True
    return adj


class GroupingProblem:
    """Cached cost evaluation for one set of segments.

    Parameters
    ----------
    segments : list of ContourSegment or (n, 2) arrays
    mask : (H, W) bool array in the same frame as the segment points
    config : GroupingConfig
    adjacency : (N, N) bool array, optional
        Concave-adjacency flags; defaults to consecutive segments.
    diameter : float, optional
        Normalizer of the symmetry term; defaults to the largest distance
        between segment points.
    radial_range : (float, float), optional
        Overrides the configured symmetry-transform radii.
    """

    def __init__(self, segments, mask, config=GroupingConfig(), adjacency=None, diameter=None,
                 radial_range=None):
        self.segments = [_points(s) for s in segments]
        self.n = len(self.segments)
        if self.n == 0:
            raise ValueError("no segments to group")
        self.mask = check_mask(mask)
        self.config = config
        self.adjacency = (consecutive_adjacency(self.n) if adjacency is None
                          else np.asarray(adjacency, dtype=bool))
        if self.adjacency.shape != (self.n, self.n):
            raise ValueError("adjacency must be an N x N matrix")
        all_pts = np.vstack(self.segments)
        self.diameter = max_diameter(all_pts) if diameter is None else float(diameter)
        if radial_range is None:
            radial_range = config.radial_range
        if radial_range is None:
            radial_range = default_radial_range(self.mask, config.radial_range_factors)
        self.radial_range = tuple(radial_range)

        self.centers = []
        for s in self.segments:
            try:
                self.centers.append(nst_symmetry_center(s, self.mask, self.radial_range,
                                                        config.nst_percentile))
            except (EmptyVoteMap, DegenerateSegment):
                self.centers.append(None)
        n = self.n
        self.pair_conc = np.zeros((n, n))
        self.pair_sym = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                c = pair_concavity(self.segments[i], self.segments[j], self.adjacency[i, j])
                s = symmetry_cost(self.centers[i], self.centers[j], self.diameter)
                self.pair_conc[i, j] = self.pair_conc[j, i] = c
                self.pair_sym[i, j] = self.pair_sym[j, i] = s
        self.single_conc = [singleton_concavity(s) if len(s) >= 3 else 0.0 for s in self.segments]
        self._cache = {}

    def breakdown(self, members):
        """CostBreakdown of the group made of segment indices ``members``."""
        key = 0
        for m in members:
            key |= 1 << m
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        members = sorted(members)
        if len(members) == 1:
            conc, sym = self.single_conc[members[0]], 0.0
        else:
            sub = np.ix_(members, members)
            conc = float(self.pair_conc[sub].max())
            sym = float(self.pair_sym[sub].max())
        ell = ellipticity_cost([self.segments[m] for m in members])
        cfg = self.config
        out = CostBreakdown(conc, ell, sym, conc + cfg.alpha * ell + cfg.beta * sym)
        self._cache[key] = out
        return out

    def group_cost(self, members):
        return self.breakdown(members).total + self.config.group_penalty

    def total_cost(self, labels):
        """Sum of group costs for a canonical labelling."""
        labels = canonical(labels)
        total = 0.0
        for g in range(max(labels) + 1):
            total += self.group_cost([i for i, lab in enumerate(labels) if lab == g])
        return total


def canonical(labels):
    """Relabel groups in order of first appearance, starting from 0."""
    mapping = {}
    out = []
    for lab in labels:
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out.append(mapping[lab])
    return out


def restricted_growth_strings(n):
    """All canonical labellings of ``n`` items in lexicographic order."""
    if n == 0:
        yield []
        return
    labels = [0] * n

    def rec(i, top):
        if i == n:
            yield list(labels)
            return
        for g in range(top + 2):
            labels[i] = g
            yield from rec(i + 1, max(top, g))

    labels[0] = 0
    yield from rec(1, 0)


def bell_number(n):
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def solve_exhaustive(problem, max_segments=None):
    """Globally optimal grouping by enumeration; ties go to the
    lexicographically smallest labelling."""
    limit = problem.config.max_exact_segments if max_segments is None else max_segments
    if problem.n > limit:
        raise TooManySegments(f"{problem.n} segments exceed the exhaustive limit of {limit}")
    best, best_cost = None, math.inf
    for labels in restricted_growth_strings(problem.n):
        c = problem.total_cost(labels)
        if c < best_cost or best is None:
            best, best_cost = labels, c
    return best, best_cost


def solve_greedy(problem):
    """Each segment in turn joins the group with the smallest cost increase,
    or opens a new group when that is cheaper."""
    groups = []
    for i in range(problem.n):
        best_g, best_inc = len(groups), problem.group_cost([i])
        for g, members in enumerate(groups):
            inc = problem.group_cost(members + [i]) - problem.group_cost(members)
            if inc < best_inc:
                best_g, best_inc = g, inc
        if best_g == len(groups):
            groups.append([i])
        else:
            groups[best_g].append(i)
    labels = [0] * problem.n
    for g, members in enumerate(groups):
        for m in members:
            labels[m] = g
    labels = canonical(labels)
    return labels, problem.total_cost(labels)


@dataclass
class SearchResult:
    labels: list
    cost: float
    nodes: int
    exhausted_budget: bool


def solve_branch_and_bound(problem, node_budget=None):
    """Depth-first branch and bound over canonical labellings.

    The lower bound of a partial assignment counts, per group, the largest
    committed pairwise concavity plus ``beta`` times the largest committed
    pairwise symmetry (both can only grow as members are added) plus the
    group penalty.  Unassigned segments add the smallest growth any of them
    must cause: either joining an existing group or opening a new one.
    Ellipticity is bounded below by zero.
    """
    cfg = problem.config
    budget = cfg.node_budget if node_budget is None else node_budget
    n = problem.n
    lam = cfg.group_penalty
    beta = cfg.beta
    pc, ps = problem.pair_conc, problem.pair_sym
    best_labels, best_cost = solve_greedy(problem)
    labels = [0] * n
    # per group: running max of pairwise terms against every segment, and the
    # committed maxima among its own members
    col_conc, col_sym, own_conc, own_sym, sizes = [], [], [], [], []
    nodes = 0
    out_of_budget = False

    def group_bound(g):
        return own_conc[g] + beta * own_sym[g] + lam

    def remaining_bound(i):
        if i >= n or lam == 0 and not col_conc:
            return 0.0
        oc = np.array(own_conc)[:, None]
        os_ = np.array(own_sym)[:, None]
        grown = (np.maximum(np.array(col_conc)[:, i:], oc)
                 + beta * np.maximum(np.array(col_sym)[:, i:], os_))
        inc = (grown - (oc + beta * os_)).min(axis=0)
        return float(np.minimum(inc, lam).max())

    def rec(i, committed):
        nonlocal best_labels, best_cost, nodes, out_of_budget
        nodes += 1
        if nodes > budget:
            out_of_budget = True
            return
        if i == n:
            c = problem.total_cost(labels)
            if c < best_cost:
                best_cost, best_labels = c, list(labels)
            return
        for g in range(len(sizes) + 1):
            if g == len(sizes):
                col_conc.append(pc[i].copy())
                col_sym.append(ps[i].copy())
                own_conc.append(0.0)
                own_sym.append(0.0)
                sizes.append(1)
                before = 0.0
                saved = None
            else:
                before = group_bound(g)
                saved = (col_conc[g], col_sym[g], own_conc[g], own_sym[g])
                own_conc[g] = max(own_conc[g], col_conc[g][i])
                own_sym[g] = max(own_sym[g], col_sym[g][i])
                col_conc[g] = np.maximum(col_conc[g], pc[i])
                col_sym[g] = np.maximum(col_sym[g], ps[i])
                sizes[g] += 1
            labels[i] = g
            now = committed - before + group_bound(g)
            if now < best_cost and now + remaining_bound(i + 1) < best_cost:
                rec(i + 1, now)
            if saved is None:
                for stack in (col_conc, col_sym, own_conc, own_sym, sizes):
                    stack.pop()
            else:
                col_conc[g], col_sym[g], own_conc[g], own_sym[g] = saved
                sizes[g] -= 1
            if out_of_budget:
                return

    rec(0, 0.0)
    return SearchResult(canonical(best_labels), best_cost, nodes, out_of_budget)


class SegmentGrouper(BaseEstimator):
    """Group contour segments of one connected component into objects.

    Parameters mirror :class:`GroupingConfig`; ``method`` selects
    ``"branch_and_bound"`` (default) or ``"exhaustive"``.

    Attributes
    ----------
    labels_ : list of int
        Canonical 0-based group index of each segment.
    cost_ : float
    breakdowns_ : list of CostBreakdown, one per group
    n_nodes_ : int
        Search nodes visited (branch and bound only).
    """

    def __init__(self, alpha=0.1, beta=0.9, group_penalty=0.05, radial_range=None,
                 radial_range_factors=(0.3, 1.2), node_budget=20000, max_exact_segments=10,
                 method="branch_and_bound"):
        self.alpha = alpha
        self.beta = beta
        self.group_penalty = group_penalty
        self.radial_range = radial_range
        self.radial_range_factors = radial_range_factors
        self.node_budget = node_budget
        self.max_exact_segments = max_exact_segments
        self.method = method

    def config(self):
        return GroupingConfig(
            alpha=self.alpha, beta=self.beta, group_penalty=self.group_penalty,
            radial_range=self.radial_range, radial_range_factors=self.radial_range_factors,
            node_budget=self.node_budget, max_exact_segments=self.max_exact_segments,
        )

    def fit(self, segments, mask, adjacency=None, diameter=None, radial_range=None):
        self.problem_ = GroupingProblem(segments, mask, self.config(), adjacency, diameter,
                                        radial_range)
        if self.method == "exhaustive":
            self.labels_, self.cost_ = solve_exhaustive(self.problem_)
            self.n_nodes_ = bell_number(self.problem_.n)
        elif self.method == "branch_and_bound":
            res = solve_branch_and_bound(self.problem_)
            self.labels_, self.cost_, self.n_nodes_ = res.labels, res.cost, res.nodes
            self.budget_exhausted_ = res.exhausted_budget
        else:
            raise ValueError(f"unknown method {self.method!r}")
        self.groups_ = [[i for i, lab in enumerate(self.labels_) if lab == g]
                        for g in range(max(self.labels_) + 1)]
        self.breakdowns_ = [self.problem_.breakdown(g) for g in self.groups_]
        return self

    def fit_predict(self, segments, mask, adjacency=None, diameter=None, radial_range=None):
        return self.fit(segments, mask, adjacency, diameter, radial_range).labels_
