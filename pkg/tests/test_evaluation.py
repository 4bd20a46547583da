import itertools

import numpy as np
import pytest

from overlapseg.evaluation import (DetectionScores, MatchConfig, jsc, match_objects, match_points,
                                   pairwise_jsc, point_scores, pool, segmentation_scores)
from overlapseg.exceptions import DimensionMismatch


def square(x, y, s=10, shape=(40, 40)):
    m = np.zeros(shape, bool)
    m[y:y + s, x:x + s] = True
    return m


def test_points_identical():
    pts = np.array([[1, 2], [10, 20], [30, 5]], float)
    s = point_scores(pts, pts)
    assert (s.tp, s.fp, s.fn, s.ad) == (3, 0, 0, 0.0)
    assert s.tpr == s.ppv == s.acc == 1.0


def test_points_empty_detection():
    s = point_scores(np.empty((0, 2)), np.array([[0, 0], [5, 5]], float))
    assert (s.tp, s.fp, s.fn) == (0, 0, 2)
    assert s.tpr == 0.0 and s.ppv == 1.0 and s.acc == 0.0


def brute_force_assignment(det, tru, rho1):
    """Maximum number of matches within rho1, then minimum total distance."""
    best = None
    for k in range(min(len(det), len(tru)), -1, -1):
        for ds in itertools.permutations(range(len(det)), k):
            for ts in itertools.combinations(range(len(tru)), k):
                d = [np.hypot(*(det[i] - tru[j])) for i, j in zip(ds, ts)]
                if all(x <= rho1 for x in d):
                    cand = (k, -sum(d), sorted(zip(ds, ts)))
                    if best is None or cand[:2] > best[:2]:
                        best = cand
        if best is not None:
            return best[2]
    return []


def test_points_three_near_two_matches_brute_force():
    det = np.array([[1, 0], [19, 1], [10, 5]], float)
    tru = np.array([[0, 0], [20, 0]], float)
    pairs, fp, fn = match_points(det, tru, 10)
    assert sorted((i, j) for i, j, _ in pairs) == brute_force_assignment(det, tru, 10)
    assert fp == [2] and fn == []


def test_points_beyond_threshold():
    s = point_scores(np.array([[0, 0]], float), np.array([[0, 10.5]], float), rho1=10)
    assert (s.tp, s.fp, s.fn) == (0, 1, 1)
    assert point_scores(np.array([[0, 0]], float), np.array([[0, 10]], float), 10).tp == 1


def test_points_invalid_rho():
    with pytest.raises(ValueError):
        match_points(np.zeros((1, 2)), np.zeros((1, 2)), 0)


def test_jsc_examples():
    a = square(5, 5)
    assert jsc(a, a) == 1.0
    assert jsc(a, square(25, 25)) == 0.0
    assert jsc(a, square(10, 5)) == pytest.approx(1 / 3)
    z = np.zeros((40, 40), bool)
    assert jsc(z, z) == 1.0


def test_jsc_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        jsc(np.zeros((3, 3), bool), np.zeros((3, 4), bool))
    with pytest.raises(DimensionMismatch):
        segmentation_scores([np.zeros((3, 3), bool)], [np.zeros((4, 3), bool)])


def test_jsc_symmetric_and_identity(rng):
    for _ in range(20):
        a, b = rng.random((2, 15, 15)) > 0.5
        assert jsc(a, b) == jsc(b, a)
        assert (jsc(a, b) == 1.0) == bool(np.array_equal(a, b))


def test_segmentation_perfect():
    masks = [square(0, 0), square(20, 20)]
    s = segmentation_scores(masks, masks)
    assert s.tpr == s.ppv == s.acc == s.ajsc == 1.0


def test_segmentation_one_found_one_spurious():
    truth = [square(0, 0), square(20, 20)]
    pred = [square(0, 0), square(28, 2)]
    s = segmentation_scores(pred, truth)
    assert (s.tpr, s.ppv) == (0.5, 0.5)
    assert s.acc == pytest.approx(1 / 3)


def test_segmentation_threshold_boundary():
    s = segmentation_scores([square(10, 5)], [square(5, 5)], MatchConfig(jsc_threshold=1 / 3))
    assert s.tp == 1 and s.ajsc == pytest.approx(1 / 3)
    assert segmentation_scores([square(10, 5)], [square(5, 5)]).tp == 0


def test_permutation_invariance(rng):
    truth = [square(int(x), int(y)) for x, y in rng.integers(0, 30, (6, 2))]
    pred = [square(int(x), int(y)) for x, y in rng.integers(0, 30, (6, 2))]
    base = segmentation_scores(pred, truth, MatchConfig(jsc_threshold=0.2))
    for _ in range(5):
        p = [pred[i] for i in rng.permutation(6)]
        t = [truth[i] for i in rng.permutation(6)]
        s = segmentation_scores(p, t, MatchConfig(jsc_threshold=0.2))
        assert (s.tp, s.fp, s.fn) == (base.tp, base.fp, base.fn)
        assert s.ajsc == pytest.approx(base.ajsc)
    det, tru = rng.uniform(0, 50, (8, 2)), rng.uniform(0, 50, (7, 2))
    ref = point_scores(det, tru)
    assert point_scores(det[::-1], tru[::-1]).tp == ref.tp


def test_tp_monotone_in_thresholds(rng):
    truth = [square(int(x), int(y)) for x, y in rng.integers(0, 30, (6, 2))]
    pred = [square(int(x), int(y)) for x, y in rng.integers(0, 30, (8, 2))]
    table = pairwise_jsc(pred, truth)
    tps = [len(match_objects(table, t)) for t in np.linspace(0.05, 1, 20)]
    assert all(b <= a for a, b in zip(tps, tps[1:]))
    det, tru = rng.uniform(0, 50, (15, 2)), rng.uniform(0, 50, (12, 2))
    tps = [point_scores(det, tru, r).tp for r in range(1, 30)]
    assert all(b >= a for a, b in zip(tps, tps[1:]))


def test_empty_conventions():
    s = DetectionScores()
    assert s.tpr == s.ppv == s.acc == 1.0
    s = segmentation_scores([], [])
    assert (s.tp, s.fp, s.fn, s.acc) == (0, 0, 0, 1.0)


def test_pool_sums_counts():
    a = point_scores(np.array([[0, 0]], float), np.array([[0, 1]], float))
    b = point_scores(np.array([[0, 0], [9, 9]], float), np.array([[0, 3]], float))
    p = pool([a, b])
    assert (p.tp, p.fp, p.fn) == (2, 1, 0)
    assert p.ad == pytest.approx(2.0)
    seg = pool([segmentation_scores([square(0, 0)], [square(0, 0)]),
                segmentation_scores([square(0, 0)], [square(2, 0)])])
    assert seg.ajsc == pytest.approx((1 + 80 / 120) / 2)


def test_match_config_validation():
    with pytest.raises(ValueError):
        MatchConfig(dist_threshold_rho1=0)
    with pytest.raises(ValueError):
        MatchConfig(jsc_threshold=1.5)
    assert MatchConfig() == MatchConfig(10.0, 0.6)
