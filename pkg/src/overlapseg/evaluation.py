"""Detection and segmentation scores: TPR, PPV, ACC, AD, JSC and AJSC."""
from dataclasses import asdict, dataclass, field

import numpy as np

from ._validation import check_mask, check_points, check_same_shape


@dataclass(frozen=True)
class MatchConfig:
    dist_threshold_rho1: float = 10.0
    jsc_threshold: float = 0.6

    def __post_init__(self):
        if self.dist_threshold_rho1 <= 0:
            raise ValueError("dist_threshold_rho1 must be positive")
        if not 0 < self.jsc_threshold <= 1:
            raise ValueError("jsc_threshold must lie in (0, 1]")


@dataclass
class DetectionScores:
    """Counts plus AD (``mode="points"``) or AJSC (``mode="objects"``)."""

    mode: str = "points"
    tp: int = 0
    fp: int = 0
    fn: int = 0
    ad: float = 0.0
    ajsc: float = 0.0
    # per-match distance (points) or JSC (objects), kept for pooling
    matched_values: list = field(default_factory=list, repr=False)

    @property
    def tpr(self):
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 1.0

    @property
    def ppv(self):
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 1.0

    @property
    def acc(self):
        denom = self.tp + self.fp + self.fn
        return self.tp / denom if denom else 1.0

    def as_dict(self):
        d = asdict(self)
        d.pop("matched_values")
        d.update(tpr=self.tpr, ppv=self.ppv, acc=self.acc)
        return d


def match_points(detected, truth, rho1=10.0):
    """Greedy one-to-one matching in increasing distance order.

    Returns ``(pairs, unmatched_detected, unmatched_truth)`` where ``pairs``
    holds ``(i_detected, j_truth, distance)`` for every match within ``rho1``.
    """
    if rho1 <= 0:
        raise ValueError("rho1 must be positive")
    det = check_points(detected, min_points=0, name="detected")
    tru = check_points(truth, min_points=0, name="truth")
    pairs = []
    if len(det) and len(tru):
        dist = np.hypot(*(det[:, None, :] - tru[None, :, :]).transpose(2, 0, 1))
        order = np.argsort(dist, axis=None, kind="stable")
        used_d, used_t = set(), set()
        for flat in order:
            i, j = divmod(int(flat), len(tru))
            d = float(dist[i, j])
            if d > rho1:
                break
            if i in used_d or j in used_t:
                continue
            used_d.add(i)
            used_t.add(j)
            pairs.append((i, j, d))
    md = {p[0] for p in pairs}
    mt = {p[1] for p in pairs}
    return (pairs, [i for i in range(len(det)) if i not in md],
            [j for j in range(len(tru)) if j not in mt])


def point_scores(detected, truth, rho1=10.0):
    pairs, fp, fn = match_points(detected, truth, rho1)
    d = [p[2] for p in pairs]
    return DetectionScores("points", len(pairs), len(fp), len(fn),
                           ad=float(np.mean(d)) if d else 0.0, matched_values=d)


def jsc(a, b):
    """Jaccard similarity of two equally sized masks; two empty masks score 1."""
    a, b = check_mask(a), check_mask(b)
    check_same_shape(a, b)
    union = np.count_nonzero(a | b)
    if union == 0:
        return 1.0
    return np.count_nonzero(a & b) / union


def _bbox(mask):
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size == 0:
        return None
    return rows[0], rows[-1] + 1, cols[0], cols[-1] + 1


def pairwise_jsc(predicted, truth):
    """Matrix of JSC values, skipping pairs with disjoint bounding boxes."""
    pred = [check_mask(m) for m in predicted]
    tru = [check_mask(m) for m in truth]
    for m in pred + tru:
        check_same_shape(m, (pred + tru)[0])
    out = np.zeros((len(pred), len(tru)))
    pb = [_bbox(m) for m in pred]
    tb = [_bbox(m) for m in tru]
    pa = [int(m.sum()) for m in pred]
    ta = [int(m.sum()) for m in tru]
    for i, bi in enumerate(pb):
        for j, bj in enumerate(tb):
            if bi is None or bj is None:
                continue
            r0, r1 = max(bi[0], bj[0]), min(bi[1], bj[1])
            c0, c1 = max(bi[2], bj[2]), min(bi[3], bj[3])
            if r0 >= r1 or c0 >= c1:
                continue
            inter = np.count_nonzero(pred[i][r0:r1, c0:c1] & tru[j][r0:r1, c0:c1])
            out[i, j] = inter / (pa[i] + ta[j] - inter)
    return out


def match_objects(scores, threshold):
    """Greedy one-to-one matching by descending JSC; pairs below ``threshold`` are discarded."""
    pairs = []
    if scores.size:
        order = np.argsort(-scores, axis=None, kind="stable")
        used_p, used_t = set(), set()
        for flat in order:
            i, j = divmod(int(flat), scores.shape[1])
            s = float(scores[i, j])
            if s < threshold or s <= 0:
                break
            if i in used_p or j in used_t:
                continue
            used_p.add(i)
            used_t.add(j)
            pairs.append((i, j, s))
    return pairs


def segmentation_scores(predicted, truth, cfg=MatchConfig()):
    """Object-level TP/FP/FN at ``cfg.jsc_threshold`` with AJSC over true positives."""
    scores = pairwise_jsc(predicted, truth)
    pairs = match_objects(scores, cfg.jsc_threshold)
    values = [p[2] for p in pairs]
    return DetectionScores(
        "objects", tp=len(pairs), fp=len(predicted) - len(pairs), fn=len(truth) - len(pairs),
        ajsc=float(np.mean(values)) if values else 0.0, matched_values=values,
    )


def pool(scores):
    """Sum counts over images; AD and AJSC are averaged over all matches."""
    scores = list(scores)
    total = DetectionScores(scores[0].mode if scores else "points")
    for s in scores:
        total.tp += s.tp
        total.fp += s.fp
        total.fn += s.fn
        total.matched_values.extend(s.matched_values)
    if total.matched_values:
        mean = float(np.mean(total.matched_values))
        if total.mode == "points":
            total.ad = mean
        else:
            total.ajsc = mean
    return total
