"""Synthetic benchmark of overlapping ellipses with ground truth.

Randomness comes from numpy's ``PCG64`` bit generator; image ``i`` of a
subset is generated from ``Generator(PCG64(seed + i))`` so images can be
produced independently and in any order.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .ellipse import Ellipse, point_ellipse_distance
from .exceptions import PlacementExhausted

RNG_ALGORITHM = "numpy.random.PCG64"
SUPPORTED_OVERLAPS = (0.40, 0.50, 0.60)


@dataclass(frozen=True)
class SynthConfig:
    image_width: int = 400
    image_height: int = 300
    objects_per_image: int = 40
    images_per_subset: int = 50
    axis_min: float = 30.0
    axis_max: float = 45.0
    max_overlap: float = 0.40
    seed: int = 0
    retries_per_object: int = 5000
    restarts: int = 20

    def __post_init__(self):
        if not self.axis_min <= self.axis_max:
            raise ValueError("axis_min must not exceed axis_max")
        if not 0 < self.max_overlap < 1:
            raise ValueError("max_overlap must lie in (0, 1)")
        if self.image_width <= self.axis_max or self.image_height <= self.axis_max:
            raise ValueError("canvas is smaller than the largest object")


@dataclass
class GroundTruthObject:
    id: int
    ellipse: Ellipse
    mask: np.ndarray = field(repr=False)

    def contour(self, n=360):
        return self.ellipse.sample(n)


@dataclass
class GroundTruth:
    width: int
    height: int
    objects: list
    concave_points: np.ndarray

    @property
    def union(self):
        out = np.zeros((self.height, self.width), dtype=bool)
        for o in self.objects:
            out |= o.mask
        return out


def overlap_ratio(a, b, width, height):
    """Shared raster area over the smaller raster area."""
    ma, mb = a.rasterize(width, height), b.rasterize(width, height)
    return _mask_overlap(ma, mb)


def _mask_overlap(ma, mb):
    small = min(np.count_nonzero(ma), np.count_nonzero(mb))
    if small == 0:
        return 0.0
    return np.count_nonzero(ma & mb) / small


def render(objects, width, height):
    """Dark objects (0) on a white (255) background."""
    img = np.full((height, width), 255, dtype=np.uint8)
    for o in objects:
        img[o.mask] = 0
    return img


def _random_ellipse(rng, cfg):
    axes = np.sort(rng.uniform(cfg.axis_min / 2, cfg.axis_max / 2, size=2))[::-1]
    rot = rng.uniform(0.0, np.pi)
    a = axes[0]
    cx = rng.uniform(a, cfg.image_width - 1 - a)
    cy = rng.uniform(a, cfg.image_height - 1 - a)
    return Ellipse(cx, cy, axes[0], axes[1], rot)


def _place(rng, cfg):
    placed = []
    W, H = cfg.image_width, cfg.image_height
    for _ in range(cfg.objects_per_image):
        for _ in range(cfg.retries_per_object):
            e = _random_ellipse(rng, cfg)
            m = e.rasterize(W, H)
            if all(_mask_overlap(m, o.mask) <= cfg.max_overlap for o in placed):
                placed.append(GroundTruthObject(len(placed), e, m))
                break
        else:
            return None
    return placed


def _segment_intersections(p, q):
    """Intersection points between closed polylines ``p`` and ``q``."""
    a0, a1 = p, np.roll(p, -1, axis=0)
    b0, b1 = q, np.roll(q, -1, axis=0)
    # prefilter on bounding boxes
    lo = np.maximum(np.minimum(a0, a1).min(0), np.minimum(b0, b1).min(0))
    hi = np.minimum(np.maximum(a0, a1).max(0), np.maximum(b0, b1).max(0))
    if np.any(lo > hi):
        return np.empty((0, 2))
    ka = np.all((np.maximum(a0, a1) >= lo) & (np.minimum(a0, a1) <= hi), axis=1)
    kb = np.all((np.maximum(b0, b1) >= lo) & (np.minimum(b0, b1) <= hi), axis=1)
    a0, a1, b0, b1 = a0[ka], a1[ka], b0[kb], b1[kb]
    r = (a1 - a0)[:, None, :]
    s = (b1 - b0)[None, :, :]
    qp = b0[None, :, :] - a0[:, None, :]
    denom = r[..., 0] * s[..., 1] - r[..., 1] * s[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (qp[..., 0] * s[..., 1] - qp[..., 1] * s[..., 0]) / denom
        u = (qp[..., 0] * r[..., 1] - qp[..., 1] * r[..., 0]) / denom
    hit = (denom != 0) & (t >= 0) & (t < 1) & (u >= 0) & (u < 1)
    i, j = np.nonzero(hit)
    return a0[i] + t[i, j][:, None] * (a1[i] - a0[i])


def ground_truth_concave_points(objects, width, height, n_samples=360, tol=0.5):
    """Boundary intersections of overlapping objects that lie on the outer
    boundary of their union."""
    if not objects:
        return np.empty((0, 2))
    union = np.zeros((height, width), dtype=bool)
    for o in objects:
        union |= o.mask
    filled = ndimage.binary_fill_holes(union)
    outside = np.pad(~filled, 2, constant_values=True)
    polys = [o.ellipse.sample(n_samples) for o in objects]
    found = []
    for i in range(len(objects)):
        for j in range(i + 1, len(objects)):
            ei, ej = objects[i].ellipse, objects[j].ellipse
            if np.hypot(ei.cx - ej.cx, ei.cy - ej.cy) > ei.semi_major + ej.semi_major:
                continue
            for p in _segment_intersections(polys[i], polys[j]):
                if not (0 <= p[0] <= width - 1 and 0 <= p[1] <= height - 1):
                    continue
                buried = False
                for k, o in enumerate(objects):
                    if k in (i, j):
                        continue
                    e = o.ellipse
                    if np.hypot(p[0] - e.cx, p[1] - e.cy) > e.semi_major:
                        continue
                    if e.contains(p[0], p[1]) and point_ellipse_distance(p[None], e)[0] > tol:
                        buried = True
                        break
                if buried:
                    continue
                # must touch the background that surrounds the union (not a hole)
                c, r = int(round(p[0])) + 2, int(round(p[1])) + 2
                if outside[r - 2:r + 3, c - 2:c + 3].any():
                    found.append(p)
    return np.array(found) if found else np.empty((0, 2))


def generate_image(cfg, index):
    """One image and its ground truth, deterministic in ``(cfg.seed, index)``."""
    rng = np.random.Generator(np.random.PCG64(cfg.seed + index))
    for _ in range(cfg.restarts):
        objects = _place(rng, cfg)
        if objects is not None:
            break
    else:
        raise PlacementExhausted(
            f"could not place {cfg.objects_per_image} objects with overlap <= {cfg.max_overlap}")
    W, H = cfg.image_width, cfg.image_height
    gt = GroundTruth(W, H, objects, ground_truth_concave_points(objects, W, H))
    return render(objects, W, H), gt


def generate_subset(cfg):
    return [generate_image(cfg, i) for i in range(cfg.images_per_subset)]
