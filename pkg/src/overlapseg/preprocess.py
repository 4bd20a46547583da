"""Silhouette extraction: Otsu binarization, opening, components, contours."""
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ._validation import check_image, check_mask
from .exceptions import NoSeparation
from .geometry import signed_area

FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)

# Moore neighbourhood, clockwise on screen (rows grow downward): N, NE, E, SE, S, SW, W, NW.
_MOORE = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))


@dataclass
class Component:
    """One 4-connected foreground region.

    ``mask`` is cropped to the bounding box whose top-left pixel sits at
    ``offset`` = (x, y); ``contour`` is in full-image coordinates.
    """

    id: int
    mask: np.ndarray
    offset: tuple
    contour: np.ndarray

    @property
    def area(self):
        return int(self.mask.sum())

    def full_mask(self, shape):
        out = np.zeros(shape, dtype=bool)
        x0, y0 = self.offset
        h, w = self.mask.shape
        out[y0:y0 + h, x0:x0 + w] = self.mask
        return out


def otsu_threshold(image):
    """Level maximizing the between-class variance; class 0 is ``<= level``.

    Ties resolve to the lowest level.
    """
    img = check_image(image)
    hist = np.bincount(img.ravel(), minlength=256).astype(float)
    if np.count_nonzero(hist) < 2:
        raise NoSeparation("histogram has a single occupied bin")
    levels = np.arange(256, dtype=float)
    w0 = np.cumsum(hist)
    w1 = w0[-1] - w0
    m0 = np.cumsum(hist * levels)
    total = m0[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = m0 / w0
        mu1 = (total - m0) / w1
        between = w0 * w1 * (mu0 - mu1) ** 2
    between = np.where((w0 > 0) & (w1 > 0), between, -1.0)
    best = between.max()
    # exact float ties are rare; compare with a relative tolerance
    return int(np.flatnonzero(between >= best * (1 - 1e-12))[0])


def binarize(image, level):
    """Foreground (dark objects) is every pixel with intensity ``<= level``."""
    return check_image(image) <= level


def disc(radius):
    """Digital disc ``x^2 + y^2 <= (radius + 1/2)^2``."""
    r = int(radius)
    yy, xx = np.mgrid[-r:r + 1, -r:r + 1]
    return xx ** 2 + yy ** 2 <= (r + 0.5) ** 2


def morphological_open(mask, radius=2):
    mask = check_mask(mask)
    if radius < 0:
        raise ValueError("radius must be non-negative")
    if radius == 0:
        return mask.copy()
    return ndimage.binary_opening(mask, structure=disc(radius))


def trace_boundary(mask):
    """Moore-neighbour trace of the outer boundary of a single region.

    Returns an ``(n, 2)`` array of (x, y) pixel centers in the mask's frame,
    ordered counter-clockwise (positive shoelace area).
    """
    m = np.pad(check_mask(mask), 1)
    rows, cols = np.nonzero(m)
    if rows.size == 0:
        return np.empty((0, 2))
    # raster order: first hit is top-most, left-most; its west neighbour is background
    start = (int(rows[0]), int(cols[0]))
    if rows.size == 1:
        return np.array([[start[1] - 1, start[0] - 1]], dtype=float)

    path = [start]
    cur = start
    back = 6  # came from the west
    first_move = None
    max_steps = 4 * m.size
    for _ in range(max_steps):
        for k in range(1, 9):
            d = (back + k) % 8
            r, c = cur[0] + _MOORE[d][0], cur[1] + _MOORE[d][1]
            if m[r, c]:
                break
        else:
            break
        nxt = (r, c)
        # backtrack direction: the neighbour visited just before nxt, seen from nxt
        prev_d = (d + 7) % 8
        pr, pc = cur[0] + _MOORE[prev_d][0], cur[1] + _MOORE[prev_d][1]
        back = _MOORE.index((pr - nxt[0], pc - nxt[1])) if (pr - nxt[0], pc - nxt[1]) in _MOORE else 6
        if first_move is None:
            first_move = nxt
        elif cur == start and nxt == first_move:
            break
        path.append(nxt)
        cur = nxt
    if len(path) > 1 and path[-1] == path[0]:
        path.pop()
    pts = np.array([(c - 1, r - 1) for r, c in path], dtype=float)
    if len(pts) >= 3 and signed_area(pts) < 0:
        pts = pts[::-1].copy()
    return pts


def connected_components(mask, min_area=100):
    """4-connected components with traced outer contours, in label scan order."""
    mask = check_mask(mask)
    labels, n = ndimage.label(mask, structure=FOUR_CONNECTED)
    out = []
    for idx, sl in enumerate(ndimage.find_objects(labels), start=1):
        if sl is None:
            continue
        local = labels[sl] == idx
        if local.sum() < min_area:
            continue
        contour = trace_boundary(local)
        if len(contour) < 3:
            continue
        offset = (sl[1].start, sl[0].start)
        out.append(Component(len(out), local, offset, contour + np.array(offset, dtype=float)))
    return out


def extract_components(image, opening_radius=2, min_area=100):
    """Otsu binarization, opening and component extraction in one call."""
    img = check_image(image)
    try:
        level = otsu_threshold(img)
    except NoSeparation:
        return []
    mask = morphological_open(binarize(img, level), opening_radius)
    return connected_components(mask, min_area=min_area)
