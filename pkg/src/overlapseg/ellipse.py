"""Ellipse type, direct least-squares ellipse fitting and point distances."""
from dataclasses import dataclass

import numpy as np

from ._validation import check_points
from .exceptions import FitFailure


@dataclass(frozen=True)
class Ellipse:
    """Ellipse in pixel coordinates; ``rotation`` is the major-axis angle in [0, pi)."""

    cx: float
    cy: float
    semi_major: float
    semi_minor: float
    rotation: float = 0.0

    def __post_init__(self):
        for name in ("cx", "cy", "semi_major", "semi_minor"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.semi_major >= self.semi_minor > 0):
            raise ValueError("need semi_major >= semi_minor > 0")
        object.__setattr__(self, "rotation", float(self.rotation) % np.pi)

    @property
    def center(self):
        return np.array([self.cx, self.cy])

    @property
    def area(self):
        return np.pi * self.semi_major * self.semi_minor

    def to_local(self, points):
        p = np.asarray(points, dtype=float) - self.center
        c, s = np.cos(self.rotation), np.sin(self.rotation)
        return np.column_stack([p[:, 0] * c + p[:, 1] * s, -p[:, 0] * s + p[:, 1] * c])

    def sample(self, n=360, t0=0.0, t1=2 * np.pi, endpoint=False):
        """Points at evenly spaced parametric angles in ``[t0, t1)``."""
        t = np.linspace(t0, t1, n, endpoint=endpoint)
        u = self.semi_major * np.cos(t)
        v = self.semi_minor * np.sin(t)
        c, s = np.cos(self.rotation), np.sin(self.rotation)
        return np.column_stack([self.cx + u * c - v * s, self.cy + u * s + v * c])

    def contains(self, x, y):
        local = self.to_local(np.column_stack([np.ravel(x), np.ravel(y)]))
        inside = (local[:, 0] / self.semi_major) ** 2 + (local[:, 1] / self.semi_minor) ** 2 <= 1.0
        return inside.reshape(np.shape(x))

    def rasterize(self, width, height):
        """Mask of pixel centers inside the ellipse (boundary included)."""
        mask = np.zeros((height, width), dtype=bool)
        r = self.semi_major
        x0, x1 = max(int(np.floor(self.cx - r)), 0), min(int(np.ceil(self.cx + r)), width - 1)
        y0, y1 = max(int(np.floor(self.cy - r)), 0), min(int(np.ceil(self.cy + r)), height - 1)
        if x0 > x1 or y0 > y1:
            return mask
        ys, xs = np.mgrid[y0:y1 + 1, x0:x1 + 1]
        mask[y0:y1 + 1, x0:x1 + 1] = self.contains(xs, ys)
        return mask


def conic_to_ellipse(coef):
    """Geometric parameters of the conic ``A x^2 + B xy + C y^2 + D x + E y + F = 0``."""
    A, B, C, D, E, F = map(float, coef)
    if B * B - 4 * A * C >= 0:
        raise FitFailure("conic is not an ellipse")
    M = np.array([[2 * A, B], [B, 2 * C]])
    cx, cy = np.linalg.solve(M, [-D, -E])
    f0 = F + 0.5 * (D * cx + E * cy)
    Q = np.array([[A, B / 2], [B / 2, C]])
    if f0 > 0:
        Q, f0 = -Q, -f0
    evals, evecs = np.linalg.eigh(Q)
    if f0 >= 0 or np.any(evals <= 0):
        raise FitFailure("conic describes an imaginary ellipse")
    axes = np.sqrt(-f0 / evals)
    # eigh sorts ascending, so the first eigenvalue belongs to the major axis
    vx, vy = evecs[:, 0]
    return Ellipse(cx, cy, axes[0], min(axes[1], axes[0]), np.arctan2(vy, vx))


def fit_ellipse_lesf(points):
    """Direct least-squares ellipse fit (Fitzgibbon; Halir-Flusser formulation).

    Points are centered and isotropically scaled before fitting for
    numerical stability.

    Raises
    ------
    FitFailure
        For fewer than five points, collinear input, or when the constrained
        eigenproblem has no elliptical solution.
    """
    p = check_points(points)
    if len(p) < 5:
        raise FitFailure(f"ellipse fit needs at least 5 points, got {len(p)}")
    mean = p.mean(axis=0)
    q = p - mean
    scale = np.sqrt((q ** 2).sum(axis=1).mean())
    if scale == 0:
        raise FitFailure("all points coincide")
    q = q / scale
    x, y = q[:, 0], q[:, 1]
    D1 = np.column_stack([x * x, x * y, y * y])
    D2 = np.column_stack([x, y, np.ones_like(x)])
    S1, S2, S3 = D1.T @ D1, D1.T @ D2, D2.T @ D2
    if np.linalg.cond(S3) > 1e12:
        raise FitFailure("points are collinear")
    T = -np.linalg.solve(S3, S2.T)
    M = S1 + S2 @ T
    M = np.array([M[2] / 2, -M[1], M[0] / 2])
    evals, evecs = np.linalg.eig(M)
    evecs = np.real(evecs)
    cond = 4 * evecs[0] * evecs[2] - evecs[1] ** 2
    ok = np.flatnonzero(cond > 0)
    if ok.size == 0:
        raise FitFailure("no elliptical solution")
    a1 = evecs[:, ok[np.argmin(np.abs(np.real(evals[ok])))]]
    a2 = T @ a1
    ell = conic_to_ellipse(np.concatenate([a1, a2]))
    return Ellipse(
        ell.cx * scale + mean[0],
        ell.cy * scale + mean[1],
        ell.semi_major * scale,
        ell.semi_minor * scale,
        ell.rotation,
    )


def _first_quadrant_distance(e0, e1, y0, y1, iterations=80):
    """Distance from points (y0, y1) >= 0 to the axis-aligned ellipse e0 >= e1.

    Vectorized form of Eberly's bisection on the Lagrange-multiplier root.
    """
    y0 = np.asarray(y0, dtype=float)
    y1 = np.asarray(y1, dtype=float)
    dist = np.empty_like(y0)

    general = (y1 > 0) & (y0 > 0)
    if general.any():
        z0, z1 = y0[general] / e0, y1[general] / e1
        g = z0 ** 2 + z1 ** 2 - 1.0
        r0 = (e0 / e1) ** 2
        n0 = r0 * z0
        lo = z1 - 1.0
        hi = np.where(g < 0, 0.0, np.hypot(n0, z1) - 1.0)
        for _ in range(iterations):
            s = 0.5 * (lo + hi)
            val = (n0 / (s + r0)) ** 2 + (z1 / (s + 1.0)) ** 2 - 1.0
            lo = np.where(val > 0, s, lo)
            hi = np.where(val > 0, hi, s)
        s = 0.5 * (lo + hi)
        x0 = r0 * y0[general] / (s + r0)
        x1 = y1[general] / (s + 1.0)
        dist[general] = np.hypot(x0 - y0[general], x1 - y1[general])

    on_minor = (y1 > 0) & (y0 <= 0)
    dist[on_minor] = np.abs(y1[on_minor] - e1)

    on_major = y1 <= 0
    if on_major.any():
        yy = y0[on_major]
        denom = e0 * e0 - e1 * e1
        near = yy * e0 < denom
        x0 = np.where(near, e0 * e0 * yy / np.where(denom > 0, denom, 1.0), e0)
        x1 = np.where(near, e1 * np.sqrt(np.clip(1 - (x0 / e0) ** 2, 0, None)), 0.0)
        dist[on_major] = np.hypot(x0 - yy, x1)
    return dist


def point_ellipse_distance(points, ellipse):
    """Euclidean distance from each point to the nearest point of ``ellipse``."""
    p = check_points(points)
    local = ellipse.to_local(p)
    return _first_quadrant_distance(
        ellipse.semi_major, ellipse.semi_minor, np.abs(local[:, 0]), np.abs(local[:, 1])
    )
