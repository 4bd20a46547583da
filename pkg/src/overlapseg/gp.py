"""Contour completion by Gaussian-process regression of radius on angle.

Evidence points are mean-centered and mapped to polar coordinates; a
zero-mean GP on the mean-subtracted radii is conditioned on the evidence
replicated at ``theta - 2 pi`` and ``theta + 2 pi`` and predicts the radius
on a uniform angular grid.
"""
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg
from sklearn.base import BaseEstimator

from ._validation import check_points
from .exceptions import DegenerateEvidence, SingularGram
from .geometry import ensure_ccw

FAMILIES = ("matern32", "matern52", "squared_exponential", "rational_quadratic")
_ALIASES = {
    "matern3/2": "matern32", "matern5/2": "matern52", "se": "squared_exponential",
    "rbf": "squared_exponential", "rq": "rational_quadratic",
}
JITTER = 1e-9
MAX_JITTER = 1e-6


@dataclass(frozen=True)
class KernelSpec:
    """Covariance family and hyperparameters.

    ``length_scale`` is in radians.  ``signal_variance`` scales the
    unit-variance kernel when building Gram matrices.
    """

    family: str = "matern52"
    length_scale: float = 0.5
    noise_variance: float = 0.0
    rq_alpha: float = 1.0
    signal_variance: float = 1.0

    def __post_init__(self):
        fam = _ALIASES.get(self.family.lower(), self.family.lower())
        if fam not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        object.__setattr__(self, "family", fam)
        if self.length_scale <= 0 or self.rq_alpha <= 0 or self.signal_variance <= 0:
            raise ValueError("kernel hyperparameters must be positive")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be non-negative")


def kernel_eval(spec, d):
    """Unit-variance stationary kernel value at distance ``d >= 0``."""
    d = np.abs(np.asarray(d, dtype=float))
    l = spec.length_scale
    if spec.family == "matern32":
        s = math.sqrt(3) * d / l
        return (1 + s) * np.exp(-s)
    if spec.family == "matern52":
        s = math.sqrt(5) * d / l
        return (1 + s + s * s / 3) * np.exp(-s)
    if spec.family == "squared_exponential":
        return np.exp(-d * d / (2 * l * l))
    a = spec.rq_alpha
    return (1 + d * d / (2 * a * l * l)) ** (-a)


def gram(spec, a, b=None):
    a = np.asarray(a, dtype=float)
    b = a if b is None else np.asarray(b, dtype=float)
    return spec.signal_variance * kernel_eval(spec, a[:, None] - b[None, :])


def _factor(K, noise):
    n = len(K)
    jitter = JITTER
    while True:
        try:
            return linalg.cho_factor(K + (noise + jitter) * np.eye(n), lower=True)
        except linalg.LinAlgError:
            if jitter >= MAX_JITTER:
                raise SingularGram("Gram matrix is not positive definite after jitter") from None
            jitter *= 10


def gp_posterior(train_x, train_y, test_x, spec):
    """Posterior mean and variance of a zero-mean GP fitted to the residuals
    ``train_y - mean(train_y)``; the mean is added back to the prediction."""
    x = np.asarray(train_x, dtype=float)
    y = np.asarray(train_y, dtype=float)
    xs = np.asarray(test_x, dtype=float)
    if len(x) < 2 or len(x) != len(y):
        raise ValueError("need at least two training pairs of matching length")
    mu = y.mean()
    cf = _factor(gram(spec, x), spec.noise_variance)
    Ks = gram(spec, xs, x)
    mean = mu + Ks @ linalg.cho_solve(cf, y - mu)
    v = linalg.solve_triangular(cf[0], Ks.T, lower=True)
    var = spec.signal_variance - (v * v).sum(axis=0)
    return mean, np.maximum(var, 0.0)


def gp_posterior_mean(train_theta, train_r, test_theta, spec):
    return gp_posterior(train_theta, train_r, test_theta, spec)[0]


def log_marginal_likelihood(x, y, spec):
    """Log evidence of the residuals ``y - mean(y)`` under ``spec``."""
    y = np.asarray(y, dtype=float) - np.mean(y)
    cf = _factor(gram(spec, x), spec.noise_variance)
    alpha = linalg.cho_solve(cf, y)
    return float(-0.5 * y @ alpha - np.log(np.diag(cf[0])).sum() - 0.5 * len(y) * math.log(2 * math.pi))


@dataclass
class PolarEvidence:
    center: np.ndarray
    theta: np.ndarray
    r: np.ndarray


def to_polar(points):
    """Center evidence at its mean and return angle-sorted (theta, r)."""
    p = check_points(points, min_points=3, name="evidence")
    center = p.mean(axis=0)
    q = p - center
    r = np.hypot(q[:, 0], q[:, 1])
    if np.any(r < 1e-6):
        raise DegenerateEvidence("an evidence point coincides with the evidence mean")
    theta = np.mod(np.arctan2(q[:, 1], q[:, 0]), 2 * np.pi)
    order = np.argsort(theta, kind="stable")
    return PolarEvidence(center, theta[order], r[order])


def periodic_extension(theta, r):
    theta = np.asarray(theta, dtype=float)
    r = np.asarray(r, dtype=float)
    two_pi = 2 * np.pi
    return np.concatenate([theta - two_pi, theta, theta + two_pi]), np.tile(r, 3)


def select_length_scale(theta, r, spec, grid):
    """Grid point maximizing the log marginal likelihood on the extended data."""
    x, y = periodic_extension(theta, r)
    best, best_ll = None, -math.inf
    for l in grid:
        try:
            ll = log_marginal_likelihood(x, y, replace(spec, length_scale=float(l)))
        except SingularGram:
            continue
        if ll > best_ll:
            best, best_ll = float(l), ll
    if best is None:
        raise SingularGram("no length scale on the grid gives a valid Gram matrix")
    return best


@dataclass
class EstimatedContour:
    points: np.ndarray
    kernel: KernelSpec
    center: np.ndarray
    source_group: int = 0


class GPContourEstimator(BaseEstimator):
    """Complete a partial object contour with GP regression in polar form.

    Parameters
    ----------
    kernel : str
        One of ``matern32``, ``matern52``, ``squared_exponential``,
        ``rational_quadratic``.
    length_scale : float or None
        Radians.  ``None`` picks the log-marginal-likelihood maximizer on a
        logarithmic grid of ``grid_size`` values in ``length_scale_bounds``.
    noise_variance : float or None
        ``None`` uses ``noise_ratio`` times the radius variance.
    n_samples : int
        Points on the estimated contour.
    max_points : int
        Evidence is thinned evenly to at most this many points.
    noise_floor : float
        Lower bound (pixels squared) on the derived noise variance.  Traced
        pixel contours carry rounding noise of about 1/12.
    radial_offset : float
        Added to every predicted radius.  Boundary pixel centers lie about
        half a pixel inside the region they bound.
    """

    def __init__(self, kernel="matern52", length_scale=None, noise_variance=None, rq_alpha=1.0,
                 n_samples=360, length_scale_bounds=(0.05, 2.0), grid_size=20,
                 noise_ratio=1e-3, max_points=80, noise_floor=0.0, radial_offset=0.0):
        self.kernel = kernel
        self.length_scale = length_scale
        self.noise_variance = noise_variance
        self.rq_alpha = rq_alpha
        self.n_samples = n_samples
        self.length_scale_bounds = length_scale_bounds
        self.grid_size = grid_size
        self.noise_ratio = noise_ratio
        self.max_points = max_points
        self.noise_floor = noise_floor
        self.radial_offset = radial_offset

    def fit(self, points, y=None):
        p = check_points(points, min_points=5, name="evidence")
        if self.max_points and len(p) > self.max_points:
            p = p[np.linspace(0, len(p) - 1, self.max_points).round().astype(int)]
        polar = to_polar(p)
        var = float(np.var(polar.r))
        signal = var if var > 1e-12 else 1.0
        if self.noise_variance is None:
            noise = max(self.noise_ratio * var, self.noise_floor)
        else:
            noise = self.noise_variance
        spec = KernelSpec(self.kernel, 1.0, noise, self.rq_alpha, signal)
        if self.length_scale is None:
            grid = np.geomspace(*self.length_scale_bounds, self.grid_size)
            spec = replace(spec, length_scale=select_length_scale(polar.theta, polar.r, spec, grid))
        else:
            spec = replace(spec, length_scale=float(self.length_scale))
        self.center_ = polar.center
        self.theta_, self.r_ = polar.theta, polar.r
        self.kernel_ = spec
        self._x, self._y = periodic_extension(polar.theta, polar.r)
        return self

    def predict(self, theta, return_std=False):
        """Radius at each angle (radians)."""
        mean, var = gp_posterior(self._x, self._y, theta, self.kernel_)
        return (mean, np.sqrt(var)) if return_std else mean

    def contour(self, n_samples=None):
        n = self.n_samples if n_samples is None else n_samples
        if n < 16:
            raise ValueError("n_samples must be at least 16")
        theta = np.linspace(0, 2 * np.pi, n, endpoint=False)
        r = np.maximum(self.predict(theta) + self.radial_offset, 1e-3)
        pts = self.center_ + np.column_stack([r * np.cos(theta), r * np.sin(theta)])
        return ensure_ccw(pts)


def estimate_contour_gp_pf(evidence, spec=None, n_samples=360, **params):
    """GP-PF contour estimate.  A given ``spec`` fixes the hyperparameters."""
    if spec is not None:
        params.update(kernel=spec.family, length_scale=spec.length_scale,
                      noise_variance=spec.noise_variance, rq_alpha=spec.rq_alpha)
    est = GPContourEstimator(n_samples=n_samples, **params).fit(evidence)
    return EstimatedContour(est.contour(), est.kernel_, est.center_)
