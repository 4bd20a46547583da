"""End-to-end segmentation: silhouette, concave points, grouping, completion."""
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_image
from .concave import ConcavePointDetector, split_contour
from .exceptions import OverlapSegError
from .gp import GPContourEstimator
from .grouping import CostBreakdown, SegmentGrouper, consecutive_adjacency, default_radial_range
from .geometry import max_diameter
from .preprocess import extract_components


@dataclass
class PipelineConfig:
    opening_radius: int = 2
    min_component_area: int = 100
    alpha: float = 0.1
    beta: float = 0.9
    group_penalty: float = 0.05
    radial_range: tuple = None
    radial_range_factors: tuple = (0.3, 1.2)
    node_budget: int = 20000
    min_segment_points: int = 5
    kernel: str = "matern52"
    length_scale: float = None
    noise_variance: float = None
    rq_alpha: float = 1.0
    noise_floor: float = 1.0 / 12.0
    boundary_offset: float = 0.5
    n_samples: int = 360
    rho1: float = 10.0
    jsc_threshold: float = 0.6

    @classmethod
    def keys(cls):
        return [f.name for f in fields(cls)]


@dataclass
class SegmentedObject:
    id: int
    component: int
    contour: np.ndarray
    segments: list
    cost: CostBreakdown
    kernel: object


@dataclass
class SegmentationResult:
    objects: list = field(default_factory=list)
    concave_points: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    n_components: int = 0


class OverlappingObjectSegmenter(BaseEstimator):
    """Segment partially overlapping convex objects in a grayscale image.

    The estimator has no trainable state; ``fit`` only validates the
    parameters.  ``predict`` takes one ``(H, W)`` uint8 image with dark
    objects on a light background and returns a :class:`SegmentationResult`.
    Parameters are the fields of :class:`PipelineConfig`.
    """

    def __init__(self, opening_radius=2, min_component_area=100, alpha=0.1, beta=0.9,
                 group_penalty=0.05, radial_range=None, radial_range_factors=(0.3, 1.2),
                 node_budget=20000, min_segment_points=5, kernel="matern52", length_scale=None,
                 noise_variance=None, rq_alpha=1.0, noise_floor=1.0 / 12.0, boundary_offset=0.5,
                 n_samples=360, rho1=10.0, jsc_threshold=0.6):
        self.opening_radius = opening_radius
        self.min_component_area = min_component_area
        self.alpha = alpha
        self.beta = beta
        self.group_penalty = group_penalty
        self.radial_range = radial_range
        self.radial_range_factors = radial_range_factors
        self.node_budget = node_budget
        self.min_segment_points = min_segment_points
        self.kernel = kernel
        self.length_scale = length_scale
        self.noise_variance = noise_variance
        self.rq_alpha = rq_alpha
        self.noise_floor = noise_floor
        self.boundary_offset = boundary_offset
        self.n_samples = n_samples
        self.rho1 = rho1
        self.jsc_threshold = jsc_threshold

    @classmethod
    def from_config(cls, config):
        return cls(**asdict(config))

    def fit(self, X=None, y=None):
        self._detector = ConcavePointDetector()
        self._grouper = SegmentGrouper(
            alpha=self.alpha, beta=self.beta, group_penalty=self.group_penalty,
            radial_range=self.radial_range, radial_range_factors=self.radial_range_factors,
            node_budget=self.node_budget,
        )
        self._estimator = GPContourEstimator(
            kernel=self.kernel, length_scale=self.length_scale,
            noise_variance=self.noise_variance, rq_alpha=self.rq_alpha, n_samples=self.n_samples,
            noise_floor=self.noise_floor, radial_offset=self.boundary_offset,
        )
        self._grouper.config()
        self._estimator.get_params()
        return self

    def _group(self, comp, segments):
        keep = [i for i, s in enumerate(segments) if len(s) >= self.min_segment_points]
        if not keep:
            return [list(range(len(segments)))], [None]
        if len(keep) == 1:
            return [keep], [None]
        adj = consecutive_adjacency(len(segments))[np.ix_(keep, keep)]
        offset = np.array(comp.offset, dtype=float)
        local = [segments[i].points - offset for i in keep]
        radii = self.radial_range
        if radii is None:
            # roughly two concave points per overlap; size radii by one object
            n_objects = max(1.0, (len(segments) if len(segments) > 1 else 0) / 2)
            radii = default_radial_range(comp.mask, self.radial_range_factors, n_objects)
        self._grouper.fit(local, comp.mask, adjacency=adj, diameter=max_diameter(comp.contour),
                          radial_range=radii)
        groups = [[keep[i] for i in g] for g in self._grouper.groups_]
        return groups, list(self._grouper.breakdowns_)

    def predict_one(self, image):
        img = check_image(image)
        if not hasattr(self, "_detector"):
            self.fit()
        comps = extract_components(img, self.opening_radius, self.min_component_area)
        result = SegmentationResult(n_components=len(comps))
        concave = []
        for comp in comps:
            det = self._detector.detect(comp.contour)
            concave.append(det.points)
            segments = split_contour(comp.contour, det, comp.id)
            groups, costs = self._group(comp, segments)
            for members, cost in zip(groups, costs):
                evidence = np.vstack([segments[i].points for i in members])
                try:
                    contour = self._estimator.fit(evidence).contour()
                except (OverlapSegError, ValueError):
                    continue
                result.objects.append(SegmentedObject(
                    len(result.objects), comp.id, contour, members, cost, self._estimator.kernel_))
        if concave:
            result.concave_points = np.vstack(concave)
        return result

    def predict(self, X):
        """Segment one image, or each image of a sequence of images."""
        if isinstance(X, np.ndarray) and X.ndim == 2:
            return self.predict_one(X)
        return [self.predict_one(img) for img in X]
