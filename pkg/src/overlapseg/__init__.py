"""Segmentation of partially overlapping convex objects in silhouette images.

The pipeline binarizes the image, traces each connected component, splits
its boundary at concave points, groups the resulting segments into objects
by branch and bound, and completes every object's contour with Gaussian
process regression in polar coordinates.
"""
from .concave import (ConcavePointDetector, ConcavePointSet, ContourSegment, detect_concave_points,
                      split_contour)
from .ellipse import Ellipse, fit_ellipse_lesf, point_ellipse_distance
from .evaluation import (DetectionScores, MatchConfig, jsc, match_points, point_scores, pool,
                         segmentation_scores)
from .exceptions import OverlapSegError
from .gp import GPContourEstimator, KernelSpec, estimate_contour_gp_pf
from .grouping import (GroupingConfig, GroupingProblem, SegmentGrouper, solve_branch_and_bound,
                       solve_exhaustive)
from .pipeline import OverlappingObjectSegmenter, PipelineConfig, SegmentationResult
from .preprocess import extract_components
from .synth import SynthConfig, generate_image, generate_subset

__version__ = "0.1.0"

__all__ = [
    "ConcavePointDetector", "ConcavePointSet", "ContourSegment", "DetectionScores", "Ellipse",
    "GPContourEstimator", "GroupingConfig", "GroupingProblem", "KernelSpec", "MatchConfig",
    "OverlapSegError", "OverlappingObjectSegmenter", "PipelineConfig", "SegmentGrouper",
    "SegmentationResult", "SynthConfig", "detect_concave_points", "estimate_contour_gp_pf",
    "extract_components", "fit_ellipse_lesf", "generate_image", "generate_subset", "jsc",
    "match_points", "point_ellipse_distance", "point_scores", "pool", "segmentation_scores",
    "solve_branch_and_bound", "solve_exhaustive", "split_contour",
]
