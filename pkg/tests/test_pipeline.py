import numpy as np
import pytest
from sklearn.base import clone

from conftest import disc_image
from overlapseg.ellipse import Ellipse
from overlapseg.evaluation import jsc
from overlapseg.geometry import rasterize_polygon
from overlapseg.pipeline import OverlappingObjectSegmenter, PipelineConfig
from overlapseg.synth import SynthConfig, generate_image


def test_blank_image_has_no_objects():
    res = OverlappingObjectSegmenter().predict(np.full((60, 80), 255, np.uint8))
    assert res.objects == [] and res.n_components == 0 and res.concave_points.shape == (0, 2)


def test_two_overlapping_discs():
    img = disc_image([(70, 80), (110, 80)], 30)
    res = OverlappingObjectSegmenter().predict(img)
    assert len(res.objects) == 2
    truths = [Ellipse(c, 80, 30, 30).rasterize(200, 160) for c in (70, 110)]
    for t in truths:
        best = max(jsc(rasterize_polygon(o.contour, 200, 160), t) for o in res.objects)
        assert best >= 0.9
    assert len(res.concave_points) == 2


def test_isolated_ellipse_single_object():
    img = np.full((120, 120), 255, np.uint8)
    e = Ellipse(60, 60, 30, 18, 0.7)
    img[e.rasterize(120, 120)] = 0
    (obj,) = OverlappingObjectSegmenter().predict(img).objects
    assert jsc(rasterize_polygon(obj.contour, 120, 120), e.rasterize(120, 120)) >= 0.95
    assert obj.cost is None and obj.kernel.family == "matern52"


def test_synthetic_object_count_within_ten_percent():
    img, gt = generate_image(SynthConfig(seed=31), 0)
    res = OverlappingObjectSegmenter().predict(img)
    assert abs(len(res.objects) - len(gt.objects)) <= 0.1 * len(gt.objects)


def test_contours_closed_ccw_and_in_bounds():
    img, _ = generate_image(SynthConfig(objects_per_image=15, seed=8), 0)
    for o in OverlappingObjectSegmenter(n_samples=90).predict(img).objects:
        assert o.contour.shape == (90, 2)
        x, y = o.contour.T
        assert np.all((x > -2) & (x < 402) & (y > -2) & (y < 302))


def test_estimator_interface():
    seg = OverlappingObjectSegmenter(alpha=0.3, kernel="matern32")
    assert clone(seg).get_params() == seg.get_params()
    assert seg.get_params()["kernel"] == "matern32"
    cfg = PipelineConfig(beta=0.5)
    assert OverlappingObjectSegmenter.from_config(cfg).beta == 0.5
    assert set(PipelineConfig.keys()) == set(OverlappingObjectSegmenter().get_params())
    imgs = [disc_image([(80, 80)], 30), np.full((50, 50), 255, np.uint8)]
    out = seg.fit().predict(imgs)
    assert [len(r.objects) for r in out] == [1, 0]


def test_deterministic():
    img, _ = generate_image(SynthConfig(objects_per_image=20, seed=12), 0)
    a = OverlappingObjectSegmenter().predict(img)
    b = OverlappingObjectSegmenter().predict(img)
    assert len(a.objects) == len(b.objects)
    for x, y in zip(a.objects, b.objects):
        np.testing.assert_array_equal(x.contour, y.contour)


def test_invalid_image():
    seg = OverlappingObjectSegmenter()
    with pytest.raises(ValueError):
        seg.predict_one(np.zeros(10, np.uint8))
    with pytest.raises(ValueError):
        seg.predict(np.full((10, 10), 300.0))
    # a 3-D array is a stack of images
    assert len(seg.predict(np.full((2, 20, 20), 255, np.uint8))) == 2
