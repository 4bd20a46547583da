import numpy as np
import pytest

from overlapseg.ellipse import Ellipse

ACCEPTANCE_LINES = []


def disc_image(centers, radius, width=200, height=160):
    """Dark discs on a white background."""
    img = np.full((height, width), 255, dtype=np.uint8)
    for cx, cy in centers:
        img[Ellipse(cx, cy, radius, radius, 0.0).rasterize(width, height)] = 0
    return img


def circle_intersections(c0, c1, r):
    """Intersection points of two circles with equal radius."""
    c0, c1 = np.asarray(c0, float), np.asarray(c1, float)
    d = np.linalg.norm(c1 - c0)
    mid = (c0 + c1) / 2
    h = np.sqrt(r * r - (d / 2) ** 2)
    perp = np.array([-(c1 - c0)[1], (c1 - c0)[0]]) / d
    return np.array([mid + h * perp, mid - h * perp])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
