"""Input validation helpers, in the spirit of ``sklearn.utils.check_array``."""
import numpy as np

from .exceptions import DimensionMismatch


def check_points(points, min_points=1, name="points"):
    """Return ``points`` as a float ``(n, 2)`` array of finite (x, y) pairs."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{name} must have shape (n, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite coordinates")
    if arr.shape[0] < min_points:
        raise ValueError(f"{name} needs at least {min_points} points, got {arr.shape[0]}")
    return arr


def check_image(image):
    """Return a 2-D uint8 grayscale image."""
    arr = np.asarray(image)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"expected a non-empty 2-D grayscale image, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        if np.any(arr < 0) or np.any(arr > 255):
            raise ValueError("intensities must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


def check_mask(mask):
    """Return a 2-D boolean mask."""
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D mask, got shape {arr.shape}")
    return arr.astype(bool, copy=False)


def check_same_shape(a, b):
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape {a.shape} does not match {b.shape}")
