"""Input validation helpers.

Small checks shared by the estimators and the functional API. They raise
the package's exception types so callers can rely on one error surface.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeMismatch


def as_float_array(x, name: str = "array") -> np.ndarray:
    """Coerce to a float ndarray, rejecting non-finite values."""
    arr = np.asarray(x, dtype=np.float64) if np.asarray(x).dtype.kind not in "fd" else np.asarray(x)
    if arr.dtype.kind != "f":
        arr = arr.astype(np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_image(img, name: str = "image") -> np.ndarray:
    """Validate a single 2D luma image."""
    arr = as_float_array(img, name)
    if arr.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2D, got shape {arr.shape}")
    return arr


def check_depth_map(values, name: str = "depth map") -> np.ndarray:
    """Validate a 2D depth map: finite and within [0, 1]."""
    arr = check_image(values, name)
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError(f"{name} values must lie in [0, 1]")
    return arr


def check_image_stack(X, name: str = "X") -> np.ndarray:
    """Validate a stack of images shaped (n, h, w); a single (h, w) image is promoted."""
    arr = as_float_array(X, name)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3:
        raise ShapeMismatch(f"{name} must be (n, h, w), got shape {arr.shape}")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "operands") -> None:
    if a.shape != b.shape:
        raise ShapeMismatch(f"{what} must share a shape: {a.shape} vs {b.shape}")
