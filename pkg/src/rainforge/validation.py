"""Input validation helpers shared by all estimators and functions.

Images are plain numpy arrays: (H, W, 3) float64 for color, (H, W) float64
for single-channel planes, with every sample in [0, 1].
"""

from __future__ import annotations

import numpy as np

from .exceptions import ChannelMismatchError, DimensionMismatchError


def as_image(arr, channels: int | None = None, name: str = "image") -> np.ndarray:
    """Coerce to a float64 image array and validate shape, finiteness and range.

    channels=3 requires (H, W, 3); channels=1 requires (H, W); None accepts
    either. Returns a C-contiguous float64 array (copying only if needed).
    """
    img = np.ascontiguousarray(arr, dtype=np.float64)
    if channels == 3:
        if img.ndim != 3 or img.shape[2] != 3:
            raise ChannelMismatchError(f"{name}: expected (H, W, 3), got {img.shape}")
    elif channels == 1:
        if img.ndim != 2:
            raise ChannelMismatchError(f"{name}: expected (H, W), got {img.shape}")
    elif img.ndim not in (2, 3) or (img.ndim == 3 and img.shape[2] != 3):
        raise ChannelMismatchError(f"{name}: expected (H, W) or (H, W, 3), got {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"{name}: height and width must be >= 1, got {img.shape}")
    if not np.isfinite(img).all():
        raise ValueError(f"{name}: contains NaN or infinite samples")
    if img.min() < 0.0 or img.max() > 1.0:
        raise ValueError(f"{name}: samples must lie in [0, 1]")
    return img


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "inputs") -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"{what}: shapes {a.shape} and {b.shape} differ")


def check_positive(value, name: str) -> None:
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value}")


def check_range(lo, hi, name: str) -> None:
    """A (lo, hi) sampling range must be ordered and nonempty."""
    if not lo <= hi:
        raise ValueError(f"{name} range ({lo}, {hi}) is empty")
