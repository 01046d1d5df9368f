"""Pseudo-rain streak synthesis and luminance compositing.

A streak mask is built in three stages: seed bright points (salt noise),
soften them into blobs (Gaussian blur), then smear the blobs into linear
streaks (motion blur with a line kernel). The finished mask is blended into
the luminance channel of the clean image:

    Y_rainy = (1 - beta) * mask + beta * Y

with the chroma channels passed through untouched. Note this scales rain-free
luminance by beta as well; that global darkening is deliberate and is not
compensated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import ndimage
from sklearn.base import BaseEstimator, TransformerMixin

from .color import rgb_to_yuv, yuv_to_rgb
from .exceptions import DimensionMismatchError, EvenKernelError
from .validation import as_image, check_positive, check_range


class Stage(Enum):
    SALT = "salt"
    GAUSS = "gauss"
    MOTION = "motion"


@dataclass
class StreakMask:
    """Single-channel mask plus which synthesis stage produced it."""

    stage: Stage
    plane: np.ndarray  # (H, W) float64 in [0, 1]


@dataclass
class RainParams:
    """Sampling ranges for per-image rain draws; (lo, hi) tuples are inclusive.

    salt_density, angle_deg and beta are drawn uniformly as floats; length and
    width are drawn as integers. One angle is drawn per image (streaks in a
    frame share a wind direction).
    """

    salt_density: tuple[float, float] = (0.01, 0.05)
    gauss_kernel: int = 3
    gauss_sigma: float = 1.0
    length: tuple[int, int] = (15, 45)
    angle_deg: tuple[float, float] = (70.0, 110.0)
    width: tuple[int, int] = (1, 3)
    beta: tuple[float, float] = (0.85, 0.95)

    def validate(self) -> None:
        check_range(*self.salt_density, "salt_density")
        if not 0.0 < self.salt_density[0] <= 1.0 or self.salt_density[1] > 1.0:
            raise ValueError(f"salt_density range must lie in (0, 1], got {self.salt_density}")
        if self.gauss_kernel < 1 or self.gauss_kernel % 2 == 0:
            raise EvenKernelError(f"gauss_kernel must be odd and >= 1, got {self.gauss_kernel}")
        check_positive(self.gauss_sigma, "gauss_sigma")
        check_range(*self.length, "length")
        if self.length[0] < 1:
            raise ValueError(f"minimum streak length must be >= 1, got {self.length[0]}")
        check_range(*self.angle_deg, "angle_deg")
        check_range(*self.width, "width")
        if self.width[0] < 1:
            raise ValueError(f"minimum streak width must be >= 1, got {self.width[0]}")
        check_range(*self.beta, "beta")
        if not 0.0 <= self.beta[0] <= 1.0 or not self.beta[1] <= 1.0:
            raise ValueError(f"beta range must lie in [0, 1], got {self.beta}")


@dataclass
class RainDraw:
    """Concrete values drawn for one synthesized image."""

    salt_density: float
    length: int
    angle_deg: float
    width: int
    beta: float
    salt_seed: int

    def to_dict(self) -> dict:
        return {
            "salt_density": self.salt_density,
            "length": self.length,
            "angle_deg": self.angle_deg,
            "width": self.width,
            "beta": self.beta,
            "salt_seed": self.salt_seed,
        }


def salt_noise(height: int, width: int, density: float, seed) -> StreakMask:
    """Zero mask with each pixel set to 1.0 independently with probability density."""
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must be in (0, 1], got {density}")
    rng = np.random.default_rng(seed)
    plane = (rng.random((height, width)) < density).astype(np.float64)
    return StreakMask(stage=Stage.SALT, plane=plane)


def gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    """Odd-sized 2-D Gaussian kernel normalized to sum 1."""
    if size < 1 or size % 2 == 0:
        raise EvenKernelError(f"kernel size must be odd and >= 1, got {size}")
    check_positive(sigma, "sigma")
    offsets = np.arange(size, dtype=np.float64) - size // 2
    kernel = np.exp(-(offsets[:, None] ** 2 + offsets[None, :] ** 2) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def gaussian_blur(mask: StreakMask, size: int, sigma: float) -> StreakMask:
    """Reflect-padded Gaussian convolution; preserves mass away from borders."""
    kernel = gaussian_kernel(size, sigma)
    plane = as_image(mask.plane, channels=1, name="mask plane")
    blurred = ndimage.convolve(plane, kernel, mode="reflect")
    return StreakMask(stage=Stage.GAUSS, plane=np.clip(blurred, 0.0, 1.0))


def _round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def motion_kernel(length: int, angle_deg: float, width: int = 1) -> np.ndarray:
    """Line kernel: a length-pixel segment through the origin at the given angle.

    The segment is marched one cell at a time along its dominant axis, then
    dilated perpendicular to the line to the requested width; the kernel is
    normalized to sum 1. angle_deg is measured from horizontal.
    """
    length = int(length)
    width = int(width)
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    if width < 1:
        raise ValueError(f"width must be >= 1, got {width}")

    theta = math.radians(angle_deg)
    dx, dy = math.cos(theta), math.sin(theta)
    scale = max(abs(dx), abs(dy))  # >= sqrt(1/2), so steps advance one cell

    cells = set()
    for i in range(length):
        t = (i - (length - 1) / 2.0) / scale
        bx, by = t * dx, t * dy
        for j in range(width):
            s = (j - (width - 1) / 2.0) / scale
            cells.add((_round_half_up(by + s * dx), _round_half_up(bx - s * dy)))

    ry = max(abs(y) for y, _ in cells)
    rx = max(abs(x) for _, x in cells)
    kernel = np.zeros((2 * ry + 1, 2 * rx + 1))
    for y, x in cells:
        kernel[y + ry, x + rx] = 1.0
    return kernel / kernel.sum()


def motion_blur(mask: StreakMask, kernel: np.ndarray) -> StreakMask:
    """Zero-padded 2-D convolution with a sum-1 kernel, clamped to [0, 1]."""
    kernel = np.asarray(kernel, dtype=np.float64)
    if not math.isclose(kernel.sum(), 1.0, abs_tol=1e-6):
        raise ValueError(f"kernel must sum to 1, got {kernel.sum()}")
    plane = as_image(mask.plane, channels=1, name="mask plane")
    blurred = ndimage.convolve(plane, kernel, mode="constant", cval=0.0)
    return StreakMask(stage=Stage.MOTION, plane=np.clip(blurred, 0.0, 1.0))


def fuse_luminance(luma: np.ndarray, streaks: np.ndarray, beta: float) -> np.ndarray:
    """Convex blend of streak mask and luminance: (1 - beta) * mask + beta * Y."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must be in [0, 1], got {beta}")
    if luma.shape != streaks.shape:
        raise DimensionMismatchError(f"luminance {luma.shape} vs streaks {streaks.shape}")
    return (1.0 - beta) * streaks + beta * luma


def composite_rain(clean, mask: StreakMask, beta: float) -> np.ndarray:
    """Superimpose a streak mask onto the luminance channel of a clean image.

    The image is converted to YUV, the Y plane blended with the mask, and the
    result converted back to RGB with the original chroma; output is clamped.
    """
    img = as_image(clean, channels=3, name="clean image")
    plane = as_image(mask.plane, channels=1, name="mask plane")
    if plane.shape != img.shape[:2]:
        raise DimensionMismatchError(f"mask {plane.shape} does not match image {img.shape[:2]}")
    yuv = rgb_to_yuv(img)
    yuv[..., 0] = fuse_luminance(yuv[..., 0], plane, beta)
    return yuv_to_rgb(yuv)


def synthesize_rain(clean, params: RainParams | None = None, seed=None):
    """Full chain: draw concrete parameters, build the mask, composite it.

    Returns (rainy image, final streak mask, RainDraw). Deterministic for a
    fixed (clean, params, seed); the draw order is density, length, angle,
    width, beta, then the salt seed.
    """
    params = params if params is not None else RainParams()
    params.validate()
    img = as_image(clean, channels=3, name="clean image")
    rng = np.random.default_rng(seed)

    density = float(rng.uniform(*params.salt_density))
    length = int(rng.integers(params.length[0], params.length[1] + 1))
    angle = float(rng.uniform(*params.angle_deg))
    width = int(rng.integers(params.width[0], params.width[1] + 1))
    beta = float(rng.uniform(*params.beta))
    salt_seed = int(rng.integers(0, 2**63))

    mask = salt_noise(img.shape[0], img.shape[1], density, salt_seed)
    mask = gaussian_blur(mask, params.gauss_kernel, params.gauss_sigma)
    mask = motion_blur(mask, motion_kernel(length, angle, width))
    rainy = composite_rain(img, mask, beta)
    draw = RainDraw(
        salt_density=density,
        length=length,
        angle_deg=angle,
        width=width,
        beta=beta,
        salt_seed=salt_seed,
    )
    return rainy, mask, draw


class RainSynthesizer(BaseEstimator, TransformerMixin):
    """Estimator facade over synthesize_rain.

    transform(image) returns the rainy image and records ``streak_mask_`` and
    ``last_draw_``. The draw is re-derived from random_state on every call, so
    repeated transforms of the same image are identical; vary random_state to
    vary the rain.
    """

    def __init__(
        self,
        salt_density: tuple[float, float] = (0.01, 0.05),
        gauss_kernel: int = 3,
        gauss_sigma: float = 1.0,
        length: tuple[int, int] = (15, 45),
        angle_deg: tuple[float, float] = (70.0, 110.0),
        width: tuple[int, int] = (1, 3),
        beta: tuple[float, float] = (0.85, 0.95),
        random_state=None,
    ):
        self.salt_density = salt_density
        self.gauss_kernel = gauss_kernel
        self.gauss_sigma = gauss_sigma
        self.length = length
        self.angle_deg = angle_deg
        self.width = width
        self.beta = beta
        self.random_state = random_state

    def _make_params(self) -> RainParams:
        return RainParams(
            salt_density=tuple(self.salt_density),
            gauss_kernel=self.gauss_kernel,
            gauss_sigma=self.gauss_sigma,
            length=tuple(self.length),
            angle_deg=tuple(self.angle_deg),
            width=tuple(self.width),
            beta=tuple(self.beta),
        )

    def fit(self, X=None, y=None):
        self._make_params().validate()
        return self

    def transform(self, X) -> np.ndarray:
        rainy, mask, draw = synthesize_rain(X, self._make_params(), seed=self.random_state)
        self.streak_mask_ = mask
        self.last_draw_ = draw
        return rainy
