"""Reconstruction losses and full-reference quality metrics.

Losses: a smoothed-L1 (Charbonnier) pixel term, an FFT magnitude-spectrum
term, and a Sobel edge term, combined with configurable weights. Metrics:
PSNR (unit dynamic range, capped at 99 dB) and SSIM (11x11 Gaussian window,
sigma 1.5). Everything is a per-image mean and expects matching shapes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .validation import as_image, check_same_shape

PSNR_CAP_DB = 99.0
_SSIM_SIGMA = 1.5
_SSIM_RADIUS = 5  # 11x11 window
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


@dataclass
class LossWeights:
    lambda1: float = 1.0  # Charbonnier
    lambda2: float = 1.0  # FFT magnitude
    lambda3: float = 1.0  # edge
    epsilon: float = 1e-3

    def validate(self) -> None:
        for name in ("lambda1", "lambda2", "lambda3"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not 1e-6 <= self.epsilon <= 1e-3:
            raise ValueError(f"epsilon must be in [1e-6, 1e-3], got {self.epsilon}")


@dataclass
class ScoreReport:
    charbonnier: float
    fft_loss: float
    edge_loss: float
    total: float
    psnr_db: float
    ssim: float

    def to_dict(self) -> dict:
        return {
            "charbonnier": self.charbonnier,
            "fft_loss": self.fft_loss,
            "edge_loss": self.edge_loss,
            "total": self.total,
            "psnr_db": self.psnr_db,
            "ssim": self.ssim,
        }


def _pair(pred, gt) -> tuple[np.ndarray, np.ndarray]:
    pred = as_image(pred, name="pred")
    gt = as_image(gt, name="gt")
    check_same_shape(pred, gt, "pred/gt")
    return pred, gt


def _planes(img: np.ndarray):
    if img.ndim == 2:
        yield img
    else:
        for c in range(img.shape[2]):
            yield img[..., c]


def charbonnier(pred, gt, epsilon: float = 1e-3) -> float:
    """Mean of sqrt((pred - gt)^2 + epsilon^2); equals epsilon for identical inputs."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    pred, gt = _pair(pred, gt)
    diff = pred - gt
    return float(np.sqrt(diff * diff + epsilon * epsilon).mean())


def fft_magnitude_loss(pred, gt) -> float:
    """Mean absolute difference of 2-D DFT magnitudes, averaged over channels.

    Phase is discarded, so the loss is invariant under cyclic shifts.
    """
    pred, gt = _pair(pred, gt)
    losses = [
        np.abs(np.abs(np.fft.fft2(p)) - np.abs(np.fft.fft2(g))).mean()
        for p, g in zip(_planes(pred), _planes(gt))
    ]
    return float(np.mean(losses))


def _gradient_magnitude(plane: np.ndarray) -> np.ndarray:
    gx = ndimage.sobel(plane, axis=1, mode="reflect")
    gy = ndimage.sobel(plane, axis=0, mode="reflect")
    return np.sqrt(gx * gx + gy * gy)


def edge_loss(pred, gt) -> float:
    """Mean absolute difference of Sobel gradient magnitudes (reflect padding)."""
    pred, gt = _pair(pred, gt)
    losses = [
        np.abs(_gradient_magnitude(p) - _gradient_magnitude(g)).mean()
        for p, g in zip(_planes(pred), _planes(gt))
    ]
    return float(np.mean(losses))


def psnr(pred, gt) -> float:
    """Peak signal-to-noise ratio in dB for [0, 1] images, capped at 99 dB."""
    pred, gt = _pair(pred, gt)
    mse = float(((pred - gt) ** 2).mean())
    if mse < 1e-10:
        return PSNR_CAP_DB
    return float(10.0 * np.log10(1.0 / mse))


def _ssim_plane(a: np.ndarray, b: np.ndarray) -> float:
    offsets = np.arange(2 * _SSIM_RADIUS + 1, dtype=np.float64) - _SSIM_RADIUS
    window = np.exp(-(offsets[:, None] ** 2 + offsets[None, :] ** 2) / (2.0 * _SSIM_SIGMA**2))
    window /= window.sum()

    def smooth(x):
        return ndimage.convolve(x, window, mode="nearest")

    mu_a = smooth(a)
    mu_b = smooth(b)
    var_a = smooth(a * a) - mu_a * mu_a
    var_b = smooth(b * b) - mu_b * mu_b
    cov = smooth(a * b) - mu_a * mu_b

    c1 = _SSIM_K1**2
    c2 = _SSIM_K2**2
    ssim_map = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) / (
        (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    )
    # border pixels see padding; keep the fully-supported interior only
    interior = ssim_map[_SSIM_RADIUS:-_SSIM_RADIUS, _SSIM_RADIUS:-_SSIM_RADIUS]
    return float(interior.mean())


def ssim(pred, gt) -> float:
    """Structural similarity with an 11x11 Gaussian window (sigma 1.5).

    Uses population statistics and the standard stabilizers for unit dynamic
    range; channels are scored independently and averaged. Images must be at
    least 11x11.
    """
    pred, gt = _pair(pred, gt)
    if min(pred.shape[0], pred.shape[1]) < 2 * _SSIM_RADIUS + 1:
        raise ValueError(f"images must be at least {2 * _SSIM_RADIUS + 1} pixels per side")
    scores = [_ssim_plane(p, g) for p, g in zip(_planes(pred), _planes(gt))]
    return float(np.mean(scores))


def total_loss(pred, gt, weights: LossWeights | None = None) -> ScoreReport:
    """Weighted sum of the three losses plus PSNR/SSIM, as one report."""
    weights = weights if weights is not None else LossWeights()
    weights.validate()
    char = charbonnier(pred, gt, weights.epsilon)
    fft = fft_magnitude_loss(pred, gt)
    edge = edge_loss(pred, gt)
    return ScoreReport(
        charbonnier=char,
        fft_loss=fft,
        edge_loss=edge,
        total=weights.lambda1 * char + weights.lambda2 * fft + weights.lambda3 * edge,
        psnr_db=psnr(pred, gt),
        ssim=ssim(pred, gt),
    )
