"""Blend superpixel patches into a target image at their best-matching window.

The window is located by exhaustive (stride-configurable) sliding-window MSE;
pixels outside a patch's own mask are excluded from the match so bounding-box
background cannot pollute it. Inside the window the patch is alpha-blended
through a random sampling mask:

    fused = target * alpha + patch * (1 - alpha)    where both masks are set

and the target is left untouched everywhere else. Patches failing the fusion
gate (too little area relative to the target, or a bounding box that cannot
fit) go through the replacement-transfer fallback instead, which resizes the
patch to the matched window and blends there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import DimensionMismatchError, FusionConditionFailed, TemplateTooLargeError
from .slic import SuperpixelPatch
from .validation import as_image


@dataclass
class FusionParams:
    alpha: float = 0.2
    mask_keep_frac: float = 0.5
    min_patch_frac: float = 0.01
    stride: int = 1

    def validate(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.0 < self.mask_keep_frac <= 1.0:
            raise ValueError(f"mask_keep_frac must be in (0, 1], got {self.mask_keep_frac}")
        if self.min_patch_frac < 0.0:
            raise ValueError(f"min_patch_frac must be >= 0, got {self.min_patch_frac}")
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")


@dataclass
class MatchResult:
    """Best window offset found by match_region and its mean squared error."""

    y: int
    x: int
    mse: float


@dataclass
class RandomMask:
    """Bernoulli sampling mask plus the seed that produced it."""

    bits: np.ndarray  # (H, W) bool
    seed: object

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]


def make_random_mask(height: int, width: int, keep_frac: float, seed) -> RandomMask:
    """Each bit set independently with probability keep_frac, under seed."""
    if height < 1 or width < 1:
        raise ValueError(f"mask dimensions must be >= 1, got {height}x{width}")
    if not 0.0 < keep_frac <= 1.0:
        raise ValueError(f"keep_frac must be in (0, 1], got {keep_frac}")
    rng = np.random.default_rng(seed)
    bits = rng.random((height, width)) < keep_frac
    return RandomMask(bits=bits, seed=seed)


def match_region(image, template, stride: int = 1, template_mask=None) -> MatchResult:
    """Offset minimizing the per-pixel, per-channel MSE of template vs image window.

    Searches every stride-aligned offset; ties go to the smallest (y, x). When
    template_mask is given, only masked template pixels enter the MSE. The
    search uses an FFT sum-of-squares decomposition; the returned mse is then
    recomputed directly at the winning offset.
    """
    image = as_image(image, name="image")
    template = as_image(template, name="template")
    if image.ndim != template.ndim:
        raise DimensionMismatchError("image and template must have the same channel count")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    ih, iw = image.shape[:2]
    th, tw = template.shape[:2]
    if th > ih or tw > iw:
        raise TemplateTooLargeError(f"template {th}x{tw} exceeds image {ih}x{iw}")

    img3 = image if image.ndim == 3 else image[..., None]
    tmpl3 = template if template.ndim == 3 else template[..., None]
    channels = img3.shape[2]

    if template_mask is None:
        mask = np.ones((th, tw))
    else:
        mask = np.asarray(template_mask, dtype=np.float64)
        if mask.shape != (th, tw):
            raise DimensionMismatchError(f"template_mask {mask.shape} does not match template")
        if mask.sum() < 1:
            raise ValueError("template_mask has no set pixels")

    # SSD(y,x) = sum_c [ corr(I_c^2, m) - 2 corr(I_c, T_c m) + sum(T_c^2 m) ]
    flip = np.s_[::-1, ::-1]
    ssd = np.zeros((ih - th + 1, iw - tw + 1))
    for c in range(channels):
        plane = img3[..., c]
        masked_tmpl = tmpl3[..., c] * mask
        ssd += fftconvolve(plane * plane, mask[flip], mode="valid")
        ssd -= 2.0 * fftconvolve(plane, masked_tmpl[flip], mode="valid")
        ssd += (tmpl3[..., c] * masked_tmpl).sum()

    strided = ssd[::stride, ::stride]
    # FFT round-off perturbs exact ties; snap near-minimal offsets so ties
    # still break to the smallest (y, x)
    min_val = strided.min()
    tol = 1e-9 * (1.0 + abs(min_val))
    best = np.argwhere(strided <= min_val + tol)[0]
    y, x = int(best[0]) * stride, int(best[1]) * stride

    window = img3[y : y + th, x : x + tw]
    diff2 = (window - tmpl3) ** 2 * mask[..., None]
    mse = float(diff2.sum() / (channels * mask.sum()))
    return MatchResult(y=y, x=x, mse=mse)


def _resize_nearest(arr: np.ndarray, new_h: int, new_w: int) -> np.ndarray:
    src_h, src_w = arr.shape[:2]
    rows = np.minimum((np.floor((np.arange(new_h) + 0.5) * src_h / new_h)).astype(int), src_h - 1)
    cols = np.minimum((np.floor((np.arange(new_w) + 0.5) * src_w / new_w)).astype(int), src_w - 1)
    return arr[rows][:, cols]


def _validate_patch(patch: SuperpixelPatch) -> np.ndarray:
    pixels = as_image(patch.pixels, channels=3, name="patch pixels")
    if patch.mask.shape != pixels.shape[:2]:
        raise DimensionMismatchError(
            f"patch mask {patch.mask.shape} does not match pixels {pixels.shape[:2]}"
        )
    if not patch.mask.any():
        raise ValueError("patch mask has no set pixels")
    return pixels


def _blend_window(
    target: np.ndarray,
    y: int,
    x: int,
    pixels: np.ndarray,
    select: np.ndarray,
    alpha: float,
) -> np.ndarray:
    out = target.copy()
    window = out[y : y + pixels.shape[0], x : x + pixels.shape[1]]
    window[select] = window[select] * alpha + pixels[select] * (1.0 - alpha)
    return np.clip(out, 0.0, 1.0)


def fuse_forward(target, patch: SuperpixelPatch, params: FusionParams | None = None, seed=None) -> np.ndarray:
    """Blend the patch into the target at its best-matching window.

    Raises FusionConditionFailed when the patch is too small relative to the
    target (area below min_patch_frac of the target) or its bounding box does
    not fit; callers then switch to fuse_fallback.
    """
    params = params if params is not None else FusionParams()
    params.validate()
    target = as_image(target, channels=3, name="target")
    pixels = _validate_patch(patch)
    ph, pw = pixels.shape[:2]
    th, tw = target.shape[:2]
    if patch.area < params.min_patch_frac * th * tw:
        raise FusionConditionFailed(
            f"patch area {patch.area} below {params.min_patch_frac} of target area {th * tw}"
        )
    if ph > th or pw > tw:
        raise FusionConditionFailed(f"patch bbox {ph}x{pw} does not fit target {th}x{tw}")

    match = match_region(target, pixels, stride=params.stride, template_mask=patch.mask)
    random_mask = make_random_mask(ph, pw, params.mask_keep_frac, seed)
    select = patch.mask & random_mask.bits
    return _blend_window(target, match.y, match.x, pixels, select, params.alpha)


def fuse_fallback(target, patch: SuperpixelPatch, params: FusionParams | None = None, seed=None) -> np.ndarray:
    """Replacement transfer: blend inside the matched target window.

    The patch (pixels and mask) is nearest-neighbor resized to the window when
    dimensions differ; the window is the patch bounding box clipped to the
    target size, located by the same masked MSE match.
    """
    params = params if params is not None else FusionParams()
    params.validate()
    target = as_image(target, channels=3, name="target")
    pixels = _validate_patch(patch)
    th, tw = target.shape[:2]
    wh = min(pixels.shape[0], th)
    ww = min(pixels.shape[1], tw)
    mask = patch.mask
    if (wh, ww) != pixels.shape[:2]:
        pixels = _resize_nearest(pixels, wh, ww)
        mask = _resize_nearest(mask, wh, ww)
        if not mask.any():  # degenerate resize can lose all set bits
            mask = np.ones((wh, ww), dtype=bool)

    match = match_region(target, pixels, stride=params.stride, template_mask=mask)
    random_mask = make_random_mask(wh, ww, params.mask_keep_frac, seed)
    select = mask & random_mask.bits
    return _blend_window(target, match.y, match.x, pixels, select, params.alpha)


class PatchFuser(BaseEstimator, TransformerMixin):
    """Estimator facade: fit() binds a patch, transform() fuses it into an image.

    transform tries the forward path and falls back to replacement transfer
    when the fusion gate rejects the patch; ``used_fallback_`` records which
    path ran. random_state seeds the sampling mask, so repeated transforms of
    the same input are identical.
    """

    def __init__(
        self,
        alpha: float = 0.2,
        mask_keep_frac: float = 0.5,
        min_patch_frac: float = 0.01,
        stride: int = 1,
        random_state=None,
    ):
        self.alpha = alpha
        self.mask_keep_frac = mask_keep_frac
        self.min_patch_frac = min_patch_frac
        self.stride = stride
        self.random_state = random_state

    def _make_params(self) -> FusionParams:
        return FusionParams(
            alpha=self.alpha,
            mask_keep_frac=self.mask_keep_frac,
            min_patch_frac=self.min_patch_frac,
            stride=self.stride,
        )

    def fit(self, X: SuperpixelPatch, y=None):
        _validate_patch(X)
        self.patch_ = X
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "patch_"):
            raise RuntimeError("PatchFuser must be fitted with a patch before transform")
        params = self._make_params()
        try:
            out = fuse_forward(X, self.patch_, params, seed=self.random_state)
            self.used_fallback_ = False
        except FusionConditionFailed:
            out = fuse_fallback(X, self.patch_, params, seed=self.random_state)
            self.used_fallback_ = True
        return out
