"""Color-space conversions: sRGB <-> CIELAB (D65) and RGB <-> YUV (BT.601).

All conversions operate on float arrays in [0, 1]. The XYZ matrix is
normalized so its row sums are the white point exactly, which makes every
gray pixel land on a = b = 0 to machine precision.
"""

from __future__ import annotations

import numpy as np

from .validation import as_image

# sRGB -> XYZ, D65, 2-degree observer
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_WHITE_D65 = _RGB_TO_XYZ.sum(axis=1)

# BT.601 full-range luma weights
_YUV_WEIGHTS = np.array([0.299, 0.587, 0.114])
_U_SCALE = 1.772  # 2 * (1 - Kb)
_V_SCALE = 1.402  # 2 * (1 - Kr)


def _srgb_to_linear(rgb: np.ndarray) -> np.ndarray:
    return np.where(rgb <= 0.04045, rgb / 12.92, ((rgb + 0.055) / 1.055) ** 2.4)


def rgb_to_lab(img) -> np.ndarray:
    """sRGB (H, W, 3) in [0, 1] -> CIELAB (H, W, 3) with L in [0, 100]."""
    rgb = as_image(img, channels=3, name="rgb image")
    xyz = _srgb_to_linear(rgb) @ _RGB_TO_XYZ.T
    xyz_n = xyz / _WHITE_D65

    delta = 6.0 / 29.0
    f = np.where(
        xyz_n > delta**3,
        np.cbrt(xyz_n),
        xyz_n / (3.0 * delta * delta) + 4.0 / 29.0,
    )
    lab = np.empty_like(rgb)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def rgb_to_yuv(img) -> np.ndarray:
    """RGB (H, W, 3) -> YUV (H, W, 3), full-range BT.601, chroma offset +0.5.

    All three output planes lie in [0, 1]; Y is channel 0.
    """
    rgb = as_image(img, channels=3, name="rgb image")
    y = rgb @ _YUV_WEIGHTS
    yuv = np.empty_like(rgb)
    yuv[..., 0] = y
    yuv[..., 1] = (rgb[..., 2] - y) / _U_SCALE + 0.5
    yuv[..., 2] = (rgb[..., 0] - y) / _V_SCALE + 0.5
    return yuv


def yuv_to_rgb(yuv) -> np.ndarray:
    """Inverse of rgb_to_yuv; output clamped to [0, 1]."""
    yuv = as_image(yuv, channels=3, name="yuv image")
    y = yuv[..., 0]
    u = yuv[..., 1] - 0.5
    v = yuv[..., 2] - 0.5
    rgb = np.empty_like(yuv)
    rgb[..., 0] = y + _V_SCALE * v
    rgb[..., 2] = y + _U_SCALE * u
    kr, kg, kb = _YUV_WEIGHTS
    rgb[..., 1] = (y - kr * rgb[..., 0] - kb * rgb[..., 2]) / kg
    return np.clip(rgb, 0.0, 1.0)
