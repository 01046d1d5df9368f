"""Image file I/O: PNG and JPEG in, PNG out, 8-bit per channel.

Pixel data crosses the file boundary as uint8 and lives as float64 in [0, 1]
everywhere else; quantization error is therefore bounded by 1/255 per sample.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .exceptions import DecodeError, UnsupportedFormatError
from .validation import as_image

_READABLE = {"PNG", "JPEG"}


def load_image(path) -> np.ndarray:
    """Load a PNG or JPEG file as an (H, W, 3) float64 array in [0, 1]."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(path)
    try:
        with Image.open(path) as im:
            if im.format not in _READABLE:
                raise UnsupportedFormatError(f"{path}: format {im.format!r} not supported")
            rgb = im.convert("RGB")
            data = np.asarray(rgb, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise UnsupportedFormatError(f"{path}: not a PNG or JPEG file") from exc
    except (OSError, SyntaxError) as exc:
        raise DecodeError(f"{path}: {exc}") from exc
    return data.astype(np.float64) / 255.0


def save_image(img, path) -> None:
    """Write an (H, W, 3) or (H, W) float image in [0, 1] as an 8-bit PNG."""
    img = as_image(img, name="image")
    path = Path(path)
    data = np.rint(img * 255.0).astype(np.uint8)
    mode = "L" if data.ndim == 2 else "RGB"
    Image.fromarray(data, mode=mode).save(path, format="PNG")
