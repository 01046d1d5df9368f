"""rainforge: pseudo-paired rainy/clean image synthesis toolkit.

Pipeline stages, each usable standalone or through its estimator facade:

- superpixel segmentation of structure-source images (SlicSegmenter),
- best-match alpha-blend fusion of patches into target backgrounds (PatchFuser),
- multi-stage rain streak synthesis on the luminance channel (RainSynthesizer),

plus a loss/metric suite and a deterministic batch CLI (``rainforge synth`` /
``rainforge score``).
"""

__version__ = "0.1.0"

from .exceptions import (
    ChannelMismatchError,
    ConfigError,
    DecodeError,
    DimensionMismatchError,
    EmptyInputDirError,
    EvenKernelError,
    FusionConditionFailed,
    ImageTooSmallError,
    TemplateTooLargeError,
    UnsupportedFormatError,
)
from .color import rgb_to_lab, rgb_to_yuv, yuv_to_rgb
from .io import load_image, save_image
from .slic import (
    SlicParams,
    SlicSegmenter,
    SuperpixelLabeling,
    SuperpixelPatch,
    extract_patches,
    slic_distance,
    slic_segment,
)
from .fusion import (
    FusionParams,
    MatchResult,
    PatchFuser,
    RandomMask,
    fuse_fallback,
    fuse_forward,
    make_random_mask,
    match_region,
)
from .rain import (
    RainDraw,
    RainParams,
    RainSynthesizer,
    Stage,
    StreakMask,
    composite_rain,
    fuse_luminance,
    gaussian_blur,
    gaussian_kernel,
    motion_blur,
    motion_kernel,
    salt_noise,
    synthesize_rain,
)
from .metrics import (
    LossWeights,
    ScoreReport,
    charbonnier,
    edge_loss,
    fft_magnitude_loss,
    psnr,
    ssim,
    total_loss,
)
from .pipeline import (
    PairedSample,
    PipelineConfig,
    PipelineResult,
    regenerate_pair,
    run_pipeline,
    sample_seed,
    write_manifest,
)

__all__ = [
    "__version__",
    # colors / io
    "rgb_to_lab",
    "rgb_to_yuv",
    "yuv_to_rgb",
    "load_image",
    "save_image",
    # superpixels
    "SlicParams",
    "SlicSegmenter",
    "SuperpixelLabeling",
    "SuperpixelPatch",
    "slic_distance",
    "slic_segment",
    "extract_patches",
    # fusion
    "FusionParams",
    "MatchResult",
    "PatchFuser",
    "RandomMask",
    "match_region",
    "make_random_mask",
    "fuse_forward",
    "fuse_fallback",
    # rain
    "RainParams",
    "RainDraw",
    "RainSynthesizer",
    "Stage",
    "StreakMask",
    "salt_noise",
    "gaussian_kernel",
    "gaussian_blur",
    "motion_kernel",
    "motion_blur",
    "fuse_luminance",
    "composite_rain",
    "synthesize_rain",
    # metrics
    "LossWeights",
    "ScoreReport",
    "charbonnier",
    "fft_magnitude_loss",
    "edge_loss",
    "psnr",
    "ssim",
    "total_loss",
    # pipeline
    "PipelineConfig",
    "PairedSample",
    "PipelineResult",
    "run_pipeline",
    "write_manifest",
    "regenerate_pair",
    "sample_seed",
    # exceptions
    "ChannelMismatchError",
    "ConfigError",
    "DecodeError",
    "DimensionMismatchError",
    "EmptyInputDirError",
    "EvenKernelError",
    "FusionConditionFailed",
    "ImageTooSmallError",
    "TemplateTooLargeError",
    "UnsupportedFormatError",
]
