"""Exception types raised across the package."""


class ChannelMismatchError(ValueError):
    """Image does not have the channel count an operation requires."""


class DimensionMismatchError(ValueError):
    """Two images or planes that must share dimensions do not."""


class ImageTooSmallError(ValueError):
    """Image has fewer pixels than the requested number of segments."""


class TemplateTooLargeError(ValueError):
    """Template exceeds the searched image in at least one dimension."""


class FusionConditionFailed(RuntimeError):
    """Patch fails the forward-fusion gate; caller should use the fallback path."""


class EvenKernelError(ValueError):
    """Gaussian kernel size must be odd."""


class UnsupportedFormatError(ValueError):
    """File is not a PNG or JPEG container."""


class DecodeError(OSError):
    """File looked like a supported container but could not be decoded."""


class EmptyInputDirError(ValueError):
    """An input directory contains no readable images."""


class ConfigError(ValueError):
    """Invalid pipeline configuration."""
