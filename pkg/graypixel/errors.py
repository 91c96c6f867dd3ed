from typing import Optional


class GrayPixelError(Exception):
    """Base class for every error raised by the toolkit"""


class ImageDecodeError(GrayPixelError):
    """Image file missing, unreadable, or in an unsupported layout"""


class ManifestError(GrayPixelError):
    """Dataset manifest violates the documented schema"""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field '{field}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")


class NoGrayPixelsError(GrayPixelError):
    """No valid candidate pixels survived masking and contrast flooring"""


class EstimatorError(GrayPixelError):
    """An estimator is undefined on the given input"""


class ConfigError(GrayPixelError):
    """Run configuration is invalid"""
