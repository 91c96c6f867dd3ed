import logging

import numpy as np
from scipy import ndimage

from graypixel.models import ContrastMap, LinearImage, LoGKernel, LogImage

logger = logging.getLogger(__name__)


def log_transform(img: LinearImage, epsilon: float = 1e-6) -> LogImage:
    """Natural log of every channel, guarded below by epsilon."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return LogImage(data=np.log(np.maximum(img.data, epsilon)), valid=img.valid)


def make_log_kernel(size: int = 5, sigma: float = 0.5) -> LoGKernel:
    """
    Sample the Laplacian of Gaussian on a size x size grid.

    The analytic LoG -(1/(pi s^4)) (1 - r^2/(2 s^2)) exp(-r^2/(2 s^2)) is
    evaluated at integer offsets and mean-subtracted so constant inputs map
    to exactly zero.
    """
    if size < 3 or size % 2 == 0:
        raise ValueError(f"kernel size must be odd and >= 3, got {size}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")

    half = size // 2
    offsets = np.arange(-half, half + 1, dtype=np.float64)
    yy, xx = np.meshgrid(offsets, offsets, indexing="ij")
    q = (xx ** 2 + yy ** 2) / (2.0 * sigma ** 2)
    coefficients = -(1.0 / (np.pi * sigma ** 4)) * (1.0 - q) * np.exp(-q)
    coefficients = coefficients - coefficients.mean()
    return LoGKernel(size=size, sigma=sigma, coefficients=coefficients)


def footprint_valid(valid: np.ndarray, size: int) -> np.ndarray:
    """True where a size x size window lies inside the image over valid pixels only."""
    return ndimage.minimum_filter(valid.astype(np.uint8), size=size, mode="constant", cval=0).astype(bool)


def local_contrast(logimg: LogImage, kernel: LoGKernel) -> ContrastMap:
    """Channel-wise LoG response of a log image; border and masked footprints are invalid."""
    height, width = logimg.data.shape[:2]
    if height < kernel.size or width < kernel.size:
        raise ValueError(f"image {width}x{height} is smaller than the {kernel.size}x{kernel.size} kernel")

    delta = ndimage.correlate(logimg.data, kernel.coefficients[:, :, np.newaxis], mode="nearest")
    valid = footprint_valid(logimg.valid, kernel.size)
    delta[~valid] = 0.0
    logger.debug(f"Local contrast: {int(valid.sum())} of {valid.size} pixels have a full valid footprint")
    return ContrastMap(delta=delta, valid=valid)


def contrast_of(img: LinearImage, size: int = 5, sigma: float = 0.5, epsilon: float = 1e-6) -> ContrastMap:
    return local_contrast(log_transform(img, epsilon), make_log_kernel(size, sigma))
