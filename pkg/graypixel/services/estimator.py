"""
Illuminant estimators and correction.

The gray-pixel pipeline (contrast, grayness, top-N selection, mode seeking),
the plain gray-pixel average, and the statistical baselines used for
comparison. Every estimator returns a unit-norm IlluminantEstimate.
"""
import logging
import math
import time
from typing import Callable, Dict, Optional

import numpy as np
from scipy import ndimage

from graypixel.errors import EstimatorError
from graypixel.models import (
    METHOD_NAMES,
    BaselineParams,
    Diagnostics,
    GraynessMeasure,
    IlluminantEstimate,
    LinearImage,
    ModeResult,
    MsgpParams,
    PixelSet,
)
from graypixel.services.contrast import contrast_of
from graypixel.services.grayness import grayness_map
from graypixel.services.modeseek import cluster, pick_illuminant
from graypixel.services.selection import select_top_n

logger = logging.getLogger(__name__)

_GRAY = 1.0 / math.sqrt(3.0)
_EDGE_ENERGY_FLOOR = 1e-10


def _elapsed_ms(start: float) -> float:
    return (time.perf_counter() - start) * 1000.0


def _normalized(vec, method: str, diagnostics: Optional[Diagnostics] = None) -> IlluminantEstimate:
    vec = np.maximum(np.asarray(vec, dtype=np.float64), 0.0)
    norm = float(np.linalg.norm(vec))
    if not (norm > 0.0 and math.isfinite(norm)):
        raise EstimatorError(f"{method}: estimate has zero or non-finite norm")
    return IlluminantEstimate(
        L=tuple(float(c) for c in vec / norm),
        method=method,
        diagnostics=diagnostics or Diagnostics(),
    )


def _valid_pixels(img: LinearImage) -> np.ndarray:
    if img.valid_count == 0:
        raise EstimatorError("image has no valid pixels")
    return img.data[img.valid]


# ---------------------------------------------------------------------
# Gray pixels
# ---------------------------------------------------------------------
def detect_gray_pixels(
    img: LinearImage,
    params: Optional[MsgpParams] = None,
    measure: Optional[GraynessMeasure] = None,
) -> PixelSet:
    """Contrast, grayness and top-N selection: the candidate gray pixels of an image."""
    params = params or MsgpParams()
    measure = GraynessMeasure(measure or params.measure)
    cmap = contrast_of(img, params.log_size, params.log_sigma, params.epsilon)
    luminance = img.data.mean(axis=-1) if measure is GraynessMeasure.SIGMA else None
    gmap = grayness_map(
        cmap,
        measure=measure,
        contrast_floor=params.contrast_floor,
        smooth_window=params.smooth_window,
        luminance=luminance,
    )
    return select_top_n(gmap, img, params.n_percent)


def estimate_from_pixels(
    pixels: PixelSet,
    params: MsgpParams,
    method: str = "msgp",
    result: Optional[ModeResult] = None,
) -> IlluminantEstimate:
    """Cluster candidate gray pixels (unless already clustered) and return the densest mode's direction."""
    if result is None:
        result = cluster(pixels, params)
    diagnostics = Diagnostics(
        selected_pixels=len(pixels),
        modes=len(result.modes),
        densest_density=result.modes[0].density,
    )
    return _normalized(pick_illuminant(result), method, diagnostics)


def estimate_msgp(img: LinearImage, params: Optional[MsgpParams] = None) -> IlluminantEstimate:
    params = params or MsgpParams()
    start = time.perf_counter()
    pixels = detect_gray_pixels(img, params)
    estimate = estimate_from_pixels(pixels, params)
    estimate.diagnostics.runtime_ms = _elapsed_ms(start)
    logger.debug(
        f"msgp: {estimate.diagnostics.selected_pixels} pixels, {estimate.diagnostics.modes} modes, "
        f"densest {estimate.diagnostics.densest_density:.3f}"
    )
    return estimate


def estimate_gp(
    img: LinearImage,
    params: Optional[MsgpParams] = None,
    measure: GraynessMeasure = GraynessMeasure.THETA,
) -> IlluminantEstimate:
    """Average of the selected gray pixels, without clustering."""
    params = params or MsgpParams()
    measure = GraynessMeasure(measure)
    start = time.perf_counter()
    pixels = detect_gray_pixels(img, params, measure)
    method = f"gp-{measure.value}"
    return _normalized(
        pixels.rgb.mean(axis=0),
        method,
        Diagnostics(selected_pixels=len(pixels), runtime_ms=_elapsed_ms(start)),
    )


# ---------------------------------------------------------------------
# Correction
# ---------------------------------------------------------------------
def correct_image(img: LinearImage, L) -> LinearImage:
    """
    Von Kries correction: divide each channel by L and map the light to gray.

    The result is rescaled so its brightest valid channel value is 1.
    """
    L = np.asarray(L, dtype=np.float64)
    if L.shape != (3,) or not np.all(L > 0):
        raise ValueError(f"illuminant components must all be positive, got {tuple(L.tolist())}")
    corrected = img.data * (_GRAY / L)
    peak = corrected[img.valid].max() if img.valid_count else 0.0
    if peak > 0:
        corrected = corrected / peak
    return LinearImage(data=np.clip(corrected, 0.0, 1.0), valid=img.valid)


# ---------------------------------------------------------------------
# Statistical baselines
# ---------------------------------------------------------------------
def _minkowski_mean(values: np.ndarray, p: float) -> np.ndarray:
    """Per-column (mean |v|^p)^(1/p); column max when p is infinite."""
    if math.isinf(p):
        return values.max(axis=0)
    if p < 1:
        raise ValueError(f"Minkowski order must be >= 1, got {p}")
    if p == 1:
        return values.mean(axis=0)
    # scale first so high orders do not underflow
    scale = values.max(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return scale * np.mean((values / scale) ** p, axis=0) ** (1.0 / p)


def estimate_gray_world(img: LinearImage) -> IlluminantEstimate:
    return _normalized(_valid_pixels(img).mean(axis=0), "gray-world")


def estimate_white_patch(img: LinearImage) -> IlluminantEstimate:
    return _normalized(_valid_pixels(img).max(axis=0), "white-patch")


def estimate_shades_of_gray(img: LinearImage, p: float = 6.0) -> IlluminantEstimate:
    """Minkowski-p mean of valid pixels per channel; p=1 is Gray World, p=inf White Patch."""
    return _normalized(_minkowski_mean(_valid_pixels(img), float(p)), "shades-of-gray")


def _derivative_kernels(sigma: float):
    """Gaussian and its first and second derivative, sampled over +/- 3 sigma."""
    radius = max(1, int(math.floor(3.0 * sigma + 0.5)))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(x ** 2) / (2.0 * sigma ** 2))
    g /= g.sum()
    # correlation with a unit ramp yields 1
    d1 = x * g
    d1 -= d1.mean()
    d1 /= np.sum(x * d1)
    # correlation with x^2 yields 2
    d2 = (x ** 2 / sigma ** 2 - 1.0) * g
    d2 -= d2.mean()
    d2 *= 2.0 / np.sum(x ** 2 * d2)
    return g, d1, d2, radius


def _filter(channel: np.ndarray, ky: np.ndarray, kx: np.ndarray) -> np.ndarray:
    out = ndimage.correlate1d(channel, ky, axis=0, mode="nearest")
    return ndimage.correlate1d(out, kx, axis=1, mode="nearest")


def edge_magnitude(img: LinearImage, order: int = 1, sigma: float = 6.0) -> np.ndarray:
    """H x W x 3 Gaussian-derivative magnitude of the given order."""
    if order not in (1, 2):
        raise ValueError(f"gray-edge order must be 1 or 2, got {order}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    g, d1, d2, _ = _derivative_kernels(sigma)
    out = np.empty_like(img.data)
    for c in range(3):
        channel = img.data[..., c]
        if order == 1:
            dx = _filter(channel, g, d1)
            dy = _filter(channel, d1, g)
            out[..., c] = np.sqrt(dx ** 2 + dy ** 2)
        else:
            dxx = _filter(channel, g, d2)
            dyy = _filter(channel, d2, g)
            dxy = _filter(channel, d1, d1)
            out[..., c] = np.sqrt(dxx ** 2 + 4.0 * dxy ** 2 + dyy ** 2)
    return out


def estimate_gray_edge(img: LinearImage, order: int = 1, p: float = 1.0, sigma: float = 6.0) -> IlluminantEstimate:
    """Minkowski-p mean of derivative magnitudes over pixels whose filter support is valid."""
    if img.valid_count == 0:
        raise EstimatorError("image has no valid pixels")
    magnitude = edge_magnitude(img, order, sigma)
    _, _, _, radius = _derivative_kernels(sigma)
    support = ndimage.minimum_filter(img.valid.astype(np.uint8), size=2 * radius + 1, mode="nearest").astype(bool)
    if not support.any():
        raise EstimatorError(f"no pixel has a fully valid {2 * radius + 1}-pixel derivative support")
    energy = _minkowski_mean(magnitude[support], float(p))
    if not np.linalg.norm(energy) >= _EDGE_ENERGY_FLOOR:
        raise EstimatorError("zero edge energy: gray-edge is undefined on a flat image")
    return _normalized(energy, f"gray-edge-{order}")


# ---------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------
Estimator = Callable[[LinearImage, MsgpParams, BaselineParams], IlluminantEstimate]

ESTIMATORS: Dict[str, Estimator] = {
    "msgp": lambda img, p, b: estimate_msgp(img, p),
    "gp-theta": lambda img, p, b: estimate_gp(img, p, GraynessMeasure.THETA),
    "gp-sigma": lambda img, p, b: estimate_gp(img, p, GraynessMeasure.SIGMA),
    "gray-world": lambda img, p, b: estimate_gray_world(img),
    "white-patch": lambda img, p, b: estimate_white_patch(img),
    "shades-of-gray": lambda img, p, b: estimate_shades_of_gray(img, b.sog_p),
    "gray-edge-1": lambda img, p, b: estimate_gray_edge(img, 1, b.edge_p, b.edge_sigma),
    "gray-edge-2": lambda img, p, b: estimate_gray_edge(img, 2, b.edge_p, b.edge_sigma),
}


def estimate(
    method: str,
    img: LinearImage,
    params: Optional[MsgpParams] = None,
    baseline: Optional[BaselineParams] = None,
) -> IlluminantEstimate:
    """Run the named estimator and record its wall-clock time."""
    if method not in ESTIMATORS:
        raise ValueError(f"unknown method '{method}', expected one of {', '.join(METHOD_NAMES)}")
    start = time.perf_counter()
    result = ESTIMATORS[method](img, params or MsgpParams(), baseline or BaselineParams())
    result.diagnostics.runtime_ms = _elapsed_ms(start)
    return result
