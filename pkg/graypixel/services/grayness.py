"""
Grayness measures on log-domain contrast vectors.

All measures read component magnitudes |delta|: LoG responses are signed, and
the angular measure is defined through the L1 norm.
"""
import logging
import math
from typing import Optional

import numpy as np
from scipy import ndimage

from graypixel.models import MAX_THETA, ContrastMap, GraynessMap, GraynessMeasure

logger = logging.getLogger(__name__)

_SQRT3 = math.sqrt(3.0)


# ---------------------------------------------------------------------
# Vectorized fields
# ---------------------------------------------------------------------
def theta_field(delta: np.ndarray) -> np.ndarray:
    """Angle between |delta| and (1, 1, 1) along the last axis."""
    a = np.abs(delta)
    dx = a[..., 1] - a[..., 2]
    dy = a[..., 2] - a[..., 0]
    dz = a[..., 0] - a[..., 1]
    # atan2(|a x g|, a . g) equals arccos((1/sqrt3) |a|_1 / |a|_2) and stays exact at theta = 0
    cross = np.sqrt(dx * dx + dy * dy + dz * dz)
    return np.clip(np.arctan2(cross, a.sum(axis=-1)), 0.0, MAX_THETA)


def sigma_field(delta: np.ndarray) -> np.ndarray:
    """sqrt((1/3) sum_i (a_i - mean)^2 / mean) of a = |delta|; NaN where the mean is 0."""
    a = np.abs(delta)
    mean = a.mean(axis=-1)
    spread = ((a - mean[..., np.newaxis]) ** 2).sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(mean > 0, np.sqrt(spread / (3.0 * mean)), np.nan)


def theta_approx_field(delta: np.ndarray) -> np.ndarray:
    """sqrt(1 - (1/sqrt3) |a|_1 / |a|_2), evaluated through the sum of squared deviations."""
    a = np.abs(delta)
    alpha = np.sqrt((a * a).sum(axis=-1))
    beta = a.sum(axis=-1) / 3.0
    spread = ((a - beta[..., np.newaxis]) ** 2).sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.sqrt(spread / (alpha * (alpha + _SQRT3 * beta)))


def gamma_field(delta: np.ndarray) -> np.ndarray:
    a = np.abs(delta)
    alpha = np.sqrt((a * a).sum(axis=-1))
    beta = a.sum(axis=-1) / 3.0
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.sqrt(alpha * (alpha + _SQRT3 * beta) / (3.0 * beta))


# ---------------------------------------------------------------------
# Scalar measures
# ---------------------------------------------------------------------
def _as_vector(delta) -> np.ndarray:
    vec = np.asarray(delta, dtype=np.float64)
    if vec.shape != (3,):
        raise ValueError(f"contrast vector must have 3 components, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise ValueError("contrast vector must be finite")
    return vec


def grayness_theta(delta) -> float:
    """Angular grayness in radians, in [0, arccos(1/sqrt3)]."""
    vec = _as_vector(delta)
    if not np.linalg.norm(vec) > 0:
        raise ValueError("angular grayness is undefined for a zero contrast vector")
    return float(theta_field(vec))


def grayness_sigma(delta) -> float:
    """Legacy variance-based grayness; depends on contrast magnitude."""
    vec = _as_vector(delta)
    if not np.abs(vec).mean() > 0:
        raise ValueError("legacy grayness is undefined when the mean contrast magnitude is 0")
    return float(sigma_field(vec))


def grayness_theta_approx(delta) -> float:
    vec = _as_vector(delta)
    if not np.linalg.norm(vec) > 0:
        raise ValueError("approximate angular grayness is undefined for a zero contrast vector")
    return float(theta_approx_field(vec))


def gamma_factor(delta) -> float:
    """
    Luminance-dependent factor linking the two measures:
    grayness_sigma = gamma * grayness_theta_approx.
    """
    vec = _as_vector(delta)
    if not np.abs(vec).sum() > 0:
        raise ValueError("gamma is undefined when the mean contrast magnitude is 0")
    return float(gamma_field(vec))


# ---------------------------------------------------------------------
# Maps
# ---------------------------------------------------------------------
def masked_mean(values: np.ndarray, valid: np.ndarray, window: int) -> np.ndarray:
    """Mean of valid neighbours in a window x window box; 0 outside the mask."""
    weights = valid.astype(np.float64)
    num = ndimage.uniform_filter(np.where(valid, values, 0.0), size=window, mode="constant")
    den = ndimage.uniform_filter(weights, size=window, mode="constant")
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(valid & (den > 0), num / den, 0.0)


def grayness_map(
    cmap: ContrastMap,
    measure: GraynessMeasure = GraynessMeasure.THETA,
    contrast_floor: float = 1e-4,
    smooth_window: int = 7,
    luminance: Optional[np.ndarray] = None,
) -> GraynessMap:
    """
    Score every pixel of a contrast map.

    Pixels whose contrast norm is below contrast_floor are invalid. Scores are
    locally averaged over valid neighbours. For the legacy measure, the averaged
    score is then divided by the locally averaged luminance when one is given,
    which penalizes dark pixels.
    """
    measure = GraynessMeasure(measure)
    if smooth_window < 1 or smooth_window % 2 == 0:
        raise ValueError(f"smooth_window must be a positive odd number, got {smooth_window}")

    norm = np.linalg.norm(cmap.delta, axis=-1)
    valid = cmap.valid & (norm >= contrast_floor)

    if measure is GraynessMeasure.THETA:
        g = theta_field(cmap.delta)
    else:
        g = sigma_field(cmap.delta)
        valid &= np.isfinite(g)
    g = np.where(valid, g, 0.0)

    if smooth_window > 1:
        g = masked_mean(g, valid, smooth_window)

    if measure is GraynessMeasure.SIGMA and luminance is not None:
        lum = ndimage.uniform_filter(np.asarray(luminance, dtype=np.float64), size=smooth_window, mode="nearest")
        valid &= lum > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.where(valid, g / lum, 0.0)

    upper = MAX_THETA if measure is GraynessMeasure.THETA else np.inf
    g = np.clip(g, 0.0, upper)
    logger.debug(f"Grayness ({measure.value}): {int(valid.sum())} valid pixels")
    return GraynessMap(g=g, valid=valid, measure=measure)
