import logging
import math
from typing import Optional

import numpy as np

from graypixel.config.settings import settings
from graypixel.errors import NoGrayPixelsError
from graypixel.models import GraynessMap, LinearImage, PixelSet

logger = logging.getLogger(__name__)


def selection_size(valid_count: int, n_percent: float) -> int:
    """max(1, ceil(valid_count * n_percent / 100)), robust to float noise in the product."""
    return max(1, math.ceil(round(valid_count * n_percent / 100.0, 9)))


def select_top_n(
    gmap: GraynessMap,
    img: LinearImage,
    n_percent: float,
    rank_decimals: Optional[int] = None,
) -> PixelSet:
    """
    Keep the n_percent grayest valid pixels.

    Scores are rounded to rank_decimals before ranking so float noise cannot
    reorder equal scores; ties are broken by raster order (row, then column).
    """
    if not (0.0 < n_percent <= 100.0):
        raise ValueError(f"n_percent must lie in (0, 100], got {n_percent}")
    if gmap.g.shape != img.data.shape[:2]:
        raise ValueError("grayness map and image sizes differ")
    decimals = settings.rank_decimals if rank_decimals is None else rank_decimals

    candidates = gmap.valid & img.valid & np.any(img.data > 0.0, axis=-1)
    flat = np.flatnonzero(candidates)
    if flat.size == 0:
        raise NoGrayPixelsError("no valid pixels with nonzero contrast to select gray pixels from")

    scores = np.round(gmap.g.ravel()[flat], decimals)
    count = selection_size(flat.size, n_percent)

    if count < flat.size:
        threshold = np.partition(scores, count - 1)[count - 1]
        below = np.flatnonzero(scores < threshold)
        # flat is in raster order, so the first ties are the earliest pixels
        ties = np.flatnonzero(scores == threshold)[: count - below.size]
        keep = np.concatenate([below, ties])
    else:
        keep = np.arange(flat.size)

    order = np.lexsort((flat[keep], scores[keep]))
    keep = keep[order]
    ys, xs = np.divmod(flat[keep], img.width)
    rgb = img.data.reshape(-1, 3)[flat[keep]]
    logger.debug(f"Selected {keep.size} of {flat.size} candidate pixels ({n_percent}%)")
    return PixelSet(xs=xs, ys=ys, rgb=rgb, grayness=scores[keep])
