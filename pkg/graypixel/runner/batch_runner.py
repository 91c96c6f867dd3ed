import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, List, Optional, TypeVar

import numpy as np

from graypixel.errors import GrayPixelError
from graypixel.models import (
    GraynessMeasure,
    IlluminantEstimate,
    ImageRecord,
    LinearImage,
    ManifestEntry,
    RunConfig,
)
from graypixel.services.estimator import detect_gray_pixels, estimate, estimate_from_pixels
from graypixel.services.image_io import apply_mask, load_linear_image, save_mask_png
from graypixel.services.metrics import angular_error
from graypixel.services.modeseek import cluster

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

# errors that fail a single image without stopping the batch
IMAGE_ERRORS = (GrayPixelError, ValueError, OSError)

_GP_MEASURES = {"gp-theta": GraynessMeasure.THETA, "gp-sigma": GraynessMeasure.SIGMA}


class BatchRunner:
    """
    Runs the per-image pipeline over manifest entries on a bounded worker pool.

    Results always follow the input order, whatever the completion order.
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.jobs = config.jobs
        if config.save_gray_map and config.method not in ("msgp", *_GP_MEASURES):
            logger.warning(f"--save-gray-map has no effect for method '{config.method}'")

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
        items = list(items)
        if self.jobs == 1 or len(items) <= 1:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.jobs) as pool:
            return list(pool.map(fn, items))

    def load(self, entry: ManifestEntry) -> LinearImage:
        """Decode an entry and apply its mask rectangles."""
        img = load_linear_image(entry.image_path, entry.decode_options())
        return apply_mask(img, entry.mask_rects)

    def _gray_map_path(self, entry: ManifestEntry) -> Optional[Path]:
        if not self.config.save_gray_map or self.config.out is None:
            return None
        return Path(self.config.out) / f"{entry.image_path.stem}_graymap.png"

    def _estimate(self, entry: ManifestEntry, img: LinearImage) -> IlluminantEstimate:
        method = self.config.method
        map_path = self._gray_map_path(entry)
        if map_path is None or method not in ("msgp", *_GP_MEASURES):
            return estimate(method, img, self.config.params, self.config.baseline)

        # S is marked 128, members of the winning mode 255
        canvas = np.zeros((img.height, img.width), dtype=np.uint8)
        if method == "msgp":
            pixels = detect_gray_pixels(img, self.config.params)
            modes = cluster(pixels, self.config.params)
            result = estimate_from_pixels(pixels, self.config.params, result=modes)
            canvas[pixels.ys, pixels.xs] = 128
            winners = modes.assignments == 0
            canvas[pixels.ys[winners], pixels.xs[winners]] = 255
        else:
            pixels = detect_gray_pixels(img, self.config.params, _GP_MEASURES[method])
            result = estimate(method, img, self.config.params, self.config.baseline)
            canvas[pixels.ys, pixels.xs] = 255
        save_mask_png(map_path, canvas)
        return result

    def run_entry(self, entry: ManifestEntry) -> ImageRecord:
        start = time.perf_counter()
        record = ImageRecord(
            path=str(entry.image_path),
            method=self.config.method,
            ground_truth=entry.ground_truth,
            camera=entry.camera,
        )
        try:
            img = self.load(entry)
            result = self._estimate(entry, img)
        except IMAGE_ERRORS as e:
            logger.error(f"Failed on {entry.image_path}: {e}")
            record.status = "failed"
            record.error = f"{type(e).__name__}: {e}"
            return record

        record.illuminant = result.L
        record.selected_pixels = result.diagnostics.selected_pixels
        record.modes = result.diagnostics.modes
        record.densest_density = result.diagnostics.densest_density
        if entry.ground_truth is not None:
            record.angular_error = angular_error(result.L, entry.ground_truth)
        if self.config.timings:
            record.runtime_ms = (time.perf_counter() - start) * 1000.0
        logger.info(
            f"{entry.image_path.name}: {self.config.method} -> "
            f"({result.L[0]:.4f}, {result.L[1]:.4f}, {result.L[2]:.4f}), "
            f"{record.selected_pixels} pixels, {record.modes} modes"
        )
        return record

    def run(self, entries: Iterable[ManifestEntry]) -> List[ImageRecord]:
        records = self.map(self.run_entry, entries)
        failed = sum(r.status == "failed" for r in records)
        logger.info(f"Processed {len(records)} images, {failed} failed")
        return records

