"""
Image and manifest I/O.

Decodes 8/16-bit PNG and TIFF and 32-bit PFM through OpenCV, applies
black-level/saturation handling, and reads dataset manifests (CSV or JSON)
into validated ``DatasetManifest`` objects.
"""
import csv
import json
import logging
import re
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import cv2
import numpy as np
from pydantic import ValidationError

from graypixel.config.settings import settings
from graypixel.errors import ImageDecodeError, ManifestError
from graypixel.models import (
    DatasetManifest,
    DecodeOptions,
    LinearImage,
    ManifestEntry,
    MaskRect,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_INTEGER_SUFFIXES = {".png", ".tif", ".tiff"}
_BIT_DEPTHS = {np.dtype(np.uint8): 8, np.dtype(np.uint16): 16}


# ---------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------
def read_pfm(path: PathLike) -> np.ndarray:
    """Read a color PFM file into an H x W x 3 float32 RGB array, top row first."""
    raw = _imread(Path(path))
    if raw.dtype != np.float32:
        raise ImageDecodeError(f"{path}: expected 32-bit float samples, found {raw.dtype}")
    return _to_rgb(raw, path)


def write_pfm(path: PathLike, data: np.ndarray) -> None:
    """Write an H x W x 3 RGB array as a 32-bit color PFM."""
    data = np.asarray(data, dtype=np.float32)
    if data.ndim != 3 or data.shape[2] != 3:
        raise ValueError(f"PFM writer expects H x W x 3 data, got {data.shape}")
    if not cv2.imwrite(str(path), np.ascontiguousarray(data[..., ::-1])):
        raise OSError(f"Cannot write image: {path}")


def save_png16(path: PathLike, rgb: np.ndarray) -> None:
    """Write a [0, 1] RGB array as a 16-bit PNG."""
    path = Path(path)
    quantized = np.round(np.clip(rgb, 0.0, 1.0) * 65535.0).astype(np.uint16)
    if not cv2.imwrite(str(path), quantized[..., ::-1]):
        raise OSError(f"Cannot write image: {path}")


def save_mask_png(path: PathLike, mask: np.ndarray) -> None:
    """Write a boolean or label mask as an 8-bit grayscale PNG."""
    if not cv2.imwrite(str(path), np.asarray(mask, dtype=np.uint8)):
        raise OSError(f"Cannot write image: {path}")


# ---------------------------------------------------------------------
# Decoding
# ---------------------------------------------------------------------
def _imread(path: Path) -> np.ndarray:
    try:
        raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    except cv2.error as e:
        raise ImageDecodeError(f"Cannot read image: {path}: {e}") from e
    if raw is None:
        raise ImageDecodeError(f"Cannot read image: {path}")
    return raw


def _to_rgb(raw: np.ndarray, path: PathLike) -> np.ndarray:
    if raw.ndim != 3 or raw.shape[2] != 3:
        channels = 1 if raw.ndim == 2 else raw.shape[2]
        raise ImageDecodeError(f"{path}: expected 3 channels, found {channels}")
    # OpenCV returns BGR
    return np.ascontiguousarray(raw[..., ::-1])


def _read_raw(path: Path) -> Tuple[np.ndarray, Optional[int]]:
    """Return RGB samples in source units and the integer bit depth (None for float)."""
    suffix = path.suffix.lower()
    if suffix == ".pfm":
        return read_pfm(path).astype(np.float64), None
    if suffix not in _INTEGER_SUFFIXES:
        raise ImageDecodeError(f"{path}: unsupported container '{suffix}'")

    raw = _imread(path)
    if raw.dtype not in _BIT_DEPTHS:
        raise ImageDecodeError(f"{path}: unsupported sample type {raw.dtype}")
    return _to_rgb(raw, path).astype(np.float64), _BIT_DEPTHS[raw.dtype]


def linearize(raw: np.ndarray, opts: DecodeOptions, bit_depth: Optional[int] = None) -> LinearImage:
    """
    Map source-unit samples to a LinearImage.

    Integer sources default to black 0 and saturation 2^depth - 1; float sources
    default to black 0 and saturation 1.0. Clipped pixels are flagged invalid
    when a saturation level applies (integer sources, or an explicit level).
    """
    black = np.zeros(3) if opts.black_level is None else np.asarray(opts.black_level, dtype=np.float64)
    if opts.saturation_level is not None:
        saturation = float(opts.saturation_level)
    elif bit_depth is not None:
        saturation = float(2 ** bit_depth - 1)
    else:
        saturation = 1.0
    if np.any(saturation <= black):
        raise ImageDecodeError(
            f"saturation_level {saturation} must exceed black_level {tuple(black.tolist())}"
        )

    span = saturation - black
    shifted = np.maximum(raw - black, 0.0)
    data = np.clip(shifted / span, 0.0, 1.0)

    valid = np.ones(raw.shape[:2], dtype=bool)
    if bit_depth is not None or opts.saturation_level is not None:
        clipped = np.any(raw >= saturation, axis=-1) | np.any(shifted >= opts.saturation_margin * span, axis=-1)
        valid &= ~clipped
    else:
        # float maps carry no clipping point, but values past the range were clamped
        valid &= ~np.any(raw - black > span, axis=-1)
    valid &= np.all(np.isfinite(raw), axis=-1)
    data = np.where(np.isfinite(data), data, 0.0)
    return LinearImage(data=data, valid=valid)


def load_linear_image(path: PathLike, opts: Optional[DecodeOptions] = None) -> LinearImage:
    """Decode a PNG/TIFF/PFM file into a LinearImage."""
    path = Path(path)
    opts = opts or DecodeOptions()
    if not path.is_file():
        raise ImageDecodeError(f"Cannot read image: {path} does not exist")
    raw, bit_depth = _read_raw(path)
    img = linearize(raw, opts, bit_depth)
    logger.debug(
        f"Decoded {path.name}: {img.width}x{img.height}, depth={bit_depth or 'float'}, "
        f"valid={img.valid_count}"
    )
    return img


def apply_mask(img: LinearImage, rects: Sequence[MaskRect]) -> LinearImage:
    """Mark every pixel inside any rectangle invalid."""
    if not rects:
        return img
    valid = img.valid.copy()
    for rect in rects:
        if rect.x + rect.w > img.width or rect.y + rect.h > img.height:
            raise ValueError(
                f"mask rectangle ({rect.x},{rect.y},{rect.w},{rect.h}) exceeds image {img.width}x{img.height}"
            )
        valid[rect.y:rect.y + rect.h, rect.x:rect.x + rect.w] = False
    return LinearImage(data=img.data, valid=valid)


# ---------------------------------------------------------------------
# Manifests
# ---------------------------------------------------------------------
def parse_mask_rects(value: Any) -> List[MaskRect]:
    """Parse 'x,y,w,h;x,y,w,h' or a list of 4-sequences into rectangles."""
    if value is None or value == "":
        return []
    if isinstance(value, str):
        chunks = [c for c in re.split(r"\s*;\s*", value.strip()) if c]
        value = [[int(p) for p in c.split(",")] for c in chunks]
    rects = []
    for item in value:
        if isinstance(item, dict):
            rects.append(MaskRect(**item))
            continue
        if len(item) != 4:
            raise ValueError(f"mask rectangle needs 4 values, got {len(item)}")
        x, y, w, h = (int(v) for v in item)
        rects.append(MaskRect(x=x, y=y, w=w, h=h))
    return rects


def _parse_triplet(value: Any) -> Optional[Tuple[float, float, float]]:
    if value is None or value == "":
        return None
    if isinstance(value, (int, float)):
        return (float(value),) * 3
    if isinstance(value, str):
        parts = [p for p in re.split(r"[,\s]+", value.strip()) if p]
        value = [float(p) for p in parts]
    value = [float(v) for v in value]
    if len(value) == 1:
        return (value[0],) * 3
    if len(value) != 3:
        raise ValueError(f"expected 1 or 3 values, got {len(value)}")
    return tuple(value)


def _resolve(image_path: str, base: Path) -> Path:
    path = Path(image_path)
    if path.is_absolute():
        return path
    root = settings.data if settings.data is not None else base
    return Path(root) / path


def _entry_from_row(row: Dict[str, Any], line: int, base: Path) -> ManifestEntry:
    field = "image_path"
    try:
        image_path = row.get("image_path")
        if not image_path:
            raise ValueError("missing image path")
        gt = None
        gt_values = [row.get(k) for k in ("gt_r", "gt_g", "gt_b")]
        if any(v not in (None, "") for v in gt_values):
            field = "gt_r/gt_g/gt_b"
            if any(v in (None, "") for v in gt_values):
                raise ValueError("ground truth needs all of gt_r, gt_g, gt_b")
            gt = tuple(float(v) for v in gt_values)
            if not sum(c * c for c in gt) > 0.0:
                raise ValueError("ground truth has zero norm")
        field = "mask"
        rects = parse_mask_rects(row.get("mask"))
        field = "black_level"
        black = _parse_triplet(row.get("black_level"))
        field = "saturation_level"
        sat = row.get("saturation_level")
        sat = None if sat in (None, "") else float(sat)
        field = "camera"
        camera = row.get("camera") or None
        return ManifestEntry(
            image_path=_resolve(str(image_path), base),
            ground_truth=gt,
            mask_rects=rects,
            black_level=black,
            saturation_level=sat,
            camera=camera,
        )
    except ValidationError as e:
        first = e.errors()[0]
        loc = ".".join(str(p) for p in first["loc"]) or field
        raise ManifestError(first["msg"], line=line, field=loc) from e
    except (TypeError, ValueError) as e:
        raise ManifestError(str(e), line=line, field=field) from e


def _rows_from_csv(path: Path) -> Iterable[Tuple[int, Dict[str, Any]]]:
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        missing = {"image_path"} - set(reader.fieldnames)
        if missing:
            raise ManifestError("missing required column", line=1, field="image_path")
        # header is line 1
        return [(reader.line_num, row) for row in reader]


def _rows_from_json(path: Path) -> Iterable[Tuple[int, Dict[str, Any]]]:
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ManifestError(f"invalid JSON: {e.msg}", line=e.lineno) from e
    if isinstance(payload, dict):
        payload = payload.get("entries", [])
    if not isinstance(payload, list):
        raise ManifestError("expected a list of entries or an object with 'entries'")
    rows = []
    for index, item in enumerate(payload):
        if not isinstance(item, dict):
            raise ManifestError("entry must be an object", line=index + 1)
        rows.append((index + 1, item))
    return rows


def load_manifest(path: PathLike) -> DatasetManifest:
    """
    Read a CSV or JSON manifest.

    Entries keep file order; relative image paths are rooted at GRAYPIXEL_DATA
    when set, otherwise at the manifest's directory. Line numbers in errors are
    file lines for CSV and 1-based entry positions for JSON.
    """
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    if path.suffix.lower() == ".json":
        rows = _rows_from_json(path)
    else:
        rows = _rows_from_csv(path)
    entries = [_entry_from_row(row, line, path.parent) for line, row in rows]
    logger.info(f"Loaded manifest {path.name} with {len(entries)} entries")
    return DatasetManifest(entries=entries)


def write_manifest(path: PathLike, entries: Sequence[ManifestEntry]) -> None:
    """Write entries as a CSV manifest with paths relative to the manifest when possible."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["image_path", "gt_r", "gt_g", "gt_b", "mask", "black_level", "saturation_level"])
        for entry in entries:
            image_path = entry.image_path
            try:
                image_path = image_path.relative_to(path.parent)
            except ValueError:
                pass
            gt = entry.ground_truth or ("", "", "")
            mask = ";".join(f"{r.x},{r.y},{r.w},{r.h}" for r in entry.mask_rects)
            black = "" if entry.black_level is None else ",".join(repr(v) for v in entry.black_level)
            sat = "" if entry.saturation_level is None else repr(entry.saturation_level)
            writer.writerow([str(image_path), *[repr(v) if v != "" else "" for v in gt], mask, black, sat])
