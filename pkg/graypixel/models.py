import math
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from graypixel.config.settings import settings

RGB = Tuple[float, float, float]

# Upper bound of the angular grayness: the angle between (1, 0, 0) and (1, 1, 1).
MAX_THETA = math.acos(1.0 / math.sqrt(3.0))

METHOD_NAMES = (
    "msgp",
    "gp-theta",
    "gp-sigma",
    "gray-world",
    "white-patch",
    "shades-of-gray",
    "gray-edge-1",
    "gray-edge-2",
)


def _unit(vec: RGB) -> RGB:
    norm = math.sqrt(sum(c * c for c in vec))
    if not norm > 0.0:
        raise ValueError("vector must have strictly positive norm")
    return tuple(float(c) / norm for c in vec)


class GraynessMeasure(str, Enum):
    """Per-pixel grayness function"""
    THETA = "theta"
    SIGMA = "sigma"


class DistanceKind(str, Enum):
    """Distance used by the mean-shift kernel"""
    HYBRID = "hybrid"
    ANGLE = "angle"


class ClusterKind(str, Enum):
    """Clustering used to purify the candidate gray pixels"""
    MEANSHIFT = "meanshift"
    KMEANS = "kmeans"


class ReportFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class Command(str, Enum):
    ESTIMATE = "estimate"
    EVALUATE = "evaluate"
    SWEEP = "sweep"
    CORRECT = "correct"
    SYNTH = "synth"


class ArrayModel(BaseModel):
    """Immutable model carrying numpy arrays"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


# === Images ===

class LinearImage(ArrayModel):
    """Linear RGB image normalized to [0, 1] with a validity mask"""
    data: np.ndarray = Field(..., description="H x W x 3 float64 linear RGB in [0, 1]")
    valid: np.ndarray = Field(..., description="H x W boolean mask, False = excluded from all statistics")

    @field_validator("data", mode="before")
    @classmethod
    def _as_float(cls, v):
        return np.asarray(v, dtype=np.float64)

    @field_validator("valid", mode="before")
    @classmethod
    def _as_bool(cls, v):
        return np.asarray(v, dtype=bool)

    @model_validator(mode="after")
    def _check_layout(self):
        if self.data.ndim != 3 or self.data.shape[2] != 3:
            raise ValueError(f"expected H x W x 3 data, got shape {self.data.shape}")
        if self.data.shape[0] == 0 or self.data.shape[1] == 0:
            raise ValueError("image must contain at least one pixel")
        if self.valid.shape != self.data.shape[:2]:
            raise ValueError(f"mask shape {self.valid.shape} does not match image {self.data.shape[:2]}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("image contains non-finite values")
        if self.data.min() < 0.0 or self.data.max() > 1.0:
            raise ValueError("image values must lie in [0, 1]")
        return self

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def valid_count(self) -> int:
        return int(np.count_nonzero(self.valid))


class LogImage(ArrayModel):
    """Log-domain image, same layout as LinearImage but unbounded"""
    data: np.ndarray = Field(..., description="H x W x 3 natural-log values")
    valid: np.ndarray = Field(..., description="H x W boolean mask")

    @model_validator(mode="after")
    def _check_layout(self):
        if self.data.ndim != 3 or self.data.shape[2] != 3 or self.valid.shape != self.data.shape[:2]:
            raise ValueError("log image must be H x W x 3 with an H x W mask")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("log image contains non-finite values")
        return self


class MaskRect(BaseModel):
    """Pixel rectangle excluded from estimation (e.g. a color checker)"""
    x: int = Field(..., ge=0, description="Left column")
    y: int = Field(..., ge=0, description="Top row")
    w: int = Field(..., ge=0, description="Width in pixels")
    h: int = Field(..., ge=0, description="Height in pixels")


class DecodeOptions(BaseModel):
    """Raw-unit black level and saturation handling"""
    black_level: Optional[RGB] = Field(None, description="Per-channel offset in source units")
    saturation_level: Optional[float] = Field(None, description="Clipping point in source units")
    saturation_margin: float = Field(
        default_factory=lambda: settings.saturation_margin, gt=0.0, le=1.0,
        description="Fraction of the black-subtracted range treated as clipped",
    )


# === Dataset manifests ===

class ManifestEntry(BaseModel):
    """One image of a dataset with its ground-truth illuminant"""
    image_path: Path = Field(..., description="Image file")
    ground_truth: Optional[RGB] = Field(None, description="Unit-norm ground-truth illuminant")
    mask_rects: List[MaskRect] = Field(default_factory=list, description="Rectangles to exclude")
    black_level: Optional[RGB] = Field(None, description="Per-channel black level in raw units")
    saturation_level: Optional[float] = Field(None, description="Saturation level in raw units")
    camera: Optional[str] = Field(None, description="Camera identifier used for grouped summaries")

    @field_validator("ground_truth")
    @classmethod
    def _normalize_gt(cls, v):
        if v is None:
            return v
        if any(c < 0 for c in v):
            raise ValueError("ground truth components must be nonnegative")
        return _unit(v)

    def decode_options(self) -> DecodeOptions:
        return DecodeOptions(black_level=self.black_level, saturation_level=self.saturation_level)


class DatasetManifest(BaseModel):
    """Ordered list of dataset entries"""
    entries: List[ManifestEntry] = Field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)


# === Pipeline intermediates ===

class LoGKernel(ArrayModel):
    """Zero-DC Laplacian-of-Gaussian kernel"""
    size: int = Field(..., description="Odd window size in pixels")
    sigma: float = Field(..., description="Gaussian sigma in pixels")
    coefficients: np.ndarray = Field(..., description="size x size coefficients summing to zero")


class ContrastMap(ArrayModel):
    """Channel-wise log-domain local contrast"""
    delta: np.ndarray = Field(..., description="H x W x 3 contrast vectors")
    valid: np.ndarray = Field(..., description="H x W, True where the whole filter footprint is valid")

    @property
    def height(self) -> int:
        return int(self.delta.shape[0])

    @property
    def width(self) -> int:
        return int(self.delta.shape[1])


class GraynessMap(ArrayModel):
    """Per-pixel grayness, lower is grayer"""
    g: np.ndarray = Field(..., description="H x W grayness scores")
    valid: np.ndarray = Field(..., description="H x W validity flags")
    measure: GraynessMeasure = Field(GraynessMeasure.THETA)

    @property
    def valid_count(self) -> int:
        return int(np.count_nonzero(self.valid))


class PixelSet(ArrayModel):
    """Candidate gray pixels, sorted by grayness then raster order"""
    xs: np.ndarray = Field(..., description="Column of each pixel")
    ys: np.ndarray = Field(..., description="Row of each pixel")
    rgb: np.ndarray = Field(..., description="n x 3 linear RGB of each pixel")
    grayness: np.ndarray = Field(..., description="Grayness score of each pixel")

    @model_validator(mode="after")
    def _check(self):
        n = len(self.rgb)
        if self.rgb.ndim != 2 or self.rgb.shape[1] != 3:
            raise ValueError("rgb must be n x 3")
        if not (len(self.xs) == len(self.ys) == len(self.grayness) == n):
            raise ValueError("pixel set columns differ in length")
        if n and not np.all(np.linalg.norm(self.rgb, axis=1) > 0.0):
            raise ValueError("every pixel in the set must have positive RGB norm")
        return self

    @classmethod
    def from_rgb(cls, rgb) -> "PixelSet":
        """Build a set from bare RGB rows (coordinates are the row index)"""
        rgb = np.asarray(rgb, dtype=np.float64).reshape(-1, 3)
        idx = np.arange(len(rgb))
        return cls(xs=idx, ys=np.zeros_like(idx), rgb=rgb, grayness=np.zeros(len(rgb)))

    def __len__(self) -> int:
        return int(len(self.rgb))

    def coordinates(self) -> set:
        return set(zip(self.xs.tolist(), self.ys.tolist()))


class ModeInfo(BaseModel):
    centroid: RGB = Field(..., description="Mode position in RGB")
    members: int = Field(..., ge=0, description="Points assigned to this mode")
    density: float = Field(..., ge=0.0, description="Fraction of points within the bandwidth of the centroid")


class ModeResult(ArrayModel):
    """Modes sorted by descending density; mode 0 is the winner"""
    modes: List[ModeInfo] = Field(..., description="Modes, densest first")
    assignments: np.ndarray = Field(..., description="Mode index of each input point")


# === Estimation ===

class MsgpParams(BaseModel):
    """Parameters of the gray-pixel pipeline"""
    n_percent: float = Field(0.1, gt=0.0, le=100.0, description="Share of valid pixels kept as candidates")
    bandwidth: float = Field(1e-3, gt=0.0, description="Mean-shift kernel radius h")
    log_size: int = Field(5, ge=3, description="LoG window size")
    log_sigma: float = Field(0.5, gt=0.0, description="LoG sigma in pixels")
    epsilon: float = Field(1e-6, gt=0.0, description="Log guard")
    contrast_floor: float = Field(1e-4, gt=0.0, description="Minimum contrast norm of a candidate")
    smooth_window: int = Field(7, ge=1, description="Grayness local averaging window")
    measure: GraynessMeasure = Field(GraynessMeasure.THETA)
    distance: DistanceKind = Field(DistanceKind.HYBRID)
    cluster: ClusterKind = Field(ClusterKind.MEANSHIFT)
    k: int = Field(2, ge=1, description="K-means cluster count")
    seed: int = Field(0, ge=0, description="K-means seed")
    restarts: int = Field(10, ge=1, description="K-means restarts")
    tol: float = Field(1e-6, gt=0.0, description="Mean-shift convergence threshold")
    max_iter: int = Field(200, ge=1, description="Mean-shift iteration cap")

    @field_validator("log_size", "smooth_window")
    @classmethod
    def _odd(cls, v, info):
        if v % 2 == 0:
            raise ValueError(f"{info.field_name} must be odd")
        return v


class BaselineParams(BaseModel):
    """Parameters of the statistical baseline estimators"""
    sog_p: float = Field(6.0, ge=1.0, description="Shades-of-Gray Minkowski order")
    edge_p: float = Field(1.0, ge=1.0, description="Gray-Edge Minkowski order")
    edge_sigma: float = Field(6.0, gt=0.0, description="Gray-Edge Gaussian sigma")


class Diagnostics(BaseModel):
    selected_pixels: int = Field(0, ge=0)
    modes: int = Field(0, ge=0)
    densest_density: float = Field(0.0, ge=0.0)
    runtime_ms: float = Field(0.0, ge=0.0)


class IlluminantEstimate(BaseModel):
    """Unit-norm illuminant direction"""
    L: RGB = Field(..., description="Unit L2-norm RGB direction")
    method: str = Field(..., description="Estimator name")
    diagnostics: Diagnostics = Field(default_factory=Diagnostics)

    @field_validator("L")
    @classmethod
    def _check_unit(cls, v):
        if any(c < 0 for c in v):
            raise ValueError("illuminant components must be nonnegative")
        if abs(math.sqrt(sum(c * c for c in v)) - 1.0) > 1e-9:
            raise ValueError("illuminant must have unit norm")
        return v


# === Evaluation ===

class EvalStats(BaseModel):
    """Summary of angular errors in degrees"""
    mean: float = Field(..., ge=0.0)
    median: float = Field(..., ge=0.0)
    trimean: float = Field(..., ge=0.0)
    best25: float = Field(..., ge=0.0)
    worst25: float = Field(..., ge=0.0)
    count: int = Field(..., ge=1)


# === Synthetic scenes ===

class SceneSpec(BaseModel):
    """Recipe of a patch-grid scene with known illuminant"""
    seed: int = Field(0)
    rows: int = Field(4, ge=1)
    cols: int = Field(6, ge=1)
    patch_size: int = Field(40, ge=8, description="Patch side in pixels")
    gray_fraction: float = Field(0.5, ge=0.0, le=1.0)
    luminance_range: Tuple[float, float] = Field((0.1, 0.9))
    shading_amplitude: float = Field(0.2, ge=0.0, lt=1.0)
    texture_amplitude: float = Field(0.05, gt=0.0, lt=1.0, description="Shared multiplicative texture")
    gray_tint: float = Field(0.0, ge=0.0, lt=1.0, description="Per-channel variation on gray patches")
    color_texture: float = Field(0.05, ge=0.0, lt=1.0, description="Per-channel texture on color patches")
    illuminant: RGB = Field((1.0, 1.0, 1.0))

    @field_validator("luminance_range")
    @classmethod
    def _check_range(cls, v):
        lo, hi = v
        if not (0.0 < lo <= hi < 1.0):
            raise ValueError("luminance range must satisfy 0 < low <= high < 1")
        return v

    @field_validator("illuminant")
    @classmethod
    def _check_illuminant(cls, v):
        if any(c <= 0 for c in v):
            raise ValueError("illuminant components must be positive")
        return _unit(v)


class SyntheticScene(ArrayModel):
    W: LinearImage = Field(..., description="Scene under neutral light")
    I: LinearImage = Field(..., description="Scene under the illuminant")
    L: RGB = Field(..., description="Unit illuminant")


# === Runs and reports ===

class SweepGrid(BaseModel):
    bandwidths: List[float] = Field(default_factory=list)
    n_percents: List[float] = Field(default_factory=list)
    distances: List[DistanceKind] = Field(default_factory=list)
    ks: List[int] = Field(default_factory=list)


class RunConfig(BaseModel):
    """Fully validated command invocation"""
    command: Command
    manifest: Optional[Path] = None
    inputs: List[Path] = Field(default_factory=list)
    method: str = Field("msgp")
    params: MsgpParams = Field(default_factory=MsgpParams)
    baseline: BaselineParams = Field(default_factory=BaselineParams)
    out: Optional[Path] = None
    format: ReportFormat = Field(default_factory=lambda: ReportFormat(settings.report_format))
    jobs: int = Field(default_factory=lambda: settings.jobs, ge=1)
    illuminant: Optional[RGB] = None
    use_ground_truth: bool = False
    timings: bool = False
    save_gray_map: bool = False
    group_by_camera: bool = False
    grid: SweepGrid = Field(default_factory=SweepGrid)
    count: int = Field(10, ge=1, description="Scenes written by synth")
    seed: int = Field(0, description="First synth seed")
    preset: str = Field("default", pattern="^(default|legacy)$")
    gray_fraction: float = Field(0.5, ge=0.0, le=1.0)

    @field_validator("method")
    @classmethod
    def _known_method(cls, v):
        if v not in METHOD_NAMES:
            raise ValueError(f"unknown method '{v}', expected one of {', '.join(METHOD_NAMES)}")
        return v

    @field_validator("illuminant")
    @classmethod
    def _positive_illuminant(cls, v):
        if v is not None and any(c <= 0 for c in v):
            raise ValueError("explicit illuminant components must be positive")
        return v


class ImageRecord(BaseModel):
    """Outcome of one image in a batch"""
    path: str
    status: str = Field("ok", pattern="^(ok|failed)$")
    method: str
    illuminant: Optional[RGB] = None
    ground_truth: Optional[RGB] = None
    angular_error: Optional[float] = None
    selected_pixels: int = 0
    modes: int = 0
    densest_density: float = 0.0
    runtime_ms: Optional[float] = None
    camera: Optional[str] = None
    error: Optional[str] = None


class SweepRow(BaseModel):
    label: str
    cluster: ClusterKind
    distance: Optional[DistanceKind] = None
    bandwidth: Optional[float] = None
    k: Optional[int] = None
    n_percent: float
    stats: Optional[EvalStats] = None
    failed: int = 0


class EvaluationReport(BaseModel):
    records: List[ImageRecord] = Field(default_factory=list)
    summary: Optional[EvalStats] = None
    groups: Dict[str, EvalStats] = Field(default_factory=dict)
