"""
Synthetic patch-grid scenes with a known illuminant.

Gray patches carry a multiplicative texture shared by all three channels,
so every gray pixel stays exactly gray while still producing local contrast.
Color patches are saturated and textured independently per channel.
"""
import logging
import math
from typing import List, Optional

import numpy as np

from graypixel.models import RGB, LinearImage, SceneSpec, SyntheticScene

logger = logging.getLogger(__name__)

_GRAY_DIRECTION = np.full(3, 1.0 / math.sqrt(3.0))


def _uniform_texture(rng: np.random.Generator, amplitude: float, shape) -> np.ndarray:
    return 1.0 + amplitude * rng.uniform(-1.0, 1.0, size=shape)


def _shading(rng: np.random.Generator, height: int, width: int, amplitude: float) -> np.ndarray:
    """Smooth scalar field in [1 - amplitude, 1 + amplitude]."""
    phase_x, phase_y = rng.uniform(0.0, 2.0 * np.pi, size=2)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    field = 0.5 * np.sin(2.0 * np.pi * xx / width + phase_x) + 0.5 * np.cos(2.0 * np.pi * yy / height + phase_y)
    return 1.0 + amplitude * field


def generate_scene(spec: SceneSpec) -> SyntheticScene:
    """Render W under neutral light and I = W * L, both normalized to a peak of 1."""
    rng = np.random.default_rng(spec.seed)
    size = spec.patch_size
    height, width = spec.rows * size, spec.cols * size
    patches = spec.rows * spec.cols

    gray = np.zeros(patches, dtype=bool)
    gray[rng.permutation(patches)[: int(round(spec.gray_fraction * patches))]] = True
    shared = _uniform_texture(rng, spec.texture_amplitude, (height, width))
    low, high = spec.luminance_range

    W = np.empty((height, width, 3), dtype=np.float64)
    for index in range(patches):
        row, col = divmod(index, spec.cols)
        ys = slice(row * size, (row + 1) * size)
        xs = slice(col * size, (col + 1) * size)
        luminance = rng.uniform(low, high)
        if gray[index]:
            patch = np.repeat((luminance * shared[ys, xs])[..., np.newaxis], 3, axis=2)
            if spec.gray_tint > 0:
                patch = patch * _uniform_texture(rng, spec.gray_tint, (size, size, 3))
        else:
            # minor channels stay at or above 0.15 so W survives 16-bit quantization
            color = rng.uniform(0.15, 0.3, size=3)
            color[rng.integers(3)] = 1.0
            patch = luminance * color * _uniform_texture(rng, spec.color_texture, (size, size, 3))
        W[ys, xs] = patch

    if spec.shading_amplitude > 0:
        W *= _shading(rng, height, width, spec.shading_amplitude)[..., np.newaxis]
    W /= W.max()

    L = np.asarray(spec.illuminant, dtype=np.float64)
    I = W * L
    I /= I.max()

    valid = np.ones((height, width), dtype=bool)
    logger.debug(f"Scene seed={spec.seed}: {width}x{height}, {int(gray.sum())} of {patches} patches gray")
    return SyntheticScene(
        W=LinearImage(data=W, valid=valid),
        I=LinearImage(data=I, valid=valid),
        L=tuple(float(c) for c in L),
    )


def random_illuminant(rng: np.random.Generator, max_angle_deg: float = 30.0) -> RGB:
    """Unit illuminant at a uniformly drawn angle up to max_angle_deg from neutral."""
    if not 0.0 <= max_angle_deg <= 30.0:
        raise ValueError("max_angle_deg must lie in [0, 30] to keep every channel positive")
    direction = rng.normal(size=3)
    direction -= direction.dot(_GRAY_DIRECTION) * _GRAY_DIRECTION
    direction /= np.linalg.norm(direction)
    angle = math.radians(rng.uniform(0.0, max_angle_deg))
    L = math.cos(angle) * _GRAY_DIRECTION + math.sin(angle) * direction
    return tuple(float(c) for c in L / np.linalg.norm(L))


def legacy_contrast_scene(seed: int = 0, illuminant: RGB = (1.0, 1.0, 1.0)) -> SceneSpec:
    """
    Gray patches of mixed luminance with a slight per-channel tint next to
    nearly flat saturated color patches.

    Flat color pixels score low under the luminance-entangled measure and
    high under the angular one.
    """
    return SceneSpec(
        seed=seed,
        gray_fraction=0.5,
        luminance_range=(0.1, 0.9),
        shading_amplitude=0.0,
        texture_amplitude=0.1,
        gray_tint=0.01,
        color_texture=5e-5,
        illuminant=illuminant,
    )


def bundled_specs(
    count: int,
    seed: int = 0,
    preset: str = "default",
    gray_fraction: float = 0.5,
    illuminant: Optional[RGB] = None,
) -> List[SceneSpec]:
    """Seeded scene recipes; illuminants are drawn within 30 degrees of neutral unless fixed."""
    rng = np.random.default_rng(seed)
    specs = []
    for offset in range(count):
        L = illuminant if illuminant is not None else random_illuminant(rng)
        if preset == "legacy":
            specs.append(legacy_contrast_scene(seed + offset, L))
        else:
            specs.append(SceneSpec(seed=seed + offset, gray_fraction=gray_fraction, illuminant=L))
    return specs
