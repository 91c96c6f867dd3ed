# graypixel/services/__init__.py
"""
Services Module
"""

from graypixel.services.estimator import (
    correct_image,
    detect_gray_pixels,
    estimate,
    estimate_gp,
    estimate_gray_edge,
    estimate_msgp,
    estimate_shades_of_gray,
)
from graypixel.services.image_io import load_linear_image, load_manifest
from graypixel.services.metrics import angular_error, summarize

__all__ = [
    "angular_error",
    "correct_image",
    "detect_gray_pixels",
    "estimate",
    "estimate_gp",
    "estimate_gray_edge",
    "estimate_msgp",
    "estimate_shades_of_gray",
    "load_linear_image",
    "load_manifest",
    "summarize",
]
