"""Deterministic synthetic test scenes, so nothing depends on third-party photos.

All scenes are integer-valued in [0, 255], i.e. exactly representable as 8-bit PGM.
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .imaging import Image


def ramp(size: int) -> Image:
    yy, xx = np.mgrid[0:size, 0:size]
    return Image(np.round(20.0 + 200.0 * (xx + yy) / max(2 * (size - 1), 1)))


def blobs(size: int, seed: int = 7) -> Image:
    """Sum of a few Gaussian blobs on a mid-gray background."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    img = np.full((size, size), 60.0)
    for _ in range(6):
        cy, cx = rng.uniform(0.15, 0.85, 2) * size
        s = rng.uniform(0.06, 0.18) * size
        amp = rng.uniform(-40.0, 120.0)
        img += amp * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * s * s))
    return Image(np.clip(np.round(img), 0, 255))


def checkerboard(size: int, cell: int = 8, low: float = 40.0, high: float = 215.0) -> Image:
    yy, xx = np.mgrid[0:size, 0:size]
    return Image(np.where(((yy // cell) + (xx // cell)) % 2 == 0, low, high).astype(np.float64))


def scene(size: int) -> Image:
    """Smooth shading with a disc, a bar and soft blobs: edges plus texture."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) / size
    img = 0.6 * blobs(size, seed=3).data + 40.0 * xx
    disc = (xx - 0.35) ** 2 + (yy - 0.4) ** 2 < 0.18**2
    img[disc] = 0.5 * img[disc] + 110.0
    bar = (np.abs(yy - 0.75) < 0.06) & (xx > 0.2) & (xx < 0.85)
    img[bar] = 30.0
    return Image(np.clip(np.round(img), 0, 255))


BUILTINS = {"ramp": ramp, "blobs": blobs, "checkerboard": checkerboard, "scene": scene}


def from_name(spec: str) -> Image:
    """Resolve ``builtin:<name>:<size>``, e.g. ``builtin:scene:128``."""
    parts = spec.split(":")
    if len(parts) != 3 or parts[0] != "builtin" or parts[1] not in BUILTINS:
        raise ConfigError("image", f"unknown builtin image {spec!r}; expected builtin:<{'|'.join(BUILTINS)}>:<size>")
    try:
        size = int(parts[2])
    except ValueError:
        raise ConfigError("image", f"bad size in {spec!r}") from None
    if size < 2:
        raise ConfigError("image", f"size must be >= 2 in {spec!r}")
    return BUILTINS[parts[1]](size)
