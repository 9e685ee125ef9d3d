"""Raster type and bilinear resampling primitives.

Pixel ``(i, j)`` (row ``i``, column ``j``) has its center at the continuous
coordinate ``(x=j, y=i)``. Sampling outside the raster replicates the edge.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import DimensionError, InputError

if TYPE_CHECKING:
    from .degradation import ObservationSet


@dataclass(frozen=True, eq=False)
class Image:
    """Immutable grayscale raster stored as a ``(height, width)`` float64 array."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError(f"image data must be a non-empty 2-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image data contains NaN or Inf")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def to_array(self) -> np.ndarray:
        """Return a writable copy of the pixel data."""
        return self.data.copy()

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    def __repr__(self):
        return f"Image(width={self.width}, height={self.height})"


def new_image(width: int, height: int, fill: float = 0.0) -> Image:
    if int(width) != width or int(height) != height or width < 1 or height < 1:
        raise DimensionError(f"image dimensions must be positive integers, got {width}x{height}")
    return Image(np.full((int(height), int(width)), float(fill)))


def bilinear_weights(xs, ys, width: int, height: int):
    """Vectorised bilinear stencil with edge replication.

    Returns ``(indices, weights)``, each of shape ``xs.shape + (4,)``: flat
    row-major pixel indices and the matching interpolation weights. Weights
    for a sample always sum to one.
    """
    xs = np.clip(np.asarray(xs, dtype=np.float64), 0.0, width - 1)
    ys = np.clip(np.asarray(ys, dtype=np.float64), 0.0, height - 1)
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = xs - x0
    fy = ys - y0
    x1 = np.minimum(x0 + 1, width - 1)
    y1 = np.minimum(y0 + 1, height - 1)
    indices = np.stack([y0 * width + x0, y0 * width + x1, y1 * width + x0, y1 * width + x1], axis=-1)
    weights = np.stack([(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy], axis=-1)
    return indices, weights


def bilinear_sample(img: Image, x: float, y: float) -> float:
    """Interpolate ``img`` at continuous coordinate ``(x, y)``."""
    idx, w = bilinear_weights(x, y, img.width, img.height)
    return float(np.dot(img.data.ravel()[idx], w))


def resample(arr: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample a 2-D array at every coordinate pair in ``xs``/``ys``."""
    h, w = arr.shape
    idx, wt = bilinear_weights(xs, ys, w, h)
    return np.sum(arr.ravel()[idx] * wt, axis=-1)


def initial_estimate(obs: ObservationSet, factors: tuple[int, int]) -> Image:
    """Starting HR image for the iterative solvers.

    Each LR frame is bilinearly upsampled by ``factors = (L1, L2)``
    (rows, columns), moved back by its known shift, and the frames are
    averaged. The result is clamped to [0, 255].
    """
    if len(obs.frames) == 0:
        raise InputError("observation set has no frames")
    l1, l2 = factors
    n1, n2 = obs.hr_dims
    yy, xx = np.mgrid[0:n1, 0:n2].astype(np.float64)
    acc = np.zeros((n1, n2))
    for frame in obs.frames:
        dx, dy = frame.operator.shift
        # HR pixel p sees the frame content that was sampled at p + shift; an LR
        # pixel covers HR rows l1*i .. l1*i + l1 - 1, centered at l1*i + (l1-1)/2.
        src_x = (xx - dx - (l2 - 1) / 2.0) / l2
        src_y = (yy - dy - (l1 - 1) / 2.0) / l1
        acc += resample(frame.image.data, src_x, src_y)
    return Image(np.clip(acc / len(obs.frames), 0.0, 255.0))
