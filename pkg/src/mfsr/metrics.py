"""Reconstruction quality and noise statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d

from .errors import DimensionError, InputError
from .imaging import Image

PEAK = 255.0

# Second-difference mask that cancels locally linear intensity (Immerkaer 1996).
_NOISE_MASK = np.array([[1.0, -2.0, 1.0], [-2.0, 4.0, -2.0], [1.0, -2.0, 1.0]])
_NOISE_GAIN = math.sqrt(float(np.sum(_NOISE_MASK**2)))
_MAD_TO_SIGMA = 1.4826


@dataclass(frozen=True)
class QualityReport:
    """PSNR/MSE pair. ``psnr_db`` is ``None`` exactly when ``mse == 0``."""

    psnr_db: float | None
    mse: float
    n_pixels: int

    @property
    def infinite(self) -> bool:
        return self.psnr_db is None

    def sort_key(self) -> float:
        return math.inf if self.psnr_db is None else self.psnr_db

    def format_psnr(self, digits: int = 2) -> str:
        return "inf" if self.psnr_db is None else f"{self.psnr_db:.{digits}f}"


def _check_same(a: Image, b: Image):
    if a.shape != b.shape:
        raise DimensionError(f"image shapes differ: {a.shape} vs {b.shape}")


def mse(a: Image, b: Image) -> float:
    _check_same(a, b)
    return float(np.mean(np.square(a.data - b.data)))


def psnr_from_mse(value: float) -> float | None:
    if value == 0:
        return None
    return 10.0 * math.log10(PEAK**2 / value)


def psnr(reference: Image, test: Image) -> QualityReport:
    err = mse(reference, test)
    return QualityReport(psnr_from_mse(err), err, reference.size)


def sigma2_from_snr(clean: Image, snr_db: float) -> float:
    """Noise variance giving ``snr_db`` against the mean-square power of ``clean``."""
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return float(np.mean(np.square(clean.data)) / 10.0 ** (snr_db / 10.0))


def estimate_noise_variance(img: Image) -> float:
    """Robust AWGN variance estimate from high-pass residuals.

    The image is filtered with a 3x3 second-difference mask; the scaled
    median absolute deviation of the response, divided by the mask's noise
    gain, estimates the noise standard deviation.
    """
    if img.height < 3 or img.width < 3:
        raise InputError(f"noise estimation needs at least 3x3 pixels, got {img.width}x{img.height}")
    resp = convolve2d(img.data, _NOISE_MASK, mode="valid")
    mad = np.median(np.abs(resp - np.median(resp)))
    return float((_MAD_TO_SIGMA * mad / _NOISE_GAIN) ** 2)
