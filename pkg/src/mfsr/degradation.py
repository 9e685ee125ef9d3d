"""Forward observation model: warp, motion blur, decimation, noise.

Each LR frame is ``G_k = D B M_k F + noise`` where ``M_k`` is a bilinear
sub-pixel translation, ``B`` a linear-motion blur and ``D`` a box-average
decimation. The three factors are assembled as sparse matrices and
multiplied, so every operator row holds the exact weights an LR pixel puts
on the HR pixels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, InputError, ParameterError
from .imaging import Image, bilinear_weights
from .metrics import sigma2_from_snr

NOISELESS = math.inf
"""``snr_db`` value that disables noise."""

_SNAP = 1e-12


@dataclass(frozen=True)
class DegradationSpec:
    shift: tuple[float, float] = (0.0, 0.0)
    blur_length: float = 1.0
    blur_angle: float = 0.0
    decimation: tuple[int, int] = (1, 1)
    snr_db: float = NOISELESS
    seed: int = 0

    def __post_init__(self):
        l1, l2 = self.decimation
        if int(l1) != l1 or int(l2) != l2 or l1 < 1 or l2 < 1:
            raise ParameterError(f"decimation factors must be positive integers, got {self.decimation}")
        if not self.blur_length >= 1:
            raise ParameterError(f"blur_length must be >= 1, got {self.blur_length}")
        if self.seed < 0 or int(self.seed) != self.seed:
            raise ParameterError(f"seed must be an unsigned integer, got {self.seed}")
        object.__setattr__(self, "decimation", (int(l1), int(l2)))
        object.__setattr__(self, "shift", (float(self.shift[0]), float(self.shift[1])))


@dataclass(frozen=True, eq=False)
class ObservationOperator:
    """Sparse map from the HR grid to one LR grid.

    ``matrix`` is CSR with one row per LR pixel (row-major) and one column
    per HR pixel. ``shift`` is the known ``(dx, dy)`` translation of the frame.
    """

    matrix: sp.csr_matrix
    hr_dims: tuple[int, int]
    lr_dims: tuple[int, int]
    shift: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        expected = (self.lr_dims[0] * self.lr_dims[1], self.hr_dims[0] * self.hr_dims[1])
        if self.matrix.shape != expected:
            raise DimensionError(f"operator matrix has shape {self.matrix.shape}, expected {expected}")
        m = sp.csr_matrix(self.matrix, dtype=np.float64)
        m.sort_indices()
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "_norm2", np.asarray(m.multiply(m).sum(axis=1)).ravel())

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def row_norms2(self) -> np.ndarray:
        """Squared Euclidean norm of every row."""
        return self._norm2

    def row(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """``(hr_indices, weights)`` of LR pixel ``n`` (flat row-major index)."""
        if not 0 <= n < self.n_rows:
            raise IndexError(f"LR pixel index {n} out of range [0, {self.n_rows})")
        lo, hi = self.matrix.indptr[n], self.matrix.indptr[n + 1]
        return self.matrix.indices[lo:hi], self.matrix.data[lo:hi]

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def apply(self, x: Image) -> Image:
        if x.shape != self.hr_dims:
            raise DimensionError(f"expected HR image of shape {self.hr_dims}, got {x.shape}")
        return Image((self.matrix @ x.data.ravel()).reshape(self.lr_dims))

    def adjoint(self, g: Image) -> Image:
        if g.shape != self.lr_dims:
            raise DimensionError(f"expected LR image of shape {self.lr_dims}, got {g.shape}")
        return Image((self.matrix.T @ g.data.ravel()).reshape(self.hr_dims))


class Frame(NamedTuple):
    image: Image
    operator: ObservationOperator


@dataclass(frozen=True, eq=False)
class ObservationSet:
    frames: list[Frame]
    sigma2: float
    hr_dims: tuple[int, int]

    def __post_init__(self):
        frames = [Frame(*f) for f in self.frames]
        if self.sigma2 < 0:
            raise ParameterError(f"sigma2 must be >= 0, got {self.sigma2}")
        for k, (img, op) in enumerate(frames):
            if op.hr_dims != tuple(self.hr_dims):
                raise DimensionError(f"frame {k}: operator HR dims {op.hr_dims} != {self.hr_dims}")
            if img.shape != op.lr_dims:
                raise DimensionError(f"frame {k}: image shape {img.shape} != operator LR dims {op.lr_dims}")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "hr_dims", tuple(self.hr_dims))

    def __len__(self):
        return len(self.frames)

    @property
    def shifts(self) -> list[tuple[float, float]]:
        return [f.operator.shift for f in self.frames]

    def fingerprint(self) -> bytes:
        """Raw bytes of all frame data; equal sets have equal fingerprints."""
        parts = [np.float64(self.sigma2).tobytes()]
        for img, op in self.frames:
            parts += [img.data.tobytes(), np.array(op.shift).tobytes(), op.matrix.data.tobytes()]
        return b"".join(parts)


def build_blur_kernel(length: float, angle: float) -> list[tuple[int, int, float]]:
    """Rasterize a linear-motion PSF as ``(di, dj, weight)`` taps.

    ``round(length)`` samples are placed at unit spacing along a segment
    centered on the origin, at ``angle`` degrees counter-clockwise from the
    +x axis (rows grow downward, so the row offset is ``-t*sin``). Each
    sample is splatted bilinearly onto the integer grid.
    """
    if not length >= 1:
        raise ParameterError(f"blur length must be >= 1, got {length}")
    n_taps = max(1, int(round(length)))
    theta = math.radians(angle)
    ts = np.linspace(-(length - 1) / 2.0, (length - 1) / 2.0, n_taps)
    acc: dict[tuple[int, int], float] = {}
    for t in ts:
        dj = t * math.cos(theta)
        di = -t * math.sin(theta)
        # Snap near-integer positions so that e.g. cos(90 deg) ~ 6e-17 splats cleanly.
        dj = round(dj) if abs(dj - round(dj)) < _SNAP else dj
        di = round(di) if abs(di - round(di)) < _SNAP else di
        i0, j0 = math.floor(di), math.floor(dj)
        fi, fj = di - i0, dj - j0
        for oi, wi in ((0, 1 - fi), (1, fi)):
            for oj, wj in ((0, 1 - fj), (1, fj)):
                w = wi * wj
                if w > 0:
                    key = (i0 + oi, j0 + oj)
                    acc[key] = acc.get(key, 0.0) + w
    total = sum(acc.values())
    return [(di, dj, w / total) for (di, dj), w in sorted(acc.items())]


def warp_matrix(hr_dims, shift) -> sp.csr_matrix:
    """Bilinear translation: output pixel ``(x, y)`` samples the input at ``(x+dx, y+dy)``."""
    n1, n2 = hr_dims
    dx, dy = shift
    yy, xx = np.mgrid[0:n1, 0:n2].astype(np.float64)
    idx, w = bilinear_weights(xx + dx, yy + dy, n2, n1)
    rows = np.repeat(np.arange(n1 * n2), 4)
    return sp.csr_matrix((w.ravel(), (rows, idx.ravel())), shape=(n1 * n2, n1 * n2))


def blur_matrix(hr_dims, kernel) -> sp.csr_matrix:
    """Convolution with ``kernel`` under edge replication."""
    n1, n2 = hr_dims
    ii, jj = np.mgrid[0:n1, 0:n2]
    rows, cols, vals = [], [], []
    out = (ii * n2 + jj).ravel()
    for di, dj, w in kernel:
        si = np.clip(ii - di, 0, n1 - 1)
        sj = np.clip(jj - dj, 0, n2 - 1)
        rows.append(out)
        cols.append((si * n2 + sj).ravel())
        vals.append(np.full(out.size, w))
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n1 * n2, n1 * n2)
    )


def decimation_matrix(hr_dims, factors) -> sp.csr_matrix:
    """``L1 x L2`` box average."""
    n1, n2 = hr_dims
    l1, l2 = factors
    if n1 % l1 or n2 % l2:
        raise DimensionError(f"HR dims {hr_dims} not divisible by decimation {factors}")
    m1, m2 = n1 // l1, n2 // l2
    ii, jj = np.mgrid[0:n1, 0:n2]
    rows = ((ii // l1) * m2 + jj // l2).ravel()
    cols = (ii * n2 + jj).ravel()
    return sp.csr_matrix((np.full(rows.size, 1.0 / (l1 * l2)), (rows, cols)), shape=(m1 * m2, n1 * n2))


def build_operator(spec: DegradationSpec, hr_dims) -> ObservationOperator:
    n1, n2 = (int(d) for d in hr_dims)
    l1, l2 = spec.decimation
    if n1 < 1 or n2 < 1:
        raise DimensionError(f"HR dims must be positive, got {hr_dims}")
    if n1 % l1 or n2 % l2:
        raise DimensionError(f"HR dims {hr_dims} not divisible by decimation {spec.decimation}")
    D = decimation_matrix((n1, n2), spec.decimation)
    B = blur_matrix((n1, n2), build_blur_kernel(spec.blur_length, spec.blur_angle))
    M = warp_matrix((n1, n2), spec.shift)
    H = (D @ B @ M).tocsr()
    H.eliminate_zeros()
    return ObservationOperator(H, (n1, n2), (n1 // l1, n2 // l2), spec.shift)


def apply(op: ObservationOperator, x: Image) -> Image:
    return op.apply(x)


def apply_adjoint(op: ObservationOperator, g: Image) -> Image:
    return op.adjoint(g)


def add_awgn(img: Image, snr_db: float, seed) -> tuple[Image, float]:
    """Add white Gaussian noise at ``snr_db`` relative to ``mean(img**2)``.

    ``seed`` is an int or a ``numpy.random.Generator``. The output is not
    clamped. Returns the noisy image and the noise variance used.
    """
    sigma2 = sigma2_from_snr(img, snr_db)
    if sigma2 == 0.0:
        return img, 0.0
    rng = np.random.default_rng(seed)
    return Image(img.data + rng.normal(0.0, math.sqrt(sigma2), img.shape)), sigma2


def draw_shift(seed: int, k: int, shift_range: float) -> tuple[float, float]:
    rng = np.random.default_rng([seed, k, 0])
    dx, dy = rng.uniform(-shift_range, shift_range, size=2)
    return float(dx), float(dy)


def synthesize(
    hr: Image,
    K: int,
    base_spec: DegradationSpec,
    shift_range: float = 10.0,
    shifts=None,
) -> ObservationSet:
    """Simulate ``K`` LR frames of ``hr``.

    Frame ``k`` gets a shift drawn uniformly from ``[-shift_range,
    shift_range]^2`` (or ``shifts[k]`` when given) and noise from its own
    seeded stream. The noise variance is fixed by frame 0's clean signal
    power and shared by all frames.
    """
    if K < 1:
        raise ParameterError(f"frame count must be >= 1, got {K}")
    if shifts is not None and len(shifts) != K:
        raise InputError(f"got {len(shifts)} shifts for {K} frames")
    clean = []
    for k in range(K):
        shift = tuple(shifts[k]) if shifts is not None else draw_shift(base_spec.seed, k, shift_range)
        op = build_operator(replace(base_spec, shift=shift), hr.shape)
        clean.append((op.apply(hr), op))
    sigma2 = sigma2_from_snr(clean[0][0], base_spec.snr_db)
    frames = []
    for k, (g, op) in enumerate(clean):
        if sigma2 > 0:
            rng = np.random.default_rng([base_spec.seed, k, 1])
            g = Image(g.data + rng.normal(0.0, math.sqrt(sigma2), g.shape))
        frames.append(Frame(g, op))
    return ObservationSet(frames, sigma2, hr.shape)
