"""Projection onto convex sets: per-pixel data consistency plus amplitude bounds."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .degradation import ObservationOperator, ObservationSet
from .errors import DimensionError, InputError, NumericalError, ParameterError
from .imaging import Image
from .metrics import psnr

log = logging.getLogger(__name__)

AMPLITUDE_MIN = 0.0
AMPLITUDE_MAX = 255.0


@dataclass(frozen=True)
class PocsConfig:
    phi0_confidence: float = 1.0
    phi0_floor: float = 0.0
    relaxation: float = 1.0
    max_iters: int = 50
    rel_tol: float = 1e-4

    def __post_init__(self):
        if self.phi0_confidence < 0 or self.phi0_floor < 0:
            raise ParameterError("phi0_confidence and phi0_floor must be >= 0")
        if not 0 < self.relaxation <= 1:
            raise ParameterError(f"relaxation must lie in (0, 1], got {self.relaxation}")
        if self.max_iters < 1:
            raise ParameterError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.rel_tol < 0:
            raise ParameterError(f"rel_tol must be >= 0, got {self.rel_tol}")


@dataclass
class TraceRecord:
    iteration: int
    violated: int
    rel_change: float
    psnr_db: float | None = None
    cost: float | None = None


@dataclass
class ReconstructionTrace:
    records: list[TraceRecord] = field(default_factory=list)
    skipped_rows: int = 0
    lam: float | None = None

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def costs(self) -> list[float]:
        return [r.cost for r in self.records if r.cost is not None]

    def append(self, record: TraceRecord):
        if record.rel_change < 0:
            raise ValueError("relative change must be nonnegative")
        self.records.append(record)


@njit(cache=True)
def _residual(x, indices, weights, lo, hi, g_n):
    acc = 0.0
    for p in range(lo, hi):
        acc += weights[p] * x[indices[p]]
    return g_n - acc


@njit(cache=True)
def _project_row(x, indices, weights, lo, hi, g_n, norm2, phi0, relaxation):
    # 0: inside the deadband, 1: projected, -1: zero-norm row skipped
    r = _residual(x, indices, weights, lo, hi, g_n)
    if r > phi0:
        step = r - phi0
    elif r < -phi0:
        step = r + phi0
    else:
        return 0
    if norm2 == 0.0:
        return -1
    scale = relaxation * step / norm2
    for p in range(lo, hi):
        x[indices[p]] += scale * weights[p]
    return 1


@njit(cache=True)
def _sweep(x, indptr, indices, weights, g, norm2, phi0, relaxation):
    violated = 0
    skipped = 0
    for n in range(indptr.size - 1):
        status = _project_row(x, indices, weights, indptr[n], indptr[n + 1], g[n], norm2[n], phi0, relaxation)
        if status == 1:
            violated += 1
        elif status == -1:
            violated += 1
            skipped += 1
    return violated, skipped


def _check_pixel(op: ObservationOperator, n: int):
    if not 0 <= n < op.n_rows:
        raise IndexError(f"LR pixel index {n} out of range [0, {op.n_rows})")


def _check_dims(op: ObservationOperator, x: Image, g: Image):
    if x.shape != op.hr_dims:
        raise DimensionError(f"HR image shape {x.shape} != operator HR dims {op.hr_dims}")
    if g.shape != op.lr_dims:
        raise DimensionError(f"LR image shape {g.shape} != operator LR dims {op.lr_dims}")


def residual(op: ObservationOperator, x: Image, g: Image, n: int) -> float:
    """Observed LR pixel ``n`` minus the value the operator predicts from ``x``."""
    _check_dims(op, x, g)
    _check_pixel(op, n)
    m = op.matrix
    return float(_residual(x.data.ravel(), m.indices, m.data, m.indptr[n], m.indptr[n + 1], g.data.ravel()[n]))


def project_data_consistency(
    x: Image, op: ObservationOperator, g: Image, n: int, phi0: float, relaxation: float = 1.0
) -> Image:
    """Project ``x`` onto ``{x : |residual(n)| <= phi0}``.

    Points already inside the set are returned unchanged. A zero-norm row
    cannot be projected onto; it is logged and ``x`` is returned as is.
    """
    if phi0 < 0:
        raise ParameterError(f"phi0 must be >= 0, got {phi0}")
    if not 0 < relaxation <= 1:
        raise ParameterError(f"relaxation must lie in (0, 1], got {relaxation}")
    _check_dims(op, x, g)
    _check_pixel(op, n)
    m = op.matrix
    arr = x.to_array().ravel()
    status = _project_row(
        arr, m.indices, m.data, m.indptr[n], m.indptr[n + 1], g.data.ravel()[n], op.row_norms2[n], phi0, relaxation
    )
    if status == -1:
        log.warning("LR pixel %d has a zero-norm operator row; projection skipped", n)
    if status != 1:
        return x
    return Image(arr.reshape(x.shape))


def project_amplitude(x: Image) -> Image:
    return Image(np.clip(x.data, AMPLITUDE_MIN, AMPLITUDE_MAX))


def phi0_from_noise(sigma2: float, cfg: PocsConfig) -> float:
    """Residual bound: ``phi0_confidence * sigma``, or ``phi0_floor`` when noiseless."""
    if sigma2 < 0:
        raise ParameterError(f"sigma2 must be >= 0, got {sigma2}")
    if sigma2 == 0:
        return cfg.phi0_floor
    return cfg.phi0_confidence * math.sqrt(sigma2)


def check_observations(obs: ObservationSet, x0: Image):
    if len(obs.frames) == 0:
        raise InputError("observation set has no frames")
    if x0.shape != obs.hr_dims:
        raise DimensionError(f"initial estimate shape {x0.shape} != HR dims {obs.hr_dims}")


def pocs_sweep(x: np.ndarray, obs: ObservationSet, phi0: float, relaxation: float) -> tuple[int, int]:
    """One in-place Gauss-Seidel pass over every LR pixel of every frame.

    ``x`` is the flat HR estimate. Returns ``(violated, skipped)`` counts.
    """
    violated = skipped = 0
    for img, op in obs.frames:
        m = op.matrix
        v, s = _sweep(x, m.indptr, m.indices, m.data, img.data.ravel(), op.row_norms2, phi0, relaxation)
        violated += v
        skipped += s
    return violated, skipped


def relative_change(new: np.ndarray, old: np.ndarray) -> float:
    return float(np.linalg.norm(new - old) / max(np.linalg.norm(old), 1.0))


def pocs_reconstruct(
    obs: ObservationSet, x0: Image, cfg: PocsConfig = PocsConfig(), reference: Image | None = None
) -> tuple[Image, ReconstructionTrace]:
    """Alternate data-consistency sweeps and the amplitude clamp.

    Each outer iteration projects onto every LR pixel constraint (frames in
    order, pixels in raster order, updates applied immediately) and then
    clamps to [0, 255]. Stops after ``cfg.max_iters`` iterations or once
    the relative change drops below ``cfg.rel_tol``. If ``reference`` is
    given the trace records PSNR against it.
    """
    check_observations(obs, x0)
    phi0 = phi0_from_noise(obs.sigma2, cfg)
    trace = ReconstructionTrace()
    x = x0.to_array().ravel()
    for it in range(cfg.max_iters):
        prev = x.copy()
        violated, skipped = pocs_sweep(x, obs, phi0, cfg.relaxation)
        np.clip(x, AMPLITUDE_MIN, AMPLITUDE_MAX, out=x)
        if not np.all(np.isfinite(x)):
            raise NumericalError(f"POCS iterate became non-finite at iteration {it}")
        trace.skipped_rows += skipped
        change = relative_change(x, prev)
        q = psnr(reference, Image(x.reshape(obs.hr_dims))).psnr_db if reference is not None else None
        trace.append(TraceRecord(it, violated, change, q))
        if change < cfg.rel_tol:
            break
    if trace.skipped_rows:
        log.warning("%d zero-norm operator rows were skipped", trace.skipped_rows)
    return Image(x.reshape(obs.hr_dims)), trace
