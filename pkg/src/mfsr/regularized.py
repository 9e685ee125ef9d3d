"""Minimum-energy Tikhonov estimator with a noise-adaptive weight.

Minimizes ``J(x) = sum_k ||G_k - H_k x||^2 + lam * ||x||^2`` where
``lam = m * sigma2 + c`` grows linearly with the noise variance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .degradation import ObservationSet
from .errors import DimensionError, InputError, NumericalError, ParameterError
from .imaging import Image
from .metrics import psnr
from .pocs import (
    AMPLITUDE_MAX,
    AMPLITUDE_MIN,
    PocsConfig,
    ReconstructionTrace,
    TraceRecord,
    check_observations,
    phi0_from_noise,
    pocs_sweep,
    relative_change,
)

POWER_ITERATION = "power-iteration"
CONJUGATE_GRADIENT = "conjugate-gradient"
_POLICIES = (POWER_ITERATION, CONJUGATE_GRADIENT)
_MAX_HALVINGS = 60


@dataclass(frozen=True)
class LambdaModel:
    m: float = 1e-10
    c: float = 0.0

    def __post_init__(self):
        if self.m < 0 or self.c < 0:
            raise ParameterError(f"lambda model needs m >= 0 and c >= 0, got m={self.m}, c={self.c}")


@dataclass(frozen=True)
class RegSolverConfig:
    """Solver settings.

    ``step_policy`` is ``"power-iteration"`` (step ``1 / (lmax + lam)`` from
    an operator-norm estimate), a positive float used as a fixed step, or
    ``"conjugate-gradient"`` (Polak-Ribiere directions with exact line
    search, falling back to a backtracked gradient step whenever the clamp
    or a POCS sweep interferes). ``amplitude`` disables the [0, 255] clamp
    when False.
    """

    lambda_model: LambdaModel = field(default_factory=LambdaModel)
    max_iters: int = 50
    rel_tol: float = 1e-4
    step_policy: str | float = POWER_ITERATION
    hybrid_pocs: bool = True
    pocs_cfg: PocsConfig = field(default_factory=PocsConfig)
    amplitude: bool = True
    power_iters: int = 50

    def __post_init__(self):
        if self.max_iters < 1:
            raise ParameterError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.rel_tol < 0:
            raise ParameterError(f"rel_tol must be >= 0, got {self.rel_tol}")
        if self.step_policy not in _POLICIES:
            if isinstance(self.step_policy, str) or not self.step_policy > 0:
                raise ParameterError(f"step_policy must be one of {_POLICIES} or a positive step, got {self.step_policy!r}")
        if self.power_iters < 1:
            raise ParameterError(f"power_iters must be >= 1, got {self.power_iters}")


def adaptive_lambda(sigma2: float, model: LambdaModel) -> float:
    if sigma2 < 0:
        raise ParameterError(f"sigma2 must be >= 0, got {sigma2}")
    return model.m * sigma2 + model.c


def _flat(obs: ObservationSet, x: Image) -> np.ndarray:
    if len(obs.frames) == 0:
        raise InputError("observation set has no frames")
    if x.shape != obs.hr_dims:
        raise DimensionError(f"image shape {x.shape} != HR dims {obs.hr_dims}")
    return x.data.ravel()


def _cost(obs: ObservationSet, x: np.ndarray, lam: float) -> float:
    total = 0.0
    for img, op in obs.frames:
        r = img.data.ravel() - op.matrix @ x
        total += float(r @ r)
    return total + lam * float(x @ x)


def _gradient(obs: ObservationSet, x: np.ndarray, lam: float) -> np.ndarray:
    grad = 2.0 * lam * x
    for img, op in obs.frames:
        grad -= 2.0 * (op.matrix.T @ (img.data.ravel() - op.matrix @ x))
    return grad


def _normal_op(obs: ObservationSet, x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    for _, op in obs.frames:
        out += op.matrix.T @ (op.matrix @ x)
    return out


def cost(obs: ObservationSet, x: Image, lam: float) -> float:
    return _cost(obs, _flat(obs, x), lam)


def cost_gradient(obs: ObservationSet, x: Image, lam: float) -> Image:
    """``-2 sum_k H_k^T (G_k - H_k x) + 2 lam x``."""
    return Image(_gradient(obs, _flat(obs, x), lam).reshape(obs.hr_dims))


def estimate_operator_norm(obs: ObservationSet, iters: int = 50, seed: int = 0) -> float:
    """Largest eigenvalue of ``sum_k H_k^T H_k`` by power iteration."""
    if len(obs.frames) == 0:
        raise InputError("observation set has no frames")
    n = obs.hr_dims[0] * obs.hr_dims[1]
    v = np.random.default_rng(seed).uniform(0.5, 1.5, n)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = _normal_op(obs, v)
        est = float(v @ w)
        norm = np.linalg.norm(w)
        if norm == 0:
            return 0.0
        v = w / norm
    return est


def _clamp(x: np.ndarray, enabled: bool) -> np.ndarray:
    return np.clip(x, AMPLITUDE_MIN, AMPLITUDE_MAX) if enabled else x


def _backtrack(obs, x, j, grad, beta, lam, amplitude):
    """Projected gradient step, halving ``beta`` until ``J`` does not rise."""
    for _ in range(_MAX_HALVINGS):
        cand = _clamp(x - beta * grad, amplitude)
        j_cand = _cost(obs, cand, lam)
        if j_cand <= j:
            return cand, j_cand, beta
        beta *= 0.5
    return x, j, beta


def reconstruct_regularized(
    obs: ObservationSet, x0: Image, cfg: RegSolverConfig = RegSolverConfig(), reference: Image | None = None
) -> tuple[Image, ReconstructionTrace]:
    """Descent on the adaptive-lambda Tikhonov cost with amplitude projection.

    Each iteration moves along the negative gradient (or a conjugate
    direction), clamps to [0, 255], and never accepts a step that raises
    ``J``. With ``cfg.hybrid_pocs`` a full POCS data-consistency sweep and a
    second clamp follow. The trace records ``J`` after every iteration.
    """
    check_observations(obs, x0)
    lam = adaptive_lambda(obs.sigma2, cfg.lambda_model)
    conjugate = cfg.step_policy == CONJUGATE_GRADIENT
    if cfg.step_policy in _POLICIES:
        beta = 1.0 / (estimate_operator_norm(obs, cfg.power_iters) + lam)
    else:
        beta = float(cfg.step_policy)
    phi0 = phi0_from_noise(obs.sigma2, cfg.pocs_cfg)

    trace = ReconstructionTrace(lam=lam)
    x = _clamp(x0.to_array().ravel(), cfg.amplitude)
    j = _cost(obs, x, lam)
    grad = _gradient(obs, x, lam)
    direction = None
    for it in range(cfg.max_iters):
        prev = x
        if conjugate:
            if direction is None:
                direction = -grad
            curvature = 2.0 * float(direction @ (_normal_op(obs, direction) + lam * direction))
            slope = float(grad @ direction)
            cand = None
            if curvature > 0 and slope < 0:
                free = x - (slope / curvature) * direction
                cand = _clamp(free, cfg.amplitude)
                j_cand = _cost(obs, cand, lam)
                if j_cand > j:
                    cand = None
            if cand is None:
                cand, j_cand, beta = _backtrack(obs, x, j, grad, beta, lam, cfg.amplitude)
                clamped = True
            else:
                clamped = not np.array_equal(cand, free)
            x, j = cand, j_cand
            new_grad = _gradient(obs, x, lam)
            if clamped or cfg.hybrid_pocs:
                direction = None
            else:
                pr = float(new_grad @ (new_grad - grad)) / max(float(grad @ grad), np.finfo(float).tiny)
                direction = -new_grad + max(pr, 0.0) * direction
            grad = new_grad
        else:
            x, j, beta = _backtrack(obs, x, j, grad, beta, lam, cfg.amplitude)
        violated = 0
        if cfg.hybrid_pocs:
            x = x.copy()
            violated, skipped = pocs_sweep(x, obs, phi0, cfg.pocs_cfg.relaxation)
            trace.skipped_rows += skipped
            x = _clamp(x, True)
            j = _cost(obs, x, lam)
        if cfg.hybrid_pocs or not conjugate:
            grad = _gradient(obs, x, lam)
        if not (np.all(np.isfinite(x)) and math.isfinite(j)):
            raise NumericalError(f"regularized iterate became non-finite at iteration {it}")
        change = relative_change(x, prev)
        q = psnr(reference, Image(x.reshape(obs.hr_dims))).psnr_db if reference is not None else None
        trace.append(TraceRecord(it, violated, change, q, j))
        if change < cfg.rel_tol:
            break
    return Image(x.reshape(obs.hr_dims)), trace
