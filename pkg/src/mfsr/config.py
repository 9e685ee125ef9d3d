"""Experiment configuration: flat ``key = value`` files with dotted keys.

Example::

    # one experiment cell
    image = builtin:scene:128
    frames = 4
    seed = 1
    algorithm = proposed-hybrid
    degrade.snr_db = 20
    pocs.max_iters = 50
    reg.m = 1e-10
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .degradation import NOISELESS, DegradationSpec
from .errors import ConfigError
from .pocs import PocsConfig
from .regularized import _POLICIES, LambdaModel, RegSolverConfig

ALGORITHMS = ("pocs", "regularized", "proposed-hybrid")
TABLE1_M_VALUES = (1e-1, 1e-3, 1e-5, 1e-10, 1e-12)


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment cell. Attribute ``a_b`` corresponds to file key ``a.b``."""

    image: str = "builtin:scene:128"
    name: str = ""
    frames: int = 4
    seed: int = 0
    algorithm: str = "proposed-hybrid"
    output_dir: str = "out"
    degrade_blur_length: float = 5.0
    degrade_blur_angle: float = 5.0
    degrade_l1: int = 2
    degrade_l2: int = 2
    degrade_snr_db: float = 20.0
    degrade_shift_range: float = 10.0
    pocs_phi0_confidence: float = 2.0
    pocs_phi0_floor: float = 0.0
    pocs_relaxation: float = 1.0
    pocs_max_iters: int = 50
    pocs_rel_tol: float = 1e-4
    reg_m: float = 1e-10
    reg_c: float = 0.0
    reg_max_iters: int = 50
    reg_rel_tol: float = 1e-4
    reg_step_policy: str = "power-iteration"
    reg_power_iters: int = 50

    def __post_init__(self):
        for key, check, message in _CHECKS:
            if not check(getattr(self, _attr(key))):
                raise ConfigError(key, message)
        policy = self.reg_step_policy
        if policy not in _POLICIES:
            try:
                ok = float(policy) > 0
            except ValueError:
                ok = False
            if not ok:
                raise ConfigError("reg.step_policy", f"expected one of {_POLICIES} or a positive step, got {policy!r}")

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.image.startswith("builtin:"):
            return self.image.split(":")[1]
        return Path(self.image).stem

    def degradation_spec(self) -> DegradationSpec:
        return DegradationSpec(
            blur_length=self.degrade_blur_length,
            blur_angle=self.degrade_blur_angle,
            decimation=(self.degrade_l1, self.degrade_l2),
            snr_db=self.degrade_snr_db,
            seed=self.seed,
        )

    def pocs_config(self) -> PocsConfig:
        return PocsConfig(
            phi0_confidence=self.pocs_phi0_confidence,
            phi0_floor=self.pocs_phi0_floor,
            relaxation=self.pocs_relaxation,
            max_iters=self.pocs_max_iters,
            rel_tol=self.pocs_rel_tol,
        )

    def reg_config(self, hybrid: bool) -> RegSolverConfig:
        policy = self.reg_step_policy
        return RegSolverConfig(
            lambda_model=LambdaModel(self.reg_m, self.reg_c),
            max_iters=self.reg_max_iters,
            rel_tol=self.reg_rel_tol,
            step_policy=policy if policy in _POLICIES else float(policy),
            hybrid_pocs=hybrid,
            pocs_cfg=self.pocs_config(),
            power_iters=self.reg_power_iters,
        )

    def with_overrides(self, **values) -> ExperimentConfig:
        """Apply ``{dotted_key: raw_string_or_value}`` overrides."""
        return replace(self, **{_attr(k): _coerce(k, v) for k, v in values.items()})

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            lines.append(f"{_key(f.name)} = {_format(value)}")
        return "\n".join(lines) + "\n"


_CHECKS = [
    ("frames", lambda v: v >= 1, "must be >= 1"),
    ("seed", lambda v: v >= 0, "must be an unsigned integer"),
    ("algorithm", lambda v: v in ALGORITHMS, f"must be one of {ALGORITHMS}"),
    ("degrade.blur_length", lambda v: v >= 1, "must be >= 1"),
    ("degrade.l1", lambda v: v >= 1, "must be >= 1"),
    ("degrade.l2", lambda v: v >= 1, "must be >= 1"),
    ("degrade.snr_db", lambda v: not math.isnan(v), "must be a number or 'noiseless'"),
    ("degrade.shift_range", lambda v: v >= 0, "must be >= 0"),
    ("pocs.phi0_confidence", lambda v: v >= 0, "must be >= 0"),
    ("pocs.phi0_floor", lambda v: v >= 0, "must be >= 0"),
    ("pocs.relaxation", lambda v: 0 < v <= 1, "must lie in (0, 1]"),
    ("pocs.max_iters", lambda v: v >= 1, "must be >= 1"),
    ("pocs.rel_tol", lambda v: v >= 0, "must be >= 0"),
    ("reg.m", lambda v: v >= 0, "must be >= 0"),
    ("reg.c", lambda v: v >= 0, "must be >= 0"),
    ("reg.max_iters", lambda v: v >= 1, "must be >= 1"),
    ("reg.rel_tol", lambda v: v >= 0, "must be >= 0"),
    ("reg.power_iters", lambda v: v >= 1, "must be >= 1"),
]

_SECTIONS = ("degrade", "pocs", "reg")
_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _key(attr: str) -> str:
    head, _, tail = attr.partition("_")
    return f"{head}.{tail}" if head in _SECTIONS else attr


_ATTRS = {_key(a): a for a in _TYPES}
KEYS = tuple(_ATTRS)


def _attr(key: str) -> str:
    try:
        return _ATTRS[key]
    except KeyError:
        raise ConfigError(key, "unknown key") from None


def _format(value) -> str:
    if isinstance(value, float):
        if value == NOISELESS:
            return "noiseless"
        return repr(value)
    return str(value)


def _coerce(key: str, raw):
    kind = _TYPES[_attr(key)]
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            if raw.lower() in ("noiseless", "inf", "+inf"):
                return NOISELESS
            return float(raw)
    except ValueError:
        raise ConfigError(key, f"expected {kind}, got {raw!r}") from None
    return raw


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        values[key.strip()] = value.strip()
    return (base or ExperimentConfig()).with_overrides(**values)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc.strerror}") from None
    return parse_config(text)
