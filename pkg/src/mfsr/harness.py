"""End-to-end experiment runs: synthesize, reconstruct, score, write CSV."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path

from .config import TABLE1_M_VALUES, ExperimentConfig
from .degradation import DegradationSpec, Frame, ObservationSet, build_operator, synthesize
from .errors import InputError
from .imaging import Image, initial_estimate
from .metrics import QualityReport, psnr
from .pgm import load_pgm, save_pgm
from .pocs import ReconstructionTrace, pocs_reconstruct
from .regularized import reconstruct_regularized
from . import testimages

log = logging.getLogger(__name__)

POCS = "pocs"
REGULARIZED = "regularized"
HYBRID = "proposed-hybrid"


def load_image(spec: str) -> Image:
    if spec.startswith("builtin:"):
        return testimages.from_name(spec)
    return load_pgm(spec)


def observe(cfg: ExperimentConfig, hr: Image | None = None) -> tuple[Image, ObservationSet]:
    hr = load_image(cfg.image) if hr is None else hr
    obs = synthesize(hr, cfg.frames, cfg.degradation_spec(), shift_range=cfg.degrade_shift_range)
    return hr, obs


def reconstruct(
    obs: ObservationSet, cfg: ExperimentConfig, algorithm: str, reference: Image | None = None
) -> tuple[Image, ReconstructionTrace]:
    x0 = initial_estimate(obs, (cfg.degrade_l1, cfg.degrade_l2))
    if algorithm == POCS:
        return pocs_reconstruct(obs, x0, cfg.pocs_config(), reference)
    if algorithm in (REGULARIZED, HYBRID):
        return reconstruct_regularized(obs, x0, cfg.reg_config(hybrid=algorithm == HYBRID), reference)
    raise InputError(f"unknown algorithm {algorithm!r}")


def _size(img: Image) -> str:
    return f"{img.width}x{img.height}"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _num(value) -> str:
    return "" if value is None else f"{value:.10g}"


def trace_csv(trace: ReconstructionTrace) -> str:
    rows = [(r.iteration, r.violated, _num(r.rel_change), _num(r.psnr_db), _num(r.cost)) for r in trace]
    return _csv(("iteration", "violated", "rel_change", "psnr_db", "cost"), rows)


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


@dataclass
class SingleResult:
    image: str
    size: str
    frames: int
    algorithm: str
    report: QualityReport
    reconstruction: Image
    trace: ReconstructionTrace

    def csv(self) -> str:
        return _csv(("image", "size", "K", "algorithm", "psnr_db"),
                    [(self.image, self.size, self.frames, self.algorithm, self.report.format_psnr())])


def run_single(cfg: ExperimentConfig, write: bool = True) -> SingleResult:
    """Synthesize, reconstruct with ``cfg.algorithm`` and score one cell.

    With ``write`` the reconstruction, its iteration trace and a one-line
    report are written to ``cfg.output_dir``.
    """
    hr, obs = observe(cfg)
    recon, trace = reconstruct(obs, cfg, cfg.algorithm, reference=hr)
    result = SingleResult(cfg.label, _size(hr), cfg.frames, cfg.algorithm, psnr(hr, recon), recon, trace)
    if write:
        out = Path(cfg.output_dir)
        stem = f"{cfg.label}_{cfg.algorithm}"
        out.mkdir(parents=True, exist_ok=True)
        save_pgm(recon, out / f"{stem}.pgm")
        _write(out / f"{stem}_trace.csv", trace_csv(trace))
        _write(out / f"{stem}_report.csv", result.csv())
    return result


def _m_label(m: float) -> str:
    return f"m={m:g}"


@dataclass
class SweepResult:
    m_values: tuple[float, ...]
    rows: list[tuple[str, str, int, list[QualityReport]]]

    def best_m(self, row) -> float:
        reports = row[3]
        best = max(range(len(reports)), key=lambda i: reports[i].sort_key())
        return self.m_values[best]

    def to_csv(self) -> str:
        header = ["image", "size", "K", *(_m_label(m) for m in self.m_values), "best_m"]
        body = []
        for row in self.rows:
            name, size, k, reports = row
            body.append([name, size, k, *(r.format_psnr() for r in reports), f"{self.best_m(row):g}"])
        return _csv(header, body)


def run_m_sweep(cfgs, m_values=TABLE1_M_VALUES, write: bool = True) -> SweepResult:
    """PSNR of the proposed estimator over a grid of noise weights ``m`` with ``c = 0``.

    ``cfgs`` is one config or a list; each yields one CSV row. All ``m``
    values of a row share the same synthesized observations.
    """
    cfgs = [cfgs] if isinstance(cfgs, ExperimentConfig) else list(cfgs)
    m_values = tuple(float(m) for m in m_values)
    if not cfgs or not m_values:
        raise InputError("m-sweep needs at least one config and one m value")
    rows = []
    for cfg in cfgs:
        hr, obs = observe(cfg)
        reports = []
        for m in m_values:
            cell = replace(cfg, reg_m=m, reg_c=0.0)
            recon, _ = reconstruct(obs, cell, HYBRID)
            reports.append(psnr(hr, recon))
            if write:
                Path(cfg.output_dir).mkdir(parents=True, exist_ok=True)
                save_pgm(recon, Path(cfg.output_dir) / f"{cfg.label}_{_m_label(m)}.pgm")
            log.info("%s m=%g: %s dB", cfg.label, m, reports[-1].format_psnr())
        rows.append((cfg.label, _size(hr), cfg.frames, reports))
    result = SweepResult(m_values, rows)
    if write:
        _write(Path(cfgs[0].output_dir) / "m_sweep.csv", result.to_csv())
    return result


def _delta(a: QualityReport, b: QualityReport) -> str:
    d = b.sort_key() - a.sort_key()
    if math.isnan(d):
        return "nan"
    return "inf" if math.isinf(d) else f"{d:.2f}"


@dataclass
class ComparisonRow:
    image: str
    size: str
    frames: int
    pocs: QualityReport
    proposed: QualityReport

    @property
    def delta(self) -> float:
        return self.proposed.sort_key() - self.pocs.sort_key()


@dataclass
class ComparisonResult:
    rows: list[ComparisonRow]

    def to_csv(self) -> str:
        body = [(r.image, r.size, r.frames, r.pocs.format_psnr(), r.proposed.format_psnr(), _delta(r.pocs, r.proposed))
                for r in self.rows]
        return _csv(("image", "size", "K", "psnr_pocs", "psnr_proposed", "delta"), body)


def run_comparison(cfgs, write: bool = True) -> ComparisonResult:
    """Plain POCS against the proposed hybrid on identical observations."""
    cfgs = [cfgs] if isinstance(cfgs, ExperimentConfig) else list(cfgs)
    if not cfgs:
        raise InputError("comparison needs at least one config")
    rows = []
    for cfg in cfgs:
        hr, obs = observe(cfg)
        reports = {}
        for algorithm in (POCS, HYBRID):
            recon, _ = reconstruct(obs, cfg, algorithm)
            reports[algorithm] = psnr(hr, recon)
            if write:
                Path(cfg.output_dir).mkdir(parents=True, exist_ok=True)
                save_pgm(recon, Path(cfg.output_dir) / f"{cfg.label}_s{cfg.seed}_{algorithm}.pgm")
        rows.append(ComparisonRow(cfg.label, _size(hr), cfg.frames, reports[POCS], reports[HYBRID]))
        log.info("%s: pocs %s dB, proposed %s dB", cfg.label, reports[POCS].format_psnr(), reports[HYBRID].format_psnr())
    result = ComparisonResult(rows)
    if write:
        _write(Path(cfgs[0].output_dir) / "comparison.csv", result.to_csv())
    return result


MANIFEST = "manifest.json"


def degrade(cfg: ExperimentConfig) -> Path:
    """Write the LR frames of ``cfg`` as PGM plus a JSON manifest; return the manifest path.

    Frames are quantized to 8 bits, so noise outside [0, 255] is clipped on disk.
    """
    hr, obs = observe(cfg)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    frames = []
    for k, (img, op) in enumerate(obs.frames):
        fname = f"frame_{k:03d}.pgm"
        save_pgm(img, out / fname)
        frames.append({"file": fname, "shift": list(op.shift)})
    manifest = {
        "image": cfg.label,
        "hr_dims": list(obs.hr_dims),
        "sigma2": obs.sigma2,
        "seed": cfg.seed,
        "snr_db": None if math.isinf(cfg.degrade_snr_db) else cfg.degrade_snr_db,
        "blur_length": cfg.degrade_blur_length,
        "blur_angle": cfg.degrade_blur_angle,
        "decimation": [cfg.degrade_l1, cfg.degrade_l2],
        "frames": frames,
    }
    path = out / MANIFEST
    _write(path, json.dumps(manifest, indent=2) + "\n")
    return path


def load_observations(manifest_path) -> ObservationSet:
    """Rebuild an ObservationSet from frames written by :func:`degrade`."""
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        base = DegradationSpec(
            blur_length=manifest["blur_length"],
            blur_angle=manifest["blur_angle"],
            decimation=tuple(manifest["decimation"]),
        )
        hr_dims = tuple(manifest["hr_dims"])
        frames = []
        for entry in manifest["frames"]:
            op = build_operator(replace(base, shift=tuple(entry["shift"])), hr_dims)
            frames.append(Frame(load_pgm(manifest_path.parent / entry["file"]), op))
        return ObservationSet(frames, float(manifest["sigma2"]), hr_dims)
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise InputError(f"malformed manifest {manifest_path}: {exc}") from None
