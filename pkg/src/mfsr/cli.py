"""Command-line entry point: ``mfsr {degrade,reconstruct,sweep-m,compare,psnr}``.

Exit status is 0 on success, 1 for configuration or input errors and 2 when
an iteration breaks down numerically.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import harness
from .config import ALGORITHMS, TABLE1_M_VALUES, ExperimentConfig, load_config
from .errors import ConfigError, MFSRError, NumericalError
from .metrics import psnr
from .pgm import load_pgm, save_pgm

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors; status 2 is reserved for numerical failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _add_synthesis_args(p: argparse.ArgumentParser, many: bool, seed_required: bool = True):
    p.add_argument("-c", "--config", action="append" if many else "store",
                   help="key = value config file" + (" (repeatable, one row each)" if many else ""))
    p.add_argument("--image", action="append" if many else "store",
                   help="HR input: PGM path or builtin:<ramp|blobs|checkerboard|scene>:<size>")
    p.add_argument("--seed", type=int, required=seed_required, help="RNG seed for shifts and noise")
    p.add_argument("-K", "--frames", type=int, help="number of LR frames")
    p.add_argument("-o", "--output-dir", help="directory for PGM/CSV outputs")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key, e.g. --set pocs.max_iters=100")


def _apply_flags(cfg: ExperimentConfig, args, image=None) -> ExperimentConfig:
    overrides = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(item, "expected KEY=VALUE")
        overrides[key.strip()] = value
    cfg = cfg.with_overrides(**overrides)
    flags = {"seed": args.seed, "frames": args.frames, "output_dir": args.output_dir, "image": image,
             "algorithm": getattr(args, "algorithm", None)}
    return replace(cfg, **{k: v for k, v in flags.items() if v is not None})


def _configs(args, many: bool) -> list[ExperimentConfig]:
    paths = (args.config or []) if many else ([args.config] if args.config else [])
    bases = [load_config(p) for p in paths] or [ExperimentConfig()]
    images = (args.image or []) if many else ([args.image] if args.image else [])
    if images:
        return [_apply_flags(b, args, img) for b in bases for img in images]
    return [_apply_flags(b, args) for b in bases]


def cmd_degrade(args):
    (cfg,) = _configs(args, many=False)
    path = harness.degrade(cfg)
    print(f"wrote {cfg.frames} frames and {path}")


def cmd_reconstruct(args):
    (cfg,) = _configs(args, many=False)
    if args.manifest:
        obs = harness.load_observations(args.manifest)
        reference = load_pgm(args.reference) if args.reference else None
        op = obs.frames[0].operator
        cfg = replace(cfg, degrade_l1=op.hr_dims[0] // op.lr_dims[0], degrade_l2=op.hr_dims[1] // op.lr_dims[1])
        algorithm = cfg.algorithm
        recon, trace = harness.reconstruct(obs, cfg, algorithm, reference)
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_pgm(recon, out / f"reconstruction_{algorithm}.pgm")
        (out / f"reconstruction_{algorithm}_trace.csv").write_text(harness.trace_csv(trace))
        if reference is not None:
            print(f"PSNR {psnr(reference, recon).format_psnr()} dB")
        return
    if args.seed is None:
        raise ConfigError("--seed", "required when synthesizing observations")
    result = harness.run_single(cfg)
    sys.stdout.write(result.csv())


def cmd_sweep(args):
    cfgs = _configs(args, many=True)
    m_values = TABLE1_M_VALUES
    if args.m:
        try:
            m_values = tuple(float(v) for v in args.m.split(","))
        except ValueError:
            raise ConfigError("--m", f"expected comma-separated numbers, got {args.m!r}") from None
    sys.stdout.write(harness.run_m_sweep(cfgs, m_values).to_csv())


def cmd_compare(args):
    sys.stdout.write(harness.run_comparison(_configs(args, many=True)).to_csv())


def cmd_psnr(args):
    report = psnr(load_pgm(args.reference), load_pgm(args.test))
    print(f"psnr_db={report.format_psnr(4)} mse={report.mse:.6g} n_pixels={report.n_pixels}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mfsr", description="Multi-frame super-resolution experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("degrade", help="synthesize LR frames and a manifest")
    _add_synthesis_args(p, many=False)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("reconstruct", help="synthesize, reconstruct and score one image")
    _add_synthesis_args(p, many=False, seed_required=False)
    p.add_argument("-a", "--algorithm", choices=ALGORITHMS)
    p.add_argument("--manifest", help="reconstruct frames written by 'degrade' instead of synthesizing")
    p.add_argument("--reference", help="HR reference PGM for scoring a --manifest run")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("sweep-m", help="PSNR over a grid of lambda weights m (c = 0)")
    _add_synthesis_args(p, many=True)
    p.add_argument("--m", help="comma-separated m values (default: 1e-1,1e-3,1e-5,1e-10,1e-12)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="POCS vs proposed hybrid on shared observations")
    _add_synthesis_args(p, many=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("psnr", help="PSNR between two PGM files")
    p.add_argument("reference")
    p.add_argument("test")
    p.set_defaults(func=cmd_psnr)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (MFSRError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
