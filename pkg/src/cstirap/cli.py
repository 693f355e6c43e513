"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import FORMATS, ConfigError, parse_config
from .dressed import ContinuityError, dressed_frame, find_avoided_crossings
from .export import render, write_outputs
from .presets import RunOptions, UnknownPresetError, list_presets, run_preset
from .propagator import IntegrationError, propagate
from .sweep import sweep2d

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("cstirap")


def _common(p: argparse.ArgumentParser, config: bool = True):
    if config:
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--tol", type=float, help="relative integration tolerance")
    p.add_argument("--workers", type=int, help="worker processes for sweeps")
    p.add_argument("--format", choices=FORMATS, help="output format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cstirap", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    verbose = argparse.ArgumentParser(add_help=False)
    verbose.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("simulate", parents=[verbose], help="propagate one scenario"))
    _common(sub.add_parser("dressed", parents=[verbose], help="dressed-state frame of one scenario"))
    _common(sub.add_parser("sweep", parents=[verbose], help="2-D parameter grid"))
    p = sub.add_parser("preset", parents=[verbose], help="reproduce a registered figure scenario")
    p.add_argument("--id", required=True, dest="preset_id")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--resolution", type=int, default=RunOptions.resolution,
                   help="grid points per sweep axis")
    _common(p, config=False)
    sub.add_parser("list-presets", parents=[verbose], help="print registered preset ids")
    return parser


def _load(args):
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("config", f"cannot read {args.config}: {exc.strerror}") from None
    cfg = parse_config(text, command=args.command)
    changes = {}
    if args.tol is not None:
        if not 1e-12 <= args.tol <= 1e-6:
            raise ConfigError("--tol", "must lie in [1e-12, 1e-6]")
        changes["tol"] = args.tol
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers", "must be >= 1")
        changes["workers"] = args.workers
    if args.format is not None:
        changes["output_format"] = args.format
    if args.out is not None:
        changes["output_path"] = args.out
    return replace(cfg, **changes)


def _emit(data, cfg):
    if cfg.output_path is None:
        sys.stdout.write(render(data, cfg.output_format))
    else:
        write_outputs(data, cfg.output_format, cfg.output_path)


def _run(args) -> int:
    if args.command == "list-presets":
        for pid, desc in list_presets():
            print(f"{pid}\t{desc}")
        return EXIT_OK

    if args.command == "preset":
        tol = 1e-9 if args.tol is None else args.tol
        if not 1e-12 <= tol <= 1e-6:
            raise ConfigError("--tol", "must lie in [1e-12, 1e-6]")
        if args.resolution < 1 or (args.workers is not None and args.workers < 1):
            raise ConfigError("--resolution" if args.resolution < 1 else "--workers", "must be >= 1")
        opts = RunOptions(resolution=args.resolution, tol=tol, workers=args.workers or 1)
        manifest = run_preset(args.preset_id, args.out, args.format or "csv", opts)
        log.info("preset %s written to %s in %.1f s", args.preset_id, args.out,
                 manifest["timings"]["total_seconds"])
        return EXIT_OK

    cfg = _load(args)
    s = cfg.scenario
    if args.command == "sweep":
        sw = cfg.sweep
        res = sweep2d(s, sw.x, sw.y, sw.observable, workers=cfg.workers, tol=cfg.tol,
                      samples=cfg.samples)
        _emit(res, cfg)
        if res.failures:
            log.warning("%d sweep cells failed (NaN)", len(res.failures))
        return EXIT_OK

    tr = propagate(s, tol=cfg.tol, samples=cfg.samples)
    if args.command == "simulate":
        _emit(tr, cfg)
        return EXIT_OK
    df = dressed_frame(s, tr)
    for c in find_avoided_crossings(df):
        log.info("avoided crossing %s at t=%.6g: gap=%.3g slope=%.3g P_LZ=%.3g",
                 c.pair, c.time, c.gap, c.gap_slope, c.p_lz_standard)
    _emit(df, cfg)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except (ConfigError, UnknownPresetError) as exc:
        msg = exc.args[0] if isinstance(exc, UnknownPresetError) else str(exc)
        print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, ContinuityError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
