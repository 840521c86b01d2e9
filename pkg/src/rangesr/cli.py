"""Command-line front end.

Subcommands: sr, eval, segment, downsample. Every run writes a
config_echo.txt capturing all effective parameters plus the seed;
re-running with --config pointing at that file reproduces the outputs
byte-for-byte.

Exit codes: 0 success, 1 bad arguments, 2 I/O or decode failure,
3 algorithm failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .errors import FormatError, RangeSrError
from .evaluate import (
    experiment_record,
    format_report,
    render_comparison,
    run_experiment,
    write_records,
    write_text_report,
)
from .imgio import read_image, segment_visualization, write_pgm, write_png
from .lift import decimate
from .meanshift import segment
from .pipeline import (
    SrConfig,
    apply_overrides,
    config_text,
    default_config,
    parse_config_text,
    super_resolve,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_ALGORITHM = 3

OUT_DIR_ENV = "RANGESR_OUT"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; this CLI reserves 2 for I/O.
    def error(self, message):
        raise UsageError(message)


def _add_common(sub: argparse.ArgumentParser, with_factor: bool) -> None:
    if with_factor:
        sub.add_argument("--factor", type=int, default=None, help="SR factor (>= 1)")
    sub.add_argument("--out", default=None, help=f"output directory (default ${OUT_DIR_ENV} or .)")
    sub.add_argument("--config", default=None, help="key=value config file")
    sub.add_argument("--seed", type=int, default=None, help="global RNG seed (default 0)")
    sub.add_argument("--threads", type=int, default=None, help="cap worker threads")
    sub.add_argument("--verbose", action="store_true", help="stream per-pass reports")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rangesr", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)

    sr = subs.add_parser("sr", help="super-resolve an LR range image with an HR color guide")
    sr.add_argument("range_lr", help="LR range image (PGM)")
    sr.add_argument("color_hr", help="registered HR color image (PNG or PPM)")
    _add_common(sr, with_factor=True)

    ev = subs.add_parser("eval", help="run the down-sample/reconstruct/compare protocol")
    ev.add_argument("truth", help="ground-truth range image (PGM)")
    ev.add_argument("color", help="registered HR color image (PNG or PPM)")
    _add_common(ev, with_factor=True)

    seg = subs.add_parser("segment", help="run mean-shift segmentation standalone")
    seg.add_argument("color", help="color image (PNG or PPM)")
    seg.add_argument("--hs", type=float, default=None, help="spatial bandwidth (pixels)")
    seg.add_argument("--hr", type=float, default=None, help="color bandwidth (Luv units)")
    seg.add_argument("--min-region", type=int, default=None, help="minimum region size")
    _add_common(seg, with_factor=False)

    ds = subs.add_parser("downsample", help="decimate a range image")
    ds.add_argument("truth", help="range image (PGM)")
    _add_common(ds, with_factor=True)
    return parser


def _parse_cli_overrides(pairs) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise UsageError(f"override {pair!r} is not KEY=VALUE")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _build_config(args):
    """defaults <- config file <- --factor/--seed flags <- dotted overrides."""
    cfg = default_config(factor=1)
    factor_given = False
    if args.config:
        file_overrides = parse_config_text(Path(args.config).read_text())
        factor_given |= "factor" in file_overrides
        cfg = apply_overrides(cfg, file_overrides)
    if getattr(args, "factor", None) is not None:
        factor_given = True
        cfg = apply_overrides(cfg, {"factor": str(args.factor)})
    if args.seed is not None:
        cfg = apply_overrides(cfg, {"ransac.seed": str(args.seed)})
    if getattr(args, "hs", None) is not None:
        cfg = apply_overrides(cfg, {"ms.h_s": str(args.hs)})
    if getattr(args, "hr", None) is not None:
        cfg = apply_overrides(cfg, {"ms.h_r": str(args.hr)})
    if getattr(args, "min_region", None) is not None:
        cfg = apply_overrides(cfg, {"ms.min_region": str(args.min_region)})
    cli_overrides = _parse_cli_overrides(args.overrides)
    factor_given |= "factor" in cli_overrides
    cfg = apply_overrides(cfg, cli_overrides)
    return cfg, factor_given


def _require_factor(factor_given: bool) -> None:
    if not factor_given:
        raise UsageError("a factor is required (--factor or factor= in config)")


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_DIR_ENV, "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _check_inputs(*paths) -> None:
    for p in paths:
        if not Path(p).is_file():
            raise FileNotFoundError(f"input file not found: {p}")


def _setup(args) -> None:
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    if args.threads is not None:
        if args.threads < 1:
            raise UsageError(f"--threads must be >= 1, got {args.threads}")
        import numba

        numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))


def _write_echo(out: Path, cfg: SrConfig) -> None:
    (out / "config_echo.txt").write_text(config_text(cfg))


def _write_passes(out: Path, reports) -> None:
    (out / "passes.txt").write_text("".join(r.line() + "\n" for r in reports))


def cmd_sr(args) -> int:
    cfg, factor_given = _build_config(args)
    _require_factor(factor_given)
    _check_inputs(args.range_lr, args.color_hr)
    _setup(args)
    lr = read_image(args.range_lr, "range")
    color = read_image(args.color_hr, "color")
    out = _out_dir(args)
    sr, reports = super_resolve(lr, color, cfg)
    write_pgm(out / "sr.pgm", sr)
    _write_passes(out, reports)
    _write_echo(out, cfg)
    print(f"wrote {out / 'sr.pgm'} ({sr.width}x{sr.height}, {len(reports)} passes)")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg, factor_given = _build_config(args)
    _require_factor(factor_given)
    _check_inputs(args.truth, args.color)
    _setup(args)
    truth = read_image(args.truth, "range")
    color = read_image(args.color, "color")
    out = _out_dir(args)
    result = run_experiment(truth, color, cfg.factor, cfg)
    record = experiment_record(Path(args.truth).stem, cfg.factor, cfg, result)
    write_pgm(out / "method.pgm", result.sr)
    write_pgm(out / "bicubic.pgm", result.bicubic)
    write_pgm(out / "lr.pgm", result.lr)
    write_records(out / "metrics.jsonl", [record])
    write_text_report(out / "report.txt", [record])
    render_comparison(
        truth, result.bicubic, result.sr, out / "comparison.png",
        title=f"{record['dataset']} x{cfg.factor}",
    )
    _write_passes(out, result.reports)
    _write_echo(out, cfg)
    print(format_report(record), end="")
    return EXIT_OK


def cmd_segment(args) -> int:
    cfg, _ = _build_config(args)
    _check_inputs(args.color)
    _setup(args)
    color = read_image(args.color, "color")
    out = _out_dir(args)
    segmap = segment(color, cfg.ms0)
    if segmap.n_segments > 65535:
        raise RangeSrError(f"{segmap.n_segments} segments exceed the 16-bit id raster")
    write_pgm(out / "segments.pgm", segmap.ids.astype(float))
    write_png(out / "segments.png", segment_visualization(segmap.ids))
    _write_echo(out, cfg)
    print(f"wrote {out / 'segments.pgm'} ({segmap.n_segments} segments)")
    return EXIT_OK


def cmd_downsample(args) -> int:
    cfg, factor_given = _build_config(args)
    _require_factor(factor_given)
    _check_inputs(args.truth)
    _setup(args)
    truth = read_image(args.truth, "range")
    out = _out_dir(args)
    lr = decimate(truth, cfg.factor, cfg.anchor)
    write_pgm(out / "lr.pgm", lr)
    _write_echo(out, cfg)
    print(f"wrote {out / 'lr.pgm'} ({lr.width}x{lr.height})")
    return EXIT_OK


_COMMANDS = {"sr": cmd_sr, "eval": cmd_eval, "segment": cmd_segment, "downsample": cmd_downsample}


def main(argv=None) -> int:
    try:
        # Bare KEY=VALUE tokens anywhere after the subcommand are config
        # overrides; argparse reports them as unrecognized, so collect them
        # from the leftovers of a known-args parse.
        args, extras = build_parser().parse_known_args(argv)
        overrides = []
        for token in extras:
            if token.startswith("-") or "=" not in token:
                raise UsageError(f"unrecognized argument {token!r}")
            overrides.append(token)
        args.overrides = overrides
        return _COMMANDS[args.command](args)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except RangeSrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ALGORITHM


if __name__ == "__main__":
    raise SystemExit(main())
