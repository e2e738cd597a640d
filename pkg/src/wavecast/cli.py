"""Command-line experiment runner.

Verbs:
    run <config>       execute one experiment, write artifacts, print metrics
    grid <gridfile>    execute a grid of configs, write a combined summary
    synth              write a synthetic stream CSV
    report <run-dir>   print the metrics table of a finished run

Exit codes: 0 success, 2 config error, 3 data error, 4 numeric error.
The WAVECAST_OUT environment variable overrides the output root; the
--out-root flag overrides both.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import parse_config
from .errors import ConfigError, DataError, NumericError, WavecastError
from .evaluation import render_table
from .ingest import (
    DEFAULT_START_DATE,
    DEFAULT_STREAM_DAYS,
    DEFAULT_WAVES,
    generate_synthetic_stream,
    write_csv,
)
from .runner import run_experiment, run_grid


def _cmd_run(args) -> int:
    cfg = parse_config(args.config)
    result = run_experiment(cfg, out_root=args.out_root)
    print(f"run directory: {result.run_dir}")
    print(render_table(result.report), end="")
    return 0


def _cmd_grid(args) -> int:
    result = run_grid(args.gridfile, out_root=args.out_root)
    print(f"summary: {result.summary_path}")
    failed = [row for row in result.rows if row.get("status", "").startswith("failed")]
    for row in failed:
        print(f"  {row['config']}: {row['status']}", file=sys.stderr)
    print(result.summary_path.read_text(), end="")
    return 0


def _parse_wave_flag(text: str):
    from .config import _parse_wave

    return _parse_wave(text)


def _cmd_synth(args) -> int:
    waves = tuple(_parse_wave_flag(w) for w in args.wave) if args.wave else DEFAULT_WAVES
    n_days = args.days if args.days is not None else (
        DEFAULT_STREAM_DAYS if not args.wave else None
    )
    from datetime import datetime

    try:
        start = datetime.strptime(args.start_date, "%Y-%m-%d").date()
    except ValueError:
        raise ConfigError(f"--start-date: expected YYYY-MM-DD, got {args.start_date!r}") from None
    ts = generate_synthetic_stream(
        waves,
        noise=args.noise,
        seed=args.seed,
        n_days=n_days,
        start_date=start,
        baseline=args.baseline,
    )
    out = Path(args.out)
    try:
        write_csv(ts, out)
    except OSError as exc:
        print(f"error: cannot write {out}: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {len(ts)} days to {out}")
    return 0


def _cmd_report(args) -> int:
    path = Path(args.run_dir) / "metrics.txt"
    if not path.exists():
        raise DataError(f"no metrics.txt under {args.run_dir}")
    print(path.read_text(), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavecast", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out-root", default=None)
    p_run.set_defaults(func=_cmd_run)

    p_grid = sub.add_parser("grid", help="run every config listed in a grid file")
    p_grid.add_argument("gridfile")
    p_grid.add_argument("--out-root", default=None)
    p_grid.set_defaults(func=_cmd_grid)

    p_synth = sub.add_parser("synth", help="write a synthetic stream CSV")
    p_synth.add_argument("--wave", action="append", default=[],
                         metavar="START:PEAK:END:HEIGHT")
    p_synth.add_argument("--days", type=int, default=None)
    p_synth.add_argument("--noise", type=float, default=0.05)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--baseline", type=float, default=120.0)
    p_synth.add_argument("--start-date", default=DEFAULT_START_DATE.isoformat())
    p_synth.add_argument("--out", required=True)
    p_synth.set_defaults(func=_cmd_synth)

    p_report = sub.add_parser("report", help="print the metrics of a run directory")
    p_report.add_argument("run_dir")
    p_report.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    except WavecastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
