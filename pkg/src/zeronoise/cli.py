"""Command-line entry point.

    zeronoise <experiment> [--config FILE] [--seed N] [--threads N] [--out DIR]

Experiments: convergence, scaling, large-time, exit-dist, modulus,
noise-selftest.  Outputs report.json plus CSV tables in the output
directory.  Exit codes: 0 all thresholds met, 1 a threshold failed,
2 configuration error.
"""

from __future__ import annotations

import argparse
import sys

from .config import EXPERIMENTS, ConfigError, build_config, load_config_file
from .experiments import RUNNERS, write_report


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zeronoise", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", default=None, help="flat key = value config file")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--threads", type=int, default=None, help="worker threads for ensembles")
        p.add_argument("--out", default=None, help="output directory override")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        overrides = load_config_file(args.config) if args.config else {}
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be nonnegative")
            overrides["seed"] = args.seed
        if args.threads is not None:
            overrides["threads"] = args.threads
        if args.out is not None:
            overrides["output_dir"] = args.out
        cfg = build_config(args.experiment, overrides)
        report = RUNNERS[cfg.experiment](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    path = write_report(report, cfg.output_dir)
    for m in report.metrics:
        if m.passed is None:
            status = "info"
        else:
            status = "pass" if m.passed else "FAIL"
        gate = f" {m.op} {m.threshold}" if m.op else ""
        print(f"[{status}] {m.name} = {m.value:.6g}{gate}")
    for note in report.notes:
        print(f"note: {note}")
    print(f"report: {path}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
