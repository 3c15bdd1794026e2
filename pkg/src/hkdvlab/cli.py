"""Command-line entry point.

Subcommands::

    hkdvlab run <suite> [--config FILE] [--seed N] [--output-dir DIR]
    hkdvlab list [--json]
    hkdvlab plots <report.json>

Exit codes: 0 all checks passed, 1 some check failed, 2 configuration error.
``HKDVLAB_OUTPUT`` overrides the output directory.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError
from .experiments import (SUITES, default_config, emit_plots, list_suites,
                          parse_config, run)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hkdvlab")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment suite")
    p_run.add_argument("suite", help=f"one of: {', '.join(SUITES)}")
    p_run.add_argument("--config", help="flat sectioned key=value config file")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--output-dir", default=None)

    p_list = sub.add_parser("list", help="show the suite catalogue")
    p_list.add_argument("--json", action="store_true")

    p_plots = sub.add_parser("plots", help="emit plot scripts for a report")
    p_plots.add_argument("report", help="path to a report.json")

    args = parser.parse_args(argv)

    if args.command == "list":
        if args.json:
            print(list_suites(as_json=True))
        else:
            for entry in list_suites():
                print(f"{entry['name']:12s} {entry['claim']}")
        return 0

    if args.command == "plots":
        try:
            written = emit_plots(args.report)
        except FileNotFoundError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        for path in written:
            print(path)
        return 0

    # run
    try:
        if args.config:
            with open(args.config) as fh:
                cfg = parse_config(fh.read())
            if cfg.name != args.suite:
                raise ConfigError(
                    f"config names suite {cfg.name!r} but {args.suite!r} requested")
        else:
            cfg = default_config(args.suite)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.output_dir is not None:
            cfg.output_dir = args.output_dir
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    report = run(cfg)
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"[{status}] {check.name}: {check.measured:.6g} (want {check.threshold})")
    print(f"suite {report.suite}: {'PASS' if report.passed else 'FAIL'} "
          f"({report.wall_clock:.1f}s)")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
