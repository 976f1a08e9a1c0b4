"""Command line entry point: ``proxlab run | list-experiments | emit-plots``."""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import (
    EXIT_CONFIG,
    EXIT_OK,
    EXPERIMENTS,
    ConfigError,
    ExperimentError,
    default_config,
    emit_plots,
    run_experiment,
)


def _cmd_run(args) -> int:
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
    elif args.experiment:
        cfg = default_config(args.experiment)
    else:
        raise ConfigError("run needs --config or --experiment")
    report = run_experiment(cfg, args.out)
    for key, v in sorted(report["verdicts"].items()):
        print(f"{key}: {v['value']}  [{v['source']}]")
    return EXIT_OK


def _cmd_list(args) -> int:
    for name, exp in EXPERIMENTS.items():
        print(f"{name:26s} {exp.anchor}")
        if args.verbose:
            print(f"{'':26s} {exp.pipeline}")
    return EXIT_OK


def _cmd_emit(args) -> int:
    for name in emit_plots(args.report, args.dest):
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="proxlab", description="Proximal-cell experiments for homeomorphisms.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment from a JSON config")
    r.add_argument("--config", help="config file")
    r.add_argument("--experiment", help="run a named experiment with its default config")
    r.add_argument("--out", help="output directory (overrides the config's output field)")
    r.set_defaults(func=_cmd_run)

    ls = sub.add_parser("list-experiments", help="list experiment names and anchors")
    ls.add_argument("-v", "--verbose", action="store_true")
    ls.set_defaults(func=_cmd_list)

    e = sub.add_parser("emit-plots", help="write plot CSVs for a finished run")
    e.add_argument("--report", required=True, help="directory holding report.json")
    e.add_argument("--dest", help="destination directory (default: <report>/plots)")
    e.set_defaults(func=_cmd_emit)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ExperimentError as exc:
        print(f"proxlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
