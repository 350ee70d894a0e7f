"""Command-line entry point: ``sqmean {estimate,sweep,compare,simulate-comm,verify}``."""
from __future__ import annotations

import argparse
import json
import sys

from sqmean.harness.experiment import (
    ConfigError,
    ExperimentConfig,
    compare_naive,
    emit_results,
    rows_to_csv,
    rows_to_json,
    run_experiment,
)


def _load(args) -> ExperimentConfig:
    with open(args.config) as fh:
        data = json.load(fh)
    if args.seed is not None:
        data["seed"] = args.seed
    if args.trials is not None:
        data["trials"] = args.trials
    return ExperimentConfig.from_dict(data)


def _write(rows, args) -> None:
    if args.out:
        emit_results(rows, args.format, args.out)
    else:
        sys.stdout.write(rows_to_csv(rows) if args.format == "csv" else rows_to_json(rows))


def _estimate(args) -> int:
    config = _load(args)
    if config.sweep:
        raise ConfigError("estimate runs a single setting; use 'sweep' for configs with a sweep section")
    _write(run_experiment(config), args)
    return 0


def _sweep(args) -> int:
    _write(run_experiment(_load(args)), args)
    return 0


def _compare(args) -> int:
    out = compare_naive(_load(args))
    if args.out:
        emit_results(out["rows"], args.format, args.out)
    summary = {k: out[k] for k in ("policy", "naive_error", "estimator_error", "ratio")}
    print(json.dumps(summary))
    return 0


def _simulate_comm(args) -> int:
    config = _load(args)
    config.oracle = {**config.oracle, "model": "comm-sim"}
    rows = run_experiment(config)
    _write(rows, args)
    print(f"total bits consumed: {sum(r.bits for r in rows)}", file=sys.stderr)
    return 0


def _verify(args) -> int:
    from sqmean.verification import run_all

    results = run_all()
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


COMMANDS = {
    "estimate": (_estimate, "run one estimator setting for the configured trials"),
    "sweep": (_sweep, "run the grid in the config's sweep section"),
    "compare": (_compare, "naive_mean versus the configured estimator on the same instances"),
    "simulate-comm": (_simulate_comm, "run over the 1-bit COMM oracle and report bits"),
    "verify": (_verify, "run the randomized bound-compliance suites"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sqmean", description="Mean estimation from statistical queries.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        if name == "verify":
            continue
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--trials", type=int, help="override the config trial count")
        p.add_argument("--out", help="write results here instead of stdout")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command][0](args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
