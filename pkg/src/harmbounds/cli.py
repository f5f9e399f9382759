"""Command line interface.

Usage::

    harmbounds run reward-deaths --config cfg.json --seed 7 --episodes 200 --out results/
    harmbounds run tightness --out results/
    harmbounds run validate --out results/ [--scale 0.1]

Command line flags override values from the JSON config file. Exit code is 0
on success and 2 when the validation suite reports a failed check.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .harness import (
    EXPERIMENTS,
    ExperimentConfig,
    run_reward_deaths,
    run_tightness,
    run_validation,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="harmbounds",
        description="Guardrail experiments for the exploding bandit",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    run = commands.add_parser("run", help="run an experiment")
    run.add_argument("experiment", choices=EXPERIMENTS)
    run.add_argument("--config", help="JSON config file (see ExperimentConfig)")
    run.add_argument("--seed", type=int, help="master seed (64-bit)")
    run.add_argument("--episodes", type=int, help="episodes per cell")
    run.add_argument("--out", help="output directory for CSV and JSON")
    run.add_argument("--workers", type=int, help="worker processes for cell sweeps")
    run.add_argument("--d", type=int, help="hidden-vector dimension")
    run.add_argument("--n-arms", type=int, help="number of bandit arms")
    run.add_argument(
        "--threshold-samples", type=int, help="Monte Carlo samples for the explosion threshold"
    )
    run.add_argument(
        "--scale", type=float, help="validation sample-count multiplier (validate only)"
    )
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    if args.config:
        config = ExperimentConfig.from_json_file(args.config)
    else:
        config = ExperimentConfig()
    overrides = {
        "experiment": args.experiment,
        "master_seed": args.seed,
        "episodes": args.episodes,
        "output_path": args.out,
        "workers": args.workers,
        "d": args.d,
        "n_arms": args.n_arms,
        "threshold_samples": args.threshold_samples,
        "validation_scale": args.scale,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return dataclasses.replace(config, **overrides)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = config_from_args(args)
    if config.experiment == "reward-deaths":
        _, summary = run_reward_deaths(config)
        print(json.dumps(summary["cells"], indent=2))
        return 0
    if config.experiment == "tightness":
        _, summary = run_tightness(config)
        print(json.dumps(summary["per_alpha"], indent=2))
        return 0
    report = run_validation(config)
    for check in report["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        print(f"[{status}] {check['name']}: observed={check['observed']:.6g} "
              f"bound={check['bound']:.6g}")
    return 0 if report["passed"] else 2


if __name__ == "__main__":
    sys.exit(main())
