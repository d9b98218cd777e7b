"""
Command line entry point.

    run        execute an experiment config and write summary/runs tables
    certify    re-run with unit initial steps and audit every run
    profile    data and performance profiles from stored runs
    gradcheck  finite-difference audit of both regression losses

Exit status: 0 on success, 1 on usage or configuration errors, 2 when a
certificate is violated or the gradient audit fails.
"""

import argparse
import logging
import sys
from typing import List, Optional

import pandas as pd

from config.settings import settings
from ncg.core import NCGError
from ncg.harness import EmitFormat, run_suite
from ncg.problems import LossKind, gradient_audit
from ncg.profiles import METRIC_COLUMNS, budget_grid, data_profile, performance_profile
from utils.config_loader import ExperimentConfigLoader
from utils.results_writer import ResultsWriter

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATION = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ncg", description="Restarted NCG benchmark harness")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="Logging level")
    commands = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (("run", "Run an experiment"),
                            ("certify", "Run an experiment with certificate checks")):
        command = commands.add_parser(name, help=help_text)
        command.add_argument("--config", required=True,
                             help="Experiment file, or the name of a file in the experiments directory")
        command.add_argument("--output-dir", help="Overrides the config's output directory")
        command.add_argument("--parallelism", type=int, help="Overrides the config's worker count")
        command.add_argument("--emit", choices=[e.value for e in EmitFormat], help="Output format")
        command.add_argument("--traces", action="store_true", help="Write per-run trace CSVs")

    profile = commands.add_parser("profile", help="Profiles from stored runs")
    profile.add_argument("--results", required=True, help="Directory written by 'run'")
    profile.add_argument("--budget", type=int, help="Largest budget of the data profile grid")
    profile.add_argument("--metric", choices=list(METRIC_COLUMNS) + ["both"], default="both")
    profile.add_argument("--output-dir", help="Defaults to the results directory")
    profile.add_argument("--emit", choices=[e.value for e in EmitFormat], default=EmitFormat.CSV.value)

    gradcheck = commands.add_parser("gradcheck", help="Finite-difference audit of the losses")
    gradcheck.add_argument("--instances", type=int, default=10)
    gradcheck.add_argument("--points", type=int, default=100)
    gradcheck.add_argument("--n", type=int, default=30)
    gradcheck.add_argument("--m", type=int, default=60)
    gradcheck.add_argument("--seed", type=int, default=0)
    gradcheck.add_argument("--step", type=float, default=settings.GRADCHECK_STEP)
    gradcheck.add_argument("--tolerance", type=float, default=1e-6)
    return parser


def _experiment(args: argparse.Namespace):
    config = ExperimentConfigLoader(settings.EXPERIMENTS_DIR).resolve(args.config)

    overrides = {}
    if args.output_dir:
        overrides["output_dir"] = args.output_dir
    if args.parallelism is not None:
        overrides["parallelism"] = args.parallelism
    if args.emit:
        overrides["emit"] = args.emit
    if args.traces:
        overrides["write_traces"] = True
    if overrides:
        config = type(config).from_mapping({**config.to_dict(), **overrides})
    return config


def _run(args: argparse.Namespace, certify: bool) -> int:
    config = _experiment(args)
    summary = run_suite(config, certify=certify)

    with ResultsWriter(config.output_dir, config.emit) as writer:
        writer.write_suite(summary, certify=certify)

    print(summary.summary_frame().to_string(index=False))
    if certify:
        violations = summary.certificate_violations
        if violations:
            logger.error(f"{violations} certificate violation(s) in '{config.name}'")
            return EXIT_VIOLATION
        logger.info(f"All {len(summary.rows)} runs of '{config.name}' passed their certificates")
    return EXIT_OK


def _profile(args: argparse.Namespace) -> int:
    runs = ResultsWriter.load_runs(args.results)
    output_dir = args.output_dir or args.results
    budgets = budget_grid(args.budget) if args.budget else None
    metrics = list(METRIC_COLUMNS) if args.metric == "both" else [args.metric]

    with ResultsWriter(output_dir, EmitFormat(args.emit)) as writer:
        writer.write_profile(data_profile(runs, budgets), "data_profile")
        for metric in metrics:
            writer.write_profile(performance_profile(runs, metric), f"performance_profile_{metric}")
    return EXIT_OK


def _gradcheck(args: argparse.Namespace) -> int:
    audits = [gradient_audit(kind, args.n, args.m, args.instances, args.points, args.seed, args.step)
              for kind in (LossKind.smoothed_biweight(), LossKind.tukey())]
    frame = pd.DataFrame([vars(audit) for audit in audits])
    frame["passed"] = [audit.passed(args.tolerance) for audit in audits]
    print(frame.to_string(index=False))
    if not frame["passed"].all():
        logger.error(f"Gradient audit failed at tolerance {args.tolerance:g}")
        return EXIT_VIOLATION
    return EXIT_OK


def cli_main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    logging.basicConfig(level=args.log_level.upper(), format=settings.LOG_FORMAT)
    try:
        if args.command == "run":
            return _run(args, certify=False)
        if args.command == "certify":
            return _run(args, certify=True)
        if args.command == "profile":
            return _profile(args)
        return _gradcheck(args)
    except (NCGError, FileNotFoundError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_USAGE


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
