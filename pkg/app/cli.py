"""
Command-line entry point: simulate, compare, dump-norms and charts
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional

import structlog
from pydantic import ValidationError

from app.core.config import LOG_JSON, LOG_LEVEL, OUTPUT_DIR, SCENARIO_PRESETS, Strategy, build_scenario_config
from app.core.logging import configure_logging
from app.core.metrics_csv import MetricsCSV

logger = structlog.get_logger()


def _add_scenario_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", choices=sorted(SCENARIO_PRESETS), help="Scenario preset")
    parser.add_argument("--config", dest="config_file", help="KEY=value scenario file")
    parser.add_argument("--seed", type=int, help="Seed of run 0; run i uses seed + i")
    parser.add_argument("--steps", dest="max_steps", type=int, help="Steps per run")
    parser.add_argument("--runs", type=int, help="Number of seeded runs")
    parser.add_argument("--workers", type=int, help="Parallel worker processes")
    parser.add_argument("--out", type=Path, default=Path(OUTPUT_DIR), help="Output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="norm-synthesis",
        description="Norm synthesis experiments on a two-road junction gridworld",
    )
    parser.add_argument("--log-level", default=LOG_LEVEL, help="Logging level")
    parser.add_argument("--console-logs", action="store_true", help="Human-readable logs instead of JSON")
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="Run one strategy for a batch of seeds")
    _add_scenario_arguments(simulate)
    simulate.add_argument("--strategy", choices=[s.value for s in Strategy], help="Norm strategy")

    compare = commands.add_parser("compare", help="Run UNS and IRON on shared spawn streams")
    _add_scenario_arguments(compare)
    compare.add_argument("--no-charts", action="store_true", help="Skip the SVG charts")

    dump = commands.add_parser("dump-norms", help="Print the final norm sets of an experiment")
    dump.add_argument("--in", dest="input_dir", type=Path, required=True, help="Experiment directory")

    charts = commands.add_parser("charts", help="Render SVG charts from aggregate CSVs")
    charts.add_argument(
        "--in", dest="input_dirs", type=Path, action="append", required=True, help="Experiment directory"
    )
    charts.add_argument("--file", default="aggregate.csv", help="Aggregate file name inside each directory")
    charts.add_argument("--out", type=Path, required=True, help="Chart directory")
    return parser


def _config_from(args: argparse.Namespace, **extra):
    return build_scenario_config(
        scenario=args.scenario,
        config_file=args.config_file,
        seed=args.seed,
        max_steps=args.max_steps,
        runs=args.runs,
        workers=args.workers,
        **extra,
    )


def cmd_simulate(args: argparse.Namespace) -> int:
    from app.harness.experiment import run_experiment

    config = _config_from(args, strategy=args.strategy)
    report = run_experiment(config, args.out)
    means = report.summary()["means"]
    print(
        f"{config.strategy.value}: {config.runs} runs, "
        f"collisions/step {means['mean_collisions_per_step']:.4f}, "
        f"avg waiting {means['mean_avg_waiting']:.4f}, "
        f"priority waiting {means['mean_total_priority_waiting']:.4f}, "
        f"deadlocks {report.deadlocks} -> {args.out}"
    )
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    from app.harness.experiment import compare

    config = _config_from(args)
    comparison = compare(config, args.out, charts=not args.no_charts)
    for name, verdict in comparison["verdicts"].items():
        print(f"{name}: {verdict}")
    return 0


def cmd_dump_norms(args: argparse.Namespace) -> int:
    files = sorted(
        Path(args.input_dir).glob("norms_*.txt"), key=lambda p: int(p.stem.split("_", 1)[1])
    )
    if not files:
        raise FileNotFoundError(f"No norm dumps found in {args.input_dir}")
    for path in files:
        print(f"# {path.name}")
        sys.stdout.write(path.read_text(encoding="utf-8"))
    return 0


def cmd_charts(args: argparse.Namespace) -> int:
    from app.harness.charts import emit_charts

    series = {directory.name or str(directory): directory / args.file for directory in args.input_dirs}
    for path in emit_charts(series, args.out):
        print(path)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "dump-norms": cmd_dump_norms,
    "charts": cmd_charts,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level, json_output=LOG_JSON and not args.console_logs)

    try:
        return COMMANDS[args.command](args)
    except ValidationError as e:
        first = e.errors()[0]
        reason = f"invalid {'.'.join(str(p) for p in first['loc'])}: {first['msg']}"
    except (OSError, ValueError) as e:
        reason = str(e)
    logger.error("Command failed", command=args.command, reason=reason)
    print(f"error: {reason}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
