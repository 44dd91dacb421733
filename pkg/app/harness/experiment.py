"""
Experiment runner: a batch of seeded runs, cross-run aggregation, trailing
moving average, and the files written for each experiment directory.
"""
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd
import structlog

from app.core.config import LOG_JSON, LOG_LEVEL, ScenarioConfig, Strategy
from app.core.logging import configure_logging
from app.core.metrics_csv import EVENT_COLUMNS, METRIC_COLUMNS, MetricsCSV
from app.harness.simulation import RunResult, execute_run
from app.models.norm import Precondition
from app.models.world import CellDescriptor

logger = structlog.get_logger()

SUMMARY_FIELDS = (
    "mean_avg_waiting",
    "mean_total_priority_waiting",
    "mean_collisions_per_step",
    "total_collisions",
    "norms_synthesised",
    "final_active_norms",
)


@dataclass
class ExperimentReport:
    config: ScenarioConfig
    output_dir: Path
    runs: List[RunResult]
    aggregate: pd.DataFrame
    smoothed: pd.DataFrame

    @property
    def deadlocks(self) -> int:
        return sum(1 for run in self.runs if run.deadlocked)

    def summary(self) -> Dict[str, Any]:
        per_run = [run.summary() for run in self.runs]
        means = {
            name: sum(entry[name] for entry in per_run) / len(per_run) for name in SUMMARY_FIELDS
        }
        means["deadlock_frequency"] = self.deadlocks / len(per_run)
        return {
            "strategy": self.config.strategy.value,
            "config": self.config.model_dump(mode="json"),
            "runs": per_run,
            "means": means,
        }


def run_frame(run: RunResult) -> pd.DataFrame:
    return pd.DataFrame([record.as_row() for record in run.records], columns=list(METRIC_COLUMNS))


def aggregate_runs(frames: List[pd.DataFrame], max_steps: int) -> pd.DataFrame:
    """
    Cross-run mean per step; a run that stopped early (deadlock) carries its
    last record forward to max_steps
    """
    steps = pd.RangeIndex(max_steps, name="step")
    padded = []
    for index, frame in enumerate(frames):
        if frame.empty:
            continue
        filled = frame.set_index("step").reindex(steps).ffill()
        padded.append(filled.assign(run=index))
    if not padded:
        return pd.DataFrame(columns=list(METRIC_COLUMNS))

    combined = pd.concat(padded).reset_index()
    aggregate = combined.drop(columns="run").groupby("step", sort=True).mean().reset_index()
    return aggregate[list(METRIC_COLUMNS)]


def moving_average(aggregate: pd.DataFrame, window: int) -> pd.DataFrame:
    """Trailing mean over the last min(window, step+1) rows"""
    smoothed = aggregate.copy()
    metrics = [c for c in METRIC_COLUMNS if c != "step"]
    smoothed[metrics] = aggregate[metrics].rolling(window, min_periods=1).mean()
    return smoothed


def _execute(config: ScenarioConfig) -> List[RunResult]:
    indices = range(config.runs)
    if config.workers <= 1 or config.runs == 1:
        return [execute_run(config, i) for i in indices]

    with ProcessPoolExecutor(
        max_workers=min(config.workers, config.runs),
        initializer=configure_logging,
        initargs=(LOG_LEVEL, LOG_JSON),
    ) as pool:
        return list(pool.map(execute_run, [config] * config.runs, indices))


def write_json(payload: Dict[str, Any], path: Path) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as e:
        logger.error("Failed to write JSON", path=str(path), error=str(e))
        raise OSError(e.errno, f"Cannot write {path}: {e.strerror or e}") from e
    return path


def write_run(run: RunResult, output_dir: Path) -> None:
    index = run.run_index
    MetricsCSV.write_frame(run_frame(run), output_dir / f"run_{index}.csv")
    MetricsCSV.write_rows(
        (vars(event) for event in run.events),
        output_dir / f"run_{index}_events.csv",
        columns=EVENT_COLUMNS,
    )
    norms_path = output_dir / f"norms_{index}.txt"
    try:
        norms_path.write_text("".join(f"{line}\n" for line in run.norm_lines), encoding="utf-8")
    except OSError as e:
        logger.error("Failed to write norm dump", path=str(norms_path), error=str(e))
        raise OSError(e.errno, f"Cannot write {norms_path}: {e.strerror or e}") from e


def run_experiment(config: ScenarioConfig, output_dir: Path) -> ExperimentReport:
    """
    Execute config.runs seeded runs and write their raw and aggregated outputs

    Args:
        config: Scenario parameters; run i uses seed config.seed + i
        output_dir: Experiment directory, created if missing

    Returns:
        Report holding per-run results and the aggregated frames

    Raises:
        OSError: If an output file cannot be written
    """
    output_dir = Path(output_dir)
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        logger.error("Cannot create output directory", path=str(output_dir), error=str(e))
        raise OSError(e.errno, f"Cannot create {output_dir}: {e.strerror or e}") from e

    log = logger.bind(strategy=config.strategy.value, runs=config.runs, seed=config.seed)
    log.info("Experiment started", output_dir=str(output_dir), workers=config.workers)

    runs = _execute(config)
    for run in runs:
        write_run(run, output_dir)

    aggregate = aggregate_runs([run_frame(run) for run in runs], config.max_steps)
    smoothed = moving_average(aggregate, config.moving_average_window)
    MetricsCSV.write_frame(aggregate, output_dir / "aggregate.csv")
    MetricsCSV.write_frame(smoothed, output_dir / f"aggregate_ma{config.moving_average_window}.csv")

    report = ExperimentReport(config, output_dir, runs, aggregate, smoothed)
    write_json(report.summary(), output_dir / "summary.json")

    log.info("Experiment completed", deadlocks=report.deadlocks, **report.summary()["means"])
    return report


def _orientations(preconditions: List[str]) -> Dict[str, bool]:
    """Whether any norm stops for crossing traffic on the left, and on the right"""
    crossing = (CellDescriptor.HEADING_FROM_LEFT, CellDescriptor.HEADING_FROM_RIGHT)
    parsed = [Precondition.parse(text) for text in preconditions]
    return {
        "left_stop": any(p.left in crossing for p in parsed),
        "right_stop": any(p.right in crossing for p in parsed),
    }


def compare_reports(uns: ExperimentReport, iron: ExperimentReport) -> Dict[str, Any]:
    """Paired UNS/IRON summary with the directional verdicts"""
    u, i = uns.summary()["means"], iron.summary()["means"]
    uns_total = sum(r.summary()["total_collisions"] for r in uns.runs)
    iron_total = sum(r.summary()["total_collisions"] for r in iron.runs)
    orientations = [_orientations(run.active_preconditions) for run in uns.runs]

    verdicts = {
        "fewer_collisions_per_step": u["mean_collisions_per_step"] < i["mean_collisions_per_step"],
        "total_collisions_within_70_percent": uns_total <= 0.7 * iron_total,
        "collisions_not_higher": uns_total <= iron_total,
        "priority_waiting_not_higher": u["mean_total_priority_waiting"] <= i["mean_total_priority_waiting"],
        "avg_waiting_not_higher": u["mean_avg_waiting"] <= i["mean_avg_waiting"],
        "uns_norm_count_not_lower": all(
            a.norms_synthesised >= b.norms_synthesised for a, b in zip(uns.runs, iron.runs)
        ),
        "uns_both_orientations": all(o["left_stop"] and o["right_stop"] for o in orientations),
        "iron_deadlock_frequency": iron.deadlocks / len(iron.runs),
        "uns_deadlock_frequency": uns.deadlocks / len(uns.runs),
    }
    return {
        "uns": u,
        "iron": i,
        "total_collisions": {"uns": uns_total, "iron": iron_total},
        "verdicts": verdicts,
    }


def compare(config: ScenarioConfig, output_dir: Path, charts: bool = True) -> Dict[str, Any]:
    """
    Run UNS and IRON on the same seeds (hence the same spawn streams) and
    write uns/, iron/, charts/ and comparison.json under output_dir
    """
    from app.harness.charts import emit_charts

    output_dir = Path(output_dir)
    reports = {
        strategy: run_experiment(
            config.model_copy(update={"strategy": strategy}), output_dir / strategy.value
        )
        for strategy in (Strategy.UNS, Strategy.IRON)
    }
    comparison = compare_reports(reports[Strategy.UNS], reports[Strategy.IRON])

    chart_files: Optional[List[Path]] = None
    if charts:
        ma_name = f"aggregate_ma{config.moving_average_window}.csv"
        chart_files = emit_charts(
            {s.value.upper(): output_dir / s.value / ma_name for s in reports},
            output_dir / "charts",
        )
    comparison["charts"] = [str(p) for p in chart_files or []]
    write_json(comparison, output_dir / "comparison.json")

    logger.info("Comparison completed", output_dir=str(output_dir), **comparison["verdicts"])
    return comparison
