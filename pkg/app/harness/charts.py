"""
SVG line charts overlaying the aggregated series of several experiments.
"""
from pathlib import Path
from typing import Dict, List, Mapping

import matplotlib
import pandas as pd
import structlog
from matplotlib.figure import Figure

from app.core.metrics_csv import MetricsCSV

logger = structlog.get_logger()

CHART_METRICS: Dict[str, str] = {
    "avg_waiting_all": "Average waiting time (steps)",
    "total_waiting_priority": "Total waiting time of priority vehicles (steps)",
    "collisions": "Collisions per step",
}

# Fixed hash salt and no date keep the SVG output stable across reruns.
matplotlib.rcParams.update({"svg.hashsalt": "norm-synthesis", "svg.fonttype": "none"})


def emit_charts(series: Mapping[str, Path], output_dir: Path) -> List[Path]:
    """
    Write one SVG per metric, one line per labelled aggregate CSV

    Args:
        series: Legend label -> aggregate (or smoothed aggregate) CSV
        output_dir: Directory for the chart files

    Returns:
        Paths of the written charts

    Raises:
        FileNotFoundError: If an input CSV is missing
        ValueError: If there is no input or an aggregate has no rows
    """
    if not series:
        raise ValueError("No aggregate series given")

    frames: Dict[str, pd.DataFrame] = {}
    for label, path in series.items():
        frame = MetricsCSV.read_frame(Path(path))
        if frame.empty:
            raise ValueError(f"Aggregate {path} has no rows")
        frames[label] = frame

    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)

    written = []
    for metric, ylabel in CHART_METRICS.items():
        fig = Figure(figsize=(8, 4.5))
        ax = fig.subplots()
        for label, frame in frames.items():
            ax.plot(frame["step"], frame[metric], "-", linewidth=1.2, label=label)
        ax.set_xlabel("Time step")
        ax.set_ylabel(ylabel)
        ax.set_ylim(bottom=0)
        ax.grid(True, alpha=0.3)
        ax.legend(loc="best", fontsize="medium")

        path = output_dir / f"{metric}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        written.append(path)

    logger.info("Charts written", output_dir=str(output_dir), files=[p.name for p in written])
    return written
