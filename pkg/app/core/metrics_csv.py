from pathlib import Path
from typing import Iterable, List, Mapping, Sequence

import pandas as pd
import structlog

logger = structlog.get_logger()

METRIC_COLUMNS = (
    "step",
    "avg_waiting_all",
    "total_waiting_priority",
    "collisions",
    "active_norms",
    "deadlocked",
)
EVENT_COLUMNS = ("step", "event", "norm_id", "precondition")
FLOAT_FORMAT = "%.6f"


class MetricsCSV:
    """
    Reader/writer for per-run and aggregated metric files with the fixed
    column order `step,avg_waiting_all,total_waiting_priority,collisions,active_norms,deadlocked`
    """

    @staticmethod
    def write_frame(frame: pd.DataFrame, path: Path) -> Path:
        """
        Write a frame with a fixed float format so reruns are byte-identical

        Raises:
            OSError: If the file cannot be written; the message names the path
        """
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        except OSError as e:
            logger.error("Failed to write CSV", path=str(path), error=str(e))
            raise OSError(e.errno, f"Cannot write {path}: {e.strerror or e}") from e
        return path

    @classmethod
    def write_rows(cls, rows: Iterable[Mapping], path: Path, columns: Sequence[str] = METRIC_COLUMNS) -> Path:
        frame = pd.DataFrame(list(rows), columns=list(columns))
        return cls.write_frame(frame, path)

    @classmethod
    def read_frame(cls, path: Path) -> pd.DataFrame:
        """
        Read a metrics CSV and check its header

        Raises:
            FileNotFoundError: If the file does not exist
            ValueError: If the columns are not the metric columns in order
        """
        path = Path(path)
        if not path.is_file():
            logger.error("Metrics CSV not found", path=str(path))
            raise FileNotFoundError(f"Metrics CSV not found: {path}")

        frame = pd.read_csv(path)
        if not cls.validate_columns(frame.columns):
            raise ValueError(
                f"Unexpected columns in {path}: {list(frame.columns)}, expected {list(METRIC_COLUMNS)}"
            )
        logger.debug("Metrics CSV loaded", path=str(path), rows=len(frame))
        return frame

    @staticmethod
    def validate_columns(columns: Sequence[str]) -> bool:
        return tuple(columns) == METRIC_COLUMNS

    @staticmethod
    def run_files(directory: Path) -> List[Path]:
        """Raw per-run CSVs of an experiment directory, ordered by run index"""
        files = [
            p for p in Path(directory).glob("run_*.csv") if p.stem.split("_", 1)[1].isdigit()
        ]
        return sorted(files, key=lambda p: int(p.stem.split("_", 1)[1]))
