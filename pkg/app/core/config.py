"""
Scenario configuration. Process-level settings come from the environment via
python-decouple; scenario parameters are validated pydantic models.
"""
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from decouple import RepositoryEnv, config
from pydantic import BaseModel, Field, field_validator, model_validator

OUTPUT_DIR = config("SIM_OUTPUT_DIR", default="results")
WORKERS = config("SIM_WORKERS", default=1, cast=int)
LOG_LEVEL = config("LOG_LEVEL", default="INFO")
LOG_JSON = config("LOG_JSON", default=True, cast=bool)


class Strategy(str, Enum):
    UNS = "uns"
    IRON = "iron"
    NONE = "none"


class EvaluationConfig(BaseModel):
    """
    Weights and thresholds for norm necessity/effectiveness scoring and refinement
    """

    w_vc: float = Field(default=1.0, gt=0, description="Weight of violations that led to conflicts")
    w_vnotc: float = Field(default=1.0, gt=0, description="Weight of harmless violations")
    w_ac: float = Field(default=1.0, gt=0, description="Weight of applications that led to conflicts")
    w_anotc: float = Field(default=1.0, gt=0, description="Weight of successful applications")
    necessity_threshold: float = Field(default=0.3, ge=0, le=1)
    effectiveness_threshold: float = Field(default=0.3, ge=0, le=1)
    refinement_interval: int = Field(default=50, ge=1, description="T, steps between refinements")
    stats_window: int = Field(default=100, ge=1, description="W, steps of application history kept")

    @model_validator(mode="after")
    def window_covers_interval(self) -> "EvaluationConfig":
        if self.stats_window < self.refinement_interval:
            raise ValueError("stats_window must be >= refinement_interval")
        return self


class ScenarioConfig(BaseModel):
    """
    Full parameter set of one experiment (a batch of seeded runs)
    """

    grid_size: int = Field(default=19, ge=5)
    spawn_min: int = Field(default=2, ge=0)
    spawn_max: int = Field(default=8, ge=0)
    priority_ratio: str = Field(default="12:100", description="priority:ordinary generation ratio")
    violation_rate: float = Field(default=0.1, ge=0, le=1)
    strategy: Strategy = Strategy.UNS
    max_steps: int = Field(default=1000, ge=1)
    runs: int = Field(default=10, ge=1)
    moving_average_window: int = Field(default=50, ge=1)
    seed: int = Field(default=0, ge=0)
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)
    deadlock_patience: int = Field(default=20, ge=1)
    workers: int = Field(default_factory=lambda: WORKERS, ge=1)

    @field_validator("priority_ratio")
    @classmethod
    def ratio_format(cls, value: str) -> str:
        parse_ratio(value)
        return value

    @model_validator(mode="after")
    def spawn_bounds(self) -> "ScenarioConfig":
        if self.spawn_min > self.spawn_max:
            raise ValueError("spawn_min must be <= spawn_max")
        return self

    @property
    def priority_probability(self) -> float:
        priority, ordinary = parse_ratio(self.priority_ratio)
        return priority / (priority + ordinary)


def parse_ratio(value: str) -> Tuple[int, int]:
    """
    Parse a `P:O` ratio string

    Raises:
        ValueError: If the value is not two non-negative integers with a positive sum
    """
    try:
        left, right = (int(part) for part in value.split(":"))
    except ValueError:
        raise ValueError(f"Invalid ratio {value!r}, expected 'P:O'") from None
    if left < 0 or right < 0 or left + right == 0:
        raise ValueError(f"Invalid ratio {value!r}")
    return left, right


SCENARIO_PRESETS: Dict[str, Dict[str, Any]] = {
    "a": {"violation_rate": 0.1},
    "b": {"violation_rate": 0.7},
    "c": {"violation_rate": 0.0},
}


def read_config_file(path: str) -> Dict[str, Any]:
    """
    Read a KEY=value scenario document into nested keyword arguments

    Args:
        path: Path to the document; `evaluation.<field>` keys fill the evaluation block

    Returns:
        Dictionary ready for ScenarioConfig validation
    """
    if not Path(path).is_file():
        raise FileNotFoundError(f"Config file not found: {path}")

    repository = RepositoryEnv(path)
    values: Dict[str, Any] = {}
    evaluation: Dict[str, Any] = {}
    for key, raw in repository.data.items():
        if key.startswith("evaluation."):
            evaluation[key.split(".", 1)[1]] = raw
        else:
            values[key] = raw
    if evaluation:
        values["evaluation"] = evaluation
    return values


def build_scenario_config(
    scenario: Optional[str] = None,
    config_file: Optional[str] = None,
    **overrides: Any,
) -> ScenarioConfig:
    """
    Merge preset, config file and explicit overrides (in that precedence order)

    Raises:
        ValueError: Unknown scenario name
        pydantic.ValidationError: Invalid merged values
    """
    values: Dict[str, Any] = {}
    if scenario is not None:
        try:
            values.update(SCENARIO_PRESETS[scenario.lower()])
        except KeyError:
            raise ValueError(f"Unknown scenario {scenario!r}, expected one of a, b, c") from None

    if config_file is not None:
        file_values = read_config_file(config_file)
        evaluation = {**values.get("evaluation", {}), **file_values.pop("evaluation", {})}
        values.update(file_values)
        if evaluation:
            values["evaluation"] = evaluation

    for key, value in overrides.items():
        if value is not None:
            values[key] = value

    return ScenarioConfig.model_validate(values)
