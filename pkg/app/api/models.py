from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from app.core.config import Strategy


class SimulationRequest(BaseModel):
    """
    Request model for the simulate and compare endpoints
    """
    scenario: Optional[str] = Field(None, pattern="^[abcABC]$", description="Scenario preset a, b or c")
    strategy: Optional[Strategy] = Field(None, description="Norm strategy (ignored by /compare)")
    seed: int = Field(default=0, ge=0, description="Seed of run 0")
    steps: int = Field(default=1000, ge=1, le=100_000, description="Steps per run")
    runs: int = Field(default=10, ge=1, le=100, description="Number of seeded runs")
    name: Optional[str] = Field(
        None, pattern=r"^[A-Za-z0-9_\-]+$", max_length=64, description="Output sub-directory name"
    )

    model_config = {
        "json_schema_extra": {
            "example": {"scenario": "a", "strategy": "uns", "seed": 0, "steps": 1000, "runs": 10}
        }
    }


class RunSummary(BaseModel):
    run_index: int
    seed: int
    steps: int
    mean_avg_waiting: float
    mean_total_priority_waiting: float
    mean_collisions_per_step: float
    total_collisions: int
    norms_synthesised: int
    final_active_norms: int
    deadlocked: bool
    deadlock_step: Optional[int] = None


class SimulationResponse(BaseModel):
    """
    Response model for the simulate endpoint
    """
    strategy: Strategy
    output_dir: str = Field(..., description="Directory holding the run and aggregate files")
    runs: List[RunSummary]
    means: Dict[str, float]


class ComparisonResponse(BaseModel):
    """
    Response model for the compare endpoint
    """
    output_dir: str
    uns: Dict[str, float]
    iron: Dict[str, float]
    total_collisions: Dict[str, int]
    verdicts: Dict[str, Any]
    charts: List[str] = Field(default_factory=list)


class ScenarioInfo(BaseModel):
    name: str
    violation_rate: float
    config: Dict[str, Any]


class HealthResponse(BaseModel):
    """
    Response model for health check endpoint
    """
    status: str = Field(..., description="Service status")
    version: str = Field(..., description="API version")
    output_dir: str = Field(..., description="Root directory for experiment outputs")

    model_config = {
        "json_schema_extra": {"example": {"status": "healthy", "version": "1.0.0", "output_dir": "results"}}
    }


class ErrorResponse(BaseModel):
    """
    Response model for error cases
    """
    error: str = Field(..., description="Error message")
    detail: Optional[str] = Field(None, description="Detailed error information")
