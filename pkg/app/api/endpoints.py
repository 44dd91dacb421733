from datetime import datetime, timezone
from pathlib import Path
from typing import List

import structlog
from fastapi import APIRouter, Depends, HTTPException, status
from fastapi.concurrency import run_in_threadpool
from pydantic import ValidationError

from app.api.models import (
    ComparisonResponse,
    ErrorResponse,
    HealthResponse,
    ScenarioInfo,
    SimulationRequest,
    SimulationResponse,
)
from app.core.config import OUTPUT_DIR, SCENARIO_PRESETS, ScenarioConfig, build_scenario_config
from app.harness.experiment import compare, run_experiment

logger = structlog.get_logger()
router = APIRouter()

VERSION = "1.0.0"


def get_output_root() -> Path:
    """Dependency: root directory for experiment outputs"""
    return Path(OUTPUT_DIR)


def _config(request: SimulationRequest) -> ScenarioConfig:
    try:
        return build_scenario_config(
            scenario=request.scenario,
            strategy=request.strategy,
            seed=request.seed,
            max_steps=request.steps,
            runs=request.runs,
            workers=1,
        )
    except (ValidationError, ValueError) as e:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e)) from e


def _target(root: Path, request: SimulationRequest, kind: str) -> Path:
    name = request.name or datetime.now(timezone.utc).strftime(f"{kind}-%Y%m%dT%H%M%S%f")
    return root / name


@router.get(
    "/health",
    response_model=HealthResponse,
    summary="Health check",
)
async def health_check(root: Path = Depends(get_output_root)) -> HealthResponse:
    """
    Health check endpoint for monitoring and load balancing
    """
    return HealthResponse(status="healthy", version=VERSION, output_dir=str(root))


@router.get(
    "/scenarios",
    response_model=List[ScenarioInfo],
    summary="List scenario presets",
)
async def list_scenarios() -> List[ScenarioInfo]:
    """
    Scenario presets with their fully resolved configuration
    """
    scenarios = []
    for name in sorted(SCENARIO_PRESETS):
        config = build_scenario_config(scenario=name)
        scenarios.append(
            ScenarioInfo(name=name, violation_rate=config.violation_rate, config=config.model_dump(mode="json"))
        )
    return scenarios


@router.post(
    "/simulate",
    response_model=SimulationResponse,
    responses={422: {"model": ErrorResponse}, 500: {"model": ErrorResponse}},
    summary="Run an experiment",
    description="Run a batch of seeded simulations with one strategy and return the run summaries",
)
async def simulate(
    request: SimulationRequest, root: Path = Depends(get_output_root)
) -> SimulationResponse:
    """
    Run a seeded batch with one strategy and write its outputs under the output root
    """
    config = _config(request)
    output_dir = _target(root, request, config.strategy.value)
    logger.info("Simulation request received", strategy=config.strategy.value, runs=config.runs)

    try:
        report = await run_in_threadpool(run_experiment, config, output_dir)
    except OSError as e:
        logger.error("Simulation failed", output_dir=str(output_dir), error=str(e))
        raise HTTPException(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR, detail=f"Simulation failed: {e}"
        ) from e

    summary = report.summary()
    return SimulationResponse(
        strategy=config.strategy,
        output_dir=str(output_dir),
        runs=summary["runs"],
        means=summary["means"],
    )


@router.post(
    "/compare",
    response_model=ComparisonResponse,
    responses={422: {"model": ErrorResponse}, 500: {"model": ErrorResponse}},
    summary="Compare UNS and IRON",
    description="Run both strategies on shared seeds and return the paired summary with verdicts",
)
async def compare_strategies(
    request: SimulationRequest, root: Path = Depends(get_output_root)
) -> ComparisonResponse:
    """
    Paired UNS and IRON experiment on shared seeds

    Both strategies see the same spawn streams.
    """
    config = _config(request)
    output_dir = _target(root, request, "compare")
    logger.info("Comparison request received", runs=config.runs, seed=config.seed)

    try:
        comparison = await run_in_threadpool(compare, config, output_dir)
    except (OSError, ValueError) as e:
        logger.error("Comparison failed", output_dir=str(output_dir), error=str(e))
        raise HTTPException(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR, detail=f"Comparison failed: {e}"
        ) from e

    return ComparisonResponse(output_dir=str(output_dir), **comparison)
