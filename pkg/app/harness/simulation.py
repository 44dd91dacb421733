"""
One seeded simulation run: the per-step loop that ties the world to the norm
engine (reason, comply, move, detect, synthesise, evaluate, refine, spawn).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from app.core.config import ScenarioConfig, Strategy
from app.models.norm import NormGraph, NormSet
from app.models.world import Action, WorldState
from app.norms.detection import (
    Decision,
    build_transition,
    capture_snapshot,
    classify_applications,
    detect_conflicts,
)
from app.norms.evaluation import NormStats, refine
from app.norms.reasoning import (
    Resolution,
    UtilityFunction,
    apply_all_applicable,
    build_traffic_utility,
    resolve_unmatchable,
)
from app.norms.synthesis import synthesize_iron, synthesize_uns
from app.simulation.gridworld import apply_moves, new_world, spawn_vehicles

logger = structlog.get_logger()


@dataclass
class MetricsRecord:
    step: int
    avg_waiting_all: float
    total_waiting_priority: int
    collisions: int
    active_norms: int
    deadlocked: bool = False
    # Not written to the CSV files
    moved: int = 0
    spawned: int = 0
    norms_created: int = 0
    assigned: int = 0
    violated: int = 0

    def as_row(self) -> Dict[str, Any]:
        return {
            "step": self.step,
            "avg_waiting_all": self.avg_waiting_all,
            "total_waiting_priority": self.total_waiting_priority,
            "collisions": self.collisions,
            "active_norms": self.active_norms,
            "deadlocked": int(self.deadlocked),
        }


@dataclass
class RandomStreams:
    """Independent substreams so strategies share one spawn sequence"""

    spawn: np.random.Generator
    compliance: np.random.Generator
    choice: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> RandomStreams:
        spawn, compliance, choice = (
            np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)
        )
        return cls(spawn=spawn, compliance=compliance, choice=choice)


@dataclass
class NormEvent:
    step: int
    event: str
    norm_id: int
    precondition: str


def reason(
    world: WorldState, norm_set: NormSet, strategy: Strategy, utility: UtilityFunction
) -> Resolution:
    if strategy is Strategy.UNS:
        return resolve_unmatchable(world, norm_set, utility)
    if strategy is Strategy.IRON:
        return apply_all_applicable(world, norm_set)
    return Resolution(assignments={v.id: () for v in world.active_vehicles()})


def draw_compliance(
    world: WorldState, resolution: Resolution, violation_rate: float, rng: np.random.Generator
) -> Dict[int, Decision]:
    """One draw per vehicle holding assigned norms; a violation means Go"""
    decisions: Dict[int, Decision] = {}
    for vehicle in world.active_vehicles():
        norm_ids = resolution.assignments.get(vehicle.id, ())
        if norm_ids and not rng.random() < violation_rate:
            decisions[vehicle.id] = Decision(Action.STOP, norm_ids)
        else:
            decisions[vehicle.id] = Decision(Action.GO, norm_ids)
    return decisions


def step_metrics(world: WorldState) -> Tuple[float, int]:
    """Mean waiting of vehicles active now or departed this step, and their priority total"""
    present = world.active_vehicles() + [
        v for v in reversed(world.departed) if v.exited_step == world.time_step
    ]
    if not present:
        return 0.0, 0
    average = sum(v.waiting_steps for v in present) / len(present)
    priority_total = sum(v.waiting_steps for v in present if v.is_priority)
    return average, priority_total


def step_once(
    world: WorldState,
    norm_set: NormSet,
    norm_graph: NormGraph,
    stats: NormStats,
    config: ScenarioConfig,
    rng: RandomStreams,
    utility: Optional[UtilityFunction] = None,
    events: Optional[List[NormEvent]] = None,
) -> MetricsRecord:
    """
    Execute one time-step of the normative simulation

    Returns:
        Metrics observed at the end of the step
    """
    utility = utility or build_traffic_utility()
    step = world.time_step

    resolution = reason(world, norm_set, config.strategy, utility)
    decisions = draw_compliance(world, resolution, config.violation_rate, rng.compliance)

    snapshot = capture_snapshot(world, decisions)
    apply_moves(world, {vid: d.action for vid, d in decisions.items()})
    transition = build_transition(step, snapshot, world)
    now = world.time_step

    conflicts = detect_conflicts(transition)

    created = []
    if config.strategy is Strategy.UNS:
        created = synthesize_uns(conflicts, norm_set)
    elif config.strategy is Strategy.IRON:
        created = synthesize_iron(conflicts, norm_set, rng.choice)

    stats.record(now, classify_applications(transition, norm_set))
    stats.evaluate(norm_set, config.evaluation, now)
    report = refine(norm_set, norm_graph, stats, config.evaluation, now)

    if events is not None:
        for norm in created:
            events.append(NormEvent(now, "created", norm.id, norm.render()))
        for event, norm_id in report.events():
            events.append(NormEvent(now, event, norm_id, norm_set.norms[norm_id].render()))

    spawned = spawn_vehicles(world, rng.spawn, config)

    average, priority_total = step_metrics(world)
    assigned = [d for d in decisions.values() if d.norm_ids]
    return MetricsRecord(
        step=step,
        avg_waiting_all=average,
        total_waiting_priority=priority_total,
        collisions=len(world.last_outcome.collisions),
        active_norms=len(norm_set.active_norms()),
        moved=world.last_outcome.moved,
        spawned=len(spawned),
        norms_created=len(created),
        assigned=len(assigned),
        violated=sum(1 for d in assigned if not d.complied),
    )


def detect_deadlock(history: Sequence[MetricsRecord], world: WorldState, config: ScenarioConfig) -> bool:
    """True when vehicles are present but none moved for `deadlock_patience` steps"""
    patience = config.deadlock_patience
    if len(history) < patience or not world.active_vehicles():
        return False
    return all(record.moved == 0 for record in history[-patience:])


@dataclass
class RunResult:
    run_index: int
    seed: int
    records: List[MetricsRecord]
    events: List[NormEvent]
    norm_lines: List[str]
    norms_synthesised: int
    final_active_norms: int
    active_preconditions: List[str] = field(default_factory=list)
    deadlock_step: Optional[int] = None
    max_steps: int = 0

    @property
    def deadlocked(self) -> bool:
        return self.deadlock_step is not None

    def padded_mean(self, attribute: str) -> float:
        """
        Mean over max_steps with the last record carried forward, as the
        cross-run aggregate does for a run that stopped early
        """
        if not self.records:
            return 0.0
        values = [getattr(r, attribute) for r in self.records]
        steps = max(self.max_steps, len(values))
        return (sum(values) + values[-1] * (steps - len(values))) / steps

    def summary(self) -> Dict[str, Any]:
        return {
            "run_index": self.run_index,
            "seed": self.seed,
            "steps": len(self.records),
            "mean_avg_waiting": self.padded_mean("avg_waiting_all"),
            "mean_total_priority_waiting": self.padded_mean("total_waiting_priority"),
            "mean_collisions_per_step": self.padded_mean("collisions"),
            "total_collisions": sum(r.collisions for r in self.records),
            "norms_synthesised": self.norms_synthesised,
            "final_active_norms": self.final_active_norms,
            "deadlocked": self.deadlocked,
            "deadlock_step": self.deadlock_step,
        }


class SimulationRun:
    """
    Owns the full mutable state of one seeded run
    """

    def __init__(self, config: ScenarioConfig, run_index: int = 0):
        self.config = config
        self.run_index = run_index
        self.seed = config.seed + run_index
        self.world = new_world(config)
        self.norm_set = NormSet()
        self.norm_graph = NormGraph()
        self.stats = NormStats.for_config(config.evaluation)
        self.rng = RandomStreams.from_seed(self.seed)
        self.utility = build_traffic_utility()
        self.history: List[MetricsRecord] = []
        self.events: List[NormEvent] = []
        self.deadlock_step: Optional[int] = None

    def step(self) -> MetricsRecord:
        record = step_once(
            self.world,
            self.norm_set,
            self.norm_graph,
            self.stats,
            self.config,
            self.rng,
            utility=self.utility,
            events=self.events,
        )
        self.history.append(record)
        if detect_deadlock(self.history, self.world, self.config):
            record.deadlocked = True
            self.deadlock_step = record.step
        return record

    def run(self) -> RunResult:
        log = logger.bind(run_index=self.run_index, seed=self.seed, strategy=self.config.strategy.value)
        log.info("Run started", max_steps=self.config.max_steps)

        for _ in range(self.config.max_steps):
            self.step()
            if self.deadlock_step is not None:
                log.warning("Run terminated by deadlock", step=self.deadlock_step)
                break

        result = RunResult(
            run_index=self.run_index,
            seed=self.seed,
            records=self.history,
            events=self.events,
            norm_lines=self.norm_dump(),
            norms_synthesised=len(self.norm_set.norms),
            final_active_norms=len(self.norm_set.active_norms()),
            active_preconditions=[n.render() for n in self.norm_set.active_norms()],
            deadlock_step=self.deadlock_step,
            max_steps=self.config.max_steps,
        )
        log.info(
            "Run completed",
            steps=len(self.history),
            total_collisions=sum(r.collisions for r in self.history),
            norms=result.norms_synthesised,
            deadlocked=result.deadlocked,
        )
        return result

    def norm_dump(self) -> List[str]:
        """One line per norm: textual form, id, activation and final NNR/NER"""
        lines = []
        for norm_id in sorted(self.norm_set.norms):
            norm = self.norm_set.norms[norm_id]
            nnr, ner = self.stats.latest(norm_id, self.world.time_step, self.config.evaluation)
            lines.append(
                f"{norm.render()} id={norm.id} active={int(norm.active)} "
                f"nnr={_score(nnr)} ner={_score(ner)}"
            )
        return lines


def _score(value: Optional[float]) -> str:
    return "undefined" if value is None else f"{value:.4f}"


def execute_run(config: ScenarioConfig, run_index: int) -> RunResult:
    """Process-pool entry point"""
    return SimulationRun(config, run_index).run()
