"""
Conflict detection over view transitions, and classification of norm
applications into the four outcome sets used for evaluation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import structlog

from app.core.exceptions import ContractViolationError
from app.models.norm import NormSet
from app.models.world import Action, LocalView, Position, WorldState
from app.simulation.gridworld import local_view

logger = structlog.get_logger()


@dataclass(frozen=True)
class Decision:
    """What a vehicle did this step and which assigned norms it obeyed or violated"""

    action: Action
    norm_ids: Tuple[int, ...] = ()

    @property
    def complied(self) -> Optional[bool]:
        if not self.norm_ids:
            return None
        return self.action is Action.STOP


@dataclass(frozen=True)
class VehicleSnapshot:
    vehicle_id: int
    position: Position
    ahead: Position
    view: LocalView
    decision: Decision


@dataclass(frozen=True)
class ViewTransition:
    before_step: int
    after_step: int
    vehicles: Mapping[int, VehicleSnapshot]
    collisions: Mapping[Position, Tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if self.before_step + 1 != self.after_step:
            raise ContractViolationError(
                f"Transition must span one step, got {self.before_step} -> {self.after_step}"
            )

    @property
    def collided(self) -> Dict[int, Position]:
        return {vid: cell for cell, ids in self.collisions.items() for vid in ids}


@dataclass(frozen=True)
class Responsible:
    vehicle_id: int
    context: LocalView
    action: Action = Action.GO


@dataclass(frozen=True)
class Conflict:
    time_step: int
    cell: Position
    responsible: Tuple[Responsible, ...]

    def __post_init__(self):
        if len(self.responsible) < 2:
            raise ContractViolationError("A conflict needs at least two responsible vehicles")


@dataclass
class ApplicationCounts:
    applied_conflict: int = 0
    applied_no_conflict: int = 0
    violated_conflict: int = 0
    violated_no_conflict: int = 0

    @property
    def total(self) -> int:
        return (
            self.applied_conflict
            + self.applied_no_conflict
            + self.violated_conflict
            + self.violated_no_conflict
        )

    def __add__(self, other: ApplicationCounts) -> ApplicationCounts:
        return ApplicationCounts(
            self.applied_conflict + other.applied_conflict,
            self.applied_no_conflict + other.applied_no_conflict,
            self.violated_conflict + other.violated_conflict,
            self.violated_no_conflict + other.violated_no_conflict,
        )


def capture_snapshot(world: WorldState, decisions: Mapping[int, Decision]) -> Dict[int, VehicleSnapshot]:
    """Contexts and decisions of every active vehicle, taken before the moves execute"""
    return {
        vehicle.id: VehicleSnapshot(
            vehicle_id=vehicle.id,
            position=vehicle.position,
            ahead=vehicle.ahead,
            view=local_view(world, vehicle.id),
            decision=decisions[vehicle.id],
        )
        for vehicle in world.active_vehicles()
    }


def build_transition(
    before_step: int, snapshot: Mapping[int, VehicleSnapshot], world_after: WorldState
) -> ViewTransition:
    return ViewTransition(
        before_step=before_step,
        after_step=world_after.time_step,
        vehicles=dict(snapshot),
        collisions=dict(world_after.last_outcome.collisions),
    )


def detect_conflicts(transition: ViewTransition) -> List[Conflict]:
    """One conflict per collision cell, holding every vehicle that arrived there"""
    conflicts: List[Conflict] = []
    for cell in sorted(transition.collisions):
        responsible = []
        for vehicle_id in sorted(transition.collisions[cell]):
            snapshot = transition.vehicles.get(vehicle_id)
            if snapshot is None:
                raise ContractViolationError(f"No t-1 context recorded for vehicle {vehicle_id}")
            responsible.append(
                Responsible(vehicle_id, snapshot.view, snapshot.decision.action)
            )
        conflicts.append(Conflict(transition.after_step, cell, tuple(responsible)))

    if conflicts:
        logger.debug(
            "Conflicts detected",
            step=transition.after_step,
            count=len(conflicts),
            cells=[tuple(c.cell) for c in conflicts],
        )
    return conflicts


def classify_applications(
    transition: ViewTransition,
    norm_set: NormSet,
    decisions: Optional[Mapping[int, Decision]] = None,
) -> Dict[int, ApplicationCounts]:
    """
    Split each (vehicle, assigned norm) event into applied/violated x conflict/no conflict

    An obeying vehicle counts as "applied, conflict" when the cell it would
    have entered hosted a collision; a violating vehicle counts as
    "violated, conflict" when it collided itself. Norms the vehicle was not
    assigned (dismissed during reasoning) are not counted.

    Args:
        transition: Step transition with the t-1 snapshot
        norm_set: Current norm set; unknown ids are ignored
        decisions: Overrides the decisions stored in the snapshot

    Returns:
        Per-norm counts for norms touched this step
    """
    collided = transition.collided
    counts: Dict[int, ApplicationCounts] = {}

    for vehicle_id in sorted(transition.vehicles):
        snapshot = transition.vehicles[vehicle_id]
        decision = snapshot.decision if decisions is None else decisions.get(vehicle_id)
        if decision is None or not decision.norm_ids:
            continue

        if decision.complied:
            in_conflict = snapshot.ahead in transition.collisions
        else:
            in_conflict = vehicle_id in collided

        for norm_id in decision.norm_ids:
            if norm_id not in norm_set.norms:
                continue
            entry = counts.setdefault(norm_id, ApplicationCounts())
            if decision.complied and in_conflict:
                entry.applied_conflict += 1
            elif decision.complied:
                entry.applied_no_conflict += 1
            elif in_conflict:
                entry.violated_conflict += 1
            else:
                entry.violated_no_conflict += 1

    return counts
