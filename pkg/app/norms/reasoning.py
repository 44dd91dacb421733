"""
Utility-based norm reasoning.

The system utility is built from objective terms (maximised terms add,
minimised terms subtract). Each candidate (vehicle, norm) pair is scored on a
one-step projection where the vehicle stops and everything transitively
queued behind it waits one more step. Within a contention group only the
best-scoring candidate is applied; the others are dismissed and their
vehicles go.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, FrozenSet, List, Mapping, Optional, Set, Tuple

import structlog

from app.core.exceptions import ContractViolationError
from app.models.norm import Norm, NormSet
from app.models.world import Position, WorldState
from app.norms.normset import applicable_norms, get_norm, matches
from app.simulation.gridworld import local_view, view_cells

logger = structlog.get_logger()

Candidate = Tuple[int, int]  # (vehicle id, norm id)


class Sense(Enum):
    MAXIMISE = 1
    MINIMISE = -1


@dataclass(frozen=True)
class Projection:
    """Waiting time of every active vehicle in a hypothetical next state"""

    waiting: Mapping[int, int]
    priority: FrozenSet[int]

    @classmethod
    def of(cls, world: WorldState, blocked: Set[int] = frozenset()) -> Projection:
        active = world.active_vehicles()
        return cls(
            waiting={v.id: v.waiting_steps + (1 if v.id in blocked else 0) for v in active},
            priority=frozenset(v.id for v in active if v.is_priority),
        )


Evaluator = Callable[[Projection], float]


def average_waiting_all(projection: Projection) -> float:
    if not projection.waiting:
        return 0.0
    return sum(projection.waiting.values()) / len(projection.waiting)


def total_waiting_priority(projection: Projection) -> float:
    return float(sum(w for vid, w in projection.waiting.items() if vid in projection.priority))


EVALUATORS: Dict[str, Evaluator] = {
    "average-waiting-all": average_waiting_all,
    "total-waiting-priority": total_waiting_priority,
}


@dataclass(frozen=True)
class ObjectiveTerm:
    id: str
    sense: Sense
    evaluator: Evaluator

    @classmethod
    def builtin(cls, objective_id: str, sense: Sense = Sense.MINIMISE) -> ObjectiveTerm:
        try:
            return cls(objective_id, sense, EVALUATORS[objective_id])
        except KeyError:
            raise ValueError(f"Unknown objective evaluator {objective_id!r}") from None

    def contribution(self, projection: Projection) -> float:
        return self.sense.value * self.evaluator(projection)


@dataclass(frozen=True)
class UtilityFunction:
    terms: Tuple[ObjectiveTerm, ...]

    def value(self, projection: Projection) -> float:
        return sum(term.contribution(projection) for term in self.terms)


def build_traffic_utility() -> UtilityFunction:
    """U = -(average waiting of all vehicles + total waiting of priority vehicles)"""
    return UtilityFunction(
        terms=(
            ObjectiveTerm.builtin("average-waiting-all", Sense.MINIMISE),
            ObjectiveTerm.builtin("total-waiting-priority", Sense.MINIMISE),
        )
    )


@dataclass(frozen=True)
class NormUtility:
    agent: int
    norm: int
    utility: float


def affected_set(world: WorldState, stopping_vehicle: int) -> Set[int]:
    """
    Vehicles held up when the given vehicle stops: itself plus everything
    whose next cell is occupied by a member, transitively
    """
    start = world.vehicle(stopping_vehicle)
    followers: Dict[Tuple[int, int], List[int]] = {}
    for vehicle in world.active_vehicles():
        followers.setdefault(vehicle.ahead, []).append(vehicle.id)

    members = {start.id}
    queue = deque([start])
    while queue:
        member = queue.popleft()
        for follower_id in followers.get(member.position, ()):
            if follower_id not in members:
                members.add(follower_id)
                queue.append(world.vehicles[follower_id])
    return members


def accumulated_utility(world: WorldState, utility: UtilityFunction, agent: int, norm: Norm) -> float:
    """
    System utility of the one-step projection in which `agent` obeys `norm`

    Raises:
        ContractViolationError: If the norm does not apply to the agent's view
    """
    if not norm.active or not matches(norm.precondition, local_view(world, agent)):
        raise ContractViolationError(f"Norm {norm.id} is not applicable to vehicle {agent}")
    return utility.value(Projection.of(world, affected_set(world, agent)))


@dataclass
class Resolution:
    """Per-vehicle norm assignment for one step"""

    assignments: Dict[int, Tuple[int, ...]] = field(default_factory=dict)
    utilities: Dict[Candidate, float] = field(default_factory=dict)
    groups: List[Tuple[int, ...]] = field(default_factory=list)
    dismissed: Set[Candidate] = field(default_factory=set)
    cycle_breaks: Set[Candidate] = field(default_factory=set)

    def assigned_norm(self, vehicle_id: int) -> Optional[int]:
        norm_ids = self.assignments.get(vehicle_id, ())
        return norm_ids[0] if norm_ids else None

    def stopping_vehicles(self) -> Set[int]:
        return {vid for vid, norm_ids in self.assignments.items() if norm_ids}


def _candidates(world: WorldState, norm_set: NormSet) -> Dict[int, List[int]]:
    found: Dict[int, List[int]] = {}
    for vehicle in world.active_vehicles():
        norm_ids = [n.id for n in applicable_norms(norm_set, local_view(world, vehicle.id))]
        if norm_ids:
            found[vehicle.id] = norm_ids
    return found


def contention_groups(world: WorldState, candidate_vehicles: List[int]) -> List[Tuple[int, ...]]:
    """
    Group candidate vehicles whose intended next cells coincide

    Vehicles that only see each other stay in separate groups.
    """
    by_target: Dict[Position, List[int]] = {}
    for vid in sorted(candidate_vehicles):
        by_target.setdefault(world.vehicles[vid].ahead, []).append(vid)
    return sorted(tuple(members) for members in by_target.values())


def _on_wait_cycle(world: WorldState, stopping: Set[int], start: int) -> bool:
    """
    True when a stopped vehicle waits, through its view cells, on a vehicle
    that is itself transitively held up behind it
    """

    def successors(vid: int) -> List[int]:
        vehicle = world.vehicles[vid]
        if vid in stopping:
            cells = view_cells(vehicle)
        else:
            cells = [vehicle.ahead]
        return [world.occupancy[c] for c in cells if c in world.occupancy]

    seen: Set[int] = set()
    stack = list(successors(start))
    while stack:
        vid = stack.pop()
        if vid == start:
            return True
        if vid in seen:
            continue
        seen.add(vid)
        stack.extend(successors(vid))
    return False


def resolve_unmatchable(world: WorldState, norm_set: NormSet, utility: UtilityFunction) -> Resolution:
    """
    Assign at most one norm per contention group, choosing the candidate with
    the highest accumulated utility; ties go to the lower (norm id, vehicle id)

    A winning assignment that would close a wait cycle is excluded and its
    group re-arbitrated over the remaining candidates.
    """
    candidates = _candidates(world, norm_set)
    resolution = Resolution(assignments={v.id: () for v in world.active_vehicles()})
    if not candidates:
        return resolution

    for vid, norm_ids in candidates.items():
        for nid in norm_ids:
            resolution.utilities[(vid, nid)] = accumulated_utility(
                world, utility, vid, get_norm(norm_set, nid)
            )
    resolution.groups = contention_groups(world, sorted(candidates))

    def rank(candidate: Candidate) -> Tuple[float, int, int]:
        vid, nid = candidate
        return (-resolution.utilities[candidate], nid, vid)

    while True:
        winners: Dict[int, Candidate] = {}
        for group in resolution.groups:
            pool = [
                (vid, nid)
                for vid in group
                for nid in candidates[vid]
                if (vid, nid) not in resolution.cycle_breaks
            ]
            if pool:
                winner = min(pool, key=rank)
                winners[winner[0]] = winner

        stopping = set(winners)
        cycling = [c for vid, c in winners.items() if _on_wait_cycle(world, stopping, vid)]
        if not cycling:
            break
        # Drop the weakest assignment on a cycle and arbitrate again
        resolution.cycle_breaks.add(max(cycling, key=rank))

    for vid, nid in winners.values():
        resolution.assignments[vid] = (nid,)
    resolution.dismissed = {
        (vid, nid)
        for vid, norm_ids in candidates.items()
        for nid in norm_ids
        if resolution.assignments[vid] != (nid,)
    }

    logger.debug(
        "Norms resolved",
        step=world.time_step,
        groups=len(resolution.groups),
        assigned={vid: nid for vid, nid in winners.values()},
        dismissed=len(resolution.dismissed),
        cycle_breaks=len(resolution.cycle_breaks),
    )
    return resolution


def apply_all_applicable(world: WorldState, norm_set: NormSet) -> Resolution:
    """IRON reasoning: every applicable norm is applied, with no arbitration"""
    resolution = Resolution(assignments={v.id: () for v in world.active_vehicles()})
    for vid, norm_ids in _candidates(world, norm_set).items():
        resolution.assignments[vid] = tuple(norm_ids)
    return resolution
