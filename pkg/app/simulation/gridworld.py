"""
Discrete-time junction world: spawning, local views, intended moves and the
cell-granular move resolution that produces collisions.
"""
from typing import Dict, List, Mapping, Optional, Set

import numpy as np
import structlog

from app.core.config import ScenarioConfig
from app.core.exceptions import ContractViolationError
from app.models.world import (
    Action,
    CellDescriptor,
    LocalView,
    Position,
    RoadMap,
    StepOutcome,
    Vehicle,
    VehicleKind,
    VehicleState,
    WorldState,
)

logger = structlog.get_logger()


def new_world(config: ScenarioConfig) -> WorldState:
    return WorldState(roadmap=RoadMap.two_roads(config.grid_size))


def spawn_vehicles(world: WorldState, rng: np.random.Generator, config: ScenarioConfig) -> List[Vehicle]:
    """
    Emit new vehicles on the lane entry cells

    Every unit of the drawn count consumes one lane draw and one kind draw,
    whether or not the entry is free, so the stream stays aligned across
    strategies that lead to different occupancy.

    Args:
        world: World to add vehicles to
        rng: Spawning substream
        config: Provides spawn bounds and the priority ratio

    Returns:
        Vehicles spawned this call, in id order
    """
    lanes = world.roadmap.lanes
    count = int(rng.integers(config.spawn_min, config.spawn_max + 1))
    priority_probability = config.priority_probability

    spawned: List[Vehicle] = []
    for _ in range(count):
        lane = lanes[int(rng.integers(len(lanes)))]
        is_priority = bool(rng.random() < priority_probability)

        entry = lane.entry_cell(world.grid_size)
        if not world.is_free(entry):
            continue

        spawned.append(
            world.place_vehicle(
                entry,
                lane.heading,
                kind=VehicleKind.PRIORITY if is_priority else VehicleKind.ORDINARY,
                destination=lane.exit_cell(world.grid_size),
            )
        )

    if spawned:
        logger.debug("Vehicles spawned", step=world.time_step, drawn=count, spawned=len(spawned))
    return spawned


def view_cells(vehicle: Vehicle) -> List[Position]:
    """Front-left diagonal, front and front-right diagonal cells, in that order"""
    front = vehicle.ahead
    left = front.ahead(vehicle.heading.left)
    right = front.ahead(vehicle.heading.right)
    return [left, front, right]


def local_view(world: WorldState, vehicle_id: int) -> LocalView:
    """
    Describe the three cells ahead of a vehicle in its own frame

    Raises:
        UnknownVehicleError: If the id is not a live vehicle
    """
    vehicle = world.vehicle(vehicle_id)
    descriptors = []
    for cell in view_cells(vehicle):
        neighbour = world.occupant(cell) if cell.in_bounds(world.grid_size) else None
        descriptors.append(
            CellDescriptor.describe(vehicle.heading, neighbour.heading if neighbour else None)
        )
    return LocalView(*descriptors)


def intended_moves(
    world: WorldState, decisions: Optional[Mapping[int, Action]] = None
) -> Dict[int, Position]:
    """
    Target cell of every live vehicle for the coming step

    Without decisions the vehicle state decides: Moving vehicles target the
    cell ahead, Stopped and Collided ones their own cell. With decisions, Go
    targets the cell ahead and Stop the current cell. Vehicles whose target
    would be off-grid have no entry; apply_moves lets them exit.
    """
    targets: Dict[int, Position] = {}
    for vehicle_id in sorted(world.vehicles):
        vehicle = world.vehicles[vehicle_id]
        if vehicle.state is VehicleState.EXITED:
            continue
        if decisions is not None and vehicle.is_active:
            goes = decisions.get(vehicle_id) is Action.GO
        else:
            goes = vehicle.state is VehicleState.MOVING
        target = vehicle.ahead if goes else vehicle.position
        if target.in_bounds(world.grid_size):
            targets[vehicle_id] = target
    return targets


def apply_moves(world: WorldState, decisions: Mapping[int, Action]) -> WorldState:
    """
    Advance the world one step under the given per-vehicle decisions

    Args:
        world: World to advance in place
        decisions: Go/Stop for every active vehicle

    Returns:
        The same world, with `last_outcome` describing the step

    Raises:
        ContractViolationError: If an active vehicle has no decision
    """
    active = world.active_vehicles()
    missing = [v.id for v in active if v.id not in decisions]
    if missing:
        raise ContractViolationError(f"Missing decisions for vehicles {missing}")

    current_step = world.time_step
    next_step = current_step + 1
    outcome = StepOutcome()

    goers = {v.id: v for v in active if decisions[v.id] is Action.GO}
    exiting: Set[int] = {vid for vid, v in goers.items() if not v.ahead.in_bounds(world.grid_size)}

    arrives: Dict[int, bool] = {}

    def resolve(vehicle_id: int, visiting: Set[int]) -> bool:
        if vehicle_id in arrives:
            return arrives[vehicle_id]
        if vehicle_id in visiting:
            # Rotation cycle: everyone moves together
            return True
        visiting.add(vehicle_id)
        target = goers[vehicle_id].ahead
        occupant_id = world.occupancy.get(target)
        if target in world.wrecks:
            result = False
        elif occupant_id is None or occupant_id in exiting:
            result = True
        elif occupant_id in goers:
            result = resolve(occupant_id, visiting)
        else:
            result = False
        visiting.discard(vehicle_id)
        arrives[vehicle_id] = result
        return result

    for vehicle_id in sorted(goers):
        if vehicle_id not in exiting:
            resolve(vehicle_id, set())

    arrivals: Dict[Position, List[int]] = {}
    for vehicle_id in sorted(arrives):
        if arrives[vehicle_id]:
            arrivals.setdefault(goers[vehicle_id].ahead, []).append(vehicle_id)

    # Vacate origins of everything that leaves its cell this step
    for vehicle_id in sorted(exiting) + [vid for vid in sorted(arrives) if arrives[vid]]:
        world.occupancy.pop(goers[vehicle_id].position, None)

    for vehicle_id in sorted(exiting):
        _depart(world, goers[vehicle_id], VehicleState.EXITED, next_step)
        outcome.exited += 1
        outcome.moved += 1

    for cell in sorted(arrivals):
        ids = arrivals[cell]
        if len(ids) >= 2:
            for vehicle_id in ids:
                vehicle = goers[vehicle_id]
                vehicle.position = cell
                vehicle.state = VehicleState.COLLIDED
                vehicle.collided_step = next_step
            world.wrecks[cell] = tuple(ids)
            outcome.collisions[cell] = tuple(ids)
            outcome.moved += len(ids)
            continue

        vehicle = goers[ids[0]]
        vehicle.position = cell
        outcome.moved += 1
        if cell == vehicle.destination:
            _depart(world, vehicle, VehicleState.EXITED, next_step)
            outcome.exited += 1
        else:
            vehicle.state = VehicleState.MOVING
            world.occupancy[cell] = vehicle.id

    for vehicle in active:
        decision = decisions[vehicle.id]
        stopped = decision is Action.STOP or (
            vehicle.id not in exiting and not arrives.get(vehicle.id, False)
        )
        if stopped:
            vehicle.waiting_steps += 1
            vehicle.state = VehicleState.STOPPED
            if decision is Action.GO:
                outcome.blocked += 1

    # Wrecks block for exactly one step after the collision, then are cleared
    for cell in sorted(world.wrecks):
        ids = world.wrecks[cell]
        if world.vehicles[ids[0]].collided_step <= current_step:
            for vehicle_id in ids:
                world.departed.append(world.vehicles.pop(vehicle_id))
                world.departed[-1].exited_step = next_step
            del world.wrecks[cell]

    world.time_step = next_step
    world.last_outcome = outcome

    if outcome.collisions:
        logger.debug(
            "Collisions",
            step=next_step,
            cells=[tuple(cell) for cell in outcome.collisions],
        )
    return world


def _depart(world: WorldState, vehicle: Vehicle, state: VehicleState, step: int) -> None:
    vehicle.state = state
    vehicle.exited_step = step
    world.departed.append(world.vehicles.pop(vehicle.id))


def check_occupancy(world: WorldState) -> None:
    """
    Assert occupancy consistency

    Raises:
        ContractViolationError: If occupancy and vehicle positions disagree
    """
    seen: Dict[int, Position] = {}
    for position, vehicle_id in world.occupancy.items():
        vehicle = world.vehicles.get(vehicle_id)
        if vehicle is None or not vehicle.is_active or vehicle.position != position:
            raise ContractViolationError(f"Occupancy entry {position} -> {vehicle_id} is stale")
        seen[vehicle_id] = position
    for vehicle in world.active_vehicles():
        if vehicle.id not in seen:
            raise ContractViolationError(f"Active vehicle {vehicle.id} missing from occupancy")
