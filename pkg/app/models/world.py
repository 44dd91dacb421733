"""
Gridworld domain types: positions, headings, vehicles, the road map and the
world state that one simulation run owns.
"""
from __future__ import annotations

import copy
import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, NamedTuple, Optional, Tuple

from app.core.exceptions import UnknownVehicleError

SYSTEM_OBJECTIVES: FrozenSet[str] = frozenset({"average-waiting-all", "total-waiting-priority"})


class Heading(Enum):
    """Travel direction; the value is the unit (row, col) displacement"""

    NORTH = (-1, 0)
    SOUTH = (1, 0)
    EAST = (0, 1)
    WEST = (0, -1)

    @property
    def displacement(self) -> Tuple[int, int]:
        return self.value

    @property
    def left(self) -> Heading:
        dr, dc = self.value
        return Heading((-dc, dr))

    @property
    def right(self) -> Heading:
        dr, dc = self.value
        return Heading((dc, -dr))

    @property
    def opposite(self) -> Heading:
        dr, dc = self.value
        return Heading((-dr, -dc))


class Position(NamedTuple):
    row: int
    col: int

    def offset(self, dr: int, dc: int) -> Position:
        return Position(self.row + dr, self.col + dc)

    def ahead(self, heading: Heading) -> Position:
        return self.offset(*heading.displacement)

    def in_bounds(self, grid_size: int) -> bool:
        return 0 <= self.row < grid_size and 0 <= self.col < grid_size


class VehicleKind(Enum):
    ORDINARY = "ordinary"
    PRIORITY = "priority"


class VehicleState(Enum):
    MOVING = "moving"
    STOPPED = "stopped"
    COLLIDED = "collided"
    EXITED = "exited"


class Action(Enum):
    GO = "Go"
    STOP = "Stop"


class CellDescriptor(Enum):
    """Content of a view cell, relative to the observing vehicle's heading"""

    EMPTY = "-"
    SAME_HEADING = "^"
    OPPOSITE_HEADING = "v"
    HEADING_FROM_LEFT = "<"
    HEADING_FROM_RIGHT = ">"

    @classmethod
    def describe(cls, observer: Heading, neighbour: Optional[Heading]) -> CellDescriptor:
        if neighbour is None:
            return cls.EMPTY
        if neighbour is observer:
            return cls.SAME_HEADING
        if neighbour is observer.opposite:
            return cls.OPPOSITE_HEADING
        # Travelling towards the observer's right means it comes from the left
        if neighbour is observer.right:
            return cls.HEADING_FROM_LEFT
        return cls.HEADING_FROM_RIGHT


@dataclass(frozen=True)
class LocalView:
    """Front-left diagonal, front and front-right diagonal cells"""

    left: CellDescriptor = CellDescriptor.EMPTY
    front: CellDescriptor = CellDescriptor.EMPTY
    right: CellDescriptor = CellDescriptor.EMPTY

    @property
    def slots(self) -> Tuple[CellDescriptor, CellDescriptor, CellDescriptor]:
        return (self.left, self.front, self.right)


@dataclass
class Vehicle:
    id: int
    kind: VehicleKind
    position: Position
    heading: Heading
    destination: Position
    spawn_step: int
    waiting_steps: int = 0
    state: VehicleState = VehicleState.MOVING
    objectives: FrozenSet[str] = SYSTEM_OBJECTIVES
    collided_step: Optional[int] = None
    exited_step: Optional[int] = None

    @property
    def is_active(self) -> bool:
        return self.state in (VehicleState.MOVING, VehicleState.STOPPED)

    @property
    def is_priority(self) -> bool:
        return self.kind is VehicleKind.PRIORITY

    @property
    def ahead(self) -> Position:
        return self.position.ahead(self.heading)


class Axis(Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"


class Lane(NamedTuple):
    """A one-way lane: a full row (horizontal) or column (vertical)"""

    axis: Axis
    index: int
    heading: Heading

    def entry_cell(self, grid_size: int) -> Position:
        last = grid_size - 1
        if self.axis is Axis.HORIZONTAL:
            return Position(self.index, 0 if self.heading is Heading.EAST else last)
        return Position(0 if self.heading is Heading.SOUTH else last, self.index)

    def exit_cell(self, grid_size: int) -> Position:
        last = grid_size - 1
        if self.axis is Axis.HORIZONTAL:
            return Position(self.index, last if self.heading is Heading.EAST else 0)
        return Position(last if self.heading is Heading.SOUTH else 0, self.index)

    def contains(self, position: Position) -> bool:
        if self.axis is Axis.HORIZONTAL:
            return position.row == self.index
        return position.col == self.index


@dataclass(frozen=True)
class RoadMap:
    grid_size: int
    lanes: Tuple[Lane, ...]

    @classmethod
    def two_roads(cls, grid_size: int = 19) -> RoadMap:
        """Junction of two orthogonal two-lane roads through the grid centre"""
        mid = grid_size // 2
        return cls(
            grid_size=grid_size,
            lanes=(
                Lane(Axis.HORIZONTAL, mid - 1, Heading.WEST),
                Lane(Axis.HORIZONTAL, mid, Heading.EAST),
                Lane(Axis.VERTICAL, mid - 1, Heading.SOUTH),
                Lane(Axis.VERTICAL, mid, Heading.NORTH),
            ),
        )

    @property
    def junction_cells(self) -> FrozenSet[Position]:
        rows = [lane.index for lane in self.lanes if lane.axis is Axis.HORIZONTAL]
        cols = [lane.index for lane in self.lanes if lane.axis is Axis.VERTICAL]
        return frozenset(Position(r, c) for r in rows for c in cols)

    def entry_cells(self) -> List[Position]:
        return [lane.entry_cell(self.grid_size) for lane in self.lanes]


@dataclass
class StepOutcome:
    """What apply_moves observed while advancing one step"""

    moved: int = 0
    blocked: int = 0
    exited: int = 0
    collisions: Dict[Position, Tuple[int, ...]] = field(default_factory=dict)


@dataclass
class WorldState:
    roadmap: RoadMap
    time_step: int = 0
    # Live vehicles, including wrecks that still block their cell
    vehicles: Dict[int, Vehicle] = field(default_factory=dict)
    # Non-collided vehicles only
    occupancy: Dict[Position, int] = field(default_factory=dict)
    wrecks: Dict[Position, Tuple[int, ...]] = field(default_factory=dict)
    departed: List[Vehicle] = field(default_factory=list)
    next_vehicle_id: int = 0
    last_outcome: StepOutcome = field(default_factory=StepOutcome)

    @property
    def grid_size(self) -> int:
        return self.roadmap.grid_size

    def vehicle(self, vehicle_id: int) -> Vehicle:
        try:
            return self.vehicles[vehicle_id]
        except KeyError:
            raise UnknownVehicleError(vehicle_id) from None

    def active_vehicles(self) -> List[Vehicle]:
        return [self.vehicles[vid] for vid in sorted(self.vehicles) if self.vehicles[vid].is_active]

    def occupant(self, position: Position) -> Optional[Vehicle]:
        vehicle_id = self.occupancy.get(position)
        return None if vehicle_id is None else self.vehicles[vehicle_id]

    def is_free(self, position: Position) -> bool:
        return position not in self.occupancy and position not in self.wrecks

    def place_vehicle(
        self,
        position: Position,
        heading: Heading,
        kind: VehicleKind = VehicleKind.ORDINARY,
        destination: Optional[Position] = None,
    ) -> Vehicle:
        """Add a vehicle on a free cell; the destination defaults to the boundary straight ahead"""
        if not position.in_bounds(self.grid_size) or not self.is_free(position):
            raise ValueError(f"Cannot place vehicle at {position}")
        if destination is None:
            destination = self._boundary_ahead(position, heading)
        vehicle = Vehicle(
            id=self.next_vehicle_id,
            kind=kind,
            position=position,
            heading=heading,
            destination=destination,
            spawn_step=self.time_step,
        )
        self.next_vehicle_id += 1
        self.vehicles[vehicle.id] = vehicle
        self.occupancy[position] = vehicle.id
        return vehicle

    def _boundary_ahead(self, position: Position, heading: Heading) -> Position:
        last = self.grid_size - 1
        return {
            Heading.NORTH: Position(0, position.col),
            Heading.SOUTH: Position(last, position.col),
            Heading.EAST: Position(position.row, last),
            Heading.WEST: Position(position.row, 0),
        }[heading]

    def all_vehicles(self) -> List[Vehicle]:
        return self.departed + [self.vehicles[vid] for vid in sorted(self.vehicles)]

    def copy(self) -> WorldState:
        return copy.deepcopy(self)

    def state_hash(self) -> str:
        """Digest of every observable field, used to check that projections stay pure"""
        digest = hashlib.sha256()
        digest.update(f"t={self.time_step};n={self.next_vehicle_id}".encode())
        for vehicle in self.all_vehicles():
            digest.update(repr(vehicle).encode())
        for position in sorted(self.occupancy):
            digest.update(f"o{position}={self.occupancy[position]}".encode())
        for position in sorted(self.wrecks):
            digest.update(f"w{position}={self.wrecks[position]}".encode())
        return digest.hexdigest()
