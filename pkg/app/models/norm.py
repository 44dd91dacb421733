"""
Norm domain types. Every norm here is a prohibition of the Go action whose
precondition is a pattern over the three cells of a vehicle's local view.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Set, Tuple, Union

from app.models.world import Action, CellDescriptor, LocalView


class Wildcard(Enum):
    ANY = "*"


SlotPattern = Union[CellDescriptor, Wildcard]

SLOT_NAMES = ("left", "front", "right")

_SYMBOLS: Dict[str, SlotPattern] = {d.value: d for d in CellDescriptor}
_SYMBOLS[Wildcard.ANY.value] = Wildcard.ANY

_TEXT_FORM = re.compile(
    r"^if\(left\((?P<left>.)\),front\((?P<front>.)\),right\((?P<right>.)\)\)\s*->\s*proh\(Go\)"
)


def slot_matches(pattern: SlotPattern, descriptor: CellDescriptor) -> bool:
    return pattern is Wildcard.ANY or pattern is descriptor


@dataclass(frozen=True)
class Precondition:
    left: SlotPattern = CellDescriptor.EMPTY
    front: SlotPattern = CellDescriptor.EMPTY
    right: SlotPattern = CellDescriptor.EMPTY

    @classmethod
    def from_view(cls, view: LocalView) -> Precondition:
        """Ground pattern of a context"""
        return cls(view.left, view.front, view.right)

    @classmethod
    def from_slots(cls, slots: Tuple[SlotPattern, ...]) -> Precondition:
        return cls(*slots)

    @classmethod
    def parse(cls, text: str) -> Precondition:
        """
        Parse the textual form `if(left(X),front(Y),right(Z)) -> proh(Go)`

        Raises:
            ValueError: If the text is not in that form
        """
        match = _TEXT_FORM.match(text.strip())
        if not match:
            raise ValueError(f"Invalid norm text: {text!r}")
        try:
            return cls(*(_SYMBOLS[match.group(name)] for name in SLOT_NAMES))
        except KeyError as e:
            raise ValueError(f"Unknown slot symbol {e} in norm text: {text!r}") from None

    @property
    def slots(self) -> Tuple[SlotPattern, SlotPattern, SlotPattern]:
        return (self.left, self.front, self.right)

    @property
    def wildcard_count(self) -> int:
        return sum(1 for slot in self.slots if slot is Wildcard.ANY)

    @property
    def is_ground(self) -> bool:
        return self.wildcard_count == 0

    def with_slot(self, index: int, pattern: SlotPattern) -> Precondition:
        slots = list(self.slots)
        slots[index] = pattern
        return Precondition.from_slots(tuple(slots))

    def differing_slots(self, other: Precondition) -> List[int]:
        return [i for i, (a, b) in enumerate(zip(self.slots, other.slots)) if a is not b]

    def generalises(self, other: Precondition) -> bool:
        """True when every view matched by `other` is also matched by this pattern"""
        return all(a is Wildcard.ANY or a is b for a, b in zip(self.slots, other.slots))

    def render(self) -> str:
        left, front, right = (slot.value for slot in self.slots)
        return f"if(left({left}),front({front}),right({right})) -> proh(Go)"

    def __str__(self) -> str:
        return self.render()


class Deontic(Enum):
    PROHIBITION = "proh"


@dataclass
class Norm:
    id: int
    precondition: Precondition
    created_step: int = 0
    active: bool = True
    deontic: Deontic = Deontic.PROHIBITION
    action: Action = Action.GO

    def render(self) -> str:
        return self.precondition.render()


@dataclass
class NormSet:
    norms: Dict[int, Norm] = field(default_factory=dict)
    next_id: int = 1

    def active_norms(self) -> List[Norm]:
        return [self.norms[nid] for nid in sorted(self.norms) if self.norms[nid].active]

    def find_active(self, precondition: Precondition) -> Optional[Norm]:
        for norm in self.active_norms():
            if norm.precondition == precondition:
                return norm
        return None

    def find_any(self, precondition: Precondition) -> Optional[Norm]:
        """Lowest-id norm with this precondition, active or not"""
        for nid in sorted(self.norms):
            if self.norms[nid].precondition == precondition:
                return self.norms[nid]
        return None

    def __len__(self) -> int:
        return len(self.norms)


@dataclass
class NormGraph:
    """Parent norm id -> child norm ids"""

    edges: Dict[int, Set[int]] = field(default_factory=dict)

    def add_edge(self, parent_id: int, child_id: int) -> None:
        self.edges.setdefault(parent_id, set()).add(child_id)

    def children(self, parent_id: int) -> List[int]:
        return sorted(self.edges.get(parent_id, ()))

    def parents(self, child_id: int) -> List[int]:
        return sorted(p for p, kids in self.edges.items() if child_id in kids)
