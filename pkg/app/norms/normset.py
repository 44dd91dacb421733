from typing import List, Sequence

import structlog

from app.core.exceptions import ContractViolationError, NotGeneralisableError, UnknownNormError
from app.models.norm import Norm, NormGraph, NormSet, Precondition, Wildcard, slot_matches
from app.models.world import LocalView

logger = structlog.get_logger()


def matches(precondition: Precondition, view: LocalView) -> bool:
    return all(slot_matches(p, d) for p, d in zip(precondition.slots, view.slots))


def applicable_norms(norm_set: NormSet, view: LocalView) -> List[Norm]:
    """Active norms whose precondition matches the view, by ascending id"""
    return [norm for norm in norm_set.active_norms() if matches(norm.precondition, view)]


def get_norm(norm_set: NormSet, norm_id: int) -> Norm:
    try:
        return norm_set.norms[norm_id]
    except KeyError:
        raise UnknownNormError(norm_id) from None


def add_norm(norm_set: NormSet, precondition: Precondition, step: int = 0) -> Norm:
    """
    Add a prohibition of Go under the given precondition

    Idempotent: an active norm with the same precondition is returned unchanged.
    """
    existing = norm_set.find_active(precondition)
    if existing is not None:
        return existing

    norm = Norm(id=norm_set.next_id, precondition=precondition, created_step=step)
    norm_set.norms[norm.id] = norm
    norm_set.next_id += 1
    logger.debug("Norm created", norm_id=norm.id, norm=norm.render(), step=step)
    return norm


def generalisation_of(preconditions: Sequence[Precondition]) -> Precondition:
    """
    Parent pattern of preconditions that differ in exactly one slot

    Raises:
        NotGeneralisableError: Fewer than two patterns, or not a single differing slot
    """
    if len(preconditions) < 2:
        raise NotGeneralisableError("Generalisation needs at least two norms")

    differing = set()
    first = preconditions[0]
    for other in preconditions[1:]:
        differing.update(first.differing_slots(other))
    if len(differing) != 1:
        raise NotGeneralisableError(
            f"Norms differ in {len(differing)} slots, expected exactly one"
        )
    (index,) = differing
    if any(p.slots[index] is Wildcard.ANY for p in preconditions):
        raise NotGeneralisableError("The differing slot is already a wildcard")
    return first.with_slot(index, Wildcard.ANY)


def generalize(
    norm_graph: NormGraph, norm_set: NormSet, norm_ids: Sequence[int], step: int = 0
) -> Norm:
    """
    Replace sibling norms by their single-slot wildcard parent

    The parent is reused when a norm with its precondition already exists
    (reactivated if needed); otherwise it is created. Children are deactivated.

    Raises:
        UnknownNormError: If an id is unknown
        ContractViolationError: If a child is not active
        NotGeneralisableError: If the children do not differ in exactly one slot
    """
    children = [get_norm(norm_set, nid) for nid in sorted(set(norm_ids))]
    inactive = [c.id for c in children if not c.active]
    if inactive:
        raise ContractViolationError(f"Cannot generalise inactive norms {inactive}")

    parent_precondition = generalisation_of([c.precondition for c in children])

    parent = norm_set.find_active(parent_precondition) or norm_set.find_any(parent_precondition)
    if parent is None:
        parent = add_norm(norm_set, parent_precondition, step)
    else:
        parent.active = True

    for child in children:
        norm_graph.add_edge(parent.id, child.id)
        child.active = False

    logger.info(
        "Norms generalised",
        parent_id=parent.id,
        parent=parent.render(),
        children=[c.id for c in children],
        step=step,
    )
    return parent


def specialize(norm_graph: NormGraph, norm_set: NormSet, norm_id: int) -> List[Norm]:
    """
    Deactivate a norm and reactivate its children in the graph

    Returns:
        Reactivated children; empty means plain deactivation

    Raises:
        UnknownNormError: If the id is unknown
    """
    norm = get_norm(norm_set, norm_id)
    norm.active = False

    reactivated: List[Norm] = []
    for child_id in norm_graph.children(norm_id):
        child = get_norm(norm_set, child_id)
        if child.active:
            continue
        # Another active norm may already hold this precondition
        if norm_set.find_active(child.precondition) is not None:
            continue
        child.active = True
        reactivated.append(child)

    logger.info(
        "Norm specialised" if reactivated else "Norm deactivated",
        norm_id=norm_id,
        norm=norm.render(),
        reactivated=[c.id for c in reactivated],
    )
    return reactivated
