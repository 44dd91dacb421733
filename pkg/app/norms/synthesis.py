"""
Case-based norm synthesis from conflicts.

UNS creates a norm for every responsible vehicle whose pre-collision context
has no applicable norm, so neither side of a junction is always favoured.
IRON, the baseline, creates a norm for one responsible vehicle drawn at random.
"""
from typing import List, Sequence

import numpy as np
import structlog

from app.models.norm import Norm, NormSet, Precondition
from app.models.world import LocalView
from app.norms.detection import Conflict
from app.norms.normset import add_norm, applicable_norms

logger = structlog.get_logger()


def has_applicable_norm(norm_set: NormSet, context: LocalView) -> bool:
    return bool(applicable_norms(norm_set, context))


def _synthesise_for(norm_set: NormSet, context: LocalView, step: int) -> List[Norm]:
    if has_applicable_norm(norm_set, context):
        return []
    return [add_norm(norm_set, Precondition.from_view(context), step)]


def synthesize_uns(conflicts: Sequence[Conflict], norm_set: NormSet) -> List[Norm]:
    created: List[Norm] = []
    for conflict in conflicts:
        for responsible in conflict.responsible:
            created.extend(_synthesise_for(norm_set, responsible.context, conflict.time_step))

    if created:
        logger.info("UNS synthesised norms", count=len(created), norms=[n.render() for n in created])
    return created


def synthesize_iron(
    conflicts: Sequence[Conflict], norm_set: NormSet, rng: np.random.Generator
) -> List[Norm]:
    created: List[Norm] = []
    for conflict in conflicts:
        chosen = conflict.responsible[int(rng.integers(len(conflict.responsible)))]
        created.extend(_synthesise_for(norm_set, chosen.context, conflict.time_step))

    if created:
        logger.info("IRON synthesised norms", count=len(created), norms=[n.render() for n in created])
    return created
