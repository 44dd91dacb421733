"""
Norm evaluation and refinement.

Necessity (NNR) is the weighted share of violations that ended in a conflict;
effectiveness (NER) the weighted share of applications that did not. Both are
taken over a sliding window of W steps and recorded every step. Every T steps
norms that stayed above both thresholds are generalised with their siblings,
and norms that stayed below are specialised or deactivated.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, List, Mapping, Optional, Tuple

import structlog

from app.core.config import EvaluationConfig
from app.models.norm import NormGraph, NormSet, Wildcard
from app.norms.detection import ApplicationCounts
from app.norms.normset import generalisation_of, generalize, specialize

logger = structlog.get_logger()

Score = Optional[float]


def necessity(stats: ApplicationCounts, config: EvaluationConfig) -> Score:
    """NNR, or None when the norm was never violated in the window"""
    harmful = stats.violated_conflict * config.w_vc
    harmless = stats.violated_no_conflict * config.w_vnotc
    if harmful + harmless == 0:
        return None
    return harmful / (harmful + harmless)


def effectiveness(stats: ApplicationCounts, config: EvaluationConfig) -> Score:
    """NER, or None when the norm was never applied in the window"""
    failed = stats.applied_conflict * config.w_ac
    succeeded = stats.applied_no_conflict * config.w_anotc
    if failed + succeeded == 0:
        return None
    return succeeded / (failed + succeeded)


@dataclass
class NormStats:
    """Windowed application counts and the per-step score history of every norm"""

    window: int
    interval: int
    counts: Dict[int, Deque[Tuple[int, ApplicationCounts]]] = field(default_factory=dict)
    scores: Dict[int, Deque[Tuple[Score, Score]]] = field(default_factory=dict)

    @classmethod
    def for_config(cls, config: EvaluationConfig) -> NormStats:
        return cls(window=config.stats_window, interval=config.refinement_interval)

    def record(self, step: int, step_counts: Mapping[int, ApplicationCounts]) -> None:
        for norm_id, entry in step_counts.items():
            self.counts.setdefault(norm_id, deque()).append((step, entry))

    def totals(self, norm_id: int, current_step: int) -> ApplicationCounts:
        entries = self.counts.get(norm_id)
        if not entries:
            return ApplicationCounts()
        while entries and entries[0][0] <= current_step - self.window:
            entries.popleft()
        total = ApplicationCounts()
        for _, entry in entries:
            total = total + entry
        return total

    def evaluate(self, norm_set: NormSet, config: EvaluationConfig, current_step: int) -> None:
        """Record this step's NNR/NER for every active norm"""
        for norm in norm_set.active_norms():
            totals = self.totals(norm.id, current_step)
            history = self.scores.setdefault(norm.id, deque(maxlen=self.interval))
            history.append((necessity(totals, config), effectiveness(totals, config)))

    def latest(self, norm_id: int, current_step: int, config: EvaluationConfig) -> Tuple[Score, Score]:
        totals = self.totals(norm_id, current_step)
        return necessity(totals, config), effectiveness(totals, config)

    def reset_history(self, norm_id: int) -> None:
        self.scores.pop(norm_id, None)

    def full_history(self, norm_id: int) -> Optional[Deque[Tuple[Score, Score]]]:
        history = self.scores.get(norm_id)
        if history is None or len(history) < self.interval:
            return None
        return history


@dataclass
class RefinementReport:
    generalised: List[Tuple[int, Tuple[int, ...]]] = field(default_factory=list)
    parents_activated: List[int] = field(default_factory=list)
    specialised: List[int] = field(default_factory=list)
    deactivated: List[int] = field(default_factory=list)
    reactivated: List[int] = field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        return not (self.generalised or self.specialised or self.deactivated)

    def events(self) -> List[Tuple[str, int]]:
        out: List[Tuple[str, int]] = []
        for parent_id, _ in self.generalised:
            out.append(("generalised", parent_id))
        out.extend(("specialised", nid) for nid in self.specialised)
        out.extend(("deactivated", nid) for nid in self.deactivated)
        out.extend(("reactivated", nid) for nid in self.reactivated)
        return out


def _above(history, config: EvaluationConfig) -> bool:
    return all(
        nnr is not None
        and ner is not None
        and nnr >= config.necessity_threshold
        and ner >= config.effectiveness_threshold
        for nnr, ner in history
    )


def _below(history, config: EvaluationConfig) -> bool:
    return all(
        (nnr is not None and nnr < config.necessity_threshold)
        or (ner is not None and ner < config.effectiveness_threshold)
        for nnr, ner in history
    )


def refine(
    norm_set: NormSet,
    norm_graph: NormGraph,
    stats: NormStats,
    config: EvaluationConfig,
    current_step: int,
) -> RefinementReport:
    """
    Generalise consistently good sibling norms and specialise or deactivate
    consistently poor ones; does nothing between refinement intervals
    """
    report = RefinementReport()
    if current_step % config.refinement_interval != 0:
        return report

    qualifying = []
    for norm in norm_set.active_norms():
        history = stats.full_history(norm.id)
        if history is not None and _above(history, config):
            qualifying.append(norm)

    consumed = set()
    for index in range(3):
        buckets: Dict[tuple, List[int]] = {}
        for norm in qualifying:
            slots = norm.precondition.slots
            if norm.id in consumed or slots[index] is Wildcard.ANY:
                continue
            key = slots[:index] + slots[index + 1:]
            buckets.setdefault(key, []).append(norm.id)
        for key in sorted(buckets, key=lambda k: buckets[k][0]):
            siblings = buckets[key]
            if len(siblings) < 2:
                continue
            was_active = norm_set.find_active(
                generalisation_of([norm_set.norms[nid].precondition for nid in siblings])
            )
            parent = generalize(norm_graph, norm_set, siblings, current_step)
            stats.reset_history(parent.id)
            consumed.update(siblings)
            report.generalised.append((parent.id, tuple(siblings)))
            if was_active is None:
                report.parents_activated.append(parent.id)

    for norm in norm_set.active_norms():
        if norm.id in consumed:
            continue
        history = stats.full_history(norm.id)
        if history is None or not _below(history, config):
            continue
        reactivated = specialize(norm_graph, norm_set, norm.id)
        if norm_graph.children(norm.id):
            report.specialised.append(norm.id)
        else:
            report.deactivated.append(norm.id)
        for child in reactivated:
            stats.reset_history(child.id)
            report.reactivated.append(child.id)

    if not report.is_empty:
        logger.info(
            "Norms refined",
            step=current_step,
            generalised=report.generalised,
            specialised=report.specialised,
            deactivated=report.deactivated,
            reactivated=report.reactivated,
        )
    return report
