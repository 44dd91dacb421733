"""
Tests for UNS and IRON norm synthesis.
"""
import numpy as np

from app.models.norm import NormSet, Precondition
from app.models.world import CellDescriptor, LocalView, Position
from app.norms.detection import Conflict, Responsible
from app.norms.normset import add_norm
from app.norms.synthesis import has_applicable_norm, synthesize_iron, synthesize_uns

VIEW_A = LocalView(CellDescriptor.HEADING_FROM_LEFT)
VIEW_B = LocalView(right=CellDescriptor.HEADING_FROM_RIGHT)


def crossing_conflict() -> Conflict:
    return Conflict(1, Position(9, 8), (Responsible(0, VIEW_A), Responsible(1, VIEW_B)))


class TestUNS:
    def test_norm_per_responsible_vehicle(self):
        norm_set = NormSet()
        created = synthesize_uns([crossing_conflict()], norm_set)

        assert [n.precondition for n in created] == [Precondition.from_view(VIEW_A), Precondition.from_view(VIEW_B)]
        assert all(n.created_step == 1 for n in created)

    def test_covered_contexts_create_nothing(self):
        norm_set = NormSet()
        synthesize_uns([crossing_conflict()], norm_set)
        assert synthesize_uns([crossing_conflict()], norm_set) == []
        assert len(norm_set) == 2

    def test_wildcard_norm_covers_context(self):
        norm_set = NormSet()
        add_norm(norm_set, Precondition.parse("if(left(<),front(*),right(-)) -> proh(Go)"))
        created = synthesize_uns([crossing_conflict()], norm_set)
        assert [n.precondition for n in created] == [Precondition.from_view(VIEW_B)]

    def test_same_context_twice_in_one_step(self):
        norm_set = NormSet()
        twin = Conflict(1, Position(8, 9), (Responsible(2, VIEW_A), Responsible(3, VIEW_B)))
        assert len(synthesize_uns([crossing_conflict(), twin], norm_set)) == 2


class TestIRON:
    def test_one_norm_per_conflict(self):
        norm_set = NormSet()
        created = synthesize_iron([crossing_conflict()], norm_set, np.random.default_rng(0))
        assert len(created) == 1
        assert created[0].precondition in (Precondition.from_view(VIEW_A), Precondition.from_view(VIEW_B))

    def test_choice_is_uniform(self):
        rng = np.random.default_rng(5)
        picks_a = 0
        trials = 2000
        for _ in range(trials):
            (norm,) = synthesize_iron([crossing_conflict()], NormSet(), rng)
            picks_a += norm.precondition == Precondition.from_view(VIEW_A)
        assert abs(picks_a / trials - 0.5) < 0.05

    def test_no_conflicts(self):
        assert synthesize_iron([], NormSet(), np.random.default_rng(0)) == []


def test_has_applicable_norm_ignores_inactive():
    norm_set = NormSet()
    norm = add_norm(norm_set, Precondition.from_view(VIEW_A))
    assert has_applicable_norm(norm_set, VIEW_A)
    norm.active = False
    assert not has_applicable_norm(norm_set, VIEW_A)
