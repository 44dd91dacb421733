"""
Tests for norm preconditions, matching, and generalisation/specialisation.
"""
from itertools import product

import pytest

from app.core.exceptions import ContractViolationError, NotGeneralisableError, UnknownNormError
from app.models.norm import NormGraph, NormSet, Precondition, Wildcard
from app.models.world import CellDescriptor, LocalView
from app.norms.normset import (
    add_norm,
    applicable_norms,
    generalisation_of,
    generalize,
    get_norm,
    matches,
    specialize,
)

EMPTY = CellDescriptor.EMPTY
SAME = CellDescriptor.SAME_HEADING
FROM_LEFT = CellDescriptor.HEADING_FROM_LEFT
FROM_RIGHT = CellDescriptor.HEADING_FROM_RIGHT
ANY = Wildcard.ANY

ALL_VIEWS = [LocalView(*slots) for slots in product(CellDescriptor, repeat=3)]


class TestPrecondition:
    def test_textual_form(self):
        precondition = Precondition(FROM_LEFT, EMPTY, ANY)
        text = precondition.render()
        assert text == "if(left(<),front(-),right(*)) -> proh(Go)"
        assert Precondition.parse(text) == precondition

    @pytest.mark.parametrize("text", ["", "if(left(<)) -> proh(Go)", "if(left(x),front(-),right(-)) -> proh(Go)"])
    def test_parse_rejects_malformed(self, text):
        with pytest.raises(ValueError):
            Precondition.parse(text)

    def test_generalises(self):
        assert Precondition(FROM_LEFT, ANY, EMPTY).generalises(Precondition(FROM_LEFT, SAME, EMPTY))
        assert not Precondition(FROM_LEFT, SAME, EMPTY).generalises(Precondition(FROM_LEFT, ANY, EMPTY))


class TestMatching:
    def test_ground_match(self):
        assert matches(Precondition(FROM_LEFT, EMPTY, EMPTY), LocalView(FROM_LEFT))
        assert not matches(Precondition(FROM_LEFT, EMPTY, EMPTY), LocalView(FROM_RIGHT))

    def test_wildcard_matches_every_descriptor(self):
        pattern = Precondition(ANY, ANY, ANY)
        assert all(matches(pattern, view) for view in ALL_VIEWS)

    def test_applicable_norms_by_id_and_active_only(self):
        norm_set = NormSet()
        first = add_norm(norm_set, Precondition(FROM_LEFT, ANY, EMPTY))
        second = add_norm(norm_set, Precondition(FROM_LEFT, EMPTY, EMPTY))
        add_norm(norm_set, Precondition(FROM_RIGHT, EMPTY, EMPTY))
        assert [n.id for n in applicable_norms(norm_set, LocalView(FROM_LEFT))] == [first.id, second.id]
        first.active = False
        assert [n.id for n in applicable_norms(norm_set, LocalView(FROM_LEFT))] == [second.id]


class TestAddAndGet:
    def test_add_is_idempotent(self):
        norm_set = NormSet()
        precondition = Precondition(FROM_LEFT, EMPTY, EMPTY)
        first = add_norm(norm_set, precondition, step=3)
        again = add_norm(norm_set, precondition, step=9)
        assert again is first
        assert len(norm_set) == 1
        assert first.created_step == 3

    def test_get_unknown(self):
        with pytest.raises(UnknownNormError) as excinfo:
            get_norm(NormSet(), 5)
        assert isinstance(excinfo.value, KeyError)


class TestGeneralize:
    def test_siblings_get_wildcard_parent(self):
        norm_set, graph = NormSet(), NormGraph()
        a = add_norm(norm_set, Precondition(FROM_LEFT, EMPTY, EMPTY))
        b = add_norm(norm_set, Precondition(FROM_LEFT, SAME, EMPTY))

        parent = generalize(graph, norm_set, [a.id, b.id])

        assert parent.precondition == Precondition(FROM_LEFT, ANY, EMPTY)
        assert parent.active and not a.active and not b.active
        assert graph.children(parent.id) == [a.id, b.id]
        assert graph.parents(a.id) == [parent.id]

    def test_existing_parent_is_reused(self):
        norm_set, graph = NormSet(), NormGraph()
        a = add_norm(norm_set, Precondition(FROM_LEFT, EMPTY, EMPTY))
        b = add_norm(norm_set, Precondition(FROM_LEFT, SAME, EMPTY))
        parent = generalize(graph, norm_set, [a.id, b.id])
        specialize(graph, norm_set, parent.id)

        assert generalize(graph, norm_set, [a.id, b.id]) is parent
        assert parent.active
        assert len(norm_set) == 3

    def test_not_siblings(self):
        norm_set = NormSet()
        a = add_norm(norm_set, Precondition(FROM_LEFT, EMPTY, EMPTY))
        b = add_norm(norm_set, Precondition(FROM_RIGHT, SAME, EMPTY))
        with pytest.raises(NotGeneralisableError):
            generalize(NormGraph(), norm_set, [a.id, b.id])

    def test_single_norm(self):
        with pytest.raises(NotGeneralisableError):
            generalisation_of([Precondition(FROM_LEFT, EMPTY, EMPTY)])

    def test_inactive_child(self):
        norm_set = NormSet()
        a = add_norm(norm_set, Precondition(FROM_LEFT, EMPTY, EMPTY))
        b = add_norm(norm_set, Precondition(FROM_LEFT, SAME, EMPTY))
        b.active = False
        with pytest.raises(ContractViolationError):
            generalize(NormGraph(), norm_set, [a.id, b.id])

    def test_soundness_over_all_views(self):
        """A parent matches every view either child matches, and only views that agree off the wildcard slot"""
        descriptors = list(CellDescriptor)
        for slots in product(descriptors, repeat=3):
            child = Precondition(*slots)
            for index in range(3):
                for other in descriptors:
                    if other is slots[index]:
                        continue
                    sibling = child.with_slot(index, other)
                    parent = generalisation_of([child, sibling])
                    for view in ALL_VIEWS:
                        if matches(child, view) or matches(sibling, view):
                            assert matches(parent, view)
                        agrees = all(view.slots[i] is slots[i] for i in range(3) if i != index)
                        assert matches(parent, view) == agrees


class TestSpecialize:
    def test_reactivates_children(self):
        norm_set, graph = NormSet(), NormGraph()
        a = add_norm(norm_set, Precondition(FROM_LEFT, EMPTY, EMPTY))
        b = add_norm(norm_set, Precondition(FROM_LEFT, SAME, EMPTY))
        parent = generalize(graph, norm_set, [a.id, b.id])

        reactivated = specialize(graph, norm_set, parent.id)

        assert {n.id for n in reactivated} == {a.id, b.id}
        assert not parent.active and a.active and b.active

    def test_leaf_is_deactivated(self):
        norm_set, graph = NormSet(), NormGraph()
        a = add_norm(norm_set, Precondition(FROM_LEFT, EMPTY, EMPTY))
        assert specialize(graph, norm_set, a.id) == []
        assert not a.active

    def test_child_duplicated_by_active_norm_stays_inactive(self):
        norm_set, graph = NormSet(), NormGraph()
        a = add_norm(norm_set, Precondition(FROM_LEFT, EMPTY, EMPTY))
        b = add_norm(norm_set, Precondition(FROM_LEFT, SAME, EMPTY))
        parent = generalize(graph, norm_set, [a.id, b.id])
        duplicate = add_norm(norm_set, a.precondition)
        assert duplicate.id != a.id

        reactivated = specialize(graph, norm_set, parent.id)

        assert [n.id for n in reactivated] == [b.id]
        assert not a.active
