"""
Tests for the per-step loop and single-run driver.
"""
import numpy as np
import pytest

from app.core.config import ScenarioConfig, Strategy
from app.models.norm import NormGraph, NormSet
from app.models.world import Action, Heading, Position, VehicleKind
from app.norms.evaluation import NormStats
from app.norms.reasoning import Resolution, resolve_unmatchable
from app.harness.simulation import (
    MetricsRecord,
    RandomStreams,
    SimulationRun,
    detect_deadlock,
    draw_compliance,
    step_once,
)
from app.simulation.gridworld import check_occupancy, new_world, view_cells
from tests.conftest import build_crossing


def fresh_state(config):
    return new_world(config), NormSet(), NormGraph(), NormStats.for_config(config.evaluation)


class TestStepOnce:
    def test_empty_world(self):
        config = ScenarioConfig(spawn_min=2, spawn_max=8)
        world, norm_set, graph, stats = fresh_state(config)

        record = step_once(world, norm_set, graph, stats, config, RandomStreams.from_seed(0))

        assert record.step == 0
        assert record.collisions == 0 and record.active_norms == 0
        assert record.avg_waiting_all == 0.0 and record.total_waiting_priority == 0
        assert record.spawned == len(world.active_vehicles())
        assert 0 <= record.spawned <= 4
        assert world.time_step == 1

    def test_crossing_learns_then_avoids(self, quiet_config):
        world, norm_set, graph, stats = fresh_state(quiet_config)
        build_crossing(world)
        rng = RandomStreams.from_seed(0)
        events = []

        first = step_once(world, norm_set, graph, stats, quiet_config, rng, events=events)

        assert first.collisions == 1
        assert first.norms_created == 2
        assert first.active_norms == 2
        assert [e.event for e in events] == ["created", "created"]

        # Same geometry again, now with the learnt norms
        replay = new_world(quiet_config)
        ids = build_crossing(replay)
        second = step_once(replay, norm_set, graph, stats, quiet_config, rng)

        assert second.collisions == 0
        assert second.assigned == 1 and second.violated == 0
        assert replay.vehicles[ids.B].position == Position(8, 8)
        assert replay.vehicles[ids.A].position == Position(9, 8)

    def test_iron_learns_one_norm(self, quiet_config):
        config = quiet_config.model_copy(update={"strategy": Strategy.IRON})
        world, norm_set, graph, stats = fresh_state(config)
        build_crossing(world)
        record = step_once(world, norm_set, graph, stats, config, RandomStreams.from_seed(0))
        assert record.norms_created == 1

    def test_no_norm_strategy_never_synthesises(self, quiet_config):
        config = quiet_config.model_copy(update={"strategy": Strategy.NONE})
        world, norm_set, graph, stats = fresh_state(config)
        build_crossing(world)
        record = step_once(world, norm_set, graph, stats, config, RandomStreams.from_seed(0))
        assert record.collisions == 1 and len(norm_set) == 0

    def test_waiting_metrics(self, quiet_config):
        world, norm_set, graph, stats = fresh_state(quiet_config)
        front = world.place_vehicle(Position(9, 5), Heading.EAST)
        world.place_vehicle(Position(8, 17), Heading.WEST)
        front.waiting_steps = 4
        front.kind = VehicleKind.PRIORITY

        record = step_once(world, norm_set, graph, stats, quiet_config, RandomStreams.from_seed(0))

        assert record.avg_waiting_all == pytest.approx(2.0)
        assert record.total_waiting_priority == 4


class TestCompliance:
    def test_violation_rate_calibration(self, quiet_config):
        world = new_world(quiet_config)
        for col in range(0, 18, 2):
            world.place_vehicle(Position(9, col), Heading.EAST)
        resolution = Resolution(assignments={v.id: (1,) for v in world.active_vehicles()})
        rng = np.random.default_rng(3)

        decisions = [
            d for _ in range(3000) for d in draw_compliance(world, resolution, 0.3, rng).values()
        ]
        violated = sum(d.action is Action.GO for d in decisions) / len(decisions)
        assert abs(violated - 0.3) < 0.02

    def test_unassigned_vehicles_go_without_draw(self, quiet_config):
        world = new_world(quiet_config)
        vehicle = world.place_vehicle(Position(9, 2), Heading.EAST)
        rng = np.random.default_rng(0)
        state = rng.bit_generator.state
        decisions = draw_compliance(world, Resolution(assignments={vehicle.id: ()}), 0.5, rng)
        assert decisions[vehicle.id].action is Action.GO
        assert rng.bit_generator.state == state


class TestDeadlock:
    def test_flowing_traffic(self, quiet_config):
        world = new_world(quiet_config)
        world.place_vehicle(Position(9, 2), Heading.EAST)
        history = [MetricsRecord(i, 0.0, 0, 0, 0, moved=1) for i in range(30)]
        assert not detect_deadlock(history, world, quiet_config)

    def test_frozen_traffic(self, quiet_config):
        world = new_world(quiet_config)
        world.place_vehicle(Position(9, 2), Heading.EAST)
        history = [MetricsRecord(i, 0.0, 0, 0, 0, moved=0) for i in range(quiet_config.deadlock_patience)]
        assert detect_deadlock(history, world, quiet_config)
        assert not detect_deadlock(history[1:], world, quiet_config)

    def test_empty_world_is_not_deadlocked(self, quiet_config):
        history = [MetricsRecord(i, 0.0, 0, 0, 0) for i in range(50)]
        assert not detect_deadlock(history, new_world(quiet_config), quiet_config)


class TestSimulationRun:
    def test_reproducible(self):
        config = ScenarioConfig(max_steps=150, violation_rate=0.2, seed=4)
        first = SimulationRun(config).run()
        second = SimulationRun(config).run()
        assert [r.as_row() for r in first.records] == [r.as_row() for r in second.records]
        assert first.norm_lines == second.norm_lines

    def test_full_violation_equals_no_norms(self):
        base = ScenarioConfig(max_steps=200, seed=9, violation_rate=1.0)
        with_norms = SimulationRun(base.model_copy(update={"strategy": Strategy.UNS})).run()
        without = SimulationRun(base.model_copy(update={"strategy": Strategy.NONE})).run()
        assert [r.collisions for r in with_norms.records] == [r.collisions for r in without.records]
        assert [r.avg_waiting_all for r in with_norms.records] == [r.avg_waiting_all for r in without.records]

    def test_run_index_offsets_seed(self):
        config = ScenarioConfig(max_steps=5, seed=10)
        assert SimulationRun(config, run_index=3).seed == 13

    def test_norm_dump_format(self):
        result = SimulationRun(ScenarioConfig(max_steps=300, seed=1)).run()
        assert result.norm_lines
        for line in result.norm_lines:
            text, fields = line.split(" id=")
            assert text.endswith("-> proh(Go)")
            assert " active=" in fields and " nnr=" in fields and " ner=" in fields


class TestRunInvariants:
    @pytest.mark.parametrize("strategy", [Strategy.UNS, Strategy.IRON])
    def test_occupancy_and_waiting_accounting(self, strategy):
        run = SimulationRun(ScenarioConfig(max_steps=200, seed=3, violation_rate=0.3, strategy=strategy))
        expected_waiting = 0

        for _ in range(run.config.max_steps):
            record = run.step()
            check_occupancy(run.world)
            expected_waiting += record.assigned - record.violated + run.world.last_outcome.blocked
            assert sum(v.waiting_steps for v in run.world.all_vehicles()) == expected_waiting

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_compliant_uns_never_waits_in_pairs(self, seed):
        run = SimulationRun(ScenarioConfig(max_steps=300, seed=seed, violation_rate=0.0))

        for _ in range(run.config.max_steps):
            resolution = resolve_unmatchable(run.world, run.norm_set, run.utility)
            stopping = resolution.stopping_vehicles()
            for group in resolution.groups:
                assert len(stopping & set(group)) <= 1
            targets = [run.world.vehicles[vid].ahead for vid in stopping]
            assert len(targets) == len(set(targets))
            for vid in stopping:
                seen = {run.world.occupancy.get(c) for c in view_cells(run.world.vehicles[vid])}
                for other in stopping & seen:
                    mutual = {run.world.occupancy.get(c) for c in view_cells(run.world.vehicles[other])}
                    assert vid not in mutual

            run.step()
            check_occupancy(run.world)

        assert run.deadlock_step is None
