"""
Tests for the continuum simulator.
"""

import math

import numpy as np
import pytest

from pairagent.core.models import Action, ActionCatalog, ActionType, default_templates
from pairagent.errors import ConfigError
from pairagent.sim.continuum import (
    TS_STRIDE,
    apply_intervention,
    build_continuum,
    pick_destination,
    step_round,
)
from pairagent.sim.models import (
    TIER_ENERGY_DRAIN,
    EventType,
    FaultInjection,
    GroundTruthNet,
    NodeSpec,
    Phase,
    Tier,
    TruthVariable,
)


def _run(scenario, rounds, seed=0):
    state = build_continuum(scenario)
    for _ in range(rounds):
        step_round(state, scenario.truth, seed)
    return state


def _sure_catalog():
    return ActionCatalog(
        templates=[t.model_copy(update={"efficacy": 1.0}) for t in default_templates()]
    )


def _events(state, node, event_type):
    return [e for e in state.logs[node] if e.event_type == event_type.value]


class TestScenarioValidation:
    """Test scenario and node validation."""

    def test_sensor_must_have_zero_capacity(self):
        with pytest.raises(ValueError):
            NodeSpec(id="s", tier="sensor", capacity=1.0)

    def test_unknown_host_names_field(self, small_scenario):
        broken = small_scenario.model_copy(
            update={
                "tasks": [
                    small_scenario.tasks[0].model_copy(update={"host": "nowhere"}),
                ]
            }
        )
        with pytest.raises(ConfigError) as exc:
            build_continuum(broken)
        assert exc.value.field == "tasks[0].host"

    def test_task_on_sensor_rejected(self, small_scenario):
        broken = small_scenario.model_copy(
            update={"tasks": [small_scenario.tasks[0].model_copy(update={"host": "sensor-1"})]}
        )
        with pytest.raises(ConfigError):
            build_continuum(broken)

    def test_unknown_injection_variable(self, small_scenario):
        broken = small_scenario.model_copy(
            update={"injections": [FaultInjection(round=0, node="edge-1", variable="gremlins")]}
        )
        with pytest.raises(ConfigError) as exc:
            build_continuum(broken)
        assert exc.value.field == "injections[0].variable"

    def test_cyclic_truth_net_rejected(self):
        with pytest.raises(ValueError):
            GroundTruthNet(
                variables=[
                    TruthVariable(name="a", parents=["b"], cpt=[0.1, 0.2]),
                    TruthVariable(name="b", parents=["a"], cpt=[0.1, 0.2]),
                ]
            )

    def test_cpt_size_checked(self):
        with pytest.raises(ValueError):
            TruthVariable(name="a", parents=["b"], cpt=[0.1])


class TestBuildContinuum:
    """Test the initial layout."""

    def test_initial_state(self, small_scenario):
        state = build_continuum(small_scenario)
        assert sorted(state.nodes) == ["cloud-1", "edge-1", "fog-1", "sensor-1"]
        assert state.executions["train-a"].phase == Phase.ALPHA
        assert all(not entries for entries in state.logs.values())
        assert state.nodes["edge-1"].uplink == "l-edge-1"

    def test_same_scenario_same_state(self, small_scenario):
        a = build_continuum(small_scenario)
        b = build_continuum(small_scenario)
        assert a.executions == b.executions
        assert [n.uplink for n in a.nodes.values()] == [n.uplink for n in b.nodes.values()]


class TestStepRound:
    """Test round simulation."""

    def test_nominal_round_has_no_fault_events(self, small_scenario):
        state = _run(small_scenario, 6)
        fault_types = {"crash", "comm-error", "task-fail", "resource-denied", "user-abort"}
        assert not [e for e in state.entries() if e.event_type in fault_types]

    def test_task_lifecycle_and_checkpoints(self, small_scenario):
        state = _run(small_scenario, 6)
        cps = [cp for cp in state.checkpoints["train-a"] if cp.attempt == 1]
        assert [cp.D for cp in cps] == [1, 2, 3, 4]
        rounds = [cp.round for cp in cps]
        assert rounds == sorted(set(rounds))
        done = _events(state, "edge-1", EventType.TASK_COMPLETE)
        assert len(done) == 1
        assert done[0].attrs["deadline_met"] == "true"
        assert state.executions["train-a"].attempt == 2

    def test_heartbeat_from_every_running_node(self, small_scenario):
        state = _run(small_scenario, 1)
        for node in state.nodes:
            beats = _events(state, node, EventType.HEARTBEAT)
            assert len(beats) == 1
            assert set(beats[0].metrics) == {m.name for m in small_scenario.metrics}

    def test_timestamps_strictly_increase_per_node(self, crash_scenario):
        state = _run(crash_scenario, 12, seed=4)
        for entries in state.logs.values():
            stamps = [e.ts for e in entries]
            assert all(a < b for a, b in zip(stamps, stamps[1:]))
            assert all(e.ts // TS_STRIDE == e.round for e in entries)

    def test_identical_seed_identical_bytes(self, crash_scenario):
        a = _run(crash_scenario, 10, seed=5)
        b = _run(crash_scenario, 10, seed=5)
        assert [e.to_line() for e in a.entries()] == [e.to_line() for e in b.entries()]
        assert [t.to_line() for t in a.traces] == [t.to_line() for t in b.traces]

    def test_crash_hazard_logs_crash_and_stalls_tasks(self, small_scenario):
        scenario = small_scenario.model_copy(update={"hazards": {"edge-1": {"node_crash": 1.0}}})
        state = _run(scenario, 3)
        assert len(_events(state, "edge-1", EventType.CRASH)) == 3
        assert not _events(state, "edge-1", EventType.TASK_START)
        assert state.executions["train-a"].phase == Phase.ALPHA

    def test_scripted_injection_counts_from_epoch(self, small_scenario):
        scenario = small_scenario.model_copy(
            update={"injections": [FaultInjection(round=1, node="edge-1", variable="node_crash")]}
        )
        state = build_continuum(scenario)
        for _ in range(4):
            step_round(state, scenario.truth, 0)
        # Round 1 of the bootstrap matches the injection round but must not fire.
        assert not [i for t in state.traces for i in t.injected if i.cause == "scripted"]
        assert "node_crash" not in state.nodes["edge-1"].sticky_faults
        state.mark_epoch()
        step_round(state, scenario.truth, 0)
        assert not state.traces[-1].injected
        trace = step_round(state, scenario.truth, 0)
        assert [(i.node, i.variable, i.cause) for i in trace.injected] == [
            ("edge-1", "node_crash", "scripted")
        ]
        assert trace.truth["edge-1"]["node_crash"] == 1
        # Sticky injections do not recover on their own.
        for _ in range(5):
            step_round(state, scenario.truth, 0)
        assert state.nodes["edge-1"].crashed

    def test_no_scripted_injection_before_epoch(self, crash_scenario):
        state = _run(crash_scenario, 30, seed=7)
        assert not [i for t in state.traces for i in t.injected if i.cause == "scripted"]
        assert not state.nodes["edge-1"].sticky_faults

    def test_isolated_node_emits_nothing(self, small_scenario):
        state = _run(small_scenario, 2)
        state.nodes["fog-1"].isolated = True
        before = len(state.logs["fog-1"])
        step_round(state, small_scenario.truth, 0)
        assert len(state.logs["fog-1"]) == before

    def test_finalized_state_rejects_rounds(self, small_scenario):
        state = build_continuum(small_scenario)
        state.finalize()
        with pytest.raises(RuntimeError):
            step_round(state, small_scenario.truth, 0)

    def test_low_energy_forces_low_battery(self, small_scenario):
        nodes = [
            n.model_copy(update={"energy": 0.1}) if n.id == "edge-1" else n
            for n in small_scenario.nodes
        ]
        scenario = small_scenario.model_copy(update={"nodes": nodes})
        trace = step_round(build_continuum(scenario), scenario.truth, 0)
        assert trace.truth["edge-1"]["low_battery"] == 1


class TestEnergyAndLinks:
    """Test battery drain, radio reliability and mobile handoffs."""

    @staticmethod
    def _with_nodes(scenario, *extra, updates=None):
        updates = updates or {}
        nodes = [n.model_copy(update=updates.get(n.id, {})) for n in scenario.nodes]
        return scenario.model_copy(update={"nodes": [*nodes, *extra]})

    def test_battery_tiers_drain_by_default(self, small_scenario):
        phone = NodeSpec(id="mobile-1", tier="mobile", capacity=4.0, mobile=True)
        scenario = self._with_nodes(small_scenario, phone)
        state = _run(scenario, 10)
        expected = 1.0 - 10 * TIER_ENERGY_DRAIN[Tier.MOBILE]
        assert state.nodes["mobile-1"].energy == pytest.approx(expected)
        assert state.nodes["sensor-1"].energy < 1.0
        assert state.nodes["edge-1"].energy == 1.0
        assert state.nodes["cloud-1"].energy == 1.0

    def test_explicit_drain_overrides_tier(self, small_scenario):
        still = NodeSpec(id="mobile-1", tier="mobile", capacity=4.0, energy_drain=0.0)
        fast = {"energy_drain": 0.5}
        scenario = self._with_nodes(small_scenario, still, updates={"edge-1": fast})
        state = _run(scenario, 3)
        assert state.nodes["mobile-1"].energy == 1.0
        assert state.nodes["edge-1"].energy == 0.0
        # An empty battery forces the low-battery cause.
        assert state.traces[-1].truth["edge-1"]["low_battery"] == 1

    def test_radio_reliability_degrades_uplink(self, small_scenario):
        hazards = {k: v for k, v in small_scenario.global_hazards.items() if k != "link_degraded"}
        scenario = self._with_nodes(small_scenario, updates={"edge-1": {"link_reliability": 0.0}})
        scenario = scenario.model_copy(update={"global_hazards": hazards})
        state = _run(scenario, 4)
        assert all(t.truth["edge-1"]["link_degraded"] == 1 for t in state.traces)
        assert state.nodes["edge-1"].link_reliability == 0.0

    def test_explicit_hazard_wins_over_radio(self, small_scenario):
        scenario = self._with_nodes(small_scenario, updates={"edge-1": {"link_reliability": 0.0}})
        state = _run(scenario, 4)
        assert all(t.truth["edge-1"]["link_degraded"] == 0 for t in state.traces)

    def test_handoff_hazard_hits_only_mobile_nodes(self, small_scenario):
        phone = NodeSpec(id="mobile-1", tier="mobile", capacity=4.0, mobile=True)
        scenario = self._with_nodes(small_scenario, phone)
        scenario = scenario.model_copy(update={"handoff_hazard": 1.0})
        state = _run(scenario, 4)
        assert all(t.truth["mobile-1"]["link_degraded"] == 1 for t in state.traces)
        assert all(t.truth["edge-1"]["link_degraded"] == 0 for t in state.traces)

    def test_no_handoffs_when_hazard_is_zero(self, small_scenario):
        phone = NodeSpec(id="mobile-1", tier="mobile", capacity=4.0, mobile=True)
        scenario = self._with_nodes(small_scenario, phone)
        scenario = scenario.model_copy(update={"handoff_hazard": 0.0})
        state = _run(scenario, 4)
        assert all(t.truth["mobile-1"]["link_degraded"] == 0 for t in state.traces)


class TestTruthSampling:
    """Test ancestral sampling against the tables."""

    @pytest.mark.slow
    def test_conditional_frequencies_match_tables(self):
        net = GroundTruthNet(
            variables=[
                TruthVariable(name="a", cpt=[0.3]),
                TruthVariable(name="b", parents=["a"], cpt=[0.1, 0.8]),
            ]
        )
        rng = np.random.default_rng(0)
        samples = [net.sample(rng) for _ in range(20000)]
        for a, p in ((0, 0.1), (1, 0.8)):
            rows = [s["b"] for s in samples if s["a"] == a]
            freq = sum(rows) / len(rows)
            se = math.sqrt(p * (1 - p) / len(rows))
            assert abs(freq - p) < 3 * se

    def test_forcing_keeps_other_streams(self):
        net = GroundTruthNet(
            variables=[
                TruthVariable(name="a", cpt=[0.5]),
                TruthVariable(name="c", cpt=[0.5]),
            ]
        )
        free = net.sample(np.random.default_rng(9))
        forced = net.sample(np.random.default_rng(9), forced={"a": 1 - free["a"]})
        assert forced["c"] == free["c"]


class TestInterventions:
    """Test healing actions against the live continuum."""

    def _crashed(self, small_scenario):
        scenario = small_scenario.model_copy(
            update={
                "catalog": _sure_catalog(),
                "injections": [FaultInjection(round=2, node="edge-1", variable="node_crash")],
            }
        )
        state = _run(scenario, 3)
        assert state.nodes["edge-1"].crashed
        return scenario, state

    def test_restart_clears_crash(self, small_scenario):
        scenario, state = self._crashed(small_scenario)
        action = Action.build(ActionType.RESTART_NODE, "edge-1", "edge-1", {"node_crash": 0.9})
        apply_intervention(state, action, 0)
        assert not state.nodes["edge-1"].crashed
        restart = _events(state, "edge-1", EventType.RESTART)[-1]
        assert restart.round == state.round
        assert restart.attrs["success"] == "true"
        step_round(state, scenario.truth, 0)
        assert state.traces[-1].truth["edge-1"]["node_crash"] == 0

    def test_do_nothing_leaves_state_alone(self, small_scenario):
        state = _run(small_scenario, 2)
        logs = {n: list(e) for n, e in state.logs.items()}
        apply_intervention(state, Action.do_nothing(), 0)
        assert state.logs == logs

    def test_isolate_moves_tasks_from_checkpoint(self, small_scenario):
        scenario = small_scenario.model_copy(update={"catalog": _sure_catalog()})
        state = _run(scenario, 3)
        assert state.last_checkpoint("train-a").D == 2
        action = Action.build(ActionType.ISOLATE_NODE, "edge-1", "edge-1", {})
        apply_intervention(state, action, 0)
        assert state.nodes["edge-1"].isolated
        ex = state.executions["train-a"]
        assert ex.host == "fog-1"
        assert ex.subtask_index == 3
        moved = _events(state, "fog-1", EventType.REASSIGN)[-1]
        assert moved.attrs == {"from": "edge-1", "resume_at": "3", "to": "fog-1"}

    def test_reassign_rejected_without_capacity(self, small_scenario):
        scenario = small_scenario.model_copy(update={"catalog": _sure_catalog()})
        state = _run(scenario, 1)
        state.nodes["fog-1"].spec = state.nodes["fog-1"].spec.model_copy(update={"capacity": 1.0})
        action = Action.build(ActionType.REASSIGN_TASK, "train-a", "edge-1", {}, "fog-1")
        apply_intervention(state, action, 0)
        assert state.executions["train-a"].host == "edge-1"
        denied = _events(state, "fog-1", EventType.RESOURCE_DENIED)
        assert denied[-1].attrs["reason"] == "insufficient capacity"

    def test_reroute_swaps_to_backup(self, small_scenario):
        scenario = small_scenario.model_copy(update={"catalog": _sure_catalog()})
        state = _run(scenario, 1)
        action = Action.build(ActionType.REROUTE_LINK, "l-edge-1", "edge-1", {})
        apply_intervention(state, action, 0)
        assert state.nodes["edge-1"].uplink == "l-edge-1-b"

    def test_escalation_only_logs(self, small_scenario):
        state = _run(small_scenario, 1)
        action = Action.build(ActionType.ESCALATE_HUMAN, "edge-1", "edge-1", {})
        apply_intervention(state, action, 0)
        assert state.escalations == ["edge-1"]
        assert not state.nodes["edge-1"].isolated
        assert _events(state, "edge-1", EventType.ESCALATION)

    def test_unknown_target(self, small_scenario):
        state = build_continuum(small_scenario)
        action = Action.build(ActionType.RESTART_NODE, "ghost", "ghost", {})
        with pytest.raises(ConfigError):
            apply_intervention(state, action, 0)


class TestTaskAssignment:
    """Test the destination policy."""

    def test_fog_preferred(self, small_scenario):
        state = build_continuum(small_scenario)
        assert pick_destination(state, "train-a") == "fog-1"

    def test_crash_belief_outranks_tier(self, small_scenario):
        state = build_continuum(small_scenario)
        assert pick_destination(state, "train-a", {"fog-1": 0.9}) == "cloud-1"

    def test_no_candidate(self, small_scenario):
        state = build_continuum(small_scenario)
        for node in ("fog-1", "cloud-1"):
            state.nodes[node].isolated = True
        assert pick_destination(state, "train-a") is None

