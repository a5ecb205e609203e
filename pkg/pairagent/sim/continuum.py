"""
PAIR-Agent: Continuum Simulator

Deterministic, seeded simulation of a computing continuum:
- build_continuum: validate a scenario and lay out the initial state
- step_round: sample faults from the hidden truth net, advance tasks, emit logs
- apply_intervention: execute a healing action against the live state

Randomness is drawn from per-(purpose, round, node) sub-seeds so that an
intervention on one node never perturbs the random streams of the others.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field

from ..core.models import Action, ActionType
from ..errors import ConfigError
from ..utils.seeding import make_rng
from .models import (
    TIER_PREFERENCE,
    Checkpoint,
    EventType,
    GroundTruthNet,
    InjectedFault,
    LinkSpec,
    LogEntry,
    NodeState,
    Phase,
    RoundTrace,
    ScenarioConfig,
    Severity,
    TaskExecution,
    TaskSpec,
    Tier,
)
from .scenarios import TASK_SCOPED_VARIABLES

logger = logging.getLogger(__name__)

# Timestamps are round * TS_STRIDE + per-node sequence number.
TS_STRIDE = 1000

# Rounds during which a successful reduce-load suppresses resource denials.
LOAD_RELIEF_ROUNDS = 3

_FAULT_SEVERITY = {
    "crash": Severity.CRITICAL,
    "task-fail": Severity.ERROR,
    "comm-error": Severity.ERROR,
    "data-inconsistency": Severity.ERROR,
    "resource-denied": Severity.WARNING,
    "user-abort": Severity.WARNING,
}

_NODE_ACTIONS = (
    ActionType.RESTART_NODE,
    ActionType.ISOLATE_NODE,
    ActionType.REDUCE_LOAD,
    ActionType.ESCALATE_HUMAN,
)


@dataclass
class ContinuumState:
    """The live simulated continuum. `round` is the index of the next round to simulate."""

    scenario: ScenarioConfig
    nodes: dict[str, NodeState]
    links: dict[str, LinkSpec]
    tasks: dict[str, TaskSpec]
    executions: dict[str, TaskExecution]
    checkpoints: dict[str, list[Checkpoint]]
    logs: dict[str, list[LogEntry]]
    round: int = 0
    epoch_offset: int | None = None
    escalations: list[str] = field(default_factory=list)
    relief: dict[str, int] = field(default_factory=dict)
    traces: list[RoundTrace] = field(default_factory=list)
    finalized: bool = False

    def mark_epoch(self) -> None:
        """Start counting scripted injection rounds from the next round.

        Scripted injections stay dormant until this is called.
        """
        self.epoch_offset = self.round

    def finalize(self) -> None:
        self.finalized = True

    def hosted(self, node_id: str) -> list[TaskExecution]:
        return [ex for _, ex in sorted(self.executions.items()) if ex.host == node_id]

    def spare_capacity(self, node_id: str) -> float:
        used = sum(self.tasks[ex.task_id].workload for ex in self.hosted(node_id))
        return self.nodes[node_id].spec.capacity - used

    def last_checkpoint(self, task_id: str) -> Checkpoint | None:
        """Most recent checkpoint of the task's current attempt."""
        attempt = self.executions[task_id].attempt
        for cp in reversed(self.checkpoints[task_id]):
            if cp.attempt == attempt:
                return cp
        return None

    def backup_link(self, link_id: str) -> LinkSpec | None:
        current = self.links[link_id]
        for lid in sorted(self.links):
            link = self.links[lid]
            if link.backup and link.source == current.source and lid != link_id:
                return link
        return None

    def entries(self) -> list[LogEntry]:
        """Every emitted log entry, ordered by (ts, node)."""
        merged = [e for node in self.logs.values() for e in node]
        return sorted(merged, key=lambda e: (e.ts, e.node))


def _validate_references(scenario: ScenarioConfig) -> None:
    node_ids = [n.id for n in scenario.nodes]
    if len(set(node_ids)) != len(node_ids):
        raise ConfigError("Duplicate node ids in scenario", field="nodes")
    nodes = {n.id: n for n in scenario.nodes}
    variables = set(scenario.truth.by_name)

    task_ids = [p.task.id for p in scenario.tasks]
    if len(set(task_ids)) != len(task_ids):
        raise ConfigError("Duplicate task ids in scenario", field="tasks")
    for i, placement in enumerate(scenario.tasks):
        host = nodes.get(placement.host)
        if host is None:
            raise ConfigError(
                f"Task '{placement.task.id}' references unknown host '{placement.host}'",
                field=f"tasks[{i}].host",
            )
        if host.tier == Tier.SENSOR:
            raise ConfigError(
                f"Task '{placement.task.id}' cannot run on sensor node '{host.id}'",
                field=f"tasks[{i}].host",
            )

    link_ids = [link.id for link in scenario.links]
    if len(set(link_ids)) != len(link_ids):
        raise ConfigError("Duplicate link ids in scenario", field="links")
    for i, link in enumerate(scenario.links):
        for end in ("source", "target"):
            if getattr(link, end) not in nodes:
                raise ConfigError(
                    f"Link '{link.id}' references unknown node '{getattr(link, end)}'",
                    field=f"links[{i}].{end}",
                )

    for i, inj in enumerate(scenario.injections):
        if inj.node not in nodes:
            raise ConfigError(f"Unknown injection node '{inj.node}'", field=f"injections[{i}].node")
        if inj.variable not in variables:
            raise ConfigError(
                f"Unknown injection variable '{inj.variable}'", field=f"injections[{i}].variable"
            )

    for node_id, hazards in scenario.hazards.items():
        if node_id not in nodes:
            raise ConfigError(f"Hazards for unknown node '{node_id}'", field=f"hazards.{node_id}")
        for name in hazards:
            if name not in variables:
                raise ConfigError(
                    f"Hazard for unknown variable '{name}'", field=f"hazards.{node_id}.{name}"
                )
    for name in scenario.global_hazards:
        if name not in variables:
            raise ConfigError(
                f"Hazard for unknown variable '{name}'", field=f"global_hazards.{name}"
            )

    for i, metric in enumerate(scenario.metrics):
        for name in metric.effects:
            if name not in variables:
                raise ConfigError(
                    f"Metric '{metric.name}' depends on unknown variable '{name}'",
                    field=f"metrics[{i}].effects.{name}",
                )


def build_continuum(scenario: ScenarioConfig) -> ContinuumState:
    """
    Lay out the initial continuum for a scenario.

    Raises:
        ConfigError: naming the offending field on broken cross-references
    """
    _validate_references(scenario)

    nodes: dict[str, NodeState] = {}
    for spec in sorted(scenario.nodes, key=lambda n: n.id):
        uplinks = sorted(
            link.id for link in scenario.links if link.source == spec.id and not link.backup
        )
        nodes[spec.id] = NodeState(
            spec=spec,
            energy=spec.energy,
            link_reliability=spec.link_reliability,
            isolated=spec.isolated,
            uplink=uplinks[0] if uplinks else None,
        )

    tasks = {p.task.id: p.task for p in scenario.tasks}
    executions = {p.task.id: TaskExecution(task_id=p.task.id, host=p.host) for p in scenario.tasks}

    return ContinuumState(
        scenario=scenario,
        nodes=nodes,
        links={link.id: link for link in scenario.links},
        tasks=tasks,
        executions=executions,
        checkpoints={task_id: [] for task_id in tasks},
        logs={node_id: [] for node_id in nodes},
    )


def _emit(
    state: ContinuumState,
    node_id: str,
    event_type: EventType | str,
    *,
    severity: Severity = Severity.INFO,
    task_id: str | None = None,
    metrics: dict[str, float] | None = None,
    attrs: dict[str, str] | None = None,
) -> LogEntry:
    node = state.nodes[node_id]
    if node.seq_round != state.round:
        node.seq_round = state.round
        node.seq = 0
    ts = state.round * TS_STRIDE + node.seq
    node.seq += 1
    entry = LogEntry(
        node=node_id,
        ts=ts,
        round=state.round,
        event_id=f"{node_id}/{ts}",
        event_type=event_type.value if isinstance(event_type, EventType) else event_type,
        severity=severity,
        task_id=task_id,
        metrics=metrics or {},
        attrs=attrs or {},
    )
    state.logs[node_id].append(entry)
    return entry


def _new_attempt(ex: TaskExecution) -> None:
    ex.attempt += 1
    ex.phase = Phase.ALPHA
    ex.subtask_index = 1
    ex.rounds_elapsed = 0
    ex.deadline_missed = False


def _checkpoint(state: ContinuumState, ex: TaskExecution, completed: int) -> Checkpoint:
    task = state.tasks[ex.task_id]
    s = f"{ex.task_id}:a{ex.attempt}:d{completed}"
    theta = hashlib.sha256(f"{s}|{task.mapping}".encode()).hexdigest()[:16]
    cp = Checkpoint(
        task_id=ex.task_id, attempt=ex.attempt, s=s, D=completed, theta=theta, round=state.round
    )
    state.checkpoints[ex.task_id].append(cp)
    return cp


def _advance_task(state: ContinuumState, ex: TaskExecution, trace: RoundTrace) -> None:
    """Move one execution forward by one phase or subtask."""
    task = state.tasks[ex.task_id]
    node_id = ex.host
    if ex.phase == Phase.ALPHA:
        attrs = {"attempt": str(ex.attempt), "mapping": task.mapping}
        _emit(state, node_id, EventType.TASK_START, task_id=ex.task_id, attrs=attrs)
        ex.phase = Phase.BETA
    elif ex.phase == Phase.BETA:
        attrs = {"index": str(ex.subtask_index), "subtask": task.subtasks[ex.subtask_index - 1]}
        _emit(state, node_id, EventType.SUBTASK_COMPLETE, task_id=ex.task_id, attrs=attrs)
        cp = _checkpoint(state, ex, ex.subtask_index)
        attrs = {"D": str(cp.D), "s": cp.s, "theta": cp.theta}
        _emit(state, node_id, EventType.CHECKPOINT, task_id=ex.task_id, attrs=attrs)
        trace.checkpoints.append(cp.s)
        ex.subtask_index += 1
        if ex.subtask_index > len(task.subtasks):
            ex.phase = Phase.GAMMA
    else:
        met = ex.rounds_elapsed <= task.deadline and not ex.deadline_missed
        attrs = {
            "attempt": str(ex.attempt),
            "deadline_met": "true" if met else "false",
            "rounds": str(ex.rounds_elapsed),
        }
        _emit(state, node_id, EventType.TASK_COMPLETE, task_id=ex.task_id, attrs=attrs)
        _new_attempt(ex)


def _simulate_node(
    state: ContinuumState, node: NodeState, truth: GroundTruthNet, seed: int, trace: RoundTrace
) -> None:
    scenario = state.scenario
    r = state.round

    if node.spec.drain > 0.0:
        node.energy = max(0.0, round(node.energy - node.spec.drain, 6))

    recovery = make_rng(seed, "recovery", r, node.id)
    for name in sorted(node.active_faults):
        u = recovery.random()
        if name in node.sticky_faults:
            continue
        var = truth.by_name.get(name)
        if var is None or not var.persistent or u < var.recovery_rate:
            node.active_faults.discard(name)

    for inj in scenario.injections:
        if state.epoch_offset is None or inj.node != node.id:
            continue
        if state.epoch_offset + inj.round == r:
            node.active_faults.add(inj.variable)
            if inj.sticky:
                node.sticky_faults.add(inj.variable)
            trace.injected.append(
                InjectedFault(node=node.id, variable=inj.variable, cause="scripted")
            )

    previously_active = set(node.active_faults)
    forced = {name: 1 for name in node.active_faults if name in truth.by_name}
    if node.energy < scenario.low_energy_threshold and "low_battery" in truth.by_name:
        forced["low_battery"] = 1
    if state.relief.get(node.id, 0) > 0:
        forced.setdefault("resource_denied", 0)
        state.relief[node.id] -= 1

    overrides = scenario.hazards_for(node.id)
    degraded = truth.by_name.get("link_degraded")
    if degraded is not None and not degraded.parents:
        uplink = state.links.get(node.uplink) if node.uplink else None
        if uplink is not None:
            delivery = uplink.reliability * node.link_reliability
            overrides.setdefault("link_degraded", max(degraded.cpt[0], 1.0 - delivery))
        if node.spec.mobile and scenario.handoff_hazard > 0.0:
            stable = 1.0 - overrides.get("link_degraded", degraded.cpt[0])
            overrides["link_degraded"] = 1.0 - stable * (1.0 - scenario.handoff_hazard)

    values = truth.sample(make_rng(seed, "faults", r, node.id), forced, overrides)

    hosted = state.hosted(node.id)
    if not hosted:
        for name in TASK_SCOPED_VARIABLES & set(values):
            values[name] = 0

    for name in truth.order:
        if not values[name] or name in previously_active:
            continue
        if truth.by_name[name].persistent:
            node.active_faults.add(name)
        trace.injected.append(InjectedFault(node=node.id, variable=name, cause="sampled"))

    for name in truth.order:
        event = truth.by_name[name].event
        if not values[name] or event is None:
            continue
        severity = _FAULT_SEVERITY.get(event, Severity.ERROR)
        if name in TASK_SCOPED_VARIABLES:
            for ex in hosted:
                attrs = {"attempt": str(ex.attempt)}
                _emit(state, node.id, event, severity=severity, task_id=ex.task_id, attrs=attrs)
        else:
            _emit(state, node.id, event, severity=severity)

    stalled = bool(node.crashed or values.get("task_failure") or values.get("resource_denied"))
    for ex in hosted:
        ex.rounds_elapsed += 1
        if values.get("user_abort"):
            _new_attempt(ex)
            continue
        task = state.tasks[ex.task_id]
        if ex.rounds_elapsed > task.deadline and not ex.deadline_missed:
            ex.deadline_missed = True
            _emit(
                state,
                node.id,
                EventType.DEADLINE_MISS,
                severity=Severity.WARNING,
                task_id=ex.task_id,
                attrs={"attempt": str(ex.attempt), "deadline": str(task.deadline)},
            )
        if not stalled:
            _advance_task(state, ex, trace)

    metrics_rng = make_rng(seed, "metrics", r, node.id)
    metrics: dict[str, float] = {}
    for model in scenario.metrics:
        shift = sum(delta * values.get(name, 0) for name, delta in model.effects.items())
        value = model.mean + shift + model.std * metrics_rng.standard_normal()
        metrics[model.name] = round(max(model.floor, value), 4)
    attrs = {"energy": f"{node.energy:.4f}"}
    _emit(state, node.id, EventType.HEARTBEAT, metrics=metrics, attrs=attrs)

    trace.truth[node.id] = dict(values)


def step_round(state: ContinuumState, truth: GroundTruthNet, seed: int) -> RoundTrace:
    """
    Simulate one round on every non-isolated node, in node-id order.

    Identical (state, seed) produce an identical trace and identical log bytes.
    """
    if state.finalized:
        raise RuntimeError("continuum state is finalized")

    trace = RoundTrace(round=state.round)
    start = {node_id: len(entries) for node_id, entries in state.logs.items()}
    for node_id in sorted(state.nodes):
        node = state.nodes[node_id]
        if node.isolated:
            continue
        _simulate_node(state, node, truth, seed, trace)

    trace.entries = sorted(
        (e for node_id, entries in state.logs.items() for e in entries[start[node_id]:]),
        key=lambda e: (e.ts, e.node),
    )
    state.traces.append(trace)
    state.round += 1
    return trace


def pick_destination(
    state: ContinuumState,
    task_id: str,
    crash_belief: dict[str, float] | None = None,
) -> str | None:
    """
    Task assignment policy: a non-isolated node with spare capacity, lowest believed
    crash probability first, then tier preference (fog, cloud, edge, ...), then id.
    """
    ex = state.executions[task_id]
    workload = state.tasks[task_id].workload
    beliefs = crash_belief or {}
    candidates = [
        node
        for node in state.nodes.values()
        if node.id != ex.host
        and not node.isolated
        and node.spec.tier != Tier.SENSOR
        and state.spare_capacity(node.id) >= workload
    ]
    if not candidates:
        return None
    best = min(
        candidates,
        key=lambda n: (beliefs.get(n.id, 0.0), TIER_PREFERENCE.index(n.spec.tier), n.id),
    )
    return best.id


def _move_task(state: ContinuumState, task_id: str, destination: str) -> int:
    """Re-host an execution after its last checkpoint; returns the subtask it resumes at."""
    ex = state.executions[task_id]
    task = state.tasks[task_id]
    cp = state.last_checkpoint(task_id)
    done = cp.D if cp is not None else 0
    ex.host = destination
    ex.subtask_index = done + 1
    if done == 0:
        ex.phase = Phase.ALPHA
    elif done >= len(task.subtasks):
        ex.phase = Phase.GAMMA
    else:
        ex.phase = Phase.BETA
    return ex.subtask_index


def _reassign(state: ContinuumState, task_id: str, destination: str | None, origin: str) -> bool:
    workload = state.tasks[task_id].workload
    if destination is None or state.nodes[destination].isolated:
        where = origin
    elif state.spare_capacity(destination) < workload:
        where = destination
    else:
        resume = _move_task(state, task_id, destination)
        _emit(
            state,
            destination,
            EventType.REASSIGN,
            task_id=task_id,
            attrs={"from": origin, "resume_at": str(resume), "to": destination},
        )
        return True

    if not state.nodes[where].isolated:
        _emit(
            state,
            where,
            EventType.RESOURCE_DENIED,
            severity=Severity.WARNING,
            task_id=task_id,
            attrs={"reason": "insufficient capacity"},
        )
    logger.warning("Reassignment of %s to %s rejected", task_id, destination)
    return False


def apply_intervention(state: ContinuumState, action: Action, seed: int) -> ContinuumState:
    """
    Execute a healing action. Events it causes belong to the next round's interval.

    The action's catalog efficacy is the probability that it takes effect; the
    action event is logged either way.

    Raises:
        ConfigError: if the action targets an unknown node, task or link
    """
    if action.is_do_nothing:
        return state

    target = action.target or ""
    template = state.scenario.catalog.template(action.type)
    efficacy = template.efficacy if template is not None else 0.9
    success = make_rng(seed, "intervene", state.round, action.id).random() < efficacy

    if action.type in _NODE_ACTIONS:
        if target not in state.nodes:
            raise ConfigError(f"Unknown node '{target}'", field="action.target")
        node = state.nodes[target]
        if node.isolated:
            return state

        if action.type == ActionType.RESTART_NODE:
            _emit(state, target, EventType.RESTART, attrs={"success": str(success).lower()})
            if success:
                node.active_faults.discard("node_crash")
                node.sticky_faults.discard("node_crash")
        elif action.type == ActionType.REDUCE_LOAD:
            _emit(state, target, EventType.REDUCE_LOAD, attrs={"success": str(success).lower()})
            if success:
                node.active_faults.discard("overheat")
                node.sticky_faults.discard("overheat")
                state.relief[target] = LOAD_RELIEF_ROUNDS
        elif action.type == ActionType.ESCALATE_HUMAN:
            attrs = {"target": target}
            _emit(state, target, EventType.ESCALATION, severity=Severity.CRITICAL, attrs=attrs)
            state.escalations.append(target)
        else:
            _emit(state, target, EventType.ISOLATE, severity=Severity.WARNING)
            if success:
                node.isolated = True
                for ex in state.hosted(target):
                    _reassign(state, ex.task_id, pick_destination(state, ex.task_id), target)
        return state

    if action.type == ActionType.REASSIGN_TASK:
        if target not in state.executions:
            raise ConfigError(f"Unknown task '{target}'", field="action.target")
        if action.destination is not None and action.destination not in state.nodes:
            raise ConfigError(f"Unknown node '{action.destination}'", field="action.destination")
        origin = state.executions[target].host
        if success:
            destination = action.destination or pick_destination(state, target)
            _reassign(state, target, destination, origin)
        elif not state.nodes[origin].isolated:
            _emit(state, origin, EventType.REASSIGN, task_id=target, attrs={"success": "false"})
        return state

    if action.type == ActionType.REROUTE_LINK:
        if target not in state.links:
            raise ConfigError(f"Unknown link '{target}'", field="action.target")
        source = state.links[target].source
        node = state.nodes[source]
        if node.isolated:
            return state
        backup = state.backup_link(target)
        _emit(
            state,
            source,
            EventType.REROUTE,
            attrs={
                "from": target,
                "success": str(success).lower(),
                "to": backup.id if backup else "",
            },
        )
        if success and backup is not None:
            node.uplink = backup.id
            node.active_faults.discard("link_degraded")
            node.sticky_faults.discard("link_degraded")
        return state

    raise ConfigError(f"Unsupported action type '{action.type.value}'", field="action.type")


__all__ = [
    "TS_STRIDE",
    "ContinuumState",
    "build_continuum",
    "step_round",
    "apply_intervention",
    "pick_destination",
]
