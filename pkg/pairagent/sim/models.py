"""
PAIR-Agent: Continuum Data Models

Scenario definition (nodes, links, tasks, hidden fault-cause network, metric
models, hazards and scripted injections) and the runtime records the simulator
produces (task executions, checkpoints, log entries, round traces).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..core.models import ActionCatalog

DEFAULT_SUBTASKS = ["data-load", "forward", "backward", "update"]


class Tier(str, Enum):
    """Continuum layers, from data centre to pure data producer."""

    CLOUD = "cloud"
    FOG = "fog"
    EDGE = "edge"
    MOBILE = "mobile"
    IOT = "iot"
    SENSOR = "sensor"


# Reassignment preference: workload moves up to fog or cloud first.
TIER_PREFERENCE = [Tier.FOG, Tier.CLOUD, Tier.EDGE, Tier.MOBILE, Tier.IOT, Tier.SENSOR]

# Energy lost per round by battery-powered tiers when a node sets no drain of its own.
TIER_ENERGY_DRAIN = {Tier.MOBILE: 0.004, Tier.IOT: 0.002, Tier.SENSOR: 0.001}


class ContextKind(str, Enum):
    """Hardware/software partition of context features."""

    HW = "hw-context"
    SW = "sw-context"


class Phase(str, Enum):
    """Task execution phases: initiation, computation, completion/checkpointing."""

    ALPHA = "alpha"
    BETA = "beta"
    GAMMA = "gamma"


class Severity(str, Enum):
    INFO = "info"
    WARNING = "warning"
    ERROR = "error"
    CRITICAL = "critical"


class EventType(str, Enum):
    """Event types the simulator emits."""

    HEARTBEAT = "heartbeat"
    TASK_START = "task-start"
    SUBTASK_COMPLETE = "subtask-complete"
    CHECKPOINT = "checkpoint"
    TASK_COMPLETE = "task-complete"
    TASK_FAIL = "task-fail"
    DEADLINE_MISS = "deadline-miss"
    CRASH = "crash"
    COMM_ERROR = "comm-error"
    USER_ABORT = "user-abort"
    RESOURCE_DENIED = "resource-denied"
    DATA_INCONSISTENCY = "data-inconsistency"
    RESTART = "restart"
    ISOLATE = "isolate"
    REASSIGN = "reassign"
    REROUTE = "reroute"
    REDUCE_LOAD = "reduce-load"
    ESCALATION = "escalation"


# =============================================================================
# SCENARIO
# =============================================================================


class NodeSpec(BaseModel):
    """A device of the continuum."""

    model_config = ConfigDict(extra="forbid")

    id: str = Field(min_length=1)
    tier: Tier
    capacity: float = Field(default=0.0, ge=0.0, description="Compute units")
    energy: float = Field(default=1.0, ge=0.0, le=1.0, description="Energy fraction")
    energy_drain: float | None = Field(
        default=None, ge=0.0, le=1.0, description="Energy lost per round (None: tier default)"
    )
    mobile: bool = Field(default=False, description="Subject to the scenario handoff hazard")
    link_reliability: float = Field(
        default=0.99, ge=0.0, le=1.0, description="Radio delivery probability towards the uplink"
    )
    isolated: bool = False

    @model_validator(mode="after")
    def sensors_only_produce_data(self) -> NodeSpec:
        if self.tier == Tier.SENSOR and self.capacity != 0.0:
            raise ValueError("sensor-tier nodes must have capacity 0")
        return self

    @property
    def drain(self) -> float:
        if self.energy_drain is not None:
            return self.energy_drain
        return TIER_ENERGY_DRAIN.get(self.tier, 0.0)


class LinkSpec(BaseModel):
    """A communication relationship; backup links are used by rerouting."""

    model_config = ConfigDict(extra="forbid")

    id: str
    source: str
    target: str
    reliability: float = Field(default=0.99, ge=0.0, le=1.0)
    backup: bool = False


class TaskSpec(BaseModel):
    """A task: workload, input dependencies, compute mapping, deadline, subtask pipeline."""

    model_config = ConfigDict(extra="forbid")

    id: str = Field(min_length=1)
    workload: float = Field(gt=0.0)
    input_deps: list[str] = Field(default_factory=list)
    mapping: str = Field(default="model", description="Opaque compute-function label")
    deadline: int = Field(gt=0, description="Rounds allowed per attempt")
    subtasks: list[str] = Field(default_factory=lambda: list(DEFAULT_SUBTASKS), min_length=1)

    @field_validator("subtasks")
    @classmethod
    def unique_subtasks(cls, v: list[str]) -> list[str]:
        if len(set(v)) != len(v):
            raise ValueError("subtask names must be unique")
        return v


class TaskPlacement(BaseModel):
    """A task and its initial host."""

    model_config = ConfigDict(extra="forbid")

    task: TaskSpec
    host: str


class TruthVariable(BaseModel):
    """One binary fault-cause variable of the hidden ground-truth network."""

    model_config = ConfigDict(extra="forbid")

    name: str
    parents: list[str] = Field(default_factory=list)
    cpt: list[float] = Field(
        description="P(active | parent configuration); first parent most significant"
    )
    event: str | None = Field(default=None, description="Event emitted when active")
    persistent: bool = False
    recovery_rate: float = Field(default=0.0, ge=0.0, le=1.0)

    @field_validator("cpt")
    @classmethod
    def probabilities(cls, v: list[float]) -> list[float]:
        if any(not 0.0 <= p <= 1.0 for p in v):
            raise ValueError("cpt entries must lie in [0, 1]")
        return v

    @model_validator(mode="after")
    def table_size(self) -> TruthVariable:
        if len(self.cpt) != 2 ** len(self.parents):
            raise ValueError(
                f"'{self.name}' needs {2 ** len(self.parents)} cpt entries, got {len(self.cpt)}"
            )
        return self


class GroundTruthNet(BaseModel):
    """Hidden causal net generating faults; acyclic, binary variables."""

    model_config = ConfigDict(extra="forbid")

    variables: list[TruthVariable]

    @model_validator(mode="after")
    def well_formed(self) -> GroundTruthNet:
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValueError("truth variable names must be unique")
        known = set(names)
        graph = nx.DiGraph()
        graph.add_nodes_from(names)
        for v in self.variables:
            for p in v.parents:
                if p not in known:
                    raise ValueError(f"'{v.name}' has unknown parent '{p}'")
                graph.add_edge(p, v.name)
        if not nx.is_directed_acyclic_graph(graph):
            raise ValueError("truth network must be acyclic")
        return self

    @cached_property
    def by_name(self) -> dict[str, TruthVariable]:
        return {v.name: v for v in self.variables}

    @cached_property
    def order(self) -> list[str]:
        graph = nx.DiGraph()
        graph.add_nodes_from(v.name for v in self.variables)
        graph.add_edges_from((p, v.name) for v in self.variables for p in v.parents)
        return list(nx.lexicographical_topological_sort(graph))

    def table(self, name: str) -> np.ndarray:
        """CPT of `name` as rows [P(inactive), P(active)] per parent configuration."""
        p = np.asarray(self.by_name[name].cpt, dtype=float)
        return np.stack([1.0 - p, p], axis=1)

    def edges(self) -> list[tuple[str, str]]:
        return sorted((p, v.name) for v in self.variables for p in v.parents)

    def sample(
        self,
        rng: np.random.Generator,
        forced: dict[str, int] | None = None,
        overrides: dict[str, float] | None = None,
    ) -> dict[str, int]:
        """
        Ancestral sample. One uniform draw is consumed per variable regardless of
        forcing, so forcing one variable never shifts the stream of the others.
        """
        forced = forced or {}
        overrides = overrides or {}
        values: dict[str, int] = {}
        for name in self.order:
            var = self.by_name[name]
            u = rng.random()
            if name in forced:
                values[name] = forced[name]
                continue
            if name in overrides:
                p = overrides[name]
            else:
                index = 0
                for parent in var.parents:
                    index = index * 2 + values[parent]
                p = var.cpt[index]
            values[name] = int(u < p)
        return values


class MetricModel(BaseModel):
    """Gaussian metric whose mean shifts with active truth variables."""

    model_config = ConfigDict(extra="forbid")

    name: str
    kind: ContextKind
    mean: float
    std: float = Field(ge=0.0)
    effects: dict[str, float] = Field(default_factory=dict)
    floor: float = 0.0
    nominal: str = Field(default="low", pattern="^(low|mid|high)$")


class FaultInjection(BaseModel):
    """Scripted activation of a truth variable, counted from the first agent round."""

    model_config = ConfigDict(extra="forbid")

    round: int = Field(ge=0)
    node: str
    variable: str
    sticky: bool = Field(default=True, description="Suppress natural recovery")


class ScenarioConfig(BaseModel):
    """Everything needed to build a continuum deterministically."""

    model_config = ConfigDict(extra="forbid")

    name: str
    description: str = ""
    seed: int = Field(default=0, ge=0)
    nodes: list[NodeSpec] = Field(min_length=1)
    links: list[LinkSpec] = Field(default_factory=list)
    tasks: list[TaskPlacement] = Field(default_factory=list)
    truth: GroundTruthNet = Field(default_factory=lambda: _default_truth())
    metrics: list[MetricModel] = Field(default_factory=lambda: _default_metrics())
    global_hazards: dict[str, float] = Field(
        default_factory=dict, description="Constant P(active) for a variable on every node"
    )
    hazards: dict[str, dict[str, float]] = Field(
        default_factory=dict, description="Per-node constant P(active) overrides"
    )
    injections: list[FaultInjection] = Field(default_factory=list)
    catalog: ActionCatalog = Field(default_factory=ActionCatalog)
    low_energy_threshold: float = Field(default=0.15, ge=0.0, le=1.0)
    handoff_hazard: float = Field(
        default=0.05, ge=0.0, le=1.0, description="Per-round link degradation of mobile nodes"
    )

    def hazards_for(self, node_id: str) -> dict[str, float]:
        merged = dict(self.global_hazards)
        merged.update(self.hazards.get(node_id, {}))
        return merged


def _default_truth() -> GroundTruthNet:
    from .scenarios import default_truth_net

    return default_truth_net()


def _default_metrics() -> list[MetricModel]:
    from .scenarios import default_metric_models

    return default_metric_models()


# =============================================================================
# RUNTIME RECORDS
# =============================================================================


@dataclass
class NodeState:
    """Mutable runtime state of one device."""

    spec: NodeSpec
    energy: float
    link_reliability: float
    isolated: bool = False
    uplink: str | None = None
    active_faults: set[str] = field(default_factory=set)
    sticky_faults: set[str] = field(default_factory=set)
    seq: int = 0
    seq_round: int = -1

    @property
    def id(self) -> str:
        return self.spec.id

    @property
    def crashed(self) -> bool:
        return "node_crash" in self.active_faults


@dataclass
class TaskExecution:
    """One task's current attempt on its host."""

    task_id: str
    host: str
    phase: Phase = Phase.ALPHA
    subtask_index: int = 1
    rounds_elapsed: int = 0
    attempt: int = 1
    deadline_missed: bool = False


@dataclass(frozen=True)
class Checkpoint:
    """Anchor <s, D, theta> written when a subtask completes."""

    task_id: str
    attempt: int
    s: str
    D: int
    theta: str
    round: int


class LogEntry(BaseModel):
    """One structured log record."""

    model_config = ConfigDict(frozen=True)

    node: str
    ts: int
    round: int
    event_id: str
    event_type: str
    severity: Severity = Severity.INFO
    task_id: str | None = None
    metrics: dict[str, float] = Field(default_factory=dict)
    attrs: dict[str, str] = Field(default_factory=dict)

    @property
    def key(self) -> tuple[str, int, str]:
        return (self.node, self.ts, self.event_id)

    def to_line(self) -> str:
        """Line-delimited export with a fixed field order."""
        record: dict[str, Any] = {
            "node": self.node,
            "ts": self.ts,
            "round": self.round,
            "event_id": self.event_id,
            "event_type": self.event_type,
            "severity": self.severity.value,
            "task_id": self.task_id,
            "metrics": {k: self.metrics[k] for k in sorted(self.metrics)},
            "attrs": {k: self.attrs[k] for k in sorted(self.attrs)},
        }
        return json.dumps(record, separators=(",", ":"))

    @classmethod
    def from_line(cls, line: str) -> LogEntry:
        return cls.model_validate_json(line)


class InjectedFault(BaseModel):
    node: str
    variable: str
    cause: str = Field(description="sampled or scripted")


class RoundTrace(BaseModel):
    """What happened in one simulated round."""

    round: int
    injected: list[InjectedFault] = Field(default_factory=list)
    truth: dict[str, dict[str, int]] = Field(
        default_factory=dict, description="Sampled truth state per active node"
    )
    entries: list[LogEntry] = Field(default_factory=list)
    checkpoints: list[str] = Field(default_factory=list)

    def to_line(self) -> str:
        record = {
            "round": self.round,
            "injected": [i.model_dump() for i in self.injected],
            "truth": {n: dict(sorted(s.items())) for n, s in sorted(self.truth.items())},
            "checkpoints": self.checkpoints,
        }
        return json.dumps(record, separators=(",", ":"))


__all__ = [
    "DEFAULT_SUBTASKS",
    "Tier",
    "TIER_PREFERENCE",
    "TIER_ENERGY_DRAIN",
    "ContextKind",
    "Phase",
    "Severity",
    "EventType",
    "NodeSpec",
    "LinkSpec",
    "TaskSpec",
    "TaskPlacement",
    "TruthVariable",
    "GroundTruthNet",
    "MetricModel",
    "FaultInjection",
    "ScenarioConfig",
    "NodeState",
    "TaskExecution",
    "Checkpoint",
    "LogEntry",
    "InjectedFault",
    "RoundTrace",
]
