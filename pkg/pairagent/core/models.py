"""
PAIR-Agent: Core Data Models

Records shared by the simulator, the planner and the harness:
- Action / ActionCatalog: healing interventions and their efficacy model
- ActionScore / DecisionRecord: what the planner weighed and chose each round
"""

from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, field_validator


class ActionType(str, Enum):
    """Healing actions available to the agent."""

    DO_NOTHING = "do-nothing"
    RESTART_NODE = "restart-node"
    REASSIGN_TASK = "reassign-task"
    REROUTE_LINK = "reroute-link"
    REDUCE_LOAD = "reduce-load"
    ISOLATE_NODE = "isolate-node"
    ESCALATE_HUMAN = "escalate-human"


class TargetKind(str, Enum):
    """What an action template is aimed at."""

    NODE = "node"
    TASK = "task"
    LINK = "link"


class Action(BaseModel):
    """
    A concrete healing action.

    `node` names the device whose fault beliefs the intervention map acts on;
    for task and link actions it is the current host / link endpoint.
    """

    model_config = ConfigDict(frozen=True)

    id: str = Field(description="Stable identifier, e.g. 'restart-node:edge-1'")
    type: ActionType
    target: str | None = Field(default=None, description="Node, task or link id")
    node: str | None = Field(default=None, description="Node whose beliefs are intervened on")
    destination: str | None = Field(default=None, description="Reassignment destination node")
    interventions: dict[str, float] = Field(
        default_factory=dict,
        description="Fault variable -> efficacy rho; Q(f=active|a) = (1 - rho) * Q(f=active)",
    )

    @field_validator("interventions")
    @classmethod
    def validate_interventions(cls, v: dict[str, float]) -> dict[str, float]:
        for name, rho in v.items():
            if not 0.0 <= rho <= 1.0:
                raise ValueError(f"efficacy for '{name}' must be in [0, 1], got {rho}")
        return dict(sorted(v.items()))

    @property
    def is_do_nothing(self) -> bool:
        return self.type == ActionType.DO_NOTHING

    @classmethod
    def do_nothing(cls) -> Action:
        return cls(id=ActionType.DO_NOTHING.value, type=ActionType.DO_NOTHING)

    @classmethod
    def build(
        cls,
        action_type: ActionType,
        target: str,
        node: str,
        interventions: dict[str, float],
        destination: str | None = None,
    ) -> Action:
        action_id = f"{action_type.value}:{target}"
        if destination is not None:
            action_id += f"->{destination}"
        return cls(
            id=action_id,
            type=action_type,
            target=target,
            node=node,
            destination=destination,
            interventions=interventions,
        )


class ActionTemplate(BaseModel):
    """Catalog entry: when an action type is offered and what it is predicted to do."""

    model_config = ConfigDict(extra="forbid")

    type: ActionType
    target_kind: TargetKind
    triggers: list[str] = Field(
        default_factory=list, description="Fault variables whose belief makes a target a suspect"
    )
    interventions: dict[str, float] = Field(
        default_factory=dict, description="Predicted efficacy rho per fault variable"
    )
    efficacy: float = Field(
        default=0.9, ge=0.0, le=1.0, description="Probability the simulator applies the fix"
    )
    cost: float = Field(default=0.0, ge=0.0, description="Additive G cost (only when enabled)")
    enabled: bool = True


def default_templates() -> list[ActionTemplate]:
    """Default action catalog."""
    return [
        ActionTemplate(
            type=ActionType.RESTART_NODE,
            target_kind=TargetKind.NODE,
            triggers=["node_crash"],
            interventions={"node_crash": 0.9},
            efficacy=0.9,
        ),
        ActionTemplate(
            type=ActionType.REASSIGN_TASK,
            target_kind=TargetKind.TASK,
            triggers=["task_failure", "resource_denied"],
            interventions={"task_failure": 0.9},
            efficacy=0.9,
        ),
        ActionTemplate(
            type=ActionType.REROUTE_LINK,
            target_kind=TargetKind.LINK,
            triggers=["comm_error", "data_inconsistency"],
            interventions={"comm_error": 0.9, "data_inconsistency": 0.5},
            efficacy=0.9,
        ),
        ActionTemplate(
            type=ActionType.REDUCE_LOAD,
            target_kind=TargetKind.NODE,
            triggers=["resource_denied"],
            interventions={"resource_denied": 0.8},
            efficacy=0.9,
        ),
        ActionTemplate(
            type=ActionType.ISOLATE_NODE,
            target_kind=TargetKind.NODE,
            triggers=["node_crash"],
            interventions={"node_crash": 0.6},
            efficacy=1.0,
        ),
        ActionTemplate(
            type=ActionType.ESCALATE_HUMAN,
            target_kind=TargetKind.NODE,
            triggers=["node_crash"],
            interventions={"node_crash": 0.5},
            efficacy=0.0,
        ),
    ]


class ActionCatalog(BaseModel):
    """The set of action templates a scenario offers."""

    model_config = ConfigDict(extra="forbid")

    templates: list[ActionTemplate] = Field(default_factory=default_templates)

    def template(self, action_type: ActionType) -> ActionTemplate | None:
        for t in self.templates:
            if t.type == action_type:
                return t
        return None

    def enabled(self) -> list[ActionTemplate]:
        return [t for t in self.templates if t.enabled]


class ActionScore(BaseModel):
    """Expected free energy decomposition for one candidate action."""

    action_id: str
    type: ActionType
    target: str | None = None
    risk: float
    ambiguity: float
    cost: float = 0.0
    total: float


class DecisionRecord(BaseModel):
    """Per-round decision record, persisted as one JSON line."""

    round: int
    candidates: list[ActionScore]
    chosen: str
    free_energy: dict[str, float] = Field(
        default_factory=dict, description="Attained F per node belief"
    )
    beliefs: dict[str, dict[str, float]] = Field(
        default_factory=dict, description="Q(f=active) per node and fault variable"
    )
    post_action_beliefs: dict[str, dict[str, float]] = Field(
        default_factory=dict, description="Predicted Q(f=active|a*) for the chosen action"
    )
    origins: dict[str, dict[str, str]] = Field(
        default_factory=dict, description="HW/SW origin label per detected fault"
    )


__all__ = [
    "ActionType",
    "TargetKind",
    "Action",
    "ActionTemplate",
    "ActionCatalog",
    "default_templates",
    "ActionScore",
    "DecisionRecord",
]
