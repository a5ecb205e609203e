"""
PAIR-Agent: Continuum Simulation

Seeded simulator of a layered computing continuum that generates the logs the
agent learns from and absorbs the healing actions it selects.
"""

from .continuum import (
    TS_STRIDE,
    ContinuumState,
    apply_intervention,
    build_continuum,
    pick_destination,
    step_round,
)
from .models import (
    Checkpoint,
    ContextKind,
    EventType,
    FaultInjection,
    GroundTruthNet,
    LinkSpec,
    LogEntry,
    MetricModel,
    NodeSpec,
    Phase,
    RoundTrace,
    ScenarioConfig,
    TaskExecution,
    TaskPlacement,
    TaskSpec,
    Tier,
    TruthVariable,
)
from .scenarios import (
    default_metric_models,
    default_truth_net,
    get_scenario_by_name,
    list_scenarios,
    load_scenario,
)

__all__ = [
    "TS_STRIDE",
    "ContinuumState",
    "build_continuum",
    "step_round",
    "apply_intervention",
    "pick_destination",
    "Checkpoint",
    "ContextKind",
    "EventType",
    "FaultInjection",
    "GroundTruthNet",
    "LinkSpec",
    "LogEntry",
    "MetricModel",
    "NodeSpec",
    "Phase",
    "RoundTrace",
    "ScenarioConfig",
    "TaskExecution",
    "TaskPlacement",
    "TaskSpec",
    "Tier",
    "TruthVariable",
    "default_metric_models",
    "default_truth_net",
    "get_scenario_by_name",
    "list_scenarios",
    "load_scenario",
]
