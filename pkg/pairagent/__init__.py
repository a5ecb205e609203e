"""
PAIR-Agent: Active-Inference Resilience for the Computing Continuum

Each round the agent reads the continuum's logs incrementally, re-learns a
causal fault graph, minimizes variational free energy to find the hidden
faults behind what it observes, and applies the healing action with the
lowest expected free energy.

Example:
    from pairagent import build_experiment, run_experiment, report

    config = build_experiment(scenario="crash_injection", rounds=20, out="artifacts/crash")
    run_experiment(config)
    summary = report(config.out)
    print(summary.deadline_hit_rate, summary.mttr)
"""

__version__ = "0.3.0"

from .config import AgentSettings, ExperimentConfig, build_experiment, build_settings
from .core.agent import ResilienceAgent, RoundOutcome
from .core.models import Action, ActionType, DecisionRecord
from .errors import ConfigError, PairError, ReplayDivergence, StageError
from .harness import (
    MetricsSummary,
    ReplayVerdict,
    RunResult,
    replay,
    report,
    run_experiment,
    run_paired,
    summarize,
)
from .learning import CausalFaultGraph
from .sim import ScenarioConfig, build_continuum, load_scenario, step_round

__all__ = [
    # Version
    "__version__",
    # Config
    "AgentSettings",
    "ExperimentConfig",
    "build_experiment",
    "build_settings",
    # Agent
    "ResilienceAgent",
    "RoundOutcome",
    "Action",
    "ActionType",
    "DecisionRecord",
    "CausalFaultGraph",
    # Simulation
    "ScenarioConfig",
    "build_continuum",
    "load_scenario",
    "step_round",
    # Harness
    "MetricsSummary",
    "ReplayVerdict",
    "RunResult",
    "replay",
    "report",
    "run_experiment",
    "run_paired",
    "summarize",
    # Errors
    "PairError",
    "ConfigError",
    "StageError",
    "ReplayDivergence",
]
