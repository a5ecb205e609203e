"""
Continuum scenarios.

Default hidden fault-cause network, default metric models, and lookup of the
committed example scenarios shipped as package data under `pairagent/scenarios/`.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from ..errors import ConfigError, format_validation_error
from .models import ContextKind, GroundTruthNet, MetricModel, ScenarioConfig, TruthVariable

# Task-scoped fault events are only emitted on nodes hosting a running execution.
TASK_SCOPED_VARIABLES = frozenset({"task_failure", "user_abort"})


def default_truth_net() -> GroundTruthNet:
    """
    Hidden causes (battery, heat, link quality) drive observable fault events.

    low_battery, overheat and link_degraded never surface as events; they reach
    the logs only through metric shifts.
    """
    return GroundTruthNet(
        variables=[
            TruthVariable(name="low_battery", cpt=[0.01]),
            TruthVariable(name="overheat", cpt=[0.02], persistent=True, recovery_rate=0.5),
            TruthVariable(name="link_degraded", cpt=[0.02], persistent=True, recovery_rate=0.5),
            TruthVariable(
                name="node_crash",
                parents=["low_battery", "overheat"],
                cpt=[0.02, 0.3, 0.3, 0.6],
                event="crash",
                persistent=True,
                recovery_rate=0.5,
            ),
            TruthVariable(
                name="comm_error", parents=["link_degraded"], cpt=[0.01, 0.7], event="comm-error"
            ),
            TruthVariable(
                name="resource_denied",
                parents=["low_battery"],
                cpt=[0.02, 0.3],
                event="resource-denied",
            ),
            TruthVariable(name="user_abort", cpt=[0.005], event="user-abort"),
            TruthVariable(
                name="data_inconsistency",
                parents=["comm_error"],
                cpt=[0.005, 0.3],
                event="data-inconsistency",
            ),
            TruthVariable(
                name="task_failure",
                parents=["node_crash", "resource_denied"],
                cpt=[0.01, 0.4, 0.9, 0.95],
                event="task-fail",
            ),
        ]
    )


def default_metric_models() -> list[MetricModel]:
    """Heartbeat metrics; hardware metrics first, then software."""
    return [
        MetricModel(
            name="temperature",
            kind=ContextKind.HW,
            mean=45.0,
            std=3.0,
            effects={"overheat": 25.0},
            nominal="low",
        ),
        MetricModel(
            name="power",
            kind=ContextKind.HW,
            mean=50.0,
            std=4.0,
            effects={"low_battery": -25.0, "node_crash": -30.0},
            nominal="high",
        ),
        MetricModel(
            name="link_quality",
            kind=ContextKind.HW,
            mean=95.0,
            std=2.0,
            effects={"link_degraded": -40.0, "node_crash": -60.0},
            nominal="high",
        ),
        MetricModel(
            name="exec_time",
            kind=ContextKind.SW,
            mean=10.0,
            std=1.5,
            effects={"resource_denied": 8.0, "node_crash": 50.0},
            nominal="low",
        ),
        MetricModel(
            name="queue_len",
            kind=ContextKind.SW,
            mean=5.0,
            std=1.5,
            effects={"resource_denied": 6.0, "node_crash": 30.0},
            nominal="low",
        ),
    ]


def _scenario_dir() -> Any:
    return resources.files("pairagent").joinpath("scenarios")


def list_scenarios() -> list[str]:
    """Names of the committed example scenarios."""
    return sorted(
        entry.name.removesuffix(".json")
        for entry in _scenario_dir().iterdir()
        if entry.name.endswith(".json")
    )


def parse_scenario(text: str, source: str) -> ScenarioConfig:
    """Validate scenario JSON text, raising ConfigError naming the offending field."""
    try:
        return ScenarioConfig.model_validate_json(text)
    except ValidationError as e:
        raise format_validation_error(e, f"scenario {source}") from e


def get_scenario_by_name(name: str) -> ScenarioConfig | None:
    """Get a committed scenario by name."""
    entry = _scenario_dir().joinpath(f"{name}.json")
    if not entry.is_file():
        return None
    return parse_scenario(entry.read_text(encoding="utf-8"), name)


def load_scenario(ref: str | Path) -> ScenarioConfig:
    """
    Resolve a scenario reference: an existing file path, or a committed scenario name.

    Raises:
        ConfigError: if the reference resolves to nothing or fails validation
    """
    path = Path(ref)
    if path.suffix == ".json" or path.is_file():
        if not path.is_file():
            raise ConfigError(f"Scenario file not found: {path}", field="scenario")
        return parse_scenario(path.read_text(encoding="utf-8"), str(path))

    scenario = get_scenario_by_name(str(ref))
    if scenario is None:
        raise ConfigError(
            f"Unknown scenario '{ref}'",
            field="scenario",
            hint=f"Committed scenarios: {', '.join(list_scenarios())}",
        )
    return scenario


__all__ = [
    "TASK_SCOPED_VARIABLES",
    "default_truth_net",
    "default_metric_models",
    "list_scenarios",
    "parse_scenario",
    "get_scenario_by_name",
    "load_scenario",
]
