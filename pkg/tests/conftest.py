"""Shared fixtures: a one-fault network with known posteriors and a small continuum."""

import numpy as np
import pytest

from pairagent.config import AgentSettings
from pairagent.learning.graph import CausalFaultGraph
from pairagent.logs.features import Column, ColumnKind
from pairagent.sim.models import ScenarioConfig
from pairagent.sim.scenarios import load_scenario


@pytest.fixture
def fault_columns():
    return (
        Column("x", ColumnKind.HW, 2),
        Column("f", ColumnKind.FAULT, 2),
    )


@pytest.fixture
def single_fault_graph(fault_columns):
    """f -> x with P(f=1) = 0.2 and x a noisy copy of f (0.9 on the diagonal)."""
    graph = CausalFaultGraph.from_parents(fault_columns, {"x": ["f"]})
    graph.cpts = {
        "f": np.array([[0.8, 0.2]]),
        "x": np.array([[0.9, 0.1], [0.1, 0.9]]),
    }
    return graph


@pytest.fixture
def settings():
    """Small, fast hyperparameters for closed-loop tests."""
    return AgentSettings(
        bootstrap_rounds=8,
        restarts=1,
        max_parents=2,
        window=20,
        max_sweeps=50,
    )


@pytest.fixture
def small_scenario():
    """Three compute nodes, one backup uplink, one task, no random faults."""
    return ScenarioConfig.model_validate(
        {
            "name": "small",
            "seed": 3,
            "nodes": [
                {"id": "cloud-1", "tier": "cloud", "capacity": 50.0},
                {"id": "edge-1", "tier": "edge", "capacity": 10.0},
                {"id": "fog-1", "tier": "fog", "capacity": 20.0},
                {"id": "sensor-1", "tier": "sensor"},
            ],
            "links": [
                {"id": "l-edge-1", "source": "edge-1", "target": "fog-1"},
                {"id": "l-edge-1-b", "source": "edge-1", "target": "cloud-1", "backup": True},
                {"id": "l-fog-1", "source": "fog-1", "target": "cloud-1"},
            ],
            "tasks": [
                {
                    "task": {"id": "train-a", "workload": 4.0, "deadline": 8},
                    "host": "edge-1",
                },
            ],
            "global_hazards": {
                "low_battery": 0.0,
                "overheat": 0.0,
                "link_degraded": 0.0,
                "node_crash": 0.0,
                "comm_error": 0.0,
                "resource_denied": 0.0,
                "user_abort": 0.0,
                "data_inconsistency": 0.0,
                "task_failure": 0.0,
            },
        }
    )


@pytest.fixture
def crash_scenario():
    return load_scenario("crash_injection")
