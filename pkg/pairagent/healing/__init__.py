"""
PAIR-Agent: Healing

Candidate healing actions and the expected-free-energy planner that chooses
among them.
"""

from ..core.models import Action, ActionCatalog, ActionScore, ActionTemplate, ActionType
from .planner import (
    EFEReport,
    PreferenceModel,
    context_variables,
    enumerate_actions,
    expected_free_energy,
    predict_beliefs,
    predictive_features,
    score_actions,
    select_action,
)

__all__ = [
    "Action",
    "ActionCatalog",
    "ActionScore",
    "ActionTemplate",
    "ActionType",
    "EFEReport",
    "PreferenceModel",
    "context_variables",
    "enumerate_actions",
    "expected_free_energy",
    "predict_beliefs",
    "predictive_features",
    "score_actions",
    "select_action",
]
