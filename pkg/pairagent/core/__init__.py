"""
PAIR-Agent: Core Module

Shared action and decision records. The closed-loop agent lives in
`pairagent.core.agent` and is imported from there, since the simulator itself
depends on the records defined here.
"""

from .models import (
    Action,
    ActionCatalog,
    ActionScore,
    ActionTemplate,
    ActionType,
    DecisionRecord,
    TargetKind,
    default_templates,
)

__all__ = [
    "Action",
    "ActionCatalog",
    "ActionScore",
    "ActionTemplate",
    "ActionType",
    "DecisionRecord",
    "TargetKind",
    "default_templates",
]
