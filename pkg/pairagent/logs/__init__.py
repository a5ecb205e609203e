"""
PAIR-Agent: Log Pipeline

Incremental collection, discretization and windowing of continuum logs.
"""

from .collect import NO_ANCHOR, LogDelta, advance_anchors, collect_incremental
from .evidence import EvidenceBatch, merge_rounds
from .features import (
    FAULT_EVENTS,
    FAULT_INDICATORS,
    MISSING,
    OTHER_INDICATOR,
    BinSpec,
    Column,
    ColumnKind,
    FeatureMatrix,
    fit_bins,
    normalize,
)

__all__ = [
    "NO_ANCHOR",
    "LogDelta",
    "collect_incremental",
    "advance_anchors",
    "EvidenceBatch",
    "merge_rounds",
    "FAULT_EVENTS",
    "FAULT_INDICATORS",
    "MISSING",
    "OTHER_INDICATOR",
    "BinSpec",
    "Column",
    "ColumnKind",
    "FeatureMatrix",
    "fit_bins",
    "normalize",
]
