"""
PAIR-Agent: Log Normalization

Turns collected log entries into the discrete feature matrix consumed by
structure learning and inference:
- fit_bins: quantile thresholds per metric, frozen after the bootstrap phase
- normalize: one row per (node, round); metrics binned, fault indicators set
  from event types, absent metrics left as the missing token
"""

from __future__ import annotations

import logging
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import pandas as pd

from ..sim.models import EventType, LogEntry, MetricModel
from .collect import LogDelta

logger = logging.getLogger(__name__)

MISSING = -1

# Event type -> fault indicator column.
FAULT_EVENTS: dict[str, str] = {
    EventType.CRASH.value: "node_crash",
    EventType.COMM_ERROR.value: "comm_error",
    EventType.RESOURCE_DENIED.value: "resource_denied",
    EventType.USER_ABORT.value: "user_abort",
    EventType.DATA_INCONSISTENCY.value: "data_inconsistency",
    EventType.TASK_FAIL.value: "task_failure",
    EventType.DEADLINE_MISS.value: "deadline_miss",
}
OTHER_INDICATOR = "other"
FAULT_INDICATORS: list[str] = [*FAULT_EVENTS.values(), OTHER_INDICATOR]

# Lifecycle and action events carry no fault signal.
NON_FAULT_EVENTS = frozenset(
    {
        EventType.HEARTBEAT.value,
        EventType.TASK_START.value,
        EventType.SUBTASK_COMPLETE.value,
        EventType.CHECKPOINT.value,
        EventType.TASK_COMPLETE.value,
        EventType.RESTART.value,
        EventType.ISOLATE.value,
        EventType.REASSIGN.value,
        EventType.REROUTE.value,
        EventType.REDUCE_LOAD.value,
        EventType.ESCALATION.value,
    }
)


class ColumnKind(str, Enum):
    """Feature matrix column kinds; the two context kinds form the HW/SW partition."""

    FAULT = "fault-indicator"
    HW = "hw-context"
    SW = "sw-context"


@dataclass(frozen=True)
class Column:
    id: str
    kind: ColumnKind
    arity: int
    degenerate: bool = False

    @property
    def is_fault(self) -> bool:
        return self.kind == ColumnKind.FAULT


@dataclass
class BinSpec:
    """Frozen discretization: ordered thresholds per metric and the indicator vocabulary."""

    metrics: list[str]
    thresholds: dict[str, list[float]]
    kinds: dict[str, ColumnKind]
    nominal: dict[str, str] = field(default_factory=dict)
    degenerate: set[str] = field(default_factory=set)
    indicators: list[str] = field(default_factory=lambda: list(FAULT_INDICATORS))

    def arity(self, metric: str) -> int:
        return 1 if metric in self.degenerate else len(self.thresholds[metric]) + 1

    def bin(self, metric: str, value: float) -> int:
        """Bin index; a value equal to a threshold falls in the upper bin."""
        if metric in self.degenerate:
            return 0
        return int(np.searchsorted(self.thresholds[metric], value, side="right"))

    def nominal_bin(self, metric: str) -> int:
        top = self.arity(metric) - 1
        where = self.nominal.get(metric, "low")
        if where == "high":
            return top
        if where == "mid":
            return top // 2
        return 0

    def schema(self) -> tuple[Column, ...]:
        columns = [
            Column(m, self.kinds[m], self.arity(m), degenerate=m in self.degenerate)
            for m in self.metrics
        ]
        columns.extend(Column(name, ColumnKind.FAULT, 2) for name in self.indicators)
        return tuple(columns)


def fit_bins(
    entries: Iterable[LogEntry],
    k: int,
    metric_models: Sequence[MetricModel] = (),
) -> BinSpec:
    """
    Fit K-quantile bins per metric (numpy linear interpolation, i/K levels).

    A metric that is constant, or has fewer than K samples, becomes a single-bin
    column flagged degenerate. Repeated thresholds are collapsed.
    """
    if k < 1:
        raise ValueError("k must be >= 1")

    samples: dict[str, list[float]] = defaultdict(list)
    for entry in entries:
        for name, value in entry.metrics.items():
            samples[name].append(value)

    known = [m.name for m in metric_models]
    metrics = known + sorted(set(samples) - set(known))
    kinds = {m.name: ColumnKind(m.kind.value) for m in metric_models}
    nominal = {m.name: m.nominal for m in metric_models}

    thresholds: dict[str, list[float]] = {}
    degenerate: set[str] = set()
    for name in metrics:
        kinds.setdefault(name, ColumnKind.HW)
        values = np.asarray(samples.get(name, []), dtype=float)
        if values.size < k or values.size == 0 or np.ptp(values) == 0.0:
            logger.warning("Metric '%s' is degenerate (%d samples)", name, values.size)
            degenerate.add(name)
            thresholds[name] = []
            continue
        levels = [i / k for i in range(1, k)]
        cuts = np.unique(np.quantile(values, levels)) if levels else np.empty(0)
        thresholds[name] = [float(c) for c in cuts]

    return BinSpec(
        metrics=metrics,
        thresholds=thresholds,
        kinds=kinds,
        nominal=nominal,
        degenerate=degenerate,
    )


@dataclass
class FeatureMatrix:
    """Discrete observations: rows are (node, round) samples, MISSING marks absent cells."""

    columns: tuple[Column, ...]
    values: np.ndarray
    keys: list[tuple[str, int]]
    round: int

    @property
    def n_rows(self) -> int:
        return int(self.values.shape[0])

    def column_index(self, name: str) -> int:
        for i, col in enumerate(self.columns):
            if col.id == name:
                return i
        raise KeyError(name)

    def row(self, index: int) -> dict[str, int]:
        return {col.id: int(self.values[index, j]) for j, col in enumerate(self.columns)}

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.values, columns=[c.id for c in self.columns])
        frame.insert(0, "round", [r for _, r in self.keys])
        frame.insert(0, "node", [n for n, _ in self.keys])
        return frame

    def to_table(self) -> str:
        """Tab-delimited export preceded by a `# schema` header of id:kind:arity triples."""
        header = "# schema " + " ".join(f"{c.id}:{c.kind.value}:{c.arity}" for c in self.columns)
        body = self.to_frame().to_csv(sep="\t", index=False, lineterminator="\n")
        return f"{header}\n{body}"


def normalize(delta: LogDelta, bins: BinSpec) -> FeatureMatrix:
    """
    Aggregate a delta into one row per (node, round).

    Metric cells hold the bin of the interval's mean value; indicator cells are 1
    iff a matching event occurred. Unknown event types set the `other` indicator.
    """
    columns = bins.schema()
    index = {c.id: j for j, c in enumerate(columns)}

    groups: dict[tuple[str, int], list[LogEntry]] = defaultdict(list)
    for entry in delta.all_entries():
        groups[(entry.node, entry.round)].append(entry)

    keys = sorted(groups)
    values = np.full((len(keys), len(columns)), MISSING, dtype=np.int64)
    for name in bins.indicators:
        values[:, index[name]] = 0

    unknown: set[str] = set()
    for i, key in enumerate(keys):
        readings: dict[str, list[float]] = defaultdict(list)
        for entry in groups[key]:
            for name, value in entry.metrics.items():
                readings[name].append(value)
            indicator = FAULT_EVENTS.get(entry.event_type)
            if indicator is None and entry.event_type not in NON_FAULT_EVENTS:
                unknown.add(entry.event_type)
                indicator = OTHER_INDICATOR
            if indicator is not None and indicator in index:
                values[i, index[indicator]] = 1
        for name, observed in readings.items():
            if name in index:
                values[i, index[name]] = bins.bin(name, float(np.mean(observed)))

    for event_type in sorted(unknown):
        logger.warning("Unknown event type '%s' recorded under '%s'", event_type, OTHER_INDICATOR)

    return FeatureMatrix(columns=columns, values=values, keys=keys, round=delta.round)


__all__ = [
    "MISSING",
    "FAULT_EVENTS",
    "FAULT_INDICATORS",
    "OTHER_INDICATOR",
    "NON_FAULT_EVENTS",
    "ColumnKind",
    "Column",
    "BinSpec",
    "fit_bins",
    "FeatureMatrix",
    "normalize",
]
