"""
Checkpoint-anchored incremental log collection.

Each node's anchor is the timestamp of the last entry already collected from it;
a collection returns exactly the entries after the anchor, once each.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

from ..sim.continuum import ContinuumState
from ..sim.models import LogEntry

# Anchor of a node nothing has been collected from yet.
NO_ANCHOR = -1


@dataclass
class LogDelta:
    """Per-node entries strictly after each node's anchor, labelled with a round."""

    round: int
    entries: dict[str, list[LogEntry]] = field(default_factory=dict)

    @property
    def is_empty(self) -> bool:
        return not any(self.entries.values())

    def all_entries(self) -> list[LogEntry]:
        return [e for node_id in sorted(self.entries) for e in self.entries[node_id]]

    def __len__(self) -> int:
        return sum(len(v) for v in self.entries.values())


def collect_incremental(
    state: ContinuumState,
    anchors: Mapping[str, int],
    unreachable: Iterable[str] = (),
    round_label: int | None = None,
) -> LogDelta:
    """
    Read every node's log buffer past its anchor. Pure: neither state nor anchors change.

    Unreachable nodes contribute an empty sub-delta; since their anchor is not
    advanced, their entries are picked up by a later collection. Duplicated
    (node, ts, event_id) keys are returned once.
    """
    skip = set(unreachable)
    label = state.round - 1 if round_label is None else round_label
    delta = LogDelta(round=label)
    for node_id in sorted(state.logs):
        picked: list[LogEntry] = []
        if node_id not in skip:
            anchor = anchors.get(node_id, NO_ANCHOR)
            seen: set[tuple[str, int, str]] = set()
            for entry in state.logs[node_id]:
                if entry.ts <= anchor or entry.key in seen:
                    continue
                seen.add(entry.key)
                picked.append(entry)
        delta.entries[node_id] = picked
    return delta


def advance_anchors(anchors: Mapping[str, int], delta: LogDelta) -> dict[str, int]:
    """New anchors after a delta has been consumed."""
    updated = dict(anchors)
    for node_id, entries in delta.entries.items():
        if entries:
            updated[node_id] = max(updated.get(node_id, NO_ANCHOR), max(e.ts for e in entries))
    return updated


__all__ = ["NO_ANCHOR", "LogDelta", "collect_incremental", "advance_anchors"]
