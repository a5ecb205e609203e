"""
Evidence window.

Accumulates per-round feature matrices into the batch structure learning runs
on, keeping only the most recent W rounds of rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SchemaMismatchError
from .features import Column, FeatureMatrix


@dataclass
class EvidenceBatch:
    columns: tuple[Column, ...]
    values: np.ndarray
    keys: list[tuple[str, int]]

    @classmethod
    def from_matrix(cls, matrix: FeatureMatrix) -> EvidenceBatch:
        return cls(columns=matrix.columns, values=matrix.values.copy(), keys=list(matrix.keys))

    @property
    def n_rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def rounds(self) -> list[int]:
        return sorted({r for _, r in self.keys})


def merge_rounds(
    history: EvidenceBatch | None, new: FeatureMatrix, window: int | None
) -> EvidenceBatch:
    """
    Append a round of rows and keep the rows of the most recent `window` rounds.

    `window=None` keeps everything.

    Raises:
        SchemaMismatchError: if the column schema differs from the history's
    """
    if window is not None and window < 1:
        raise ValueError("window must be >= 1")
    if history is None:
        merged = EvidenceBatch.from_matrix(new)
    else:
        if history.columns != new.columns:
            raise SchemaMismatchError(
                "Feature schema changed after bootstrap",
                details={
                    "expected": [c.id for c in history.columns],
                    "got": [c.id for c in new.columns],
                },
            )
        merged = EvidenceBatch(
            columns=history.columns,
            values=np.vstack([history.values, new.values]),
            keys=[*history.keys, *new.keys],
        )

    if window is None or merged.n_rows == 0:
        return merged
    newest = max(r for _, r in merged.keys)
    keep = np.array([r > newest - window for _, r in merged.keys], dtype=bool)
    return EvidenceBatch(
        columns=merged.columns,
        values=merged.values[keep],
        keys=[k for k, flag in zip(merged.keys, keep) if flag],
    )


__all__ = ["EvidenceBatch", "merge_rounds"]
