"""
PAIR-Agent: Experiment Harness

Seeded experiment runs, metrics and plots from their artifacts, and
byte-level replay verification.
"""

from .metrics import (
    MetricsSummary,
    RoundMetrics,
    deadline_hit_rate,
    deadline_outcomes,
    detection_scores,
    report,
    skeleton_f1,
    summarize,
    time_to_recovery,
)
from .replay import ReplayVerdict, compare_trees, replay
from .runner import RunResult, round_dir, run_experiment, run_paired

__all__ = [
    "MetricsSummary",
    "RoundMetrics",
    "deadline_hit_rate",
    "deadline_outcomes",
    "detection_scores",
    "report",
    "skeleton_f1",
    "summarize",
    "time_to_recovery",
    "ReplayVerdict",
    "compare_trees",
    "replay",
    "RunResult",
    "round_dir",
    "run_experiment",
    "run_paired",
]
