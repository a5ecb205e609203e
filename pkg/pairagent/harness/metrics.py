"""
PAIR-Agent: Resilience Metrics

Recomputes an experiment's outcome from its artifacts alone:
- deadline-hit rate over task attempts of the agent phase (from raw logs)
- mean time to recovery from injected faults (ground truth and belief both cleared)
- actions by type and the free-energy trace
- fault-detection precision/recall against the simulator's ground truth
- skeleton F1 of the learned graph against the hidden fault-cause network

and renders the static report plots.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from collections.abc import Iterable
from pathlib import Path
from typing import Any

from matplotlib.figure import Figure
from pydantic import BaseModel, Field

from ..config import ExperimentConfig, load_experiment
from ..core.models import DecisionRecord
from ..errors import MissingArtifactsError
from ..learning.graph import CausalFaultGraph
from ..logs.features import FAULT_EVENTS, ColumnKind
from ..sim.models import EventType, LogEntry, ScenarioConfig
from .runner import REPORT_DIR, round_dir

logger = logging.getLogger(__name__)

ROUND_FILES = ("graph.txt", "cpts.txt", "beliefs.jsonl", "decision.json", "features.tsv")

# Belief below which a fault counts as cleared.
CLEARED_BELIEF = 0.2

# Events that end a task attempt.
_ATTEMPT_CLOSERS = frozenset({EventType.TASK_COMPLETE.value, EventType.USER_ABORT.value})


class RoundMetrics(BaseModel):
    round: int
    action: str
    free_energy_mean: float | None = None
    detected: int = 0
    deadline_hit_rate: float | None = Field(
        default=None, description="Cumulative hit rate over attempts resolved so far"
    )


class MetricsSummary(BaseModel):
    """Per-round and aggregate resilience metrics of one experiment."""

    scenario: str
    seed: int
    baseline: bool
    rounds: int
    deadline_hits: int = 0
    deadline_misses: int = 0
    deadline_hit_rate: float | None = None
    baseline_deadline_hit_rate: float | None = None
    injections: int = 0
    mttr: float | None = Field(default=None, description="Mean rounds from injection to recovery")
    mttr_censored: int = Field(default=0, description="Injections never recovered within the run")
    actions_by_type: dict[str, int] = Field(default_factory=dict)
    free_energy: list[float | None] = Field(default_factory=list)
    precision: float | None = None
    recall: float | None = None
    skeleton_f1: float | None = None
    per_round: list[RoundMetrics] = Field(default_factory=list)


# =============================================================================
# LOADING
# =============================================================================


def _read_jsonl(path: Path) -> list[dict[str, Any]]:
    if not path.is_file():
        return []
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line]


def load_decisions(artifacts: Path, rounds: int) -> list[DecisionRecord]:
    """
    Decision records of every round.

    Raises:
        MissingArtifactsError: listing each round whose files are incomplete
    """
    missing = [
        i
        for i in range(rounds)
        if not all((round_dir(artifacts, i) / name).is_file() for name in ROUND_FILES)
    ]
    if missing:
        raise MissingArtifactsError(
            f"{len(missing)} of {rounds} rounds have incomplete artifacts in {artifacts}",
            missing_rounds=missing,
        )
    return [
        DecisionRecord.model_validate_json(
            (round_dir(artifacts, i) / "decision.json").read_text(encoding="utf-8")
        )
        for i in range(rounds)
    ]


def load_config(artifacts: Path) -> ExperimentConfig:
    if not artifacts.is_dir() or not any(artifacts.iterdir()):
        raise MissingArtifactsError(f"No artifacts found in {artifacts}")
    if not (artifacts / "config.json").is_file():
        raise MissingArtifactsError(f"config.json is missing from {artifacts}")
    return load_experiment(artifacts / "config.json")


def load_entries(artifacts: Path) -> list[LogEntry]:
    return [LogEntry.model_validate(r) for r in _read_jsonl(artifacts / "logs.jsonl")]


# =============================================================================
# METRICS
# =============================================================================


def deadline_outcomes(entries: Iterable[LogEntry], epoch: int) -> tuple[int, int]:
    """
    (hits, misses) over task attempts still open at round `epoch` or started later.

    An attempt is a hit when it completes with its deadline met, a miss once
    its deadline-miss event is logged. A miss logged before `epoch` still
    counts while the attempt is open at `epoch`; attempts that completed or
    aborted before `epoch` are ignored.
    """
    hits: set[tuple[str, str]] = set()
    misses: set[tuple[str, str]] = set()
    closed: set[tuple[str, str]] = set()
    for e in entries:
        if e.task_id is None or "attempt" not in e.attrs:
            continue
        key = (e.task_id, e.attrs["attempt"])
        if e.event_type == EventType.DEADLINE_MISS.value:
            misses.add(key)
        elif e.event_type in _ATTEMPT_CLOSERS and e.round < epoch:
            closed.add(key)
        elif e.event_type == EventType.TASK_COMPLETE.value:
            if e.attrs.get("deadline_met") == "true":
                hits.add(key)
    misses -= closed
    hits -= misses
    return len(hits), len(misses)


def deadline_hit_rate(entries: Iterable[LogEntry], epoch: int) -> float | None:
    """Fraction of resolved attempts that met their deadline; None if none resolved."""
    hits, misses = deadline_outcomes(entries, epoch)
    total = hits + misses
    return hits / total if total else None


def time_to_recovery(
    traces: list[dict[str, Any]],
    decisions: list[DecisionRecord],
    epoch: int,
) -> tuple[list[int], int]:
    """
    Rounds from each agent-phase injection of a tracked fault until both the
    true fault and the agent's belief in it have cleared.

    Returns the recovery times (censored ones counted up to the end of the
    run) and how many were censored. An isolated node counts as recovered.
    """
    tracked = {f for d in decisions for beliefs in d.beliefs.values() for f in beliefs}
    by_round = {t["round"]: t for t in traces}
    times: list[int] = []
    censored = 0
    for index in range(len(decisions)):
        trace = by_round.get(epoch + index)
        if trace is None:
            continue
        for injected in trace["injected"]:
            node, variable = injected["node"], injected["variable"]
            if variable not in tracked:
                continue
            recovered_at = None
            for j in range(index, len(decisions)):
                truth = by_round.get(epoch + j, {}).get("truth", {})
                active = truth.get(node, {}).get(variable, 0)
                belief = decisions[j].beliefs.get(node, {}).get(variable, 0.0)
                if not active and belief < CLEARED_BELIEF:
                    recovered_at = j
                    break
            if recovered_at is None:
                censored += 1
                times.append(len(decisions) - index)
            else:
                times.append(recovered_at - index)
    return times, censored


def detection_scores(
    traces: list[dict[str, Any]],
    decisions: list[DecisionRecord],
    epoch: int,
    threshold: float,
) -> tuple[float | None, float | None]:
    """Precision and recall of Q(f=active) > threshold against the sampled truth."""
    by_round = {t["round"]: t for t in traces}
    tp = fp = fn = 0
    for index, decision in enumerate(decisions):
        truth = by_round.get(epoch + index, {}).get("truth", {})
        for node, beliefs in decision.beliefs.items():
            for variable, q in beliefs.items():
                if node not in truth or variable not in truth[node]:
                    continue
                detected = q > threshold
                actual = bool(truth[node][variable])
                tp += detected and actual
                fp += detected and not actual
                fn += actual and not detected
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    return precision, recall


def skeleton_f1(scenario: ScenarioConfig, graph: CausalFaultGraph) -> float | None:
    """
    F1 between undirected edge sets: the truth net restricted to variables that
    surface as fault indicators vs the learned graph over fault-indicator columns.
    """
    surfaced = {
        v.name: FAULT_EVENTS[v.event]
        for v in scenario.truth.variables
        if v.event is not None and v.event in FAULT_EVENTS
    }
    truth = {
        frozenset((surfaced[u], surfaced[v]))
        for u, v in scenario.truth.edges()
        if u in surfaced and v in surfaced
    }
    faults = {v for v in graph.variables if graph.kind_of(v) == ColumnKind.FAULT}
    learned = {frozenset((u, v)) for u, v in graph.edges() if u in faults and v in faults}
    if not truth and not learned:
        return None
    tp = len(truth & learned)
    if tp == 0:
        return 0.0
    precision = tp / len(learned)
    recall = tp / len(truth)
    return 2 * precision * recall / (precision + recall)


def _cumulative_hit_rates(entries: list[LogEntry], epoch: int, rounds: int) -> list[float | None]:
    tasks = [e for e in entries if e.task_id is not None]
    rates: list[float | None] = []
    for index in range(rounds):
        window = [e for e in tasks if e.round <= epoch + index]
        rates.append(deadline_hit_rate(window, epoch))
    return rates


# =============================================================================
# REPORT
# =============================================================================


def summarize(artifacts: Path, baseline: Path | None = None) -> MetricsSummary:
    """
    Compute the MetricsSummary of an artifact directory.

    Raises:
        MissingArtifactsError: if the directory is empty or rounds are incomplete
    """
    config = load_config(artifacts)
    epoch = config.agent.bootstrap_rounds
    decisions = load_decisions(artifacts, config.rounds)
    entries = load_entries(artifacts)
    traces = _read_jsonl(artifacts / "trace.jsonl")
    scenario = ScenarioConfig.model_validate_json(
        (artifacts / "scenario.json").read_text(encoding="utf-8")
    )

    hits, misses = deadline_outcomes(entries, epoch)
    times, censored = time_to_recovery(traces, decisions, epoch)
    precision, recall = detection_scores(
        traces, decisions, epoch, config.agent.detection_threshold
    )
    last_graph = CausalFaultGraph.from_edge_list(
        (round_dir(artifacts, config.rounds - 1) / "graph.txt").read_text(encoding="utf-8")
    )

    free_energy: list[float | None] = []
    per_round: list[RoundMetrics] = []
    cumulative = _cumulative_hit_rates(entries, epoch, config.rounds)
    for index, d in enumerate(decisions):
        energies = list(d.free_energy.values())
        mean = sum(energies) / len(energies) if energies else None
        free_energy.append(mean)
        per_round.append(
            RoundMetrics(
                round=d.round,
                action=d.chosen,
                free_energy_mean=mean,
                detected=sum(
                    q > config.agent.detection_threshold
                    for beliefs in d.beliefs.values()
                    for q in beliefs.values()
                ),
                deadline_hit_rate=cumulative[index],
            )
        )

    actions = Counter(
        next(c.type.value for c in d.candidates if c.action_id == d.chosen) for d in decisions
    )

    baseline_rate = None
    if baseline is not None:
        baseline_config = load_config(baseline)
        baseline_rate = deadline_hit_rate(
            load_entries(baseline), baseline_config.agent.bootstrap_rounds
        )

    return MetricsSummary(
        scenario=scenario.name,
        seed=config.seed,
        baseline=config.baseline,
        rounds=config.rounds,
        deadline_hits=hits,
        deadline_misses=misses,
        deadline_hit_rate=hits / (hits + misses) if hits + misses else None,
        baseline_deadline_hit_rate=baseline_rate,
        injections=len(times),
        mttr=sum(times) / len(times) if times else None,
        mttr_censored=censored,
        actions_by_type=dict(sorted(actions.items())),
        free_energy=free_energy,
        precision=precision,
        recall=recall,
        skeleton_f1=skeleton_f1(scenario, last_graph),
        per_round=per_round,
    )


def _plot_free_energy(summary: MetricsSummary, path: Path) -> None:
    fig = Figure(figsize=(7, 3.5))
    ax = fig.subplots()
    rounds = [r.round for r in summary.per_round]
    values = [float("nan") if v is None else v for v in summary.free_energy]
    ax.plot(rounds, values, marker=".", color="tab:blue")
    ax.set_xlabel("round")
    ax.set_ylabel("mean free energy (nats)")
    ax.set_title(f"Free energy: {summary.scenario}")
    fig.tight_layout()
    fig.savefig(path)


def _plot_detection(
    summary: MetricsSummary, traces: list[dict[str, Any]], epoch: int, path: Path
) -> None:
    fig = Figure(figsize=(7, 3.5))
    ax = fig.subplots()
    rounds = [r.round for r in summary.per_round]
    ax.step(rounds, [r.detected for r in summary.per_round], where="mid", label="detected faults")
    injected = [
        t["round"] - epoch
        for t in traces
        if t["round"] >= epoch and any(i["cause"] == "scripted" for i in t["injected"])
    ]
    for x in injected:
        ax.axvline(x, color="tab:red", linestyle="--", linewidth=0.8)
    acted = [r.round for r in summary.per_round if r.action != "do-nothing"]
    ax.scatter(acted, [0] * len(acted), marker="^", color="tab:green", label="healing action")
    ax.set_xlabel("round")
    ax.set_ylabel("faults above threshold")
    ax.set_title("Detection timeline (dashed: scripted injections)")
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path)


def _plot_deadline(summary: MetricsSummary, path: Path) -> None:
    fig = Figure(figsize=(7, 3.5))
    ax = fig.subplots()
    rounds = [r.round for r in summary.per_round]
    rates = [
        float("nan") if r.deadline_hit_rate is None else r.deadline_hit_rate
        for r in summary.per_round
    ]
    ax.plot(rounds, rates, label="agent" if not summary.baseline else "baseline")
    if summary.baseline_deadline_hit_rate is not None:
        ax.axhline(
            summary.baseline_deadline_hit_rate,
            color="tab:gray",
            linestyle=":",
            label="baseline (final)",
        )
    ax.set_ylim(0.0, 1.05)
    ax.set_xlabel("round")
    ax.set_ylabel("deadline-hit rate")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path)


def report(artifacts: Path, baseline: Path | None = None) -> MetricsSummary:
    """
    Summarize an experiment and write `report/summary.json` plus the
    free_energy.png, detection.png and deadline.png plots.
    """
    summary = summarize(artifacts, baseline)
    out = artifacts / REPORT_DIR
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.json").write_text(summary.model_dump_json(indent=2) + "\n", encoding="utf-8")

    config = load_config(artifacts)
    traces = _read_jsonl(artifacts / "trace.jsonl")
    _plot_free_energy(summary, out / "free_energy.png")
    _plot_detection(summary, traces, config.agent.bootstrap_rounds, out / "detection.png")
    _plot_deadline(summary, out / "deadline.png")
    logger.info("Report written to %s", out)
    return summary


__all__ = [
    "CLEARED_BELIEF",
    "RoundMetrics",
    "MetricsSummary",
    "load_decisions",
    "load_config",
    "load_entries",
    "deadline_outcomes",
    "deadline_hit_rate",
    "time_to_recovery",
    "detection_scores",
    "skeleton_f1",
    "summarize",
    "report",
]
