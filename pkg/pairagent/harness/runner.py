"""
PAIR-Agent: Experiment Runner

Runs one seeded experiment (bootstrap phase, then N closed-loop rounds) and
persists every artifact needed to report on it or replay it:

    config.json              experiment config (without the output path)
    scenario.json            the resolved scenario
    bootstrap/               graph.txt, cpts.txt, bins.json learned before round 0
    rounds/round-NNNN/       graph.txt, cpts.txt, beliefs.jsonl, decision.json, features.tsv
    logs.jsonl               every log entry, ordered by (ts, node)
    trace.jsonl              simulator ground truth per round
    metrics.csv              one row per agent round
    errors.jsonl             stage failures (empty on success)

Artifacts carry no wall-clock data, so the same config produces the same bytes.
"""

from __future__ import annotations

import json
import logging
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import pandas as pd

from ..config import ExperimentConfig
from ..core.agent import ResilienceAgent, RoundOutcome, stage
from ..errors import ConfigError, StageError
from ..logs.features import BinSpec
from ..sim.continuum import ContinuumState, build_continuum, step_round
from ..sim.models import ScenarioConfig
from ..sim.scenarios import load_scenario

logger = logging.getLogger(__name__)

ARTIFACT_FILES = ("config.json", "scenario.json", "logs.jsonl", "trace.jsonl", "metrics.csv")
ROUNDS_DIR = "rounds"
BOOTSTRAP_DIR = "bootstrap"
REPORT_DIR = "report"

_METRIC_COLUMNS = (
    "round",
    "action",
    "action_type",
    "g_chosen",
    "g_do_nothing",
    "candidates",
    "free_energy_mean",
    "detected",
    "edges",
)


def round_dir(out: Path, index: int) -> Path:
    return out / ROUNDS_DIR / f"round-{index:04d}"


@dataclass
class RunResult:
    """Where an experiment wrote its artifacts and what it did."""

    out: Path
    rounds_completed: int = 0
    actions: list[str] = field(default_factory=list)
    failed_stage: str | None = None


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")


def _jsonl(records: list[dict[str, Any]]) -> str:
    return "".join(json.dumps(r, separators=(",", ":")) + "\n" for r in records)


def _prepare_out(out: Path, overwrite: bool) -> None:
    if out.exists() and any(out.iterdir()):
        if not overwrite:
            raise ConfigError(
                f"Output directory is not empty: {out}",
                field="out",
                hint="Choose another --out or pass --force to replace previous artifacts",
            )
        for name in (ROUNDS_DIR, BOOTSTRAP_DIR, REPORT_DIR):
            shutil.rmtree(out / name, ignore_errors=True)
        for name in (*ARTIFACT_FILES, "errors.jsonl"):
            (out / name).unlink(missing_ok=True)
    out.mkdir(parents=True, exist_ok=True)


def _bins_json(bins: BinSpec) -> str:
    record = {
        "metrics": bins.metrics,
        "thresholds": {m: bins.thresholds[m] for m in bins.metrics},
        "kinds": {m: bins.kinds[m].value for m in bins.metrics},
        "nominal": {m: bins.nominal.get(m, "low") for m in bins.metrics},
        "degenerate": sorted(bins.degenerate),
        "indicators": bins.indicators,
    }
    return json.dumps(record, indent=2) + "\n"


def _write_round(out: Path, index: int, outcome: RoundOutcome) -> None:
    target = round_dir(out, index)
    graph = outcome.graph
    _write(target / "graph.txt", graph.to_edge_list())
    _write(target / "cpts.txt", graph.to_cpt_dump())
    _write(
        target / "beliefs.jsonl",
        _jsonl([b.to_record(node, graph.variables) for node, b in sorted(outcome.beliefs.items())]),
    )
    _write(target / "decision.json", outcome.decision.model_dump_json(indent=2) + "\n")
    _write(target / "features.tsv", outcome.matrix.to_table())


def _metrics_row(outcome: RoundOutcome, detection_threshold: float) -> dict[str, Any]:
    decision = outcome.decision
    chosen = outcome.report.score(decision.chosen)
    noop = outcome.report.score("do-nothing")
    energies = list(decision.free_energy.values())
    detected = sum(
        q > detection_threshold for faults in decision.beliefs.values() for q in faults.values()
    )
    return {
        "round": outcome.round,
        "action": decision.chosen,
        "action_type": outcome.action.type.value,
        "g_chosen": chosen.total,
        "g_do_nothing": noop.total,
        "candidates": len(decision.candidates),
        "free_energy_mean": sum(energies) / len(energies) if energies else float("nan"),
        "detected": detected,
        "edges": len(outcome.graph.edges()),
    }


def _write_tail(
    out: Path,
    continuum: ContinuumState,
    rows: list[dict[str, Any]],
    errors: list[dict[str, Any]],
) -> None:
    _write(out / "logs.jsonl", "".join(e.to_line() + "\n" for e in continuum.entries()))
    _write(out / "trace.jsonl", "".join(t.to_line() + "\n" for t in continuum.traces))
    frame = pd.DataFrame(rows, columns=list(_METRIC_COLUMNS))
    _write(
        out / "metrics.csv",
        frame.to_csv(index=False, lineterminator="\n", float_format="%.12g"),
    )
    _write(out / "errors.jsonl", _jsonl(errors))


def run_experiment(
    config: ExperimentConfig,
    *,
    overwrite: bool = False,
    scenario: ScenarioConfig | None = None,
) -> RunResult:
    """
    Run the bootstrap phase and `config.rounds` agent rounds, writing artifacts to `config.out`.

    `scenario` replaces loading `config.scenario` (replay runs from the
    recorded scenario.json). On a stage failure the artifacts written so far
    are kept, the failure is appended to errors.jsonl and the StageError is
    re-raised.

    Raises:
        ConfigError: for an unknown scenario or a non-empty output directory
        StageError: if a round fails
    """
    if scenario is None:
        scenario = load_scenario(config.scenario)
    out = Path(config.out)
    _prepare_out(out, overwrite)
    _write(out / "config.json", config.model_dump_json(indent=2, exclude={"out"}) + "\n")
    _write(out / "scenario.json", scenario.model_dump_json(indent=2) + "\n")

    continuum = build_continuum(scenario)
    agent = ResilienceAgent(config.agent, seed=config.seed)
    result = RunResult(out=out)
    rows: list[dict[str, Any]] = []
    errors: list[dict[str, Any]] = []

    logger.info(
        "Running '%s' (seed %d): %d bootstrap + %d rounds%s",
        scenario.name,
        config.seed,
        config.agent.bootstrap_rounds,
        config.rounds,
        " [baseline]" if config.baseline else "",
    )
    try:
        for _ in range(config.agent.bootstrap_rounds):
            with stage("bootstrap", -1):
                step_round(continuum, scenario.truth, config.seed)
        graph = agent.bootstrap(continuum)
        assert agent.state.bins is not None
        _write(out / BOOTSTRAP_DIR / "graph.txt", graph.to_edge_list())
        _write(out / BOOTSTRAP_DIR / "cpts.txt", graph.to_cpt_dump())
        _write(out / BOOTSTRAP_DIR / "bins.json", _bins_json(agent.state.bins))
        continuum.mark_epoch()

        for index in range(config.rounds):
            with stage("simulate", index):
                step_round(continuum, scenario.truth, config.seed)
            outcome = agent.run_round(continuum, force_do_nothing=config.baseline)
            _write_round(out, index, outcome)
            rows.append(_metrics_row(outcome, config.agent.detection_threshold))
            result.actions.append(outcome.action.id)
            result.rounds_completed = index + 1
    except StageError as e:
        errors.append(
            {"round": e.round_index, "stage": e.stage, "code": e.code.value, "error": str(e.cause)}
        )
        result.failed_stage = e.stage
        raise
    finally:
        continuum.finalize()
        _write_tail(out, continuum, rows, errors)

    return result


def run_paired(
    config: ExperimentConfig, seeds: list[int]
) -> dict[int, tuple[RunResult, RunResult]]:
    """
    Agent and forced do-nothing baseline on the same scenario for each seed.

    Artifacts go to `<out>/seed-<s>/agent` and `<out>/seed-<s>/baseline`.
    """
    results: dict[int, tuple[RunResult, RunResult]] = {}
    for seed in seeds:
        base = Path(config.out) / f"seed-{seed}"
        agent_run = run_experiment(
            config.model_copy(update={"seed": seed, "out": base / "agent", "baseline": False}),
            overwrite=True,
        )
        baseline_run = run_experiment(
            config.model_copy(update={"seed": seed, "out": base / "baseline", "baseline": True}),
            overwrite=True,
        )
        results[seed] = (agent_run, baseline_run)
    return results


__all__ = [
    "ARTIFACT_FILES",
    "ROUNDS_DIR",
    "BOOTSTRAP_DIR",
    "REPORT_DIR",
    "RunResult",
    "round_dir",
    "run_experiment",
    "run_paired",
]
