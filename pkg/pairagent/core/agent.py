"""
PAIR-Agent: Resilience Agent

The ResilienceAgent closes the perception-inference-action-update loop over a
simulated continuum:
1. Perception - collect logs past each node's checkpoint anchor and discretize them
2. Update - merge the round into the evidence window and relearn the fault graph
3. Inference - minimize variational free energy per node, attribute HW/SW origin
4. Action - score candidate healing actions by expected free energy and apply the best

Agent state is only committed once every stage of a round has succeeded, so a
failed round leaves anchors, evidence and graph exactly as they were.
"""

from __future__ import annotations

import logging
from collections.abc import Collection, Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field

from ..config import AgentSettings
from ..errors import StageError
from ..healing.planner import (
    EFEReport,
    PreferenceModel,
    enumerate_actions,
    predict_beliefs,
    score_actions,
    select_action,
)
from ..inference.attribution import attribute_origin
from ..inference.problem import Belief, InferenceProblem
from ..inference.variational import minimize_free_energy
from ..learning.graph import CausalFaultGraph
from ..learning.search import SearchLimits, fit_cpts, hill_climb
from ..logs.collect import LogDelta, advance_anchors, collect_incremental
from ..logs.evidence import EvidenceBatch, merge_rounds
from ..logs.features import MISSING, BinSpec, ColumnKind, FeatureMatrix, fit_bins, normalize
from ..sim.continuum import ContinuumState, apply_intervention
from ..utils.seeding import derive_seed
from .models import Action, ActionType, DecisionRecord

logger = logging.getLogger(__name__)

Edge = tuple[str, str]


@dataclass
class AgentState:
    """Everything the agent carries from one round to the next."""

    anchors: dict[str, int] = field(default_factory=dict)
    bins: BinSpec | None = None
    preferences: PreferenceModel | None = None
    evidence: EvidenceBatch | None = None
    graph: CausalFaultGraph | None = None
    beliefs: dict[str, Belief] = field(default_factory=dict)
    restart_attempts: dict[str, int] = field(default_factory=dict)
    escalated: set[str] = field(default_factory=set)

    @property
    def bootstrapped(self) -> bool:
        return self.bins is not None and self.graph is not None


@dataclass
class RoundOutcome:
    """Products of one agent round, in the form the harness persists them."""

    round: int
    action: Action
    report: EFEReport
    decision: DecisionRecord
    matrix: FeatureMatrix
    graph: CausalFaultGraph
    beliefs: dict[str, Belief]


@contextmanager
def stage(name: str, round_index: int) -> Iterator[None]:
    """Wrap any failure inside the block in a StageError naming `name`."""
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        logger.warning("Stage '%s' failed in round %d: %s", name, round_index, e)
        raise StageError(name, round_index, e) from e


def generative_blacklist(graph_columns: Collection[tuple[str, ColumnKind]]) -> list[Edge]:
    """Every context -> fault-indicator edge, so learned graphs point from faults to symptoms."""
    context = [c for c, kind in graph_columns if kind != ColumnKind.FAULT]
    faults = [c for c, kind in graph_columns if kind == ColumnKind.FAULT]
    return [(c, f) for c in context for f in faults]


def latest_rows(matrix: FeatureMatrix) -> dict[str, int]:
    """Row index of each node's most recent (node, round) sample."""
    rows: dict[str, int] = {}
    for i, (node, round_label) in enumerate(matrix.keys):
        if node not in rows or matrix.keys[rows[node]][1] < round_label:
            rows[node] = i
    return rows


def context_evidence(matrix: FeatureMatrix, row: int) -> dict[str, int]:
    """Observed context cells of one row; fault indicators and missing cells stay latent."""
    return {
        col.id: int(matrix.values[row, j])
        for j, col in enumerate(matrix.columns)
        if not col.is_fault and matrix.values[row, j] != MISSING
    }


class ResilienceAgent:
    """
    Active-inference healing agent.

    Example:
        agent = ResilienceAgent(settings, seed=7)
        agent.bootstrap(continuum)
        outcome = agent.run_round(continuum)
        print(outcome.action.id)
    """

    def __init__(
        self,
        settings: AgentSettings,
        seed: int = 0,
        *,
        blacklist: Collection[Edge] | None = None,
    ):
        self.settings = settings
        self.seed = seed
        self.blacklist = blacklist
        self.state = AgentState()
        self.limits = SearchLimits(
            max_parents=settings.max_parents,
            restarts=settings.restarts,
            epsilon=settings.search_epsilon,
            perturbation_moves=settings.perturbation_moves,
        )

    # =========================================================================
    # LEARNING
    # =========================================================================

    def _learn(self, evidence: EvidenceBatch, round_label: int) -> CausalFaultGraph:
        blacklist = self.blacklist
        if blacklist is None:
            blacklist = generative_blacklist([(c.id, c.kind) for c in evidence.columns])
        graph = hill_climb(
            evidence,
            previous=self.state.graph,
            limits=self.limits,
            ess=self.settings.ess,
            structure_lambda=self.settings.structure_lambda,
            seed=derive_seed(self.seed, "learn", round_label),
            blacklist=blacklist,
            round_label=round_label,
        )
        return fit_cpts(graph, evidence, self.settings.ess)

    def bootstrap(self, continuum: ContinuumState) -> CausalFaultGraph:
        """
        Learn from the observation-only rounds simulated so far.

        Fits the metric bins (frozen from here on), seeds the evidence window
        and learns the first graph.
        """
        round_label = -1
        with stage("bootstrap", round_label):
            delta = collect_incremental(continuum, self.state.anchors)
            bins = fit_bins(delta.all_entries(), self.settings.bins, continuum.scenario.metrics)
            matrix = normalize(delta, bins)
            evidence = merge_rounds(None, matrix, self.settings.window)
            graph = self._learn(evidence, round_label)

        self.state.anchors = advance_anchors(self.state.anchors, delta)
        self.state.bins = bins
        self.state.preferences = PreferenceModel.from_bins(bins, self.settings.nominal_mass)
        self.state.evidence = evidence
        self.state.graph = graph
        logger.info(
            "Bootstrapped on %d rows: %d variables, %d edges",
            evidence.n_rows,
            len(graph.variables),
            len(graph.edges()),
        )
        return graph

    # =========================================================================
    # ONE ROUND
    # =========================================================================

    def infer(self, graph: CausalFaultGraph, matrix: FeatureMatrix) -> dict[str, Belief]:
        """Per-node beliefs from each node's latest row, starting from uniform marginals."""
        beliefs: dict[str, Belief] = {}
        for node, row in sorted(latest_rows(matrix).items()):
            problem = InferenceProblem(graph=graph, evidence=context_evidence(matrix, row))
            beliefs[node] = minimize_free_energy(
                problem, tol=self.settings.tol, max_sweeps=self.settings.max_sweeps
            )
        return beliefs

    def run_round(
        self,
        continuum: ContinuumState,
        *,
        force_do_nothing: bool = False,
        unreachable: Collection[str] = (),
    ) -> RoundOutcome:
        """
        One closed-loop cycle against the round the continuum just simulated.

        Rounds are counted from the continuum epoch, so round 0 is the first
        round after the bootstrap phase.

        Raises:
            StageError: naming the failed stage; agent state is left untouched
        """
        if not self.state.bootstrapped:
            raise RuntimeError("agent must be bootstrapped before running rounds")
        assert self.state.bins is not None and self.state.preferences is not None
        settings = self.settings
        r = continuum.round - 1 - (continuum.epoch_offset or 0)

        with stage("collect", r):
            delta: LogDelta = collect_incremental(
                continuum, self.state.anchors, unreachable=unreachable, round_label=r
            )
        with stage("normalize", r):
            matrix = normalize(delta, self.state.bins)
        with stage("merge", r):
            evidence = merge_rounds(self.state.evidence, matrix, settings.window)
        with stage("learn", r):
            graph = self._learn(evidence, r)
        with stage("infer", r):
            beliefs = self.infer(graph, matrix)

        faults = [v for v in graph.variables if graph.kind_of(v) == ColumnKind.FAULT]
        origins: dict[str, dict[str, str]] = {}
        with stage("attribute", r):
            for node, belief in beliefs.items():
                for name in faults:
                    if belief.active(name) > settings.detection_threshold:
                        verdict = attribute_origin(graph, belief, name, settings.attribution_margin)
                        origins.setdefault(node, {})[name] = verdict.label.value

        with stage("plan", r):
            actions = enumerate_actions(
                continuum,
                beliefs,
                graph,
                threshold=settings.enumeration_threshold,
                restart_attempts=self.state.restart_attempts,
                max_restart_attempts=settings.max_restart_attempts,
                escalated=self.state.escalated,
            )
            report = score_actions(
                graph,
                beliefs,
                actions,
                self.state.preferences,
                catalog=continuum.scenario.catalog,
                costs_enabled=settings.action_costs_enabled,
                round_label=r,
            )
            chosen = report.score(ActionType.DO_NOTHING.value)
            if not force_do_nothing:
                chosen = select_action(report.scores, settings.epsilon_g)
            report.chosen = chosen.action_id
            action = next(a for a in actions if a.id == chosen.action_id)

        with stage("act", r):
            apply_intervention(continuum, action, self.seed)

        post: dict[str, dict[str, float]] = {}
        if action.node is not None and action.node in beliefs:
            predicted = predict_beliefs(graph, beliefs[action.node], action)
            post[action.node] = {f: predicted.active(f) for f in faults}

        decision = DecisionRecord(
            round=r,
            candidates=report.scores,
            chosen=action.id,
            free_energy={node: b.free_energy for node, b in beliefs.items()},
            beliefs={node: {f: b.active(f) for f in faults} for node, b in beliefs.items()},
            post_action_beliefs=post,
            origins=origins,
        )

        self._commit(delta, evidence, graph, beliefs, action)
        logger.info("Round %d: %s (G=%.6g)", r, action.id, chosen.total)
        return RoundOutcome(
            round=r,
            action=action,
            report=report,
            decision=decision,
            matrix=matrix,
            graph=graph,
            beliefs=beliefs,
        )

    def _commit(
        self,
        delta: LogDelta,
        evidence: EvidenceBatch,
        graph: CausalFaultGraph,
        beliefs: dict[str, Belief],
        action: Action,
    ) -> None:
        state = self.state
        state.anchors = advance_anchors(state.anchors, delta)
        state.evidence = evidence
        state.graph = graph
        state.beliefs = beliefs

        # Escalation ladder: counters reset once the crash belief has cleared.
        for node, belief in beliefs.items():
            if belief.active("node_crash") < self.settings.enumeration_threshold:
                state.restart_attempts.pop(node, None)
                state.escalated.discard(node)
        if action.type == ActionType.RESTART_NODE and action.target is not None:
            state.restart_attempts[action.target] = state.restart_attempts.get(action.target, 0) + 1
        elif action.type == ActionType.ESCALATE_HUMAN and action.target is not None:
            state.escalated.add(action.target)


__all__ = [
    "AgentState",
    "stage",
    "RoundOutcome",
    "ResilienceAgent",
    "generative_blacklist",
    "latest_rows",
    "context_evidence",
]
