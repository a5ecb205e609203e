"""
PAIR-Agent: Expected Free Energy Planner

Scores every candidate healing action by its expected free energy

    G(a) = KL(Q(x|a) || P*(x)) + E_{Q(f|a)}[H[P(x|f)]]

(risk plus ambiguity, natural-log units) and picks the minimizer. Do-nothing
is always a candidate and wins every tie, so the chosen action never has a
higher G than leaving the continuum alone.

Post-action beliefs follow do-semantics: an intervened fault's incoming edges
are cut and its active mass scaled by (1 - rho); neighbours of intervened
variables are re-equilibrated by one mean-field pass.
"""

from __future__ import annotations

import logging
from collections.abc import Collection, Mapping, Sequence
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, Field
from scipy.special import entr, rel_entr

from ..core.models import Action, ActionCatalog, ActionScore, ActionType, TargetKind
from ..errors import EmptyReportError
from ..inference.problem import Belief, distributions
from ..inference.variational import mean_field_update, outer_product
from ..learning.graph import CausalFaultGraph, markov_blanket
from ..logs.features import BinSpec, ColumnKind
from ..sim.continuum import ContinuumState, pick_destination

logger = logging.getLogger(__name__)


@dataclass
class PreferenceModel:
    """Preferred distribution P*(x_j) over the bins of each context feature."""

    distributions: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        for name, dist in self.distributions.items():
            if abs(float(dist.sum()) - 1.0) > 1e-12 or np.any(dist <= 0.0):
                raise ValueError(f"preferred distribution of '{name}' is not a positive pmf")

    @classmethod
    def from_bins(cls, bins: BinSpec, nominal_mass: float = 0.9) -> PreferenceModel:
        """`nominal_mass` on each metric's nominal bin, the rest spread uniformly."""
        prefs: dict[str, np.ndarray] = {}
        for metric in bins.metrics:
            k = bins.arity(metric)
            if k == 1:
                prefs[metric] = np.ones(1)
                continue
            dist = np.full(k, (1.0 - nominal_mass) / (k - 1))
            dist[bins.nominal_bin(metric)] = nominal_mass
            prefs[metric] = dist / dist.sum()
        return cls(distributions=prefs)


class EFEReport(BaseModel):
    """All candidates scored in one round and the one selected."""

    round: int
    scores: list[ActionScore] = Field(default_factory=list)
    chosen: str | None = None

    def score(self, action_id: str) -> ActionScore:
        for s in self.scores:
            if s.action_id == action_id:
                return s
        raise KeyError(action_id)


def context_variables(graph: CausalFaultGraph) -> list[str]:
    return [v for v in graph.variables if graph.kind_of(v) != ColumnKind.FAULT]


# -- prediction ---------------------------------------------------------------


def predict_beliefs(graph: CausalFaultGraph, belief: Belief, action: Action) -> Belief:
    """
    Q(f | a): beliefs after intervening with `action`.

    Do-nothing returns an exact copy. Intervened variables get
    Q(f=active|a) = (1 - rho) * Q(f=active); latents whose blanket holds an
    intervened variable are then updated once, in topological order, with the
    intervened families removed and the original evidence still clamped.
    """
    predicted = belief.copy()
    if action.is_do_nothing:
        return predicted

    intervened = {v: rho for v, rho in action.interventions.items() if v in predicted.marginals}
    for name, rho in intervened.items():
        scaled = predicted.marginals[name].copy()
        scaled[1:] *= 1.0 - rho
        scaled[0] = 1.0 - scaled[1:].sum()
        predicted.marginals[name] = scaled

    if not intervened:
        return predicted

    dists = distributions(graph, predicted.evidence, predicted.marginals)
    for target in graph.topological_order():
        if target in intervened or target not in predicted.marginals:
            continue
        if not markov_blanket(graph, target) & intervened.keys():
            continue
        families = [f for f in [target, *graph.children(target)] if f not in intervened]
        dists[target] = mean_field_update(graph, target, dists, families=families)
        predicted.marginals[target] = dists[target]
    return predicted


def _parent_weights(
    graph: CausalFaultGraph, name: str, marginals: Mapping[str, np.ndarray]
) -> np.ndarray:
    """Mean-field probability of each parent configuration of `name` (CPT row order)."""
    parents = graph.parents(name)
    if not parents:
        return np.ones(1)
    return np.ravel(outer_product([marginals[p] for p in parents]))


def _prior_marginals(
    graph: CausalFaultGraph, fixed: Mapping[str, np.ndarray]
) -> dict[str, np.ndarray]:
    """Propagate marginals forward; variables in `fixed` keep their given distribution."""
    marginals: dict[str, np.ndarray] = {}
    for name in graph.topological_order():
        if name in fixed:
            marginals[name] = fixed[name]
        else:
            marginals[name] = _parent_weights(graph, name, marginals) @ graph.cpt(name)
    return marginals


def predictive_features(graph: CausalFaultGraph, predicted: Belief) -> dict[str, np.ndarray]:
    """
    Q(x_j | a) for every context feature: CPT rows weighted by the product of
    the parents' predicted marginals.
    """
    faults = {
        v: m for v, m in predicted.marginals.items() if graph.kind_of(v) == ColumnKind.FAULT
    }
    marginals = _prior_marginals(graph, faults)
    return {v: marginals[v] for v in context_variables(graph)}


# -- scoring ------------------------------------------------------------------


def expected_free_energy(
    graph: CausalFaultGraph,
    action: Action,
    belief: Belief,
    preferences: PreferenceModel,
    cost: float = 0.0,
) -> ActionScore:
    """Risk, ambiguity and G of one action against one belief."""
    predicted = predict_beliefs(graph, belief, action)
    faults = {
        v: m for v, m in predicted.marginals.items() if graph.kind_of(v) == ColumnKind.FAULT
    }
    marginals = _prior_marginals(graph, faults)

    risk = 0.0
    ambiguity = 0.0
    for name in context_variables(graph):
        preferred = preferences.distributions.get(name)
        if preferred is not None and preferred.shape == marginals[name].shape:
            risk += float(np.sum(rel_entr(marginals[name], preferred)))
        row_entropy = np.sum(entr(graph.cpt(name)), axis=1)
        ambiguity += float(_parent_weights(graph, name, marginals) @ row_entropy)

    return ActionScore(
        action_id=action.id,
        type=action.type,
        target=action.target,
        risk=risk,
        ambiguity=ambiguity,
        cost=cost,
        total=risk + ambiguity + cost,
    )


def score_actions(
    graph: CausalFaultGraph,
    beliefs: Mapping[str, Belief],
    actions: Sequence[Action],
    preferences: PreferenceModel,
    catalog: ActionCatalog | None = None,
    costs_enabled: bool = False,
    round_label: int = 0,
) -> EFEReport:
    """
    Score each action across every node's belief.

    An action changes only the belief of the node it acts on; every other node
    contributes its do-nothing G, so G(a) = sum over u != v of G_u(noop) + G_v(a).
    """
    noop = Action.do_nothing()
    baseline = {
        node: expected_free_energy(graph, noop, belief, preferences)
        for node, belief in sorted(beliefs.items())
    }

    scores: list[ActionScore] = []
    for action in actions:
        cost = 0.0
        if costs_enabled and catalog is not None and not action.is_do_nothing:
            template = catalog.template(action.type)
            cost = template.cost if template is not None else 0.0
        risk = ambiguity = 0.0
        for node, base in baseline.items():
            if action.node == node and not action.is_do_nothing:
                own = expected_free_energy(graph, action, beliefs[node], preferences)
                risk += own.risk
                ambiguity += own.ambiguity
            else:
                risk += base.risk
                ambiguity += base.ambiguity
        scores.append(
            ActionScore(
                action_id=action.id,
                type=action.type,
                target=action.target,
                risk=risk,
                ambiguity=ambiguity,
                cost=cost,
                total=risk + ambiguity + cost,
            )
        )
    return EFEReport(round=round_label, scores=scores)


def select_action(scores: Sequence[ActionScore], epsilon_g: float = 1e-9) -> ActionScore:
    """
    argmin G. Scores within `epsilon_g` of the minimum tie; ties go to
    do-nothing, then to the lexicographically smallest action id.

    Raises:
        EmptyReportError: if there are no scores or do-nothing was not scored
    """
    if not scores:
        raise EmptyReportError("No actions were scored")
    if not any(s.type == ActionType.DO_NOTHING for s in scores):
        raise EmptyReportError(
            "Do-nothing is missing from the scored actions",
            details={"actions": [s.action_id for s in scores]},
        )
    best = min(s.total for s in scores)
    tied = [s for s in scores if s.total <= best + epsilon_g]
    for s in tied:
        if s.type == ActionType.DO_NOTHING:
            return s
    return min(tied, key=lambda s: s.action_id)


# -- enumeration --------------------------------------------------------------


def _suspect(belief: Belief | None, triggers: Collection[str], threshold: float) -> bool:
    return belief is not None and any(belief.active(t) > threshold for t in triggers)


def enumerate_actions(
    state: ContinuumState,
    beliefs: Mapping[str, Belief],
    graph: CausalFaultGraph,
    *,
    threshold: float = 0.2,
    restart_attempts: Mapping[str, int] | None = None,
    max_restart_attempts: int = 2,
    escalated: Collection[str] = (),
) -> list[Action]:
    """
    Candidate actions: do-nothing first, then one action per (suspect target,
    applicable enabled template) sorted by id.

    A node is a suspect when some trigger variable of the template has
    Q(active) above `threshold`. Restart is withdrawn from a node after
    `max_restart_attempts`, which is when escalation becomes available; nodes
    in `escalated` are not escalated again. Tasks on isolated hosts are always
    suspects.
    """
    attempts = restart_attempts or {}
    variables = set(graph.variables)
    crash_belief = {node: b.active("node_crash") for node, b in beliefs.items()}
    candidates: dict[str, Action] = {}

    def interventions(template_map: Mapping[str, float]) -> dict[str, float]:
        return {v: rho for v, rho in template_map.items() if v in variables}

    for template in state.scenario.catalog.enabled():
        if template.type == ActionType.DO_NOTHING:
            continue

        if template.target_kind == TargetKind.NODE:
            for node_id in sorted(state.nodes):
                suspect = _suspect(beliefs.get(node_id), template.triggers, threshold)
                if state.nodes[node_id].isolated or not suspect:
                    continue
                tries = attempts.get(node_id, 0)
                if template.type == ActionType.RESTART_NODE and tries >= max_restart_attempts:
                    continue
                if template.type == ActionType.ESCALATE_HUMAN and (
                    tries < max_restart_attempts or node_id in escalated
                ):
                    continue
                action = Action.build(
                    template.type, node_id, node_id, interventions(template.interventions)
                )
                candidates[action.id] = action

        elif template.target_kind == TargetKind.TASK:
            for task_id in sorted(state.executions):
                host = state.executions[task_id].host
                stranded = state.nodes[host].isolated
                if not stranded and not _suspect(beliefs.get(host), template.triggers, threshold):
                    continue
                destination = pick_destination(state, task_id, crash_belief)
                if destination is None:
                    continue
                action = Action.build(
                    template.type,
                    task_id,
                    host,
                    interventions(template.interventions),
                    destination=destination,
                )
                candidates[action.id] = action

        else:
            for node_id in sorted(state.nodes):
                node = state.nodes[node_id]
                if node.isolated or node.uplink is None:
                    continue
                if state.links[node.uplink].backup or state.backup_link(node.uplink) is None:
                    continue
                if not _suspect(beliefs.get(node_id), template.triggers, threshold):
                    continue
                action = Action.build(
                    template.type, node.uplink, node_id, interventions(template.interventions)
                )
                candidates[action.id] = action

    return [Action.do_nothing(), *(candidates[k] for k in sorted(candidates))]


__all__ = [
    "PreferenceModel",
    "EFEReport",
    "context_variables",
    "predict_beliefs",
    "predictive_features",
    "expected_free_energy",
    "score_actions",
    "select_action",
    "enumerate_actions",
]
