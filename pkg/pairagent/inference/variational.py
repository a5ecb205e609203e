"""
PAIR-Agent: Mean-Field Free Energy

F(Q) = sum_i E_Q[ln Q(f_i)] - sum_families E_Q[ln P(v | Pa(v))] under a fully
factorized Q over latent variables, evaluated exactly per family.

Coordinate ascent updates each latent in topological order (Gauss-Seidel),
using ln Q(f_i = k) ∝ sum over the families containing f_i of the expected log
CPT entry with f_i = k. Those families are f_i's own and its children's, so an
update reads only f_i's Markov blanket.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from functools import reduce

import numpy as np
from scipy.special import logsumexp, xlogy

from ..errors import ModelMisfitError
from ..learning.graph import CausalFaultGraph
from .problem import Belief, FamilyReadCounter, InferenceProblem, distributions, uniform_marginals

logger = logging.getLogger(__name__)


def outer_product(arrays: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.multiply.outer, arrays) if len(arrays) > 1 else np.asarray(arrays[0])


def expected_log_family(
    graph: CausalFaultGraph, child: str, dists: Mapping[str, np.ndarray]
) -> float:
    """E_Q[ln P(child | Pa(child))]; -inf if Q puts mass on a zero-probability entry."""
    names = [*graph.parents(child), child]
    w = outer_product([dists[n] for n in names])
    return float(np.sum(xlogy(w, graph.family_table(child))))


def free_energy(problem: InferenceProblem, belief: Belief) -> float:
    """
    Variational free energy of a factored belief.

    Raises:
        ModelMisfitError: if clamped evidence (or the belief's support) has zero probability
    """
    graph = problem.graph
    latent = problem.latent
    missing = [v for v in latent if v not in belief.marginals]
    if missing:
        raise ValueError(f"belief does not cover latents {missing}")
    marginals = {v: belief.marginals[v] for v in latent}
    dists = distributions(graph, problem.evidence, marginals)

    neg_entropy = sum(float(np.sum(xlogy(q, q))) for q in marginals.values())
    energy = 0.0
    for child in graph.variables:
        term = expected_log_family(graph, child, dists)
        if not np.isfinite(term):
            raise ModelMisfitError(
                f"Evidence has zero probability under the model (family of '{child}')",
                hint="CPTs are expected to be smoothed; check the evidence against the graph",
                details={"family": child},
            )
        energy += term
    return neg_entropy - energy


def mean_field_update(
    graph: CausalFaultGraph,
    target: str,
    dists: Mapping[str, np.ndarray],
    families: Sequence[str] | None = None,
    counter: FamilyReadCounter | None = None,
) -> np.ndarray:
    """
    Optimal Q(target) with every other marginal held fixed.

    `families` defaults to the target's own family plus its children's.
    """
    if families is None:
        families = [target, *graph.children(target)]
    logits = np.zeros(graph.arity(target))
    for fam in families:
        names = [*graph.parents(fam), fam]
        if counter is not None:
            counter.record(target, names)
        arrays = [np.ones(graph.arity(n)) if n == target else dists[n] for n in names]
        contrib = xlogy(outer_product(arrays), graph.family_table(fam))
        axis = names.index(target)
        others = tuple(i for i in range(len(names)) if i != axis)
        logits += np.sum(contrib, axis=others) if others else contrib
    if not np.any(np.isfinite(logits)):
        raise ModelMisfitError(
            f"Every state of '{target}' has zero probability given its blanket",
            details={"variable": target},
        )
    q = np.exp(logits - logsumexp(logits))
    return q / q.sum()


def minimize_free_energy(
    problem: InferenceProblem,
    init: Belief | None = None,
    tol: float = 1e-6,
    max_sweeps: int = 100,
    counter: FamilyReadCounter | None = None,
) -> Belief:
    """
    Coordinate-ascent mean field.

    Starts from `init` (or uniform marginals) and stops once the largest
    marginal change within a sweep is below `tol`, or after `max_sweeps`.
    `trace` holds F after every sweep and never increases.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be >= 1")
    graph = problem.graph
    latent = problem.latent
    marginals = uniform_marginals(graph, latent)
    if init is not None:
        marginals.update({v: init.marginals[v].copy() for v in latent if v in init.marginals})

    dists = distributions(graph, problem.evidence, marginals)
    trace: list[float] = []
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        change = 0.0
        for v in latent:
            updated = mean_field_update(graph, v, dists, counter=counter)
            change = max(change, float(np.max(np.abs(updated - dists[v]))))
            dists[v] = updated
        belief = Belief(marginals={v: dists[v] for v in latent}, free_energy=0.0)
        trace.append(free_energy(problem, belief))
        if change < tol:
            converged = True
            break

    logger.debug("Mean field: %d sweeps, F=%.6g, converged=%s", sweeps, trace[-1], converged)
    return Belief(
        marginals={v: dists[v] for v in latent},
        free_energy=trace[-1],
        sweeps=sweeps,
        converged=converged,
        evidence=dict(problem.evidence),
        trace=trace,
    )


__all__ = [
    "outer_product",
    "expected_log_family",
    "free_energy",
    "mean_field_update",
    "minimize_free_energy",
]
