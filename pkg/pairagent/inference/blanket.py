"""
Markov blanket posterior.

P(f | MB(f)) ∝ P(f | Pa(f)) * prod over children c of P(c | Pa(c)), evaluated
from the blanket assignment alone.
"""

from __future__ import annotations

from collections.abc import Mapping

import numpy as np
from scipy.special import logsumexp

from ..errors import IncompleteBlanketError, ModelMisfitError
from ..learning.graph import CausalFaultGraph, markov_blanket


def blanket_posterior(
    graph: CausalFaultGraph, name: str, assignment: Mapping[str, int]
) -> np.ndarray:
    """
    Distribution over `name` given its fully assigned Markov blanket.

    Assignments to variables outside the blanket are ignored.

    Raises:
        IncompleteBlanketError: if any blanket variable is unassigned
    """
    blanket = markov_blanket(graph, name)
    missing = sorted(blanket - set(assignment))
    if missing:
        raise IncompleteBlanketError(
            f"Blanket of '{name}' is not fully assigned",
            details={"missing": missing},
        )

    local = {v: int(assignment[v]) for v in blanket}
    children = graph.children(name)
    logits = np.empty(graph.arity(name))
    with np.errstate(divide="ignore"):
        for k in range(graph.arity(name)):
            local[name] = k
            total = np.log(graph.cpt(name)[graph.parent_config(name, local), k])
            for child in children:
                total += np.log(graph.cpt(child)[graph.parent_config(child, local), local[child]])
            logits[k] = total
    if not np.any(np.isfinite(logits)):
        raise ModelMisfitError(f"Blanket assignment of '{name}' has zero probability")
    return np.exp(logits - logsumexp(logits))


__all__ = ["blanket_posterior"]
