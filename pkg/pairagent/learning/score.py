"""
PAIR-Agent: Structure Scoring

BDeu marginal likelihood (decomposed per family) and the structural prior that
anchors each round's graph on the previous round's.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from ..errors import DegenerateVariableError, SchemaMismatchError
from ..logs.evidence import EvidenceBatch
from ..logs.features import MISSING
from .graph import CausalFaultGraph


@dataclass
class StructureScore:
    """Total = sum of family scores + prior penalty."""

    total: float
    families: dict[str, float] = field(default_factory=dict)
    prior: float = 0.0


def family_counts(
    values: np.ndarray, child: int, parents: Sequence[int], arities: Sequence[int]
) -> np.ndarray:
    """
    Sufficient statistics n_ijk as a (q, r) array.

    Rows with a missing cell in the family are skipped.
    """
    r = arities[child]
    parent_arities = [arities[p] for p in parents]
    q = int(np.prod(parent_arities)) if parents else 1
    if values.shape[0] == 0:
        return np.zeros((q, r), dtype=np.int64)

    cols = [*parents, child]
    complete = np.all(values[:, cols] != MISSING, axis=1)
    data = values[complete]
    if parents:
        config = np.ravel_multi_index(tuple(data[:, p] for p in parents), parent_arities)
    else:
        config = np.zeros(data.shape[0], dtype=np.int64)
    flat = np.bincount(config * r + data[:, child], minlength=q * r)
    return flat.reshape(q, r)


def family_score(counts: np.ndarray, ess: float) -> float:
    """BDeu log marginal likelihood of one family from its (q, r) counts."""
    q, r = counts.shape
    a_ijk = ess / (q * r)
    a_ij = ess / q
    n_ij = counts.sum(axis=1)
    score = np.sum(gammaln(a_ij) - gammaln(a_ij + n_ij))
    score += np.sum(gammaln(a_ijk + counts) - gammaln(a_ijk))
    return float(score)


def _check_schema(graph: CausalFaultGraph, evidence: EvidenceBatch) -> None:
    if [c.id for c in graph.columns] != [c.id for c in evidence.columns]:
        raise SchemaMismatchError("Graph variables do not match the evidence schema")


def bde_score(graph: CausalFaultGraph, evidence: EvidenceBatch, ess: float) -> float:
    """
    BDeu log marginal likelihood of the evidence under the graph's structure.

    Raises:
        DegenerateVariableError: if a degenerate (single-bin) or zero-arity column is in the graph
    """
    return score_structure(graph, evidence, ess).total


def structural_prior(
    graph: CausalFaultGraph, previous: CausalFaultGraph | None, structure_lambda: float
) -> float:
    """-lambda times the number of directed edges present in exactly one of the two graphs."""
    if structure_lambda < 0:
        raise ValueError("structure_lambda must be >= 0")
    if previous is None:
        return 0.0
    if set(graph.variables) != set(previous.variables):
        raise SchemaMismatchError("Structural prior needs graphs over the same variables")
    distance = len(set(graph.dag.edges) ^ set(previous.dag.edges))
    return -structure_lambda * distance


def score_structure(
    graph: CausalFaultGraph,
    evidence: EvidenceBatch,
    ess: float,
    previous: CausalFaultGraph | None = None,
    structure_lambda: float = 0.0,
) -> StructureScore:
    if ess <= 0:
        raise ValueError("ess must be > 0")
    _check_schema(graph, evidence)
    arities = [c.arity for c in evidence.columns]
    families: dict[str, float] = {}
    for j, col in enumerate(evidence.columns):
        if col.degenerate or col.arity < 1:
            if col.arity < 1 or graph.parents(col.id) or graph.children(col.id):
                raise DegenerateVariableError(f"Variable '{col.id}' has no usable states")
            families[col.id] = 0.0
            continue
        parents = [graph.index(p) for p in graph.parents(col.id)]
        families[col.id] = family_score(family_counts(evidence.values, j, parents, arities), ess)
    prior = structural_prior(graph, previous, structure_lambda)
    return StructureScore(total=sum(families.values()) + prior, families=families, prior=prior)


__all__ = [
    "StructureScore",
    "family_counts",
    "family_score",
    "bde_score",
    "structural_prior",
    "score_structure",
]
