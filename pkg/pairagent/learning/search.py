"""
PAIR-Agent: Structure Search and Parameter Fitting

Greedy hill-climbing over DAGs (add / delete / reverse one edge) maximizing
BDeu plus the structural prior, with seeded random restarts, and Dirichlet
posterior-mean CPT fitting for the winning structure.
"""

from __future__ import annotations

import logging
from collections.abc import Collection, Iterator
from dataclasses import dataclass

import networkx as nx
import numpy as np

from ..errors import SchemaMismatchError
from ..logs.evidence import EvidenceBatch
from ..utils.seeding import make_rng
from .graph import CausalFaultGraph
from .score import family_counts, family_score

logger = logging.getLogger(__name__)

Edge = tuple[str, str]
Move = tuple[str, Edge]

# Lexicographic move-type order used for tie-breaking.
MOVE_TYPES = ("add", "delete", "reverse")


@dataclass(frozen=True)
class SearchLimits:
    max_parents: int = 3
    restarts: int = 5
    epsilon: float = 1e-9
    perturbation_moves: int = 3


class _FamilyCache:
    """Memoized BDeu family scores keyed by (variable, parent tuple)."""

    def __init__(self, evidence: EvidenceBatch, ess: float):
        self.values = evidence.values
        self.arities = [c.arity for c in evidence.columns]
        self.index = {c.id: j for j, c in enumerate(evidence.columns)}
        self.ess = ess
        self._cache: dict[tuple[str, tuple[str, ...]], float] = {}

    def canonical(self, parents: Collection[str]) -> tuple[str, ...]:
        return tuple(sorted(parents, key=self.index.__getitem__))

    def score(self, child: str, parents: Collection[str]) -> float:
        key = (child, self.canonical(parents))
        if key not in self._cache:
            counts = family_counts(
                self.values, self.index[child], [self.index[p] for p in key[1]], self.arities
            )
            self._cache[key] = family_score(counts, self.ess)
        return self._cache[key]


class _Climber:
    def __init__(
        self,
        variables: list[str],
        cache: _FamilyCache,
        limits: SearchLimits,
        previous_edges: set[Edge] | None,
        structure_lambda: float,
        blacklist: Collection[Edge],
    ):
        self.variables = sorted(variables)
        self.cache = cache
        self.limits = limits
        self.previous_edges = previous_edges
        self.structure_lambda = structure_lambda
        self.blacklist = set(blacklist)

    # -- bookkeeping -------------------------------------------------------

    def _prior_delta(self, added: list[Edge], removed: list[Edge]) -> float:
        if self.previous_edges is None:
            return 0.0
        change = 0
        for e in added:
            change += -1 if e in self.previous_edges else 1
        for e in removed:
            change += 1 if e in self.previous_edges else -1
        return -self.structure_lambda * change

    def total(self, parents: dict[str, set[str]]) -> float:
        score = sum(self.cache.score(v, parents[v]) for v in self.variables)
        if self.previous_edges is not None:
            edges = {(p, v) for v in self.variables for p in parents[v]}
            score -= self.structure_lambda * len(edges ^ self.previous_edges)
        return score

    def legal_moves(self, parents: dict[str, set[str]], dag: nx.DiGraph) -> Iterator[Move]:
        """All legal moves in lexicographic (move-type, edge) order."""
        pairs = [(u, v) for u in self.variables for v in self.variables if u != v]
        for u, v in pairs:
            if (
                u not in parents[v]
                and v not in parents[u]
                and (u, v) not in self.blacklist
                and len(parents[v]) < self.limits.max_parents
                and not nx.has_path(dag, v, u)
            ):
                yield ("add", (u, v))
        for u, v in pairs:
            if u in parents[v]:
                yield ("delete", (u, v))
        for u, v in pairs:
            if (
                u in parents[v]
                and (v, u) not in self.blacklist
                and len(parents[u]) < self.limits.max_parents
            ):
                dag.remove_edge(u, v)
                cyclic = nx.has_path(dag, u, v)
                dag.add_edge(u, v)
                if not cyclic:
                    yield ("reverse", (u, v))

    def gain(self, parents: dict[str, set[str]], move: Move) -> float:
        kind, (u, v) = move
        score = self.cache.score
        if kind == "add":
            delta = score(v, parents[v] | {u}) - score(v, parents[v])
            return delta + self._prior_delta([(u, v)], [])
        if kind == "delete":
            delta = score(v, parents[v] - {u}) - score(v, parents[v])
            return delta + self._prior_delta([], [(u, v)])
        delta = score(v, parents[v] - {u}) - score(v, parents[v])
        delta += score(u, parents[u] | {v}) - score(u, parents[u])
        return delta + self._prior_delta([(v, u)], [(u, v)])

    @staticmethod
    def apply(parents: dict[str, set[str]], dag: nx.DiGraph, move: Move) -> None:
        kind, (u, v) = move
        if kind == "add":
            parents[v].add(u)
            dag.add_edge(u, v)
        elif kind == "delete":
            parents[v].discard(u)
            dag.remove_edge(u, v)
        else:
            parents[v].discard(u)
            dag.remove_edge(u, v)
            parents[u].add(v)
            dag.add_edge(v, u)

    # -- search ------------------------------------------------------------

    def climb(self, parents: dict[str, set[str]]) -> tuple[dict[str, set[str]], list[float]]:
        dag = nx.DiGraph()
        dag.add_nodes_from(self.variables)
        dag.add_edges_from((p, v) for v in self.variables for p in parents[v])
        current = self.total(parents)
        trace = [current]
        while True:
            best_move: Move | None = None
            best_gain = self.limits.epsilon
            for move in list(self.legal_moves(parents, dag)):
                g = self.gain(parents, move)
                if g > best_gain:
                    best_move, best_gain = move, g
            if best_move is None:
                return parents, trace
            self.apply(parents, dag, best_move)
            current += best_gain
            trace.append(current)
            logger.debug("Accepted %s %s -> %s (gain %.6g)", best_move[0], *best_move[1], best_gain)

    def perturb(
        self, parents: dict[str, set[str]], rng: np.random.Generator
    ) -> dict[str, set[str]]:
        perturbed = {v: set(p) for v, p in parents.items()}
        dag = nx.DiGraph()
        dag.add_nodes_from(self.variables)
        dag.add_edges_from((p, v) for v in self.variables for p in perturbed[v])
        for _ in range(self.limits.perturbation_moves):
            moves = list(self.legal_moves(perturbed, dag))
            if not moves:
                break
            self.apply(perturbed, dag, moves[int(rng.integers(len(moves)))])
        return perturbed


def hill_climb(
    evidence: EvidenceBatch,
    previous: CausalFaultGraph | None = None,
    limits: SearchLimits | None = None,
    *,
    ess: float = 1.0,
    structure_lambda: float = 1.0,
    seed: int = 0,
    blacklist: Collection[Edge] = (),
    round_label: int = 0,
) -> CausalFaultGraph:
    """
    Learn a DAG by greedy hill-climbing; the best of `limits.restarts` runs wins.

    Run 0 starts from the previous graph (or the empty graph); run r > 0 starts
    from it after `perturbation_moves` random legal moves drawn from a sub-seed
    derived from (seed, r). A move is accepted only if it gains more than
    `limits.epsilon`; equal gains go to the lexicographically first move.
    Degenerate columns take no part and come back as disconnected variables.
    """
    limits = limits or SearchLimits()
    columns = evidence.columns
    if previous is not None and previous.variables != [c.id for c in columns]:
        raise SchemaMismatchError("Previous graph variables do not match the evidence schema")

    variables = [c.id for c in columns if not c.degenerate and c.arity >= 1]
    active = set(variables)
    start: dict[str, set[str]] = {v: set() for v in variables}
    previous_edges: set[Edge] | None = None
    if previous is not None:
        previous_edges = {(u, v) for u, v in previous.dag.edges if u in active and v in active}
        for u, v in previous_edges:
            start[v].add(u)

    climber = _Climber(
        variables,
        _FamilyCache(evidence, ess),
        limits,
        previous_edges,
        structure_lambda,
        blacklist,
    )

    best: tuple[float, dict[str, set[str]], list[float]] | None = None
    for r in range(limits.restarts):
        initial = start if r == 0 else climber.perturb(start, make_rng(seed, "restart", r))
        parents, trace = climber.climb({v: set(p) for v, p in initial.items()})
        total = climber.total(parents)
        if best is None or total > best[0] + limits.epsilon:
            best = (total, parents, trace)

    assert best is not None
    _, parents, trace = best
    graph = CausalFaultGraph.from_parents(columns, parents, round_label)
    graph.score_trace = trace
    return graph


def fit_cpts(graph: CausalFaultGraph, evidence: EvidenceBatch, ess: float) -> CausalFaultGraph:
    """
    Posterior-mean CPTs (n_ijk + a_ijk) / (n_ij + a_ij) with BDeu pseudo-counts.

    Returns a new graph sharing the structure; configurations without data get
    uniform rows.
    """
    arities = [c.arity for c in evidence.columns]
    cpts: dict[str, np.ndarray] = {}
    for j, col in enumerate(evidence.columns):
        parents = [graph.index(p) for p in graph.parents(col.id)]
        counts = family_counts(evidence.values, j, parents, arities)
        q, r = counts.shape
        a_ijk = ess / (q * r)
        table = (counts + a_ijk) / (counts.sum(axis=1, keepdims=True) + ess / q)
        cpts[col.id] = table
    fitted = CausalFaultGraph(
        columns=graph.columns,
        dag=graph.dag.copy(),
        cpts=cpts,
        round=graph.round,
        score_trace=list(graph.score_trace),
    )
    return fitted


__all__ = ["MOVE_TYPES", "SearchLimits", "hill_climb", "fit_cpts"]
