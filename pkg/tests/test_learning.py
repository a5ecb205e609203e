"""
Tests for causal fault graph learning.
"""

import itertools
import math

import networkx as nx
import numpy as np
import pytest
from scipy.special import gammaln

from pairagent.errors import DegenerateVariableError, SchemaMismatchError
from pairagent.learning.graph import CausalFaultGraph, markov_blanket
from pairagent.learning.score import bde_score, score_structure, structural_prior
from pairagent.learning.search import SearchLimits, fit_cpts, hill_climb
from pairagent.logs.evidence import EvidenceBatch
from pairagent.logs.features import MISSING, Column, ColumnKind


def _columns(*names, arity=2):
    return tuple(Column(n, ColumnKind.FAULT, arity) for n in names)


def _batch(columns, values):
    values = np.asarray(values, dtype=np.int64).reshape(-1, len(columns))
    keys = [("n", i) for i in range(len(values))]
    return EvidenceBatch(columns=columns, values=values, keys=keys)


def _chain_data(n, seed, noise=0.1):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 2, n)
    b = np.where(rng.random(n) < noise, 1 - a, a)
    c = np.where(rng.random(n) < noise, 1 - b, b)
    return np.stack([a, b, c], axis=1)


def _all_dags(names):
    pairs = list(itertools.combinations(names, 2))
    for choice in itertools.product((None, 0, 1), repeat=len(pairs)):
        parents: dict[str, list[str]] = {n: [] for n in names}
        for (u, v), c in zip(pairs, choice):
            if c == 0:
                parents[v].append(u)
            elif c == 1:
                parents[u].append(v)
        dag = nx.DiGraph((p, v) for v, ps in parents.items() for p in ps)
        if nx.is_directed_acyclic_graph(dag):
            yield parents


def _equivalence_key(parents):
    skeleton = frozenset(frozenset((p, v)) for v, ps in parents.items() for p in ps)
    colliders = set()
    for child, ps in parents.items():
        for a, b in itertools.combinations(sorted(ps), 2):
            if frozenset((a, b)) not in skeleton:
                colliders.add((a, child, b))
    return skeleton, frozenset(colliders)


class TestBDeuScore:
    """Test the BDeu marginal likelihood."""

    def test_hand_evaluated_example(self):
        columns = _columns("a", "b")
        graph = CausalFaultGraph.empty(columns)
        score = bde_score(graph, _batch(columns, np.zeros((4, 2))), ess=1.0)
        expected = 2 * (gammaln(1) - gammaln(5) + gammaln(4.5) - gammaln(0.5))
        assert score == pytest.approx(expected, abs=1e-12)
        assert score == pytest.approx(2 * math.log(6.5625 / 24), abs=1e-12)

    def test_empty_dataset_scores_zero(self):
        columns = _columns("a", "b")
        graph = CausalFaultGraph.from_parents(columns, {"b": ["a"]})
        assert bde_score(graph, _batch(columns, []), ess=1.0) == 0.0

    def test_reversed_edge_scores_equal(self):
        columns = _columns("a", "b")
        data = _batch(columns, _chain_data(300, 1)[:, :2])
        ab = CausalFaultGraph.from_parents(columns, {"b": ["a"]})
        ba = CausalFaultGraph.from_parents(columns, {"a": ["b"]})
        assert bde_score(ab, data, 1.0) == pytest.approx(bde_score(ba, data, 1.0), abs=1e-9)

    def test_score_equivalence_over_all_three_variable_dags(self):
        columns = _columns("a", "b", "c")
        data = _batch(columns, _chain_data(200, 3))
        classes: dict[tuple, list[float]] = {}
        for parents in _all_dags(["a", "b", "c"]):
            graph = CausalFaultGraph.from_parents(columns, parents)
            classes.setdefault(_equivalence_key(parents), []).append(bde_score(graph, data, 1.0))
        assert sum(len(v) for v in classes.values()) == 25
        for scores in classes.values():
            assert max(scores) - min(scores) < 1e-9
        firsts = sorted(v[0] for v in classes.values())
        assert all(b - a > 1e-9 for a, b in zip(firsts, firsts[1:]))

    def test_missing_cells_skipped_per_family(self):
        columns = _columns("a", "b")
        values = [[0, 0], [1, 1], [MISSING, 1], [1, MISSING]]
        graph = CausalFaultGraph.from_parents(columns, {"b": ["a"]})
        scored = score_structure(graph, _batch(columns, values), 1.0)
        complete = score_structure(graph, _batch(columns, values[:2]), 1.0)
        assert scored.families["b"] == pytest.approx(complete.families["b"])
        assert scored.families["a"] != pytest.approx(complete.families["a"])

    def test_decomposability(self):
        columns = _columns("a", "b", "c")
        data = _batch(columns, _chain_data(100, 4))
        before = score_structure(CausalFaultGraph.from_parents(columns, {"b": ["a"]}), data, 1.0)
        after = score_structure(
            CausalFaultGraph.from_parents(columns, {"b": ["a"], "c": ["b"]}), data, 1.0
        )
        assert before.families["a"] == after.families["a"]
        assert before.families["b"] == after.families["b"]
        assert after.total == pytest.approx(sum(after.families.values()), abs=1e-9)

    def test_degenerate_variable_with_edges(self):
        columns = (Column("a", ColumnKind.HW, 1, degenerate=True), Column("b", ColumnKind.FAULT, 2))
        graph = CausalFaultGraph.from_parents(columns, {"b": ["a"]})
        with pytest.raises(DegenerateVariableError):
            bde_score(graph, _batch(columns, [[0, 1]]), 1.0)

    def test_schema_mismatch(self):
        graph = CausalFaultGraph.empty(_columns("a", "b"))
        with pytest.raises(SchemaMismatchError):
            bde_score(graph, _batch(_columns("a", "c"), [[0, 1]]), 1.0)


class TestStructuralPrior:
    """Test the previous-graph anchoring penalty."""

    def test_identical(self):
        graph = CausalFaultGraph.from_parents(_columns("a", "b"), {"b": ["a"]})
        assert structural_prior(graph, graph, 1.0) == 0.0

    def test_one_edge_added(self):
        columns = _columns("a", "b")
        empty = CausalFaultGraph.empty(columns)
        one = CausalFaultGraph.from_parents(columns, {"b": ["a"]})
        assert structural_prior(one, empty, 1.0) == -1.0

    def test_zero_lambda(self):
        columns = _columns("a", "b", "c")
        full = CausalFaultGraph.from_parents(columns, {"b": ["a"], "c": ["a", "b"]})
        assert structural_prior(full, CausalFaultGraph.empty(columns), 0.0) == 0.0

    def test_variable_mismatch(self):
        with pytest.raises(SchemaMismatchError):
            structural_prior(
                CausalFaultGraph.empty(_columns("a")), CausalFaultGraph.empty(_columns("b")), 1.0
            )


class TestHillClimb:
    """Test greedy structure search."""

    def test_recovers_dependence(self):
        columns = _columns("a", "b")
        data = _batch(columns, _chain_data(5000, 7)[:, :2])
        graph = hill_climb(data, limits=SearchLimits(restarts=2))
        assert {frozenset(e) for e in graph.edges()} == {frozenset(("a", "b"))}

    def test_independent_columns_stay_empty(self):
        rng = np.random.default_rng(8)
        columns = _columns("a", "b", "c")
        graph = hill_climb(_batch(columns, rng.integers(0, 2, (2000, 3))))
        assert graph.edges() == []

    def test_huge_lambda_keeps_previous(self):
        columns = _columns("a", "b", "c")
        previous = CausalFaultGraph.from_parents(columns, {"c": ["a"]})
        data = _batch(columns, _chain_data(500, 9))
        graph = hill_climb(
            data, previous=previous, limits=SearchLimits(restarts=3), structure_lambda=1e9
        )
        assert graph.edges() == previous.edges()

    def test_acyclic_within_max_parents_and_monotone(self):
        rng = np.random.default_rng(10)
        base = rng.integers(0, 2, 800)
        cols = [np.where(rng.random(800) < 0.15, 1 - base, base) for _ in range(5)]
        columns = _columns("a", "b", "c", "d", "e")
        graph = hill_climb(
            _batch(columns, np.stack(cols, axis=1)), limits=SearchLimits(max_parents=1)
        )
        assert graph.is_acyclic()
        assert graph.max_in_degree() <= 1
        trace = graph.score_trace
        assert all(b - a > 1e-9 for a, b in zip(trace, trace[1:]))

    def test_blacklist_respected(self):
        columns = _columns("a", "b")
        data = _batch(columns, _chain_data(2000, 11)[:, :2])
        graph = hill_climb(data, blacklist=[("a", "b")])
        assert graph.edges() == [("b", "a")]

    def test_degenerate_columns_left_disconnected(self):
        columns = (*_columns("a", "b"), Column("flat", ColumnKind.HW, 1, degenerate=True))
        data = np.concatenate([_chain_data(1000, 12)[:, :2], np.zeros((1000, 1))], axis=1)
        graph = hill_climb(_batch(columns, data))
        assert "flat" in graph.variables
        assert not graph.parents("flat") and not graph.children("flat")

    def test_same_seed_same_graph(self):
        columns = _columns("a", "b", "c")
        data = _batch(columns, _chain_data(400, 13))
        one = hill_climb(data, seed=5, limits=SearchLimits(restarts=4))
        two = hill_climb(data, seed=5, limits=SearchLimits(restarts=4))
        assert one.edges() == two.edges()


class TestFitCpts:
    """Test posterior-mean parameter fitting."""

    def test_smoothed_counts(self):
        columns = _columns("a", "b")
        values = [[1, 1], [1, 1], [1, 1], [1, 0], [0, 0]]
        graph = CausalFaultGraph.from_parents(columns, {"b": ["a"]})
        fitted = fit_cpts(graph, _batch(columns, values), ess=1.0)
        assert fitted.cpt("b")[1, 1] == pytest.approx(3.25 / 4.5, abs=1e-12)
        assert np.allclose(fitted.cpt("b").sum(axis=1), 1.0, atol=1e-12)

    def test_no_data_gives_uniform_rows(self):
        columns = _columns("a", "b")
        graph = CausalFaultGraph.from_parents(columns, {"b": ["a"]})
        fitted = fit_cpts(graph, _batch(columns, []), ess=1.0)
        assert np.allclose(fitted.cpt("b"), 0.5)

    @pytest.mark.slow
    def test_deterministic_data_approaches_certainty(self):
        columns = _columns("a", "b")
        a = np.tile([0, 1], 500_000)
        graph = CausalFaultGraph.from_parents(columns, {"b": ["a"]})
        fitted = fit_cpts(graph, _batch(columns, np.stack([a, a], axis=1)), ess=1.0)
        assert np.allclose(fitted.cpt("b"), np.eye(2), atol=1e-3)


class TestMarkovBlanket:
    """Test blanket queries against d-separation."""

    def test_chain(self):
        graph = CausalFaultGraph.from_parents(_columns("a", "b", "c"), {"b": ["a"], "c": ["b"]})
        assert markov_blanket(graph, "b") == {"a", "c"}

    def test_collider_includes_co_parent(self):
        graph = CausalFaultGraph.from_parents(_columns("a", "b", "c"), {"c": ["a", "b"]})
        assert markov_blanket(graph, "a") == {"b", "c"}

    def test_isolated(self):
        graph = CausalFaultGraph.empty(_columns("a", "b"))
        assert markov_blanket(graph, "a") == set()

    def test_unknown_variable(self):
        graph = CausalFaultGraph.empty(_columns("a"))
        with pytest.raises(ValueError):
            markov_blanket(graph, "zzz")

    def test_blanket_is_minimal_separator(self):
        separated = getattr(nx, "is_d_separator", None) or nx.d_separated
        rng = np.random.default_rng(14)
        names = ["a", "b", "c", "d", "e"]
        for _ in range(40):
            parents = {n: [p for p in names[:i] if rng.random() < 0.4] for i, n in enumerate(names)}
            graph = CausalFaultGraph.from_parents(_columns(*names), parents)
            for v in names:
                blanket = markov_blanket(graph, v)
                rest = set(names) - blanket - {v}
                if rest:
                    assert separated(graph.dag, {v}, rest, blanket)
                for member in blanket:
                    assert not separated(graph.dag, {v}, {member}, blanket - {member})


class TestPersistence:
    """Test the edge-list format."""

    def test_edge_list_layout(self):
        columns = (Column("temp", ColumnKind.HW, 3), Column("crash", ColumnKind.FAULT, 2))
        graph = CausalFaultGraph.from_parents(columns, {"temp": ["crash"]}, round_label=-1)
        text = graph.to_edge_list()
        assert text.splitlines() == [
            "# causal fault graph, round -1",
            "# variables",
            "var temp hw-context 3",
            "var crash fault-indicator 2",
            "# edges",
            "crash -> temp",
        ]
        assert CausalFaultGraph.from_edge_list(text).round == -1

    def test_cpt_dump_rows(self, single_fault_graph):
        lines = single_fault_graph.to_cpt_dump().splitlines()
        assert "[x] parents=f" in lines
        assert "f=1\t0.1 0.9" in lines
