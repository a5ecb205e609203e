"""
PAIR-Agent: Causal Fault Graph

DAG over fault indicators and context features with one conditional
probability table per variable, plus the text formats used to persist a
round's graph (edge list) and its tables (CPT dump).

CPT layout: shape (q, r), row j is the parent configuration obtained by
`np.ravel_multi_index` over the parents in column order (first parent most
significant), column k the variable's state.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from ..logs.features import Column, ColumnKind


@dataclass
class CausalFaultGraph:
    columns: tuple[Column, ...]
    dag: nx.DiGraph
    cpts: dict[str, np.ndarray] = field(default_factory=dict)
    round: int = 0
    score_trace: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        self._index = {c.id: i for i, c in enumerate(self.columns)}
        self._by_id = {c.id: c for c in self.columns}
        self.dag.add_nodes_from(self._index)

    @classmethod
    def empty(cls, columns: Iterable[Column], round_label: int = 0) -> CausalFaultGraph:
        return cls(columns=tuple(columns), dag=nx.DiGraph(), round=round_label)

    @classmethod
    def from_parents(
        cls,
        columns: Iterable[Column],
        parents: Mapping[str, Iterable[str]],
        round_label: int = 0,
    ) -> CausalFaultGraph:
        dag = nx.DiGraph()
        for child, pa in parents.items():
            dag.add_edges_from((p, child) for p in pa)
        graph = cls(columns=tuple(columns), dag=dag, round=round_label)
        unknown = set(dag.nodes) - set(graph._index)
        if unknown:
            raise ValueError(f"edges reference unknown variables: {sorted(unknown)}")
        if not nx.is_directed_acyclic_graph(dag):
            raise ValueError("causal fault graph must be acyclic")
        return graph

    # -- structure ---------------------------------------------------------

    @property
    def variables(self) -> list[str]:
        return [c.id for c in self.columns]

    def column(self, name: str) -> Column:
        try:
            return self._by_id[name]
        except KeyError:
            raise ValueError(f"unknown variable '{name}'") from None

    def arity(self, name: str) -> int:
        return self.column(name).arity

    def index(self, name: str) -> int:
        return self._index[name]

    def parents(self, name: str) -> list[str]:
        self.column(name)
        return sorted(self.dag.predecessors(name), key=self._index.__getitem__)

    def children(self, name: str) -> list[str]:
        self.column(name)
        return sorted(self.dag.successors(name), key=self._index.__getitem__)

    def edges(self) -> list[tuple[str, str]]:
        return sorted(self.dag.edges, key=lambda e: (self._index[e[0]], self._index[e[1]]))

    def topological_order(self) -> list[str]:
        return list(nx.lexicographical_topological_sort(self.dag, key=self._index.__getitem__))

    def kind_of(self, name: str) -> ColumnKind:
        return self.column(name).kind

    def is_acyclic(self) -> bool:
        return bool(nx.is_directed_acyclic_graph(self.dag))

    def max_in_degree(self) -> int:
        return max((d for _, d in self.dag.in_degree), default=0)

    # -- tables ------------------------------------------------------------

    def cpt(self, name: str) -> np.ndarray:
        return self.cpts[name]

    def parent_config(self, name: str, assignment: Mapping[str, int]) -> int:
        parents = self.parents(name)
        if not parents:
            return 0
        states = [assignment[p] for p in parents]
        return int(np.ravel_multi_index(states, [self.arity(p) for p in parents]))

    def family_table(self, name: str) -> np.ndarray:
        """CPT reshaped to one axis per parent (column order) plus the variable's own axis."""
        shape = [self.arity(p) for p in self.parents(name)] + [self.arity(name)]
        return self.cpts[name].reshape(shape)

    # -- persistence -------------------------------------------------------

    def to_edge_list(self) -> str:
        lines = [f"# causal fault graph, round {self.round}", "# variables"]
        for c in self.columns:
            flag = " degenerate" if c.degenerate else ""
            lines.append(f"var {c.id} {c.kind.value} {c.arity}{flag}")
        lines.append("# edges")
        lines.extend(f"{u} -> {v}" for u, v in self.edges())
        return "\n".join(lines) + "\n"

    def to_cpt_dump(self) -> str:
        lines = [f"# conditional probability tables, round {self.round}"]
        for name in self.variables:
            if name not in self.cpts:
                continue
            parents = self.parents(name)
            lines.append(f"[{name}] parents={','.join(parents) or '-'}")
            table = self.cpts[name]
            arities = [self.arity(p) for p in parents]
            for j in range(table.shape[0]):
                if parents:
                    states = np.unravel_index(j, arities)
                    config = ",".join(f"{p}={int(s)}" for p, s in zip(parents, states))
                else:
                    config = "-"
                probs = " ".join(format(float(x), ".12g") for x in table[j])
                lines.append(f"{config}\t{probs}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edge_list(cls, text: str) -> CausalFaultGraph:
        columns: list[Column] = []
        edges: list[tuple[str, str]] = []
        round_label = 0
        for raw in text.splitlines():
            line = raw.strip()
            if line.startswith("# causal fault graph, round"):
                round_label = int(line.rsplit(" ", 1)[1])
            if not line or line.startswith("#"):
                continue
            if line.startswith("var "):
                parts = line.split()
                columns.append(
                    Column(
                        parts[1],
                        ColumnKind(parts[2]),
                        int(parts[3]),
                        degenerate=len(parts) > 4 and parts[4] == "degenerate",
                    )
                )
            else:
                u, v = (s.strip() for s in line.split("->"))
                edges.append((u, v))
        parents: dict[str, list[str]] = {}
        for u, v in edges:
            parents.setdefault(v, []).append(u)
        return cls.from_parents(columns, parents, round_label)


def markov_blanket(graph: CausalFaultGraph, name: str) -> set[str]:
    """Parents, children and the children's other parents of `name`."""
    blanket = set(graph.parents(name))
    for child in graph.children(name):
        blanket.add(child)
        blanket.update(graph.parents(child))
    blanket.discard(name)
    return blanket


__all__ = ["CausalFaultGraph", "markov_blanket"]
