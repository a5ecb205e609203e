"""
Inference problem and belief records.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import ConfigError
from ..learning.graph import CausalFaultGraph


@dataclass
class InferenceProblem:
    """A fitted graph with clamped evidence; every other variable is latent."""

    graph: CausalFaultGraph
    evidence: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, value in self.evidence.items():
            arity = self.graph.arity(name)
            if not 0 <= value < arity:
                raise ConfigError(
                    f"Evidence {name}={value} outside arity {arity}", field=f"evidence.{name}"
                )
        missing = [v for v in self.graph.variables if v not in self.graph.cpts]
        if missing:
            raise ConfigError(f"Graph has no CPTs for {missing}", field="graph.cpts")

    @property
    def latent(self) -> list[str]:
        """Latent variables in deterministic topological order."""
        return [v for v in self.graph.topological_order() if v not in self.evidence]

    def binary_equivalents(self) -> float:
        return sum(math.log2(self.graph.arity(v)) for v in self.latent)


@dataclass
class FamilyReadCounter:
    """Read instrumentation: families evaluated and variables read per updated latent."""

    family_reads: int = 0
    reads: dict[str, set[str]] = field(default_factory=dict)

    def record(self, target: str, family: list[str]) -> None:
        self.family_reads += 1
        self.reads.setdefault(target, set()).update(v for v in family if v != target)


@dataclass
class Belief:
    """Factored marginals over latent variables and the free energy they attain."""

    marginals: dict[str, np.ndarray]
    free_energy: float
    sweeps: int = 0
    converged: bool = False
    evidence: dict[str, int] = field(default_factory=dict)
    log_evidence: float | None = None
    trace: list[float] = field(default_factory=list)

    def active(self, name: str) -> float:
        """Q(name = active); 0.0 for observed or single-state variables."""
        m = self.marginals.get(name)
        if m is None or m.shape[0] < 2:
            return 0.0
        return float(m[1])

    def copy(self) -> Belief:
        return Belief(
            marginals={k: v.copy() for k, v in self.marginals.items()},
            free_energy=self.free_energy,
            sweeps=self.sweeps,
            converged=self.converged,
            evidence=dict(self.evidence),
            log_evidence=self.log_evidence,
            trace=list(self.trace),
        )

    def to_record(self, node: str, order: list[str]) -> dict[str, Any]:
        return {
            "node": node,
            "free_energy": self.free_energy,
            "sweeps": self.sweeps,
            "converged": self.converged,
            "marginals": {
                v: [float(x) for x in self.marginals[v]] for v in order if v in self.marginals
            },
        }


def uniform_marginals(graph: CausalFaultGraph, names: list[str]) -> dict[str, np.ndarray]:
    return {v: np.full(graph.arity(v), 1.0 / graph.arity(v)) for v in names}


def point_mass(arity: int, state: int) -> np.ndarray:
    dist = np.zeros(arity)
    dist[state] = 1.0
    return dist


def distributions(
    graph: CausalFaultGraph, evidence: Mapping[str, int], marginals: Mapping[str, np.ndarray]
) -> dict[str, np.ndarray]:
    """Point masses for evidence, marginals for the rest."""
    dists = {v: point_mass(graph.arity(v), s) for v, s in evidence.items()}
    dists.update({v: m for v, m in marginals.items() if v not in evidence})
    return dists


__all__ = [
    "InferenceProblem",
    "FamilyReadCounter",
    "Belief",
    "uniform_marginals",
    "point_mass",
    "distributions",
]
