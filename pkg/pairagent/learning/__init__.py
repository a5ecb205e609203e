"""
PAIR-Agent: Causal Fault Graph Learning

BDeu-scored hill-climbing with a structural prior anchored on the previous
round's graph, CPT fitting, and Markov blanket queries.
"""

from .graph import CausalFaultGraph, markov_blanket
from .score import (
    StructureScore,
    bde_score,
    family_counts,
    family_score,
    score_structure,
    structural_prior,
)
from .search import SearchLimits, fit_cpts, hill_climb

__all__ = [
    "CausalFaultGraph",
    "markov_blanket",
    "StructureScore",
    "bde_score",
    "family_counts",
    "family_score",
    "score_structure",
    "structural_prior",
    "SearchLimits",
    "fit_cpts",
    "hill_climb",
]
