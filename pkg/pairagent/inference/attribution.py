"""
PAIR-Agent: Fault Origin Attribution

Splits a detected fault into hardware and software explanations by conditional
marginalization: the fault's posterior is recomputed once with only
hardware-context evidence clamped and once with only software-context
evidence, everything else left latent.
"""

from __future__ import annotations

from enum import Enum

from pydantic import BaseModel

from ..learning.graph import CausalFaultGraph
from ..logs.features import ColumnKind
from .exact import MAX_BINARY_EQUIVALENTS, exact_posterior
from .problem import Belief, InferenceProblem
from .variational import minimize_free_energy


class OriginLabel(str, Enum):
    HARDWARE = "hardware"
    SOFTWARE = "software"
    UNDETERMINED = "undetermined"


class OriginAttribution(BaseModel):
    variable: str
    hw_score: float
    sw_score: float
    label: OriginLabel


def _posterior_active(graph: CausalFaultGraph, evidence: dict[str, int], name: str) -> float:
    problem = InferenceProblem(graph=graph, evidence=evidence)
    if problem.binary_equivalents() <= MAX_BINARY_EQUIVALENTS:
        belief = exact_posterior(problem)
    else:
        belief = minimize_free_energy(problem)
    return belief.active(name)


def attribute_origin(
    graph: CausalFaultGraph,
    belief: Belief,
    name: str,
    margin: float = 0.05,
) -> OriginAttribution:
    """
    Hardware vs software origin of fault `name` under the belief's evidence.

    Exact enumeration is used whenever the latent space allows it. A side with
    no evidence scores the prior-propagated value.
    """
    hw = {v: s for v, s in belief.evidence.items() if graph.kind_of(v) == ColumnKind.HW}
    sw = {v: s for v, s in belief.evidence.items() if graph.kind_of(v) == ColumnKind.SW}
    hw_score = _posterior_active(graph, hw, name)
    sw_score = _posterior_active(graph, sw, name)

    if abs(hw_score - sw_score) < margin:
        label = OriginLabel.UNDETERMINED
    elif hw_score > sw_score:
        label = OriginLabel.HARDWARE
    else:
        label = OriginLabel.SOFTWARE
    return OriginAttribution(variable=name, hw_score=hw_score, sw_score=sw_score, label=label)


__all__ = ["OriginLabel", "OriginAttribution", "attribute_origin"]
