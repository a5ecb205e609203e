"""
PAIR-Agent: Fault Inference

Mean-field variational free-energy minimization over latent faults, an exact
enumeration oracle, Markov blanket posteriors and HW/SW origin attribution.
"""

from .attribution import OriginAttribution, OriginLabel, attribute_origin
from .blanket import blanket_posterior
from .exact import MAX_BINARY_EQUIVALENTS, exact_posterior, joint_free_energy, log_joint
from .problem import Belief, FamilyReadCounter, InferenceProblem
from .variational import (
    expected_log_family,
    free_energy,
    mean_field_update,
    minimize_free_energy,
)

__all__ = [
    "OriginAttribution",
    "OriginLabel",
    "attribute_origin",
    "blanket_posterior",
    "MAX_BINARY_EQUIVALENTS",
    "exact_posterior",
    "joint_free_energy",
    "log_joint",
    "Belief",
    "FamilyReadCounter",
    "InferenceProblem",
    "expected_log_family",
    "free_energy",
    "mean_field_update",
    "minimize_free_energy",
]
