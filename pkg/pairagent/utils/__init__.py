"""
PAIR-Agent: Utility Functions

Environment handling and seed derivation shared by every module.
"""

from .env import describe_environment, find_env_file, load_env_file, pair_overrides
from .seeding import derive_seed, make_rng

__all__ = [
    "load_env_file",
    "find_env_file",
    "describe_environment",
    "pair_overrides",
    "derive_seed",
    "make_rng",
]
