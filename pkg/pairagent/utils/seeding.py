"""
Seed derivation.

A master seed expands into independent sub-seeds per (module, round, ...) label
path: seed = first 8 bytes (big-endian) of SHA-256("<master>/<label>/<label>...").
Adding a new consumer of randomness never shifts the streams of existing ones.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(master: int, *labels: object) -> int:
    """Derive a 63-bit sub-seed from a master seed and a label path."""
    path = "/".join([str(master), *(str(label) for label in labels)])
    digest = hashlib.sha256(path.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def make_rng(master: int, *labels: object) -> np.random.Generator:
    """numpy Generator seeded from `derive_seed(master, *labels)`."""
    return np.random.default_rng(derive_seed(master, *labels))


__all__ = ["derive_seed", "make_rng"]
