"""Deterministic seed derivation for every random stream in the package.

Streams are keyed by (master seed, purpose tag, index) hashed through
SHA-256, so any object can be regenerated in isolation and results do
not depend on the order in which streams are consumed.  The generator
is Philox (counter-based), which numpy guarantees to produce identical
output across platforms for a given key.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["derive_seed", "generator"]

_MASK_64 = (1 << 64) - 1


def derive_seed(master_seed: int, tag: str, index: int = 0) -> int:
    """Return a 64-bit seed derived from (master_seed, tag, index)."""
    material = f"{int(master_seed)}:{tag}:{int(index)}".encode("utf-8")
    digest = hashlib.sha256(material).digest()
    return int.from_bytes(digest[:8], "big") & _MASK_64


def generator(master_seed: int, tag: str, index: int = 0) -> np.random.Generator:
    """Philox generator keyed by the derived 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=derive_seed(master_seed, tag, index)))
