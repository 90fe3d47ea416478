"""Deterministic seed derivation.

All randomness in the engine flows from a single root seed through
``derive_seed``, so adding or reordering pipeline stages never perturbs the
random stream of an existing stage.
"""

from __future__ import annotations

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def derive_seed(root: int, *labels: str | int) -> int:
    """Derive a 64-bit seed from a root seed and a label path.

    Each label (stage name, trial index, ...) is folded in with an FNV-1a
    hash followed by a splitmix64 finalizer. The result is a pure function
    of ``(root, labels)``.
    """
    x = root & _MASK64
    for label in labels:
        x = _splitmix64(x ^ _fnv1a64(str(label).encode("utf-8")))
    return x


def rng_for(root: int, *labels: str | int) -> np.random.Generator:
    """A fresh, independent numpy Generator for the given label path."""
    return np.random.default_rng(derive_seed(root, *labels))
