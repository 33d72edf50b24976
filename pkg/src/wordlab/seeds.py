"""Stable seed derivation.

All randomness in the package flows through numpy generators seeded by a
hash of string-able parts, so results are reproducible across runs,
processes, and platforms and never depend on Python's per-process hash
randomization.
"""

import hashlib

import numpy as np


def derive_seed(*parts) -> int:
    """Collapse identity parts into a stable 64-bit seed."""
    key = "\x1f".join(str(p) for p in parts).encode("utf-8")
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return int.from_bytes(digest, "little")


def rng_for(*parts) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))


def sort_key(*parts) -> bytes:
    """Deterministic pseudo-random ordering key for the given identity."""
    key = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return hashlib.blake2b(key, digest_size=16).digest()
