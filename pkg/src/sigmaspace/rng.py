"""Named, counter-based random streams derived from a single integer seed.

A stream is identified by the root seed plus a tuple of labels (strings or
non-negative ints). Strings are hashed with CRC32, so the derivation is
stable across processes and Python versions, and the order in which streams
are requested never changes what they produce.
"""
from __future__ import annotations

import zlib

import numpy as np

SeedLike = "int | np.random.SeedSequence"


def _label_key(label) -> int:
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError("integer stream labels must be non-negative")
        return int(label)
    return zlib.crc32(str(label).encode("utf-8"))


def as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, (int, np.integer)):
        return np.random.SeedSequence(int(seed) & (2**64 - 1))
    raise TypeError(f"expected an int seed or SeedSequence, got {type(seed).__name__}")


def fork(seed, *labels) -> np.random.SeedSequence:
    """Child seed sequence for ``labels`` under ``seed``."""
    base = as_seed_sequence(seed)
    key = tuple(base.spawn_key) + tuple(_label_key(lab) for lab in labels)
    return np.random.SeedSequence(base.entropy, spawn_key=key)


def stream(seed, *labels) -> np.random.Generator:
    return np.random.default_rng(fork(seed, *labels))
