"""Deterministic seed derivation.

``SeedSequence.spawn`` mutates its parent, so calling the same function twice
with the same sequence would draw different children. ``derive`` builds the
child from the parent's entropy and spawn key instead, which is pure.
"""

from __future__ import annotations

import zlib

import numpy as np

Seed = int | np.random.SeedSequence | None


def as_sequence(seed: Seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _key(part: int | str) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    return int(part)


def derive(seed: Seed, *keys: int | str) -> np.random.SeedSequence:
    """Child sequence of ``seed`` addressed by ``keys`` (ints or stream names)."""
    root = as_sequence(seed)
    return np.random.SeedSequence(
        root.entropy, spawn_key=tuple(root.spawn_key) + tuple(_key(k) for k in keys)
    )


def rng(seed: Seed, *keys: int | str) -> np.random.Generator:
    return np.random.default_rng(derive(seed, *keys))
