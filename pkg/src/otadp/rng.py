"""Keyed random streams.

Every random draw in a simulation comes from a generator built from the
experiment seed plus a tuple of keys (purpose tag, round, client id).  No
generator is ever shared, so results do not depend on call order or on how
many worker threads are used.
"""
from __future__ import annotations

import zlib

import numpy as np


def _key(k: int | str) -> int:
    if isinstance(k, str):
        return zlib.crc32(k.encode("utf-8"))
    k = int(k)
    if k < 0:
        raise ValueError(f"stream keys must be nonnegative, got {k}")
    return k


def stream(seed: int, *keys: int | str) -> np.random.Generator:
    """Return a fresh generator determined only by ``seed`` and ``keys``."""
    return np.random.default_rng(np.random.SeedSequence([_key(seed), *map(_key, keys)]))
