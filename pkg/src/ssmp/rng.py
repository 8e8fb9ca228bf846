"""Counter-based random streams.

Every stream is a Philox generator keyed by (seed, tag, index), so any path
or block of paths can be regenerated on its own regardless of how work was
scheduled.
"""
from __future__ import annotations

import zlib

import numpy as np


def _tag_key(tag: str) -> int:
    return zlib.crc32(tag.encode())


def stream(seed: int, tag: str = "", index: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(_tag_key(tag), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return stream(int(rng))
