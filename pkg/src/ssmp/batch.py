"""Block-parallel batch runner.

Paths are split into fixed-size blocks and block i always draws from
stream (seed, tag, i), so results do not depend on the number of workers.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from functools import partial

from .paths import PathBatch
from .rng import stream


def _run_one(fn, seed, tag, item):
    i, n = item
    out = fn(n, stream(seed, tag, i))
    out.seeds = [(int(seed), tag, int(i))] * n
    return out


def block_sizes(n_paths: int, block_size: int) -> list[tuple[int, int]]:
    n_blocks = -(-n_paths // block_size)
    return [(i, min(block_size, n_paths - i * block_size)) for i in range(n_blocks)]


def run_blocks(fn, n_paths: int, seed: int, tag: str, block_size: int = 10_000,
               workers: int | None = None) -> PathBatch:
    """Run fn(n, rng) -> PathBatch over blocks and concatenate in block order."""
    items = block_sizes(int(n_paths), int(block_size))
    workers = workers or os.cpu_count() or 1
    job = partial(_run_one, fn, seed, tag)
    if workers == 1 or len(items) == 1:
        parts = [job(it) for it in items]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(items))) as ex:
            parts = list(ex.map(job, items))
    return PathBatch.concat(parts)
