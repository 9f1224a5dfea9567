"""Counter-based seed derivation and order-independent trial execution.

A seed is either a non-negative int or a tuple of them.  Trial ``i`` of an
experiment draws from ``make_rng(derive_seed(master, stream, i))`` so the
numbers it sees depend only on its own coordinates, never on which worker
ran it or in what order.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence, Tuple, Union

import numpy as np

Seed = Union[int, Tuple[int, ...]]

DEFAULT_SEED = 20240521

# stream keys; fixed integers so derived seeds are stable across releases
STREAM_MIXTURE = 1
STREAM_COMPONENT = 2
STREAM_BOOTSTRAP = 3
STREAM_CONTRAST = 4
STREAM_CRITERION = 5

TRIAL_CHUNK = 256

log = logging.getLogger(__name__)


def _flatten(seed: Seed) -> Tuple[int, ...]:
    if isinstance(seed, (int, np.integer)):
        parts = (int(seed),)
    else:
        parts = tuple(int(s) for s in seed)
    if not parts or any(p < 0 for p in parts):
        raise ValueError(f"seed must be non-negative integers, got {seed!r}")
    return parts


def derive_seed(seed: Seed, *keys: int) -> Tuple[int, ...]:
    """Append integer keys to a seed, yielding a child seed."""
    return _flatten(seed) + _flatten(keys) if keys else _flatten(seed)


def make_rng(seed: Seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(_flatten(seed)))))


def default_workers() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def map_chunks(fn: Callable, total: int, args: Sequence = (), workers: int = 1,
               chunk: int = TRIAL_CHUNK) -> list:
    """Apply ``fn(*args, start, stop)`` over ``[0, total)`` in fixed chunks.

    Chunk boundaries do not depend on ``workers``, and results come back in
    chunk order, so any worker count yields the same list.
    """
    bounds = [(s, min(s + chunk, total)) for s in range(0, total, chunk)]
    if workers <= 1 or len(bounds) <= 1:
        return [fn(*args, s, e) for s, e in bounds]
    log.debug("dispatching %d chunks to %d workers", len(bounds), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *args, s, e) for s, e in bounds]
        return [f.result() for f in futures]
