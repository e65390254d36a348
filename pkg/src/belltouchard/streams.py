"""Per-path random streams and an order-preserving batch runner.

Every path ``i`` of a batch draws from its own generator, derived from
``(master_seed, i)`` through :class:`numpy.random.SeedSequence` spawn keys.
Which worker simulates a path therefore has no influence on its output, and
results are reassembled in path order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, List

import numpy as np

__all__ = ["derive_seed", "path_rng", "run_batch"]


def _check_seed(master_seed) -> int:
    if isinstance(master_seed, bool) or int(master_seed) != master_seed or master_seed < 0:
        raise ValueError(f"master seed must be a nonnegative integer, got {master_seed!r}")
    return int(master_seed)


def derive_seed(master_seed: int, index: int) -> int:
    """64-bit seed of path ``index`` under ``master_seed``."""
    ss = np.random.SeedSequence(_check_seed(master_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def path_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent generator for path ``index``.

    Equal to ``np.random.default_rng(derive_seed(master_seed, index))``, so a
    single path can be replayed from its stored seed alone.
    """
    return np.random.default_rng(derive_seed(master_seed, index))


def _run_chunk(fn, master_seed, start, stop):
    out = []
    for i in range(start, stop):
        seed = derive_seed(master_seed, i)
        out.append(fn(np.random.default_rng(seed), seed))
    return out


def run_batch(
    fn: Callable[[np.random.Generator, int], Any],
    n_paths: int,
    master_seed: int,
    workers: int = 1,
) -> List[Any]:
    """Evaluate ``fn(rng_i, seed_i)`` for paths ``i = 0..n_paths-1``, in order.

    ``seed_i = derive_seed(master_seed, i)`` and ``rng_i`` is the generator it seeds.

    ``fn`` must be picklable when ``workers > 1`` (a module-level function or a
    :func:`functools.partial` of one).
    """
    master_seed = _check_seed(master_seed)
    n_paths = int(n_paths)
    if n_paths < 0:
        raise ValueError("n_paths must be nonnegative")
    workers = max(1, int(workers or 1))
    if workers == 1 or n_paths < 2:
        return _run_chunk(fn, master_seed, 0, n_paths)

    n_chunks = min(n_paths, workers * 4)
    bounds = np.linspace(0, n_paths, n_chunks + 1).astype(int)
    results: List[Any] = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_run_chunk, fn, master_seed, int(lo), int(hi))
            for lo, hi in zip(bounds[:-1], bounds[1:])
            if hi > lo
        ]
        for fut in futures:
            results.extend(fut.result())
    return results
