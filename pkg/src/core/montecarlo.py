"""
Reproducible trial fan-out.

Trial i always draws from default_rng(SeedSequence(master_seed, spawn_key=(i,))),
so results depend only on (master_seed, i) and never on worker count or chunking.
Chunks are reassembled in trial-index order.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, List, Sequence, Tuple

import numpy as np

import config
from src.utils.logger import QLogger

TrialFn = Callable[..., Any]


def trial_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(index,)))


def _run_chunk(trial_fn: TrialFn, start: int, stop: int, master_seed: int, args: Tuple) -> List[Any]:
    return [trial_fn(i, trial_rng(master_seed, i), *args) for i in range(start, stop)]


def run_indexed(trial_fn: TrialFn, trials: int, master_seed: int, workers: int = 1,
                args: Sequence = (), chunk_size: int = None, label: str = "trials") -> List[Any]:
    """Run ``trial_fn(i, rng_i, *args)`` for i in [0, trials) and return results by index.

    With workers > 1, ``trial_fn`` and ``args`` must be picklable.
    """
    chunk_size = chunk_size or config.CHUNK_SIZE
    args = tuple(args)
    bounds = [(s, min(s + chunk_size, trials)) for s in range(0, trials, chunk_size)]
    results: List[Any] = []

    if workers <= 1 or len(bounds) <= 1:
        for n, (start, stop) in enumerate(bounds, 1):
            results.extend(_run_chunk(trial_fn, start, stop, master_seed, args))
            _progress(label, n, len(bounds))
        return results

    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_chunk, trial_fn, start, stop, master_seed, args) for start, stop in bounds]
        for n, future in enumerate(futures, 1):
            results.extend(future.result())
            _progress(label, n, len(bounds))
    return results


def _progress(label: str, done: int, total: int):
    if total > 1:
        QLogger.log(f"{label}: {int(100 * done / total)}% ({done}/{total} chunks)")


def three_sigma(p: float, trials: int) -> float:
    if trials <= 0:
        return math.inf
    return 3.0 * math.sqrt(max(p * (1.0 - p), 0.0) / trials)


def within_sigma(p_hat: float, p: float, trials: int, z: float = 3.0) -> bool:
    """Binomial z-gate; a degenerate analytic value (0 or 1) must be hit exactly."""
    bound = z / 3.0 * three_sigma(p, trials)
    if bound == 0.0:
        return abs(p_hat - p) <= 1e-12
    return abs(p_hat - p) <= bound
