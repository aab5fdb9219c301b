"""Deterministic chunked Monte Carlo.

Draws are split into fixed-size chunks and each chunk gets its own
generator seeded from ``(seed, chunk_index)``.  Results therefore depend only
on the seed and the total sample count, never on how many workers ran the
chunks.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK_SIZE = 2**16
DEFAULT_SEED = 0x5EED


def chunk_rng(seed, chunk):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(chunk)])))


def chunk_sizes(n_samples, chunk_size=CHUNK_SIZE):
    n_full, rest = divmod(int(n_samples), chunk_size)
    return [chunk_size] * n_full + ([rest] if rest else [])


def map_chunks(fn, n_samples, seed, workers=1, chunk_size=CHUNK_SIZE):
    """Call ``fn(rng, size)`` for every chunk and return results in chunk order."""
    jobs = list(enumerate(chunk_sizes(n_samples, chunk_size)))

    def run(job):
        index, size = job
        return fn(chunk_rng(seed, index), size)

    if workers is None or workers <= 1 or len(jobs) <= 1:
        return [run(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, jobs))


def ordered_map(fn, items, workers=1):
    """``list(map(fn, items))``, optionally on a thread pool; output order is input order."""
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
