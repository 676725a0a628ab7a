"""Seeded sub-streams and worker-count-independent Monte Carlo execution.

Sample indices are cut into fixed blocks of ``BLOCK`` consecutive indices.
Block ``b`` of a run seeded with ``seed`` always draws from the generator
``default_rng(SeedSequence(seed, spawn_key=(*tag, b)))``, so sample ``i`` is a
deterministic function of ``(seed, tag, i)`` no matter how blocks are spread
over workers.  Results are reassembled in block order before any reduction.
"""

import os
import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK = 4096
THREADS_ENV = "REFINERY_THREADS"


def default_workers():
    """Worker cap from ``REFINERY_THREADS`` (unset or 0 means one per CPU)."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    n = int(raw) if raw else 0
    if n < 0:
        raise ValueError(f"{THREADS_ENV} must be >= 0")
    return n or (os.cpu_count() or 1)


def _key(part):
    return zlib.crc32(part.encode()) if isinstance(part, str) else int(part)


def block_rng(seed, block, tag=()):
    seq = np.random.SeedSequence(int(seed), spawn_key=(*map(_key, tag), int(block)))
    return np.random.default_rng(seq)


def blocks(n):
    """Yield ``(block_index, start, stop)`` covering ``range(n)``."""
    for b, start in enumerate(range(0, n, BLOCK)):
        yield b, start, min(start + BLOCK, n)


def map_blocks(fn, n, seed, tag=(), workers=None):
    """Run ``fn(rng, start, stop)`` for every block and return results in block order."""
    jobs = list(blocks(n))
    workers = default_workers() if workers is None else max(1, int(workers))

    def run(job):
        b, start, stop = job
        return fn(block_rng(seed, b, tag), start, stop)

    if workers == 1 or len(jobs) <= 1:
        return [run(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(run, jobs))


def mean_and_se(values):
    """Sample mean and standard error; numpy's pairwise summation over a fixed-order array."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if n == 0:
        raise ValueError("no samples")
    if np.all(values == values[0]):
        # constant samples: report the value itself, free of summation rounding
        return float(values[0]), 0.0
    mean = float(values.mean())
    return mean, float(values.std(ddof=1) / np.sqrt(n))


def sample_blocks(draw, n, seed, tag=(), workers=None):
    """Concatenate ``draw(rng, BLOCK)`` over blocks, truncated to ``n`` rows.

    Every block draws its full size, so row ``i`` does not depend on ``n``.
    ``draw`` returns an array or a tuple of arrays with samples along axis 0.
    """
    def run(rng, start, stop):
        out = draw(rng, BLOCK)
        if isinstance(out, tuple):
            return tuple(x[: stop - start] for x in out)
        return out[: stop - start]

    parts = map_blocks(run, n, seed, tag, workers)
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate([p[i] for p in parts]) for i in range(len(parts[0])))
    return np.concatenate(parts)
