"""Deterministic block-parallel execution.

Work is split into fixed-size blocks of replicate indices; workers only
distribute whole blocks, and results are reduced in block order.  Outputs are
therefore byte-identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

__all__ = ["run_blocks", "block_ranges"]

DEFAULT_BLOCK = 256


def block_ranges(n, block_size=DEFAULT_BLOCK):
    return [(lo, min(lo + block_size, n)) for lo in range(0, n, block_size)]


def run_blocks(fn, n, workers=1, block_size=DEFAULT_BLOCK):
    """Run fn(lo, hi) over fixed blocks of [0, n); return results in block order.

    The block size never depends on the worker count, so any floating-point
    reduction done inside a block (or later, across the ordered results) is
    reproduced exactly regardless of parallelism.
    """
    ranges = block_ranges(n, block_size)
    if workers <= 1 or len(ranges) <= 1:
        return [fn(lo, hi) for lo, hi in ranges]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, lo, hi) for lo, hi in ranges]
        return [f.result() for f in futures]
