"""Deterministic random-stream derivation for replicated Monte Carlo runs.

Every estimator draws its randomness from counter-style streams: the Philox
key is the pair (master seed, replicate index), so any replicate can be
generated in isolation and results are independent of how replicates are
batched across workers.  Distinct estimator phases inside one run derive
their own sub-master seed from a text label so they never share a stream.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["replicate_rng", "derive_seed"]

_U64 = np.uint64


def replicate_rng(master_seed: int, replicate: int) -> np.random.Generator:
    """Independent generator for one replicate of a run.

    The stream depends only on (master_seed, replicate), not on batching or
    worker count.
    """
    if not 0 <= master_seed < 2**64:
        raise ValueError(f"master_seed must be a uint64, got {master_seed}")
    if not 0 <= replicate < 2**64:
        raise ValueError(f"replicate must be a uint64, got {replicate}")
    key = np.array([master_seed, replicate], dtype=_U64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(master_seed: int, label: str) -> int:
    """Stable sub-master seed for a named estimator phase.

    Phases that run inside the same experiment (e.g. the two sides of an
    identity check) must not reuse each other's replicate streams; hashing a
    label keeps them disjoint while remaining reproducible.
    """
    digest = hashlib.blake2b(
        f"{master_seed}:{label}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")
