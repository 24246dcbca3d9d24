"""Deterministic random-number substreams.

All Monte Carlo code in the package draws from ``numpy.random.Generator``
instances derived from a 64-bit seed plus an integer stream key.  The same
(seed, stream) pair always yields the same stream, and distinct keys yield
statistically independent streams, so replicas can be farmed out to any
number of workers without changing results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the substream identified by ``key`` under ``seed``.

    Distinct keys (of any length) map to independent streams; identical
    inputs reproduce the stream bit for bit.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class RngSeed:
    """A reproducible stream handle: master seed plus replica index."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        return substream(self.seed, self.stream_id)


# Replicas are grouped into fixed-size blocks, one substream per block, so
# that merges are independent of worker scheduling.
BLOCK_SIZE = 4096


def blocks(reps: int, block_size: int = BLOCK_SIZE):
    """Yield (block_index, size) covering ``reps`` replicas in order."""
    out = []
    start = 0
    index = 0
    while start < reps:
        size = min(block_size, reps - start)
        out.append((index, size))
        start += size
        index += 1
    return out
