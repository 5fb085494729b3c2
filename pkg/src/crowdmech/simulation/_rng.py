"""Counter-based uniforms shared by both simulation backends.

Every random decision in a run is addressed by ``(slot, worker, stream)``
and mapped to a 64-bit counter::

    counter = ((slot * population + worker) << 16) | stream

The uniform for that counter is the SplitMix64 output at position
``counter`` of the sequence seeded with ``key``::

    z = key + (counter + 1) * 0x9E3779B97F4A7C15      (mod 2**64)
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)
    u = (z >> 11) * 2**-53                             in [0, 1)

and ``key`` is the first SplitMix64 output for the user seed.  Skipped
decisions cost nothing and never shift later draws.
"""
from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
MASK64 = (1 << 64) - 1
STREAM_BITS = 16

# stream ids
ROUTE, QUALITY, SAMPLE, ERROR, PEER1, PEER2, LEAVE, ENTRY, TRAIN_SELECT, INITIAL = range(10)
TRAIN_BASE = 16
MAX_TRAIN_TASKS = ((1 << STREAM_BITS) - TRAIN_BASE) // 2


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * MIX1
    z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


def seed_key(seed: int) -> int:
    z = np.array([(int(seed) + 0x9E3779B97F4A7C15) & MASK64], dtype=np.uint64)
    return int(_mix(z)[0])


def uniforms(key: int, slot: int, population: int, workers, stream) -> np.ndarray:
    """Uniforms for the given workers (and streams, broadcast) in one slot."""
    w = np.asarray(workers, dtype=np.uint64)
    s = np.asarray(stream, dtype=np.uint64)
    ctr = ((np.uint64(slot) * np.uint64(population) + w) << np.uint64(STREAM_BITS)) | s
    z = np.uint64(key) + (ctr + np.uint64(1)) * GOLDEN
    return (_mix(z) >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
