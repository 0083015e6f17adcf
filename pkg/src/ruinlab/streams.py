"""Deterministic random-number streams for parallel Monte Carlo.

Stream ``i`` of seed ``s`` is the counter-based Philox4x64 generator keyed by
the pair ``(s, i)``.  The map (seed, index) -> key is injective, so distinct
pairs never collide, and every stream can be reconstructed from the (seed,
stream_index, n_sub) triples recorded in an Estimate.

Replications are assigned to streams in fixed blocks of ``BLOCK_SIZE``:
block b of an n-replication run always covers replications
[b*BLOCK_SIZE, min((b+1)*BLOCK_SIZE, n)) on stream index b, whatever the
worker count.  Stratified estimators reserve disjoint index ranges per
stratum (and per refinement level) via `stream_index`.
"""

import numpy as np

BLOCK_SIZE = 1 << 17

_STRATUM_STRIDE = 1 << 32
_LEVEL_STRIDE = 1 << 48


def make_stream(seed, index):
    """Generator for stream `index` of `seed` (both 64-bit unsigned)."""
    if not 0 <= int(seed) < 2 ** 64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    if not 0 <= int(index) < 2 ** 64:
        raise ValueError("stream index must be a 64-bit unsigned integer")
    key = np.array([int(seed), int(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def stream_index(block, stratum=0, level=0):
    """Stream index for a (block, stratum, level) triple; injective for
    block < 2**32, stratum < 2**16, level < 2**16."""
    if not (0 <= block < _STRATUM_STRIDE and 0 <= stratum < (1 << 16)
            and 0 <= level < (1 << 16)):
        raise ValueError("stream coordinates out of range")
    return level * _LEVEL_STRIDE + stratum * _STRATUM_STRIDE + block


def block_plan(n, block_size=BLOCK_SIZE):
    """Fixed block layout for n replications: list of (block, count)."""
    if n < 1:
        raise ValueError("need at least one replication")
    plan = []
    b = 0
    left = int(n)
    while left > 0:
        take = min(block_size, left)
        plan.append((b, take))
        left -= take
        b += 1
    return plan
