"""Counter-based deterministic random streams.

Every random draw in the sampler comes from a stateless stream keyed by
(global_seed, batch_id, hop_index, dst_position).  Because the stream is a
pure function of its key and a draw counter, the same node sampled by any
worker thread, in any order, consumes the same random values.  The mixing
function is splitmix64.
"""

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """splitmix64 finalizer on a 64-bit integer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_key(global_seed: int, batch_id: int, hop: int, dst_pos: int) -> int:
    """Derive the 64-bit key of one destination node's draw stream."""
    k = mix64(global_seed ^ GOLDEN)
    k = mix64(k ^ batch_id)
    k = mix64(k ^ (hop + 0x51ED))
    k = mix64(k ^ dst_pos)
    return k


def stream_u64(key: int, counter: int) -> int:
    """The counter-th 64-bit draw of the stream with the given key."""
    return mix64((key + (counter + 1) * GOLDEN) & MASK64)


class CounterRng:
    """Sequential view over one keyed stream; next_u64 advances the counter."""

    def __init__(self, key: int):
        self.key = key & MASK64
        self.counter = 0

    def next_u64(self) -> int:
        u = stream_u64(self.key, self.counter)
        self.counter += 1
        return u

    def next_below(self, n: int) -> int:
        return self.next_u64() % n


def uniform_array(key: int, count: int) -> np.ndarray:
    """First `count` draws of a stream as a uint64 array (vectorized)."""
    ctr = np.arange(1, count + 1, dtype=np.uint64)
    z = np.uint64(key) + ctr * np.uint64(GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))
