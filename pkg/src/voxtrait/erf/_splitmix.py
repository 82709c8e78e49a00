"""Counter-based splitmix64 random stream.

The stream at counter n is finalize(seed + (n + 1) * GOLDEN), so any
element can be produced without generating its predecessors. Per-tree
seeds are stream elements of a master seed, and each tree runs its own
stream; the draw sequence is therefore independent of tree evaluation
order, which is what makes parallel and serial fits agree bit-exactly.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

#: 2^-53, scale for mapping the top 53 bits to [0, 1).
_U53 = 1.0 / (1 << 53)


def mix64(z: int) -> int:
    """splitmix64 finalizer on one 64-bit integer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return (z ^ (z >> 31)) & MASK64


def stream_element(seed: int, counter: int) -> int:
    """The counter-th output of the splitmix64 stream seeded by seed."""
    return mix64((seed + (counter + 1) * GOLDEN) & MASK64)


def tree_seeds(master_seed: int, n: int) -> np.ndarray:
    """Per-tree seeds as stream elements of the master seed."""
    return np.array([stream_element(master_seed, i) for i in range(n)], dtype=np.uint64)


class SplitMix:
    """Stateful splitmix64 stream with vectorized uniform draws."""

    def __init__(self, seed: int):
        self._state = int(seed) & MASK64
        self._counter = 0

    def uniforms(self, m: int) -> np.ndarray:
        """Next m doubles in [0, 1), one stream element each."""
        if m == 0:
            return np.empty(0)
        counters = np.arange(self._counter, self._counter + m, dtype=np.uint64)
        self._counter += m
        with np.errstate(over="ignore"):
            z = np.uint64(self._state) + (counters + np.uint64(1)) * np.uint64(GOLDEN)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
            z = z ^ (z >> np.uint64(31))
        return (z >> np.uint64(11)).astype(np.float64) * _U53

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])
