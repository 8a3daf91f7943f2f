"""Portable deterministic PRNG.

Everything that must reproduce bit-for-bit (dataset generation, weight
initialization, training shuffles, randomized checks) draws from SplitMix64,
a counter-based 64-bit generator: output k is mix64(seed + (k+1) * GAMMA)
with the constants below. Being counter-based, any run of outputs can be
produced as a vectorized numpy computation without changing the stream.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Output mapped to [0, 1) using the top 53 bits.
_INV53 = 1.0 / (1 << 53)


def mix64(z: int) -> int:
    """SplitMix64 finalizer: bijective scramble of a 64-bit integer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def derive(seed: int, stream: int) -> int:
    """Decorrelated child seed for a named stream of a run seed."""
    return mix64((mix64(seed) + (stream & MASK64) * GAMMA) & MASK64)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Sequential view of the counter-based stream for one seed."""

    def __init__(self, seed: int):
        self._seed = seed & MASK64
        self._count = 0

    def next_u64(self) -> int:
        self._count += 1
        return mix64((self._seed + self._count * GAMMA) & MASK64)

    def next_float(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * _INV53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.next_float()

    def randint(self, n: int) -> int:
        """Uniform-ish integer in [0, n) (modulo reduction; n is tiny here)."""
        if n <= 0:
            raise ValueError("randint needs n > 0")
        return self.next_u64() % n

    def floats(self, count: int) -> np.ndarray:
        """Vectorized batch of next_float draws; advances the stream by count."""
        ks = np.arange(self._count + 1, self._count + count + 1, dtype=np.uint64)
        self._count += count
        with np.errstate(over="ignore"):
            states = np.uint64(self._seed) + ks * np.uint64(GAMMA)
        out = _mix64_array(states)
        return (out >> np.uint64(11)).astype(np.float64) * _INV53

    def uniform_array(self, shape: tuple[int, ...], lo: float, hi: float) -> np.ndarray:
        n = int(np.prod(shape)) if shape else 1
        return (lo + (hi - lo) * self.floats(n)).reshape(shape)

    def shuffle(self, items: np.ndarray) -> None:
        """In-place Fisher-Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(i + 1)
            items[i], items[j] = items[j], items[i]
