"""Platform-independent pseudo random numbers.

All synthetic data in this package comes from SplitMix64 (Steele, Lea and
Flood, 2014).  The generator state is a single unsigned 64-bit integer and
the n-th output is a pure function of ``seed + n * GAMMA`` (mod 2**64)::

    state_n = seed + n * 0x9E3779B97F4A7C15
    z = state_n
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    out_n = z ^ (z >> 31)

Because outputs are counter based, blocks can be drawn with wrapping
``uint64`` array arithmetic and match the scalar path bit for bit.
Doubles in [0, 1) are ``(out >> 11) * 2**-53``.  Normal deviates use the
Box-Muller transform on consecutive uniform pairs.

The host language's default RNG is never used; its algorithm is not part
of any stable contract.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TWO_NEG_53 = 1.0 / (1 << 53)


def fmix64(z: int) -> int:
    """SplitMix64 output finalizer on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _fmix64_array(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def mix_seed(seed: int, index: int) -> int:
    """Derive an independent stream seed for item ``index`` of a run."""
    return fmix64((seed & MASK64) ^ fmix64((index & MASK64) + GAMMA))


class SplitMix64:
    """Seeded SplitMix64 stream with scalar and block draws."""

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        return fmix64(self.state)

    def random(self) -> float:
        return (self.next_u64() >> 11) * _TWO_NEG_53

    def u64_block(self, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError("block size must be >= 0")
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            states = np.uint64(self.state) + steps * np.uint64(GAMMA)
        self.state = (self.state + n * GAMMA) & MASK64
        return _fmix64_array(states)

    def uniform_block(self, n: int) -> np.ndarray:
        """``n`` doubles in [0, 1)."""
        return (self.u64_block(n) >> np.uint64(11)).astype(np.float64) * _TWO_NEG_53

    def normal_block(self, n: int) -> np.ndarray:
        """``n`` standard normal deviates (Box-Muller, cosine branch only)."""
        u = self.uniform_block(2 * n).reshape(n, 2) if n else np.empty((0, 2))
        radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        return radius * np.cos(2.0 * np.pi * u[:, 1])

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.random()
