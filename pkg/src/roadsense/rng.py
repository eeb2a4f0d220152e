"""Seeded pseudo-random number generation.

All synthetic data and oracle backends draw from this generator so that a
seed reproduces the exact same byte stream on any platform or language.

Algorithm: xorshift64* (Vigna 2016).  State transition on a 64-bit word::

    x ^= x >> 12
    x ^= (x << 25) & 0xFFFFFFFFFFFFFFFF
    x ^= x >> 27
    output = (x * 0x2545F4914F6CDD1D) & 0xFFFFFFFFFFFFFFFF

The all-zero state is invalid, so seed 0 is remapped to a fixed non-zero
constant.  Substream derivation hashes extra key material into the seed
with FNV-1a so per-item streams are independent of iteration order.
"""

from __future__ import annotations

MASK64 = 0xFFFFFFFFFFFFFFFF
_MULT = 0x2545F4914F6CDD1D
_ZERO_SEED = 0x9E3779B97F4A7C15

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & MASK64
    return h


class Xorshift64Star:
    """Deterministic 64-bit xorshift* generator."""

    def __init__(self, seed: int):
        self._state = (seed & MASK64) or _ZERO_SEED

    @classmethod
    def substream(cls, seed: int, *keys: object) -> "Xorshift64Star":
        """Derive an order-independent substream from a seed and keys."""
        h = seed & MASK64
        for key in keys:
            h ^= fnv1a64(str(key).encode("utf-8"))
            h = (h * _FNV_PRIME) & MASK64
        return cls(h)

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self._state = x
        return (x * _MULT) & MASK64

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) / float(1 << 53)

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in the inclusive range [lo, hi]."""
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        span = hi - lo + 1
        return lo + self.next_u64() % span

    def choice(self, seq):
        if not seq:
            raise ValueError("empty sequence")
        return seq[self.randint(0, len(seq) - 1)]

    def shuffle(self, seq: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(seq) - 1, 0, -1):
            j = self.randint(0, i)
            seq[i], seq[j] = seq[j], seq[i]
