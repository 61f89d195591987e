"""SplitMix64 generator and seed mixing.

The generator is Steele, Lea and Flood's SplitMix64: a Weyl sequence with
increment 0x9E3779B97F4A7C15 passed through the variant-13 avalanche
finalizer. The compiled kernels in ``_kernels`` carry an identical copy;
``tests/test_rng.py`` pins both to the same reference outputs.

Uniform doubles take the top 53 bits. Bounded integers are
``floor(u * k)`` clamped to ``k - 1``; the bias is below ``k / 2**53``.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = 1.0 / (1 << 53)


def fmix64(z: int) -> int:
    """SplitMix64 finalizer, a bijection on 64-bit words."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def mix64(*words: int) -> int:
    """Hash a tuple of integers into one 64-bit seed.

    Used as ``mix64(master_seed, point_index, run_index)`` so that every run
    of an experiment grid owns an independent stream.
    """
    h = 0x243F6A8885A308D3
    for w in words:
        h = fmix64((h ^ fmix64((w + GOLDEN) & MASK64)) + GOLDEN)
    return h


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return fmix64(self.state)

    def random(self) -> float:
        return (self.next_u64() >> 11) * _INV53

    def below(self, k: int) -> int:
        """Uniform integer in ``[0, k)``."""
        return min(int(self.random() * k), k - 1)
