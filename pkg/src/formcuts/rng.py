"""Deterministic random numbers for instance generation.

Every random draw in the package flows through :class:`SplitMix64` so
that a (parameters, seed) pair regenerates the identical instance on any
platform and in any language that implements the same recurrence.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """splitmix64: a seedable, portable 64-bit generator.

    The state advances by the golden-ratio increment and each output is
    the state pushed through two xorshift-multiply mixing rounds:

        state = (state + 0x9E3779B97F4A7C15) mod 2^64
        z = state
        z = ((z xor (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2^64
        z = ((z xor (z >> 27)) * 0x94D049BB133111EB) mod 2^64
        output = z xor (z >> 31)

    All arithmetic is modulo 2^64. The recurrence is the full contract:
    any implementation of it reproduces the package's instances bit for
    bit.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] via modulo reduction.

        The modulo bias is below span/2^64 (< 2^-57 for the spans used
        here, at most a few hundred) and is accepted for the sake of a
        one-line portable reduction.
        """
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        span = hi - lo + 1
        return lo + self.next_u64() % span


def round_half_up(x: float) -> float:
    """floor(x + 0.5): fixed tie-breaking, unlike Python's banker's round."""
    return math.floor(x + 0.5)
