"""Deterministic 64-bit RNG used everywhere reproducibility matters.

The generator is xorshift64* (Vigna's variant): the state is a single
64-bit word advanced by three xor-shifts (``>>12``, ``<<25``, ``>>27``)
and the output is ``state * 2685821657736338717 mod 2^64``. Seeding runs
the raw seed through one round of splitmix64 so that small seeds (0, 1,
2, ...) do not produce correlated streams. Doubles are built from the
top 53 output bits, giving uniforms in [0, 1).

Pure integer arithmetic: streams are bit-identical across platforms and
Python versions, which the snapshot tests rely on.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_MULT = 2685821657736338717
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15


def _splitmix64(x: int) -> int:
    x = (x + _SPLITMIX_GAMMA) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


class Xorshift64Star:
    """xorshift64* stream; state is one nonzero 64-bit integer."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = _splitmix64(seed & _MASK64)
        if self.state == 0:
            self.state = _SPLITMIX_GAMMA

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x = (x ^ (x << 25)) & _MASK64
        x ^= x >> 27
        self.state = x
        return (x * _MULT) & _MASK64

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """Uniform double in [lo, hi); exactly lo when lo == hi."""
        u = (self.next_u64() >> 11) * 2.0**-53
        return lo + (hi - lo) * u

    def randrange(self, n: int) -> int:
        """Integer in [0, n) by rejection sampling (unbiased)."""
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        limit = _MASK64 - (_MASK64 + 1) % n
        while True:
            u = self.next_u64()
            if u <= limit:
                return u % n

    def clone(self) -> "Xorshift64Star":
        dup = object.__new__(Xorshift64Star)
        dup.state = self.state
        return dup
