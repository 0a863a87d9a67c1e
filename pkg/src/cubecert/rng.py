"""Seeded 64-bit PRNG used for every sampled computation.

A splitmix-style generator is pinned by its update constants so that any
reimplementation (in any language) reproduces the same streams byte for
byte.  Update: state += 0x9E3779B97F4A7C15; output mixing with
0xBF58476D1CE4E5B9 and 0x94D049BB133111EB.
"""

from __future__ import annotations

import math

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK = 0xFFFFFFFFFFFFFFFF


class SplitMix64:
    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        # 53 high bits -> [0, 1)
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform_open(self) -> float:
        # (0, 1), safe for log()
        return ((self.next_u64() >> 11) + 0.5) * (1.0 / (1 << 53))

    def normal(self) -> float:
        u = self.uniform_open()
        v = self.uniform_open()
        return math.sqrt(-2.0 * math.log(u)) * math.cos(2.0 * math.pi * v)

    def randint(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection on the top multiple."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (_MASK + 1) - (_MASK + 1) % bound
        while True:
            u = self.next_u64()
            if u < limit:
                return u % bound

    def sample_without_replacement(self, population: int, k: int) -> list[int]:
        if k > population:
            raise ValueError("sample larger than population")
        chosen: set[int] = set()
        out = []
        while len(out) < k:
            c = self.randint(population)
            if c not in chosen:
                chosen.add(c)
                out.append(c)
        return out
