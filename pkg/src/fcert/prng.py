"""SplitMix64 generator with the handful of draws the package needs.

Kept bit-exact and free of numpy's generators so sampled episodes can be
reproduced from the seed by any implementation of the same constants.
"""
from __future__ import annotations

import hashlib
import math

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * MIX1) & MASK64
        z = ((z ^ (z >> 27)) * MIX2) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform double strictly inside (0, 1)."""
        return ((self.next_u64() >> 11) + 0.5) * 2.0**-53

    def randbelow(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` by rejection (no modulo bias)."""
        if n <= 0:
            raise ValueError("n must be positive")
        threshold = (1 << 64) % n
        while True:
            x = self.next_u64()
            if x >= threshold:
                return x % n

    def normal(self) -> float:
        # Box-Muller, cosine branch only: one normal per two uniforms
        u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def normals(self, n: int) -> list[float]:
        return [self.normal() for _ in range(n)]

    def sample(self, n: int, k: int) -> list[int]:
        """``k`` distinct indices from ``range(n)``, in draw order (partial Fisher-Yates)."""
        if not 0 <= k <= n:
            raise ValueError(f"cannot draw {k} of {n}")
        pool = list(range(n))
        for i in range(k):
            j = i + self.randbelow(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def shuffle(self, items: list) -> list:
        return [items[i] for i in self.sample(len(items), len(items))]


def derive_seed(root: int, *labels) -> int:
    """Seed of an independent stream named by ``labels`` under ``root``."""
    key = ":".join([str(int(root) & MASK64)] + [str(x) for x in labels]).encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def stream(root: int, *labels) -> SplitMix64:
    return SplitMix64(derive_seed(root, *labels))
