"""Deterministic 64-bit counter-based random streams.

Every randomized operation in the package (tie-breaking, splits, random
filtering, synthesis) draws from a named SplitMix64 stream, so results are
reproducible from explicit seeds alone and independent of platform, thread
count, and Python hash randomization. The generator is fully specified so
it can be re-implemented in any language:

    output_i = mix64((seed + (i + 1) * 0x9E3779B97F4A7C15) mod 2**64)

where mix64 is the SplitMix64 finalizer (xor-shift 30 / multiply
0xBF58476D1CE4E5B9 / xor-shift 27 / multiply 0x94D049BB133111EB /
xor-shift 31). Sub-stream seeds are derived by folding FNV-1a-64 hashes of
purpose keys into the parent seed, one mix64 per key.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15

_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

_TWO53_INV = 2.0**-53


def mix64(z: int) -> int:
    """SplitMix64 finalizer: bijective 64-bit mixing."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & MASK64
    return h


def derive_seed(seed: int, *keys: object) -> int:
    """Derive a sub-stream seed from a parent seed and a path of names.

    Keys are stringified and UTF-8 encoded, so derive_seed(s, "split") and
    derive_seed(s, "filter", "entropy", 3) are stable, documented values.
    """
    h = seed & MASK64
    for key in keys:
        h = mix64(h ^ fnv1a64(str(key).encode("utf-8")))
    return h


class RandomStream:
    """A single named SplitMix64 stream.

    The stream position is an explicit counter; batch methods produce
    exactly the same values as repeated scalar calls.
    """

    __slots__ = ("seed", "counter")

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self.counter = 0

    def next_u64(self) -> int:
        self.counter += 1
        return mix64((self.seed + self.counter * GAMMA) & MASK64)

    def uniform(self) -> float:
        """Uniform in [0, 1) with 53 random bits; consumes one draw."""
        return (self.next_u64() >> 11) * _TWO53_INV

    def pick(self, n: int) -> int:
        """Index in [0, n), consuming exactly one draw.

        floor(u * n) over a 53-bit uniform; selection bias is < n * 2**-53,
        negligible for the small n used in tie-breaking.
        """
        if n <= 0:
            raise ValueError(f"pick needs n >= 1, got {n}")
        return int(self.uniform() * n)

    def randbelow(self, n: int) -> int:
        """Unbiased integer in [0, n) by rejection sampling (variable draws)."""
        if n <= 0:
            raise ValueError(f"randbelow needs n >= 1, got {n}")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle, iterating from the last index down."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample_indices(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n), in draw order.

        Partial Fisher-Yates: position i swaps with i + randbelow(n - i).
        """
        if not 0 <= k <= n:
            raise ValueError(f"cannot sample {k} from {n}")
        idx = list(range(n))
        for i in range(k):
            j = i + self.randbelow(n - i)
            idx[i], idx[j] = idx[j], idx[i]
        return idx[:k]

    def uniforms(self, n: int) -> np.ndarray:
        """n uniforms in [0, 1); identical to n successive uniform() calls."""
        start = self.counter
        self.counter += n
        idx = np.arange(start + 1, start + n + 1, dtype=np.uint64)
        z = np.uint64(self.seed) + idx * np.uint64(GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        z ^= z >> np.uint64(31)
        return (z >> np.uint64(11)).astype(np.float64) * _TWO53_INV

    def normals(self, n: int) -> np.ndarray:
        """n standard normals; consumes exactly 2n draws.

        Box-Muller cosine branch: z = sqrt(-2 ln(1-u1)) * cos(2 pi u2).
        1-u1 is in (0, 1], so the log is finite and z = 0 when u1 = 0.
        """
        u = self.uniforms(2 * n)
        radius = np.sqrt(-2.0 * np.log1p(-u[0::2]))
        theta = (2.0 * np.pi) * u[1::2]
        return radius * np.cos(theta)
