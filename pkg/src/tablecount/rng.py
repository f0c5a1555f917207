"""Counter-mode pseudo-random streams built on the SplitMix64 finalizer.

Every draw is a pure function of (seed, position), so results never depend on
how work is chunked or parallelized: position k of a stream is the same number
whether it is produced in one vectorized call or many small ones.  Sub-streams
derived with ``derive_seed`` are statistically independent of the parent and of
each other, which lets a simulation hand one child seed to each replicate and
stay reproducible under any execution order.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

# SplitMix64 constants (Steele, Lea, Flood 2014).
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Distinct multiplier for seed derivation so child streams never alias
# positions of the parent output stream.
_SPLIT = 0xC2B2AE3D27D4EB4F

_INV_2_53 = 2.0 ** -53


def mix64(x: int) -> int:
    """64-bit avalanche finalizer from SplitMix64."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * _MIX1) & MASK64
    x = ((x ^ (x >> 27)) * _MIX2) & MASK64
    return x ^ (x >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Deterministic child seed, independent of the parent output stream.

    Children for distinct indices are decorrelated by a full avalanche pass;
    index may be any non-negative integer.
    """
    if index < 0:
        raise ValueError("index must be non-negative")
    tag = mix64(((index + 1) * _SPLIT) & MASK64)
    return mix64((seed ^ tag) & MASK64)


def _mix_block(x: np.ndarray) -> np.ndarray:
    """Vectorized mix64 over a uint64 array."""
    x = (x ^ (x >> np.uint64(30))) * np.uint64(_MIX1)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(_MIX2)
    return x ^ (x >> np.uint64(31))


def _raw_block(seed: int, start: int, count: int) -> np.ndarray:
    """uint64 outputs at positions start .. start+count-1 of the stream."""
    if count < 0:
        raise ValueError("count must be non-negative")
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    return _mix_block(np.uint64(seed) + idx * np.uint64(_GAMMA))


def derive_seed_block(seed: int, count: int) -> np.ndarray:
    """Child seeds 0..count-1 as one uint64 array; row i equals derive_seed(seed, i)."""
    idx = np.arange(1, count + 1, dtype=np.uint64)
    tags = _mix_block(idx * np.uint64(_SPLIT))
    return _mix_block(np.uint64(seed) ^ tags)


def uniform_matrix(seeds: np.ndarray, columns: int) -> np.ndarray:
    """Row i holds the first `columns` uniforms of the stream seeded by seeds[i]."""
    idx = np.arange(1, columns + 1, dtype=np.uint64)
    raw = _mix_block(seeds[:, None].astype(np.uint64) + idx[None, :] * np.uint64(_GAMMA))
    return (raw >> np.uint64(11)).astype(np.float64) * _INV_2_53


def exponential_matrix(seeds: np.ndarray, columns: int) -> np.ndarray:
    return -np.log1p(-uniform_matrix(seeds, columns))


def truncated_exponential_matrix(seeds: np.ndarray, columns: int, kappa: float) -> np.ndarray:
    g = exponential_matrix(seeds, columns)
    return np.where(g <= kappa, g, 0.0)


class SplitMix64Stream:
    """Sequential view over one counter-mode stream.

    The stream tracks its position, so successive calls return successive
    blocks; reading 8 values in one call or in two calls of 5 and 3 yields
    identical numbers.
    """

    def __init__(self, seed: int, position: int = 0):
        self.seed = seed & MASK64
        self.position = position

    def spawn(self, index: int) -> "SplitMix64Stream":
        """Independent child stream number ``index``."""
        return SplitMix64Stream(derive_seed(self.seed, index))

    def uint64(self, count: int) -> np.ndarray:
        block = _raw_block(self.seed, self.position, count)
        self.position += count
        return block

    def uniform(self, count: int) -> np.ndarray:
        """Doubles in [0, 1) with 53 random bits each."""
        return (self.uint64(count) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def exponential(self, count: int) -> np.ndarray:
        """Standard exponential variates via inversion."""
        # -log1p(-u) is exact for u near 0 and finite for all u < 1
        return -np.log1p(-self.uniform(count))

    def truncated_exponential(self, count: int, kappa: float) -> np.ndarray:
        """Exponential variates with values above kappa replaced by zero."""
        if kappa < 0:
            raise ValueError("kappa must be non-negative")
        g = self.exponential(count)
        return np.where(g <= kappa, g, 0.0)

    def integers(self, count: int, upper: int) -> np.ndarray:
        """Integers uniform on {0, ..., upper-1}."""
        if upper <= 0:
            raise ValueError("upper must be positive")
        return np.minimum((self.uniform(count) * upper).astype(np.int64), upper - 1)
