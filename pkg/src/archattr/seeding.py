"""Deterministic RNG derivation.

Every stochastic step in the package draws from a Generator derived from an
integer tuple (master seed plus fixed purpose tags), so identical seeds give
bit-identical results regardless of execution order.
"""

from __future__ import annotations

import numpy as np

SeedParts = int | tuple[int, ...]


def _flatten(seed: SeedParts, extra: tuple[int, ...]) -> tuple[int, ...]:
    base = (seed,) if isinstance(seed, int) else tuple(seed)
    return base + extra


def derive_rng(seed: SeedParts, *tags: int) -> np.random.Generator:
    """Generator keyed by (seed, *tags)."""
    return np.random.default_rng(np.random.SeedSequence(_flatten(seed, tags)))


def derive_uint32(seed: SeedParts, *tags: int) -> int:
    """32-bit seed keyed by (seed, *tags), for RNGs that take a single word."""
    ss = np.random.SeedSequence(_flatten(seed, tags))
    return int(ss.generate_state(1, np.uint32)[0])
