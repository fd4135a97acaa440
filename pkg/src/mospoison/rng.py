"""Deterministic seed derivation for per-clip RNG streams.

Every randomized stage derives an independent integer seed from its parent
seed plus stable keys (clip id, stage tag).  Streams are therefore
order-independent: parallel and serial builds draw identical values.
"""

from __future__ import annotations

import numpy as np


def derive_seed(*keys: int) -> int:
    """Mix integer keys into a single 64-bit seed via SeedSequence."""
    ss = np.random.SeedSequence(list(keys))
    return int(ss.generate_state(1, np.uint64)[0])


def derive_rng(*keys: int) -> np.random.Generator:
    """Generator seeded from the mixed keys."""
    return np.random.default_rng(derive_seed(*keys))
