"""Project-wide random number generation.

Every stochastic routine draws from numpy's PCG64 bit generator, seeded
through :class:`numpy.random.SeedSequence`.  Child streams are derived by
appending integer keys to the parent seed, so ``derive_seed(s, k)`` is stable
across runs and platforms and independent of how many draws the parent made.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

UINT64_MAX = 2**64 - 1


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= UINT64_MAX:
        raise ConfigError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def generator(seed: int, *keys: int) -> np.random.Generator:
    """PCG64 generator for ``seed``, optionally specialised by ``keys``."""
    entropy = [_check_seed(seed), *(int(k) for k in keys)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic 64-bit child seed of ``seed`` for the stream ``keys``."""
    entropy = [_check_seed(seed), *(int(k) for k in keys)]
    state = np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)
    return int(state[0])
