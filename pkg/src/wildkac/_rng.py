"""Reproducible random sub-streams.

Every stream is a PCG64 generator keyed by ``(seed, *keys)`` through
:class:`numpy.random.SeedSequence`, so the draws consumed by a task depend only on
its key and never on how tasks are scheduled across workers.
"""

import numpy as np

SEED_MAX = 2**64 - 1


def check_seed(seed):
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return seed


def substream(seed, *keys):
    """Return an independent generator for the task identified by ``keys``."""
    ss = np.random.SeedSequence(entropy=check_seed(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng):
    """Accept a Generator, an int seed or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def child(rng):
    """Spawn a child generator (used for components drawn on a separate stream)."""
    return rng.spawn(1)[0]
