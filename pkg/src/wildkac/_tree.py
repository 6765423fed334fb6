"""Random recursive binary tree growth.

A tree is tracked only through the weights of its live leaves and the running
background sum over internal nodes; node addresses are never built.
"""

from dataclasses import dataclass, field

import numpy as np
from numba import njit


@dataclass
class TreeAccumulator:
    """Growing tree state: live leaf weights, background sum ``gamma``, size ``n``."""

    leaves: list = field(default_factory=lambda: [1.0])
    gamma: float = 0.0
    n: int = 0

    def split(self, index, rule):
        """Turn leaf ``index`` into an internal node carrying ``rule = (a0, a1, a2)``."""
        a0, a1, a2 = rule
        w = self.leaves[index]
        self.gamma += w * a0
        self.leaves[index] = w * a1
        self.leaves.append(w * a2)
        self.n += 1

    def combine(self, leaf_values):
        """``sum_v weight(v) X_v + gamma`` for one value per live leaf."""
        if len(leaf_values) != len(self.leaves):
            raise ValueError("need one value per live leaf")
        return float(np.dot(self.leaves, leaf_values)) + self.gamma


@njit(cache=True, nogil=True)
def grow(a0, a1, a2, picks, leaves):
    """Apply ``len(picks)`` splits in place; return the background sum.

    ``leaves`` must have room for ``len(picks) + 1`` weights with ``leaves[0] = 1``.
    Split ``j`` replaces leaf ``picks[j]`` (uniform on the ``j + 1`` live leaves)
    and writes the second child at slot ``j + 1``.
    """
    gamma = 0.0
    for j in range(picks.shape[0]):
        k = picks[j]
        w = leaves[k]
        gamma += w * a0[j]
        leaves[k] = w * a1[j]
        leaves[j + 1] = w * a2[j]
    return gamma


def uniform_picks(rng, n):
    """Leaf index for each of ``n`` splits: split ``j`` is uniform on ``{0..j}``."""
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    return rng.integers(0, np.arange(1, n + 1, dtype=np.int64))
