"""Exact-in-law sampling of the time-t solution through its Wild-sum tree.

The solution at time ``t`` is the law of ``W*_{nu_t}``: grow a random recursive
binary tree for a geometric number ``nu_t`` of splits, weight independent
initial draws at the leaves by the products of collision weights along their
paths, and add the background terms collected at internal nodes.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ._rng import as_generator, check_seed, substream
from ._tree import TreeAccumulator, grow, uniform_picks
from .distributions import INITIAL_TYPES, abs_power, check_distribution
from .exceptions import ConfigurationError, ResourceCapError
from .measure import EmpiricalMeasure

T_MAX = 12.0
_CHUNK = 512


def sample_nu(t, rng):
    """Number of collisions in the Wild sum: ``P(nu = k) = e^-t (1 - e^-t)^k``."""
    if not (math.isfinite(t) and t >= 0):
        raise ValueError(f"t must be finite and >= 0, got {t}")
    return int(as_generator(rng).geometric(math.exp(-t))) - 1


def w_star_from_draws(rules, picks, leaf_values):
    """Evaluate ``W*_n`` from explicit split rules, leaf choices and leaf draws."""
    acc = TreeAccumulator()
    for k, rule in zip(picks, rules):
        acc.split(int(k), rule)
    return acc.combine(leaf_values)


def _grow_one(n, kernel, rng):
    rules = kernel.draw(rng, n)
    picks = uniform_picks(rng, n)
    leaves = np.empty(n + 1)
    leaves[0] = 1.0
    gamma = grow(rules.a0, rules.a1, rules.a2, picks, leaves)
    return leaves, gamma


def sample_w_star(n, kernel, init, rng):
    """One draw of ``W*_n``: ``n`` uniform-leaf splits, then one initial draw per leaf."""
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = as_generator(rng)
    leaves, gamma = _grow_one(int(n), kernel, rng)
    x = np.asarray(init.sample(rng, n + 1), dtype=float)
    return float(leaves @ x) + gamma


def _grow_batch(n, kernel, size, rng):
    leaves = np.zeros((size, n + 1))
    leaves[:, 0] = 1.0
    gamma = np.zeros(size)
    rows = np.arange(size)
    for j in range(n):
        k = rng.integers(0, j + 1, size)
        r = kernel.draw(rng, size)
        w = leaves[rows, k]
        gamma += w * r.a0
        leaves[rows, k] = w * r.a1
        leaves[:, j + 1] = w * r.a2
    return leaves, gamma


def sample_w_star_batch(n, kernel, init, size, rng):
    """``size`` independent draws of ``W*_n``, vectorized across draws."""
    rng = as_generator(rng)
    leaves, gamma = _grow_batch(int(n), kernel, int(size), rng)
    x = np.asarray(init.sample(rng, leaves.shape), dtype=float)
    return np.einsum("ij,ij->i", leaves, x) + gamma


def leaf_weight_moment(n, kernel, gamma, reps, rng):
    """Monte Carlo ``E sum_leaves |weight|^gamma`` after ``n`` splits: ``(estimate, se)``."""
    if n == 0:
        return 1.0, 0.0
    leaves, _ = _grow_batch(int(n), kernel, int(reps), as_generator(rng))
    s = abs_power(leaves, gamma).sum(axis=1)
    return float(s.mean()), float(s.std(ddof=1) / math.sqrt(s.size))


def c_n(q, n):
    """``Gamma(q + n) / (Gamma(n + 1) Gamma(q))`` as the product ``prod_j (1 + (q - 1)/j)``."""
    if not q > 0:
        raise ValueError(f"q must be > 0, got {q}")
    out = 1.0
    for j in range(1, int(n) + 1):
        out *= 1.0 + (q - 1.0) / j
    return out


def _mu_t_chunk(t, kernel, init, seed, start, stop):
    out = np.empty(stop - start)
    for i in range(start, stop):
        g = substream(seed, i)
        nu = sample_nu(t, g)
        leaves, gam = _grow_one(nu, kernel, g)
        x = np.asarray(init.sample(g, nu + 1), dtype=float)
        out[i - start] = leaves @ x + gam
    return out


def sample_mu_t(t, kernel, init, n_samples, seed, t_max=T_MAX, workers=1):
    """Draw ``n_samples`` values of ``W*_{nu_t}``, one private stream per sample.

    Sample ``i`` uses the stream keyed by ``(seed, i)``, so the result does not
    depend on ``workers``.
    """
    check_distribution(init, INITIAL_TYPES, what="init")
    seed = check_seed(seed)
    if not (math.isfinite(t) and t >= 0):
        raise ValueError(f"t must be finite and >= 0, got {t}")
    if t > t_max:
        raise ResourceCapError(
            f"t = {t} exceeds t_max = {t_max} (expected tree size e^t); "
            "use the steady-state solver for long-time behaviour")
    if n_samples < 1:
        raise ConfigurationError("n_samples must be >= 1")
    bounds = [(s, min(s + _CHUNK, n_samples)) for s in range(0, n_samples, _CHUNK)]
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _mu_t_chunk(t, kernel, init, seed, *b), bounds))
    else:
        parts = [_mu_t_chunk(t, kernel, init, seed, *b) for b in bounds]
    meta = {"t": float(t), "kernel": kernel.describe(), "init": init.describe(),
            "seed": seed, "n_samples": int(n_samples)}
    return EmpiricalMeasure(np.concatenate(parts), meta)
