"""Steady states of the collision map ``mu -> law(A0 + A1 Y1 + A2 Y2)``.

The production solver is population dynamics: a pool of values is pushed
through the map by resampling pairs with replacement and drawing fresh rules,
starting from a point mass at the target mean. ``sample_m_star`` evaluates the
same iterate exactly in law on a complete binary tree and serves as a small-n
oracle.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import kernels as K
from ._rng import as_generator, check_seed, substream
from .exceptions import (ConfigurationError, ConvergenceWarning, InfiniteMomentError,
                         ResourceCapError, UnsupportedMethodError)
from .measure import EmpiricalMeasure

M_STAR_MAX_DEPTH = 22
_CHUNK = 16_384


@dataclass(frozen=True)
class SteadyConfig:
    pool_size: int = 100_000
    max_iters: int = 500
    tol: float = 1e-2
    mean_pin: Optional[float] = None
    gamma_check: float = 2.0
    # sweeps always run before the gap test; the gap has a Monte Carlo floor of
    # order scale / sqrt(pool_size), so tol alone cannot certify contraction
    min_iters: int = 20

    def __post_init__(self):
        if self.pool_size < 100:
            raise ConfigurationError("pool_size must be >= 100", "pool_size")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be >= 1", "max_iters")
        if self.min_iters < 0:
            raise ConfigurationError("min_iters must be >= 0", "min_iters")
        if not self.tol > 0:
            raise ConfigurationError("tol must be > 0", "tol")
        if not 0 < self.gamma_check <= 2:
            raise ConfigurationError("gamma_check must lie in (0, 2]", "gamma_check")
        if self.mean_pin is not None and not math.isfinite(self.mean_pin):
            raise ConfigurationError("mean_pin must be finite", "mean_pin")

    def check_kernel(self, kernel):
        """Verify ``q(gamma_check) < 1`` and the mean-pinning rule for ``kernel``."""
        q = K.q_value(kernel, self.gamma_check)
        if not q < 1:
            raise ConfigurationError(
                f"q({self.gamma_check}) = {q:.6g} >= 1; no contraction to license convergence",
                "gamma_check")
        conserving = K.conserves_mass(kernel)
        if conserving:
            if self.mean_pin is None:
                raise ConfigurationError(
                    "E[A1 + A2] = 1: the steady state is unique only once its mean is pinned",
                    "mean_pin")
            ma = kernel.mean_a0()
            if ma is None or ma != 0.0:
                raise ConfigurationError("E[A1 + A2] = 1 requires E[A0] = 0", "kernel")
        elif self.mean_pin is not None:
            raise ConfigurationError(
                "mean_pin applies only when E[A1 + A2] = 1; the steady mean is forced", "mean_pin")
        return q

    def target_mean(self, kernel):
        return self.mean_pin if self.mean_pin is not None else K.m_bar(kernel)


@dataclass
class SteadyResult:
    measure: EmpiricalMeasure
    iterations: int
    final_gap: float
    converged: bool
    log: list = field(default_factory=list)


def _push(values, kernel, rng, size):
    # one Monte Carlo application of the collision map
    n = values.size
    i1 = rng.integers(0, n, size)
    i2 = rng.integers(0, n, size)
    r = kernel.draw(rng, size)
    return r.a0 + r.a1 * values[i1] + r.a2 * values[i2]


def iterate_pool(pool, kernel, rng):
    """Return a pool of the same size drawn from the collision map applied to ``pool``."""
    values = pool.samples if isinstance(pool, EmpiricalMeasure) else np.asarray(pool, dtype=float)
    if values.size == 0:
        raise ValueError("pool must be non-empty")
    out = _push(values, kernel, as_generator(rng), values.size)
    meta = pool.meta if isinstance(pool, EmpiricalMeasure) else {}
    return EmpiricalMeasure(out, meta)


def _iterate_keyed(values, kernel, seed, it, workers):
    n = values.size
    bounds = [(s, min(s + _CHUNK, n)) for s in range(0, n, _CHUNK)]

    def run(chunk):
        c, (lo, hi) = chunk
        return _push(values, kernel, substream(seed, it, c), hi - lo)

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, enumerate(bounds)))
    else:
        parts = [run(c) for c in enumerate(bounds)]
    return np.concatenate(parts)


def l2_gap(x, y):
    """``l_2`` distance between two equal-size sorted samples."""
    return float(np.sqrt(np.mean((x - y) ** 2)))


def solve_steady(kernel, config, seed, init_pool=None, workers=1, warn=True):
    """Population-dynamics solution of the fixed-point equation.

    Iteration ``it`` draws from streams keyed by ``(seed, it, chunk)``. When
    ``config.mean_pin`` is set the pool is recentred after every sweep.
    Stops once the l2 gap between consecutive sorted pools is at most ``tol``
    (after at least ``min_iters`` sweeps).
    """
    seed = check_seed(seed)
    config.check_kernel(kernel)
    target = config.target_mean(kernel)
    if init_pool is None:
        x = np.full(config.pool_size, float(target))
    else:
        x = np.sort(np.asarray(init_pool, dtype=float).ravel())
        if x.size != config.pool_size:
            raise ConfigurationError("init_pool size must equal pool_size", "pool_size")
    log = []
    gap = math.inf
    it = 0
    converged = False
    while it < config.max_iters:
        it += 1
        y = _iterate_keyed(x, kernel, seed, it, workers)
        if config.mean_pin is not None:
            y += config.mean_pin - y.mean()
        y.sort()
        gap = l2_gap(x, y)
        x = y
        log.append({"iteration": it, "gap": gap, "mean": float(x.mean()), "variance": float(x.var(ddof=1))})
        if gap <= config.tol and it >= config.min_iters:
            converged = True
            break
    if not converged and warn:
        warnings.warn(f"steady-state solver stopped after {it} iterations with gap {gap:.3g} > tol "
                      f"{config.tol:.3g}", ConvergenceWarning, stacklevel=2)
    meta = {"t": "steady", "kernel": kernel.describe(), "seed": seed,
            "pool_size": config.pool_size, "tol": config.tol, "mean_pin": config.mean_pin,
            "iterations": it, "converged": converged}
    return SteadyResult(EmpiricalMeasure(x, meta), it, gap, converged, log)


# ---------------------------------------------------------------------------
# complete-tree martingale

def m_star_from_rules(n, m, rules):
    """``M*_n`` from explicit rules listed level by level (breadth first).

    ``rules`` holds ``2^n - 1`` triples; node ``j`` of level ``k`` uses entry
    ``2^k - 1 + j`` and its children are nodes ``2j`` and ``2j + 1`` of level ``k + 1``.
    """
    rules = np.asarray(rules, dtype=float).reshape(-1, 3)
    if rules.shape[0] != 2**n - 1:
        raise ValueError(f"need {2**n - 1} rules for depth {n}")
    w = np.ones(1)
    total_bg = 0.0
    for k in range(n):
        r = rules[2**k - 1: 2 ** (k + 1) - 1]
        total_bg += float(np.dot(w, r[:, 0]))
        w = np.column_stack([w * r[:, 1], w * r[:, 2]]).ravel()
    return m * float(w.sum()) + total_bg


def sample_m_star_batch(n, kernel, m, size, rng):
    """``size`` draws of ``M*_n``, whose law is the ``n``-th iterate of the map from ``delta_m``."""
    if n > M_STAR_MAX_DEPTH:
        raise ResourceCapError(f"complete tree depth {n} exceeds cap {M_STAR_MAX_DEPTH} (2^n leaves)")
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = as_generator(rng)
    w = np.ones((size, 1))
    bg = np.zeros(size)
    for k in range(n):
        width = 2**k
        r = kernel.draw(rng, size * width)
        a0, a1, a2 = (a.reshape(size, width) for a in r)
        bg += np.einsum("ij,ij->i", w, a0)
        w = np.stack([w * a1, w * a2], axis=2).reshape(size, 2 * width)
    return m * w.sum(axis=1) + bg


def sample_m_star(n, kernel, m, rng):
    """One draw of ``M*_n`` on the complete binary tree of depth ``n``."""
    return float(sample_m_star_batch(n, kernel, m, 1, rng)[0])


# ---------------------------------------------------------------------------
# closed-form moments

class SteadyMoments(NamedTuple):
    mean: float
    second_moment: float
    variance: float
    se: Optional[dict] = None


def steady_moments(kernel, m0=None, mc_reps=None, rng=None):
    """Mean and second moment of the steady state from the fixed-point identity.

    ``E X^2 (1 - q(2)) = E[A0^2] + 2 E[A1 A2] m^2 + 2 E[A0 (A1 + A2)] m`` where ``m``
    is the steady mean. Cross moments come from declared facts, or from ``mc_reps``
    Monte Carlo draws (standard errors reported in ``se``).
    """
    if K.conserves_mass(kernel):
        if m0 is None:
            raise ConfigurationError("E[A1 + A2] = 1: pass the pinned mean m0")
        mean = float(m0)
    else:
        mean = K.m_bar(kernel)
    q2 = K.q_value(kernel, 2.0, rng=rng)
    if q2 >= 1.0:
        raise InfiniteMomentError(f"q(2) = {q2:.6g} >= 1: the steady second moment is not finite")
    cm = kernel.cross_moments()
    se = None
    if cm is None:
        if mc_reps is None:
            raise UnsupportedMethodError("cross moments not declared; pass mc_reps for Monte Carlo")
        b = kernel.draw(as_generator(rng), mc_reps)
        cols = (b.a0**2, b.a1 * b.a2, b.a0 * (b.a1 + b.a2))
        cm = K.CrossMoments(*(float(c.mean()) for c in cols))
        se = dict(zip(cm._fields, (float(c.std(ddof=1) / math.sqrt(mc_reps)) for c in cols)))
    second = (cm.a0_sq + 2.0 * cm.a1a2 * mean**2 + 2.0 * cm.a0_sum * mean) / (1.0 - q2)
    return SteadyMoments(mean, second, second - mean**2, se)
