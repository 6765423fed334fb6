"""Kantorovich-Wasserstein distances and exponential contraction checks."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import kernels as K
from ._rng import as_generator, check_seed, substream
from .exceptions import PreconditionError, UndefinedMeanError
from .measure import EmpiricalMeasure
from .wild import sample_mu_t

EXACT_SMALL_MAX = 256


def _values(x):
    if isinstance(x, EmpiricalMeasure):
        return x.samples
    return np.sort(np.asarray(x, dtype=float).ravel())


def _finish(cost_mean, gamma):
    # l_gamma = (E|X - Y|^gamma)^(1 / max(gamma, 1))
    return cost_mean ** (1.0 / gamma) if gamma > 1 else cost_mean


def wasserstein(gamma, x, y, mode="sorted"):
    """``l_gamma`` between two empirical measures.

    ``sorted`` uses the comonotone coupling: exact for ``gamma >= 1`` and an upper
    bound for ``gamma < 1``. ``exact_small`` solves the assignment problem and is
    limited to 256 atoms.
    """
    if not gamma > 0:
        raise ValueError("gamma must be > 0")
    xs, ys = _values(x), _values(y)
    if xs.size != ys.size:
        raise ValueError(f"sample counts differ ({xs.size} vs {ys.size}); subsample to match first "
                         "(see subsample_to_match) or use quantile_distance")
    if mode == "sorted":
        return _finish(float(np.mean(np.abs(xs - ys) ** gamma)), gamma)
    if mode == "exact_small":
        if xs.size > EXACT_SMALL_MAX:
            raise ValueError(f"exact_small handles at most {EXACT_SMALL_MAX} atoms")
        cost = np.abs(xs[:, None] - ys[None, :]) ** gamma
        rows, cols = linear_sum_assignment(cost)
        return _finish(float(cost[rows, cols].mean()), gamma)
    raise ValueError(f"unknown mode {mode!r}")


def subsample_to_match(x, n, rng):
    """Uniform subsample (without replacement) of ``x`` down to ``n`` atoms."""
    xs = _values(x)
    if n > xs.size:
        raise ValueError("cannot subsample to a larger size")
    idx = as_generator(rng).choice(xs.size, size=n, replace=False)
    return np.sort(xs[idx])


def quantile_distance(gamma, x, y):
    """Comonotone ``l_gamma`` between empirical measures of any sizes.

    Integrates ``|F^-1(u) - G^-1(u)|^gamma`` over the merged quantile breakpoints;
    equals the ``sorted`` mode of :func:`wasserstein` when sizes agree.
    """
    xs, ys = _values(x), _values(y)
    n, m = xs.size, ys.size
    if n == m:
        return wasserstein(gamma, xs, ys)
    # breakpoints i/n and j/m merged exactly in integer arithmetic
    grid = np.union1d(np.arange(1, n + 1) * m, np.arange(1, m + 1) * n)
    widths = np.diff(np.concatenate([[0], grid])) / (n * m)
    lefts = np.concatenate([[0], grid[:-1]])
    ix = lefts // m
    iy = lefts // n
    cost = float(np.sum(widths * np.abs(xs[ix] - ys[iy]) ** gamma))
    return _finish(cost, gamma)


def bootstrap_se(gamma, x, y, n_boot=100, rng=None):
    """Standard error of the plug-in distance by resampling both samples."""
    rng = as_generator(rng)
    xs, ys = _values(x), _values(y)
    stats = np.empty(n_boot)
    for b in range(n_boot):
        bx = np.sort(xs[rng.integers(0, xs.size, xs.size)])
        by = np.sort(ys[rng.integers(0, ys.size, ys.size)])
        stats[b] = quantile_distance(gamma, bx, by)
    return float(stats.std(ddof=1))


@dataclass
class ContractionReport:
    gamma: float
    times: list
    observed: list
    bounds: list
    prefactor: float
    rate: float
    q: float
    initial_distance: float
    mc_floor: list
    passed: list
    proposition: str
    slack: float
    seed: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def all_passed(self):
        return all(self.passed)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "observed", "bound", "mc_floor", "pass"])
        for row in zip(self.times, self.observed, self.bounds, self.mc_floor, self.passed):
            t, obs, bnd, floor, ok = row
            w.writerow([repr(float(t)), repr(obs), repr(bnd), repr(floor), int(ok)])
        return buf.getvalue()

    def summary(self):
        return {"gamma": self.gamma, "rate": self.rate, "prefactor": self.prefactor, "q": self.q,
                "initial_distance": self.initial_distance, "proposition": self.proposition,
                "slack": self.slack, "seed": self.seed, "all_passed": self.all_passed, **self.extra}

    def summary_json(self):
        return json.dumps(self.summary(), sort_keys=True, indent=2) + "\n"


def contraction_regime(kernel, init, gamma, steady_ref=None, mean_tol=1e-9):
    """Check the hypotheses of the matching contraction bound.

    Returns ``(label, prefactor, rate, q)``; raises :class:`PreconditionError`
    naming the failed condition.
    """
    if not 0 < gamma <= 2:
        raise PreconditionError(f"gamma = {gamma} outside (0, 2]")
    if not kernel.a0_abs_moment_finite(gamma):
        raise PreconditionError(f"E|A0|^{gamma} is not finite")
    q = K.q_value(kernel, gamma)
    if not q < 1:
        raise PreconditionError(f"q({gamma}) = {q:.6g} is not < 1")
    if gamma < 1:
        return "gamma<1", 1.0, 1.0 - q, q
    if gamma == 1:
        return "gamma=1", 1.0, 1.0 - q, q
    init_mean = init.mean
    scale = max(1.0, abs(init_mean))
    try:
        mbar = K.m_bar(kernel)
    except UndefinedMeanError:
        if kernel.mean_a0() != 0.0:
            raise PreconditionError("E[A1 + A2] = 1 needs E[A0] = 0") from None
        if steady_ref is not None and abs(_values(steady_ref).mean() - init_mean) > mean_tol * scale:
            raise PreconditionError("steady reference mean differs from the pinned initial mean") from None
        return "gamma>1 pinned", 2 ** (1 / gamma), (1.0 - q) / gamma, q
    if abs(init_mean - mbar) > mean_tol * max(1.0, abs(mbar)):
        raise PreconditionError(f"initial mean {init_mean:.6g} differs from the forced mean {mbar:.6g}")
    return "gamma>1 forced mean", 2 ** (1 / gamma), (1.0 - q) / gamma, q


def contraction_check(kernel, init, gamma, times, n_samples, steady_ref, seed,
                      slack=0.15, floor_factor=3.0, n_boot=100, workers=1):
    """Compare ``l_gamma(mu_t, mu_inf)`` with its exponential bound at each time.

    ``steady_ref`` is a fixed reference sample of the steady state. A time passes
    when ``observed <= bound (1 + slack) + floor_factor * bootstrap_se``.
    """
    seed = check_seed(seed)
    label, pref, rate, q = contraction_regime(kernel, init, gamma, steady_ref)
    ref = _values(steady_ref)
    mu0 = sample_mu_t(0.0, kernel, init, n_samples, seed=_derived_seed(seed, 0), workers=workers)
    d0 = quantile_distance(gamma, mu0.samples, ref)
    observed, bounds, floors, passed = [], [], [], []
    for j, t in enumerate(times, start=1):
        mu = sample_mu_t(float(t), kernel, init, n_samples, seed=_derived_seed(seed, j), workers=workers)
        obs = quantile_distance(gamma, mu.samples, ref)
        se = bootstrap_se(gamma, mu.samples, ref, n_boot=n_boot, rng=substream(seed, 1_000_000 + j))
        bound = pref * d0 * math.exp(-rate * float(t))
        floor = floor_factor * se
        observed.append(obs)
        bounds.append(bound)
        floors.append(floor)
        passed.append(bool(obs <= bound * (1.0 + slack) + floor))
    return ContractionReport(gamma=gamma, times=[float(t) for t in times], observed=observed,
                             bounds=bounds, prefactor=pref, rate=rate, q=q, initial_distance=d0,
                             mc_floor=floors, passed=passed, proposition=label, slack=slack, seed=seed)


def _derived_seed(seed, j):
    # a fresh 64-bit seed per time point
    return int(substream(seed, 2_000_000 + j).integers(0, 2**63))
