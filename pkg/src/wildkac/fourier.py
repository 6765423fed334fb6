"""Empirical characteristic functions and stationarity residuals.

The residual compares the empirical characteristic function ``phi`` of a
candidate steady state with ``E[phi(A1 xi) phi(A2 xi) exp(i xi A0)]``, the
expectation taken over fresh rule draws. ``phi`` is evaluated at the scattered
frequencies ``A_i xi`` with a type-3 non-uniform FFT.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import finufft
import numpy as np

from ._rng import as_generator
from .kernels import InelasticKac
from .measure import EmpiricalMeasure

NUFFT_EPS = 1e-12
_DIRECT_MAX = 2_000_000  # use the direct sum below this many (sample x frequency) terms


def default_grid(half_width=5.0, count=41):
    return np.linspace(-half_width, half_width, count)


@dataclass
class CharFunGrid:
    xi: np.ndarray
    values: np.ndarray
    se: np.ndarray

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["xi", "re", "im", "se"])
        for x, v, s in zip(self.xi, self.values, self.se):
            w.writerow([repr(float(x)), repr(float(v.real)), repr(float(v.imag)), repr(float(s))])
        return buf.getvalue()


@dataclass
class ResidualReport:
    xi: np.ndarray
    residual: np.ndarray
    se: np.ndarray

    @property
    def max_abs_residual(self):
        return float(np.max(self.residual))

    @property
    def per_point(self):
        return [(float(x), float(r), float(s)) for x, r, s in zip(self.xi, self.residual, self.se)]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["xi", "residual", "se"])
        for x, r, s in self.per_point:
            w.writerow([repr(x), repr(r), repr(s)])
        return buf.getvalue()


def _samples(measure):
    if isinstance(measure, EmpiricalMeasure):
        return measure.samples
    return np.asarray(measure, dtype=float).ravel()


def charfun(measure, xi_grid):
    """``(1/n) sum_k exp(i xi x_k)`` on the grid, with per-point standard errors."""
    x = _samples(measure)
    xi = np.asarray(xi_grid, dtype=float).ravel()
    if not np.all(np.isfinite(xi)):
        raise ValueError("xi grid must be finite")
    vals = np.empty(xi.size, dtype=complex)
    se = np.empty(xi.size)
    n = x.size
    for j, s in enumerate(xi):
        arg = s * x
        c, sn = np.cos(arg), np.sin(arg)
        vals[j] = complex(c.mean(), sn.mean())
        se[j] = math.sqrt((c.var() + sn.var()) / n) if n > 1 else 0.0
    return CharFunGrid(xi, vals, se)


def ecf_at(samples, freqs):
    """Empirical characteristic function at arbitrary frequencies."""
    x = np.ascontiguousarray(samples, dtype=float)
    s = np.ascontiguousarray(freqs, dtype=float).ravel()
    if x.size * s.size <= _DIRECT_MAX:
        return np.exp(1j * np.outer(s, x)).mean(axis=1)
    c = np.full(x.size, 1.0 / x.size, dtype=complex)
    return finufft.nufft1d3(x, c, s, eps=NUFFT_EPS, isign=1, nthreads=1)


def _gain_terms(x, xi, a0, a1, a2):
    """Per-draw summands ``phi(a1 xi) phi(a2 xi) exp(i xi a0)``, shape (grid, draws)."""
    k = a1.size
    freqs = np.concatenate([np.outer(xi, a1).ravel(), np.outer(xi, a2).ravel()])
    phi = ecf_at(x, freqs)
    p1 = phi[: xi.size * k].reshape(xi.size, k)
    p2 = phi[xi.size * k:].reshape(xi.size, k)
    return p1 * p2 * np.exp(1j * np.outer(xi, a0))


def _gain(x, xi, a0, a1, a2, block=8):
    means, ses = [], []
    for lo in range(0, xi.size, block):
        m, s = _mean_and_se(_gain_terms(x, xi[lo:lo + block], a0, a1, a2))
        means.append(m)
        ses.append(s)
    return np.concatenate(means), np.concatenate(ses)


def _mean_and_se(terms):
    k = terms.shape[1]
    mean = terms.mean(axis=1)
    if k < 2:
        return mean, np.zeros(terms.shape[0])
    var = terms.real.var(axis=1, ddof=1) + terms.imag.var(axis=1, ddof=1)
    return mean, np.sqrt(var / k)


def stationarity_residual(kernel, measure, xi_grid, mc_pairs, rng):
    """``|phi(xi) - E[phi(A1 xi) phi(A2 xi) e^{i xi A0}]|`` on the grid.

    ``se`` combines the standard error of the empirical ``phi`` with that of the
    Monte Carlo average over ``mc_pairs`` rule draws.
    """
    x = _samples(measure)
    xi = np.asarray(xi_grid, dtype=float).ravel()
    r = kernel.draw(as_generator(rng), int(mc_pairs))
    gain, gain_se = _gain(x, xi, r.a0, r.a1, r.a2)
    cf = charfun(x, xi)
    return ResidualReport(xi, np.abs(cf.values - gain), np.hypot(cf.se, gain_se))


def thermal_bath_residual(p, m0, sigma2, measure, xi_grid, mc_pairs, rng):
    """Residual of ``phi = E[phi(A1 xi) phi(A2 xi)] - sigma2 xi^2 phi + i m0 xi phi``.

    Weights come from the inelastic Kac rule with inelasticity ``p``.
    """
    x = _samples(measure)
    xi = np.asarray(xi_grid, dtype=float).ravel()
    r = InelasticKac(p).draw(as_generator(rng), int(mc_pairs))
    gain, gain_se = _gain(x, xi, np.zeros_like(r.a0), r.a1, r.a2)
    cf = charfun(x, xi)
    rhs = gain - sigma2 * xi**2 * cf.values + 1j * m0 * xi * cf.values
    factor = np.abs(1.0 + sigma2 * xi**2 - 1j * m0 * xi)
    return ResidualReport(xi, np.abs(cf.values - rhs), np.hypot(factor * cf.se, gain_se))
