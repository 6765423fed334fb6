"""Scalar probability laws used as kernel ingredients and initial data.

Each law knows how to sample itself and, where cheap, its exact moments.
``expect(f)`` integrates a scalar function against the law (exact sums for
discrete laws, adaptive quadrature otherwise) and backs the quadrature route
for ``q(gamma)`` on kernels driven by a scalar latent variable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .exceptions import ConfigurationError

QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-12


def abs_power(a, gamma):
    """``|a|**gamma`` with the convention ``0**0 = 0``."""
    a = np.abs(np.asarray(a, dtype=float))
    out = np.power(a, gamma)
    return np.where(a == 0.0, 0.0, out)


def _interval_abs_power_mean(u, v, gamma):
    # mean of |z|^gamma for z uniform on [u, v]
    if u == v:
        return float(abs_power(u, gamma))
    lo, hi = min(u, v), max(u, v)
    g1 = gamma + 1.0
    return (math.copysign(abs(hi) ** g1, hi) - math.copysign(abs(lo) ** g1, lo)) / (g1 * (hi - lo))


class Distribution:
    """Common interface. Subclasses are frozen dataclasses."""

    kind = "distribution"

    def sample(self, rng, size=None):
        raise NotImplementedError

    @property
    def mean(self):
        raise NotImplementedError

    @property
    def second_moment(self):
        raise NotImplementedError

    @property
    def variance(self):
        return self.second_moment - self.mean**2

    @property
    def nonnegative(self):
        return False

    @property
    def support(self):
        return (-math.inf, math.inf)

    def affine_abs_moment(self, c, s, gamma):
        """Exact ``E|c + s X|^gamma`` or ``None`` when no closed form is coded."""
        return None

    def abs_moment(self, gamma):
        return self.affine_abs_moment(0.0, 1.0, gamma)

    def expect(self, f):
        """``E f(X)`` for a scalar function ``f``."""
        raise NotImplementedError

    def describe(self):
        out = {"type": self.kind}
        for k, v in self.__dict__.items():
            out[k] = v
        return out


@dataclass(frozen=True)
class PointMass(Distribution):
    value: float = 0.0
    kind = "point_mass"

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ConfigurationError("point mass location must be finite")

    def sample(self, rng, size=None):
        if size is None:
            return float(self.value)
        return np.full(size, float(self.value))

    @property
    def mean(self):
        return float(self.value)

    @property
    def second_moment(self):
        return float(self.value) ** 2

    @property
    def nonnegative(self):
        return self.value >= 0

    @property
    def support(self):
        return (self.value, self.value)

    def affine_abs_moment(self, c, s, gamma):
        return float(abs_power(c + s * self.value, gamma))

    def expect(self, f):
        return f(self.value)


@dataclass(frozen=True)
class UniformInterval(Distribution):
    low: float = 0.0
    high: float = 1.0
    kind = "uniform"

    def __post_init__(self):
        if not (math.isfinite(self.low) and math.isfinite(self.high)) or self.high < self.low:
            raise ConfigurationError(f"need finite low <= high, got [{self.low}, {self.high}]")

    def sample(self, rng, size=None):
        return rng.uniform(self.low, self.high, size)

    @property
    def mean(self):
        return 0.5 * (self.low + self.high)

    @property
    def second_moment(self):
        a, b = self.low, self.high
        return (a * a + a * b + b * b) / 3.0

    @property
    def nonnegative(self):
        return self.low >= 0

    @property
    def support(self):
        return (self.low, self.high)

    def affine_abs_moment(self, c, s, gamma):
        return _interval_abs_power_mean(c + s * self.low, c + s * self.high, gamma)

    def expect(self, f):
        a, b = self.low, self.high
        if a == b:
            return f(a)
        val, _ = integrate.quad(f, a, b, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)
        return val / (b - a)


@dataclass(frozen=True)
class UniformOn01(UniformInterval):
    low: float = field(default=0.0, init=False)
    high: float = field(default=1.0, init=False)
    kind = "uniform01"

    def describe(self):
        return {"type": self.kind}


@dataclass(frozen=True)
class _Discrete(Distribution):
    """Finite support helper; subclasses provide ``atoms``."""

    @property
    def atoms(self):
        raise NotImplementedError

    def sample(self, rng, size=None):
        values, probs = zip(*self.atoms)
        u = rng.random(size)
        # inverse-CDF on the ordered atom list
        cdf = np.cumsum(probs)
        idx = np.searchsorted(cdf[:-1], u, side="right")
        out = np.asarray(values, dtype=float)[idx]
        return float(out) if size is None else out

    @property
    def mean(self):
        return sum(p * v for v, p in self.atoms)

    @property
    def second_moment(self):
        return sum(p * v * v for v, p in self.atoms)

    @property
    def nonnegative(self):
        return all(v >= 0 for v, p in self.atoms if p > 0)

    @property
    def support(self):
        vals = [v for v, p in self.atoms if p > 0]
        return (min(vals), max(vals))

    def affine_abs_moment(self, c, s, gamma):
        return sum(p * float(abs_power(c + s * v, gamma)) for v, p in self.atoms if p > 0)

    def expect(self, f):
        return sum(p * f(v) for v, p in self.atoms if p > 0)


def _check_prob(p, name="p"):
    if not (0.0 <= p <= 1.0):
        raise ConfigurationError(f"{name} must lie in [0, 1], got {p}")


@dataclass(frozen=True)
class Bernoulli(_Discrete):
    """Takes value 1 with probability ``p`` and 0 otherwise."""

    p: float = 0.5
    kind = "bernoulli"

    def __post_init__(self):
        _check_prob(self.p)

    @property
    def atoms(self):
        return ((0.0, 1.0 - self.p), (1.0, self.p))

    def sample(self, rng, size=None):
        out = (rng.random(size) < self.p).astype(float)
        return float(out) if size is None else out


@dataclass(frozen=True)
class SymmetricTwoPoint(_Discrete):
    """Mass ``p`` at ``x`` and ``1 - p`` at ``1 - x``.

    With the default ``p = 1/2`` the law is symmetric about 1/2, which is what
    the saving-propensity exchange rule expects of its random share.
    """

    x: float = 0.0
    p: float = 0.5
    kind = "symmetric_two_point"

    def __post_init__(self):
        _check_prob(self.p)
        if not math.isfinite(self.x):
            raise ConfigurationError("x must be finite")

    @property
    def atoms(self):
        return ((self.x, self.p), (1.0 - self.x, 1.0 - self.p))


@dataclass(frozen=True)
class TwoPoint(_Discrete):
    """Mass ``1 - p`` at ``low`` and ``p`` at ``high``."""

    low: float = -1.0
    high: float = 1.0
    p: float = 0.5
    kind = "two_point"

    def __post_init__(self):
        _check_prob(self.p)
        if not (math.isfinite(self.low) and math.isfinite(self.high)):
            raise ConfigurationError("two-point atoms must be finite")
        if self.low > self.high:
            raise ConfigurationError(f"need low <= high, got {self.low} > {self.high}")

    @property
    def atoms(self):
        return ((self.low, 1.0 - self.p), (self.high, self.p))


@dataclass(frozen=True)
class Exponential(Distribution):
    scale: float = 1.0
    kind = "exponential"

    def __post_init__(self):
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ConfigurationError(f"exponential mean must be > 0, got {self.scale}")

    def sample(self, rng, size=None):
        return rng.exponential(self.scale, size)

    @property
    def mean(self):
        return self.scale

    @property
    def second_moment(self):
        return 2.0 * self.scale**2

    @property
    def nonnegative(self):
        return True

    @property
    def support(self):
        return (0.0, math.inf)

    def affine_abs_moment(self, c, s, gamma):
        if c != 0.0:
            return None
        return abs(s * self.scale) ** gamma * special.gamma(gamma + 1.0)

    def expect(self, f):
        lam = self.scale
        val, _ = integrate.quad(
            lambda x: f(x) * math.exp(-x / lam) / lam, 0.0, math.inf,
            epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200,
        )
        return val

    def describe(self):
        return {"type": self.kind, "mean": self.scale}


@dataclass(frozen=True)
class Gaussian(Distribution):
    loc: float = 0.0
    scale: float = 1.0
    kind = "gaussian"

    def __post_init__(self):
        if not (math.isfinite(self.loc) and math.isfinite(self.scale)) or self.scale < 0:
            raise ConfigurationError("gaussian needs finite mean and std >= 0")

    def sample(self, rng, size=None):
        return rng.normal(self.loc, self.scale, size)

    @property
    def mean(self):
        return self.loc

    @property
    def second_moment(self):
        return self.loc**2 + self.scale**2

    @property
    def support(self):
        if self.scale == 0:
            return (self.loc, self.loc)
        return (-math.inf, math.inf)

    def affine_abs_moment(self, c, s, gamma):
        loc = c + s * self.loc
        scale = abs(s) * self.scale
        if scale == 0:
            return float(abs_power(loc, gamma))
        if loc != 0:
            return None
        return scale**gamma * 2 ** (gamma / 2) * special.gamma((gamma + 1) / 2) / math.sqrt(math.pi)

    def expect(self, f):
        if self.scale == 0:
            return f(self.loc)
        m, sd = self.loc, self.scale
        norm = 1.0 / (sd * math.sqrt(2 * math.pi))
        val, _ = integrate.quad(
            lambda x: f(x) * norm * math.exp(-0.5 * ((x - m) / sd) ** 2), -math.inf, math.inf,
            epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200,
        )
        return val

    def describe(self):
        return {"type": self.kind, "mean": self.loc, "std": self.scale}


@dataclass(frozen=True, eq=False)
class EmpiricalFromSamples(Distribution):
    """Resamples uniformly with replacement from a fixed set of values."""

    values: np.ndarray = None
    kind = "empirical"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel()
        if vals.size == 0:
            raise ConfigurationError("empirical distribution needs at least one value")
        if not np.all(np.isfinite(vals)):
            raise ConfigurationError("empirical values must be finite")
        vals = np.sort(vals)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def sample(self, rng, size=None):
        idx = rng.integers(0, self.values.size, size)
        out = self.values[idx]
        return float(out) if size is None else out

    @property
    def mean(self):
        return float(self.values.mean())

    @property
    def second_moment(self):
        return float(np.mean(self.values**2))

    @property
    def nonnegative(self):
        return bool(self.values[0] >= 0)

    @property
    def support(self):
        return (float(self.values[0]), float(self.values[-1]))

    def affine_abs_moment(self, c, s, gamma):
        return float(np.mean(abs_power(c + s * self.values, gamma)))

    def expect(self, f):
        return float(np.mean([f(v) for v in self.values]))

    def describe(self):
        return {"type": self.kind, "count": int(self.values.size)}


# Kernel ingredients (eta, A0 laws, backgrounds)
SCALAR_TYPES = (PointMass, UniformInterval, Bernoulli, SymmetricTwoPoint, TwoPoint, Exponential, Gaussian)
# Admissible initial data
INITIAL_TYPES = (PointMass, UniformInterval, Exponential, Gaussian, EmpiricalFromSamples, TwoPoint)


def check_distribution(dist, allowed=SCALAR_TYPES, what="distribution"):
    if not isinstance(dist, allowed):
        names = ", ".join(t.__name__ for t in allowed)
        raise ConfigurationError(f"{what} must be one of {names}; got {type(dist).__name__}")
    return dist
