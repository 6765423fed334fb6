"""Random collision rules ``(A0, A1, A2)``.

A kernel produces the triple that maps two pre-collision velocities ``v, w`` to
``A1 v + A2 w + A0``. Within one draw the weights ``(A1, A2)`` share their latent
randomness (the same angle, share or uniform factor); additive backgrounds that
are independent of the weights come from a child stream.

Kernels are immutable. Each may declare exact facts (``mean_sum``, ``mean_a0``,
``q_closed_form``, cross moments); the module-level functions fall back to
quadrature or Monte Carlo when a fact is not available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy import integrate, special

from . import distributions as dists
from ._rng import as_generator, child
from .distributions import Distribution, abs_power
from .exceptions import ConfigurationError, UndefinedMeanError, UnsupportedMethodError

QUAD_EPSABS = 1e-10
TWO_PI = 2.0 * math.pi
# |E[A1+A2] - 1| below this counts as mass conservation for declared facts
EXACT_TOL = 1e-12


class RuleSample(NamedTuple):
    a0: float
    a1: float
    a2: float


class RuleBatch(NamedTuple):
    a0: np.ndarray
    a1: np.ndarray
    a2: np.ndarray

    def __len__(self):
        return self.a0.shape[0]


class CrossMoments(NamedTuple):
    """``E[A0^2]``, ``E[A1 A2]`` and ``E[A0 (A1 + A2)]``."""

    a0_sq: float
    a1a2: float
    a0_sum: float


class Kernel:
    """Base class for collision rules."""

    kind = "kernel"

    def draw(self, rng, size):
        """Return a :class:`RuleBatch` of ``size`` independent rules."""
        raise NotImplementedError

    # declared facts; ``None`` means "not known in closed form"
    def mean_sum(self) -> Optional[float]:
        return None

    def mean_a0(self) -> Optional[float]:
        return None

    def q_closed_form(self, gamma) -> Optional[float]:
        return None

    def cross_moments(self) -> Optional[CrossMoments]:
        return None

    def expect_weights(self, f):
        """``E f(A1, A2)`` by deterministic quadrature over the latent variables."""
        raise UnsupportedMethodError(f"{type(self).__name__} has no quadrature route")

    @property
    def nonnegative(self) -> bool:
        return False

    @property
    def has_background(self) -> bool:
        """True when ``A0`` is not identically zero."""
        return True

    def a0_abs_moment_finite(self, gamma) -> bool:
        return True

    def describe(self) -> dict:
        return {"type": self.kind}


def _describe(obj):
    if isinstance(obj, (Kernel, Distribution)):
        return obj.describe()
    return obj


def _check_base(base, what="base"):
    if not isinstance(base, Kernel):
        raise ConfigurationError(f"{what} must be a Kernel, got {type(base).__name__}")
    if base.has_background:
        raise ConfigurationError(f"{what} kernel must have A0 = 0; the wrapper supplies A0")
    return base


def _zero(size):
    return np.zeros(size)


def _u_power_mean(power):
    # E[U^power] for U ~ Uniform[0, 1]
    return 1.0 / (1.0 + power) if power > -1.0 else math.inf


@dataclass(frozen=True)
class KacClassical(Kernel):
    """``A1 = sin(theta)``, ``A2 = cos(theta)``, ``A0 = 0``."""

    kind = "kac"

    @staticmethod
    def weights_from_angle(theta):
        theta = np.asarray(theta, dtype=float)
        return np.sin(theta), np.cos(theta)

    def draw(self, rng, size):
        a1, a2 = self.weights_from_angle(rng.uniform(0.0, TWO_PI, size))
        return RuleBatch(_zero(size), a1, a2)

    def mean_sum(self):
        return 0.0

    def mean_a0(self):
        return 0.0

    def q_closed_form(self, gamma):
        # E|sin|^g = Gamma((g+1)/2) / (sqrt(pi) Gamma(g/2 + 1))
        return 2.0 * math.exp(special.gammaln((gamma + 1) / 2) - special.gammaln(gamma / 2 + 1)) / math.sqrt(math.pi)

    def cross_moments(self):
        return CrossMoments(0.0, 0.0, 0.0)

    def expect_weights(self, f):
        return _angle_expectation(lambda th: f(*self.weights_from_angle(th)))

    def q_quadrature(self, gamma):
        return _angle_q(1.0, gamma)

    @property
    def has_background(self):
        return False


def _angle_expectation(g):
    # (1/2pi) * integral over [0, 2pi), split at the quadrant boundaries
    total = 0.0
    for k in range(4):
        val, _ = integrate.quad(g, k * math.pi / 2, (k + 1) * math.pi / 2,
                                epsabs=QUAD_EPSABS, epsrel=1e-12, limit=200)
        total += val
    return total / TWO_PI


def _angle_q(power, gamma):
    """``E|sin|^(power*gamma) + E|cos|^(power*gamma)`` on one quadrant.

    Both terms share the same mean by the four-fold symmetry of |sin| and |cos|,
    so one quarter-period integral suffices.
    """
    e = power * gamma
    val, _ = integrate.quad(lambda th: math.sin(th) ** e + math.cos(th) ** e, 0.0, math.pi / 2,
                            epsabs=QUAD_EPSABS, epsrel=1e-12, limit=200)
    return val * 2.0 / math.pi


@dataclass(frozen=True)
class InelasticKac(Kernel):
    """Dissipative Kac rule ``A1 = |sin|^p sin``, ``A2 = |cos|^p cos``.

    ``background`` is an optional law for ``A0``, drawn independently of the angle.
    """

    p: float = 1.0
    background: Optional[Distribution] = None
    kind = "inelastic_kac"

    def __post_init__(self):
        if not (self.p >= 0 and math.isfinite(self.p)):
            raise ConfigurationError(f"inelasticity p must be >= 0, got {self.p}")
        if self.background is not None:
            dists.check_distribution(self.background, what="background")

    def weights_from_angle(self, theta):
        s, c = np.sin(theta), np.cos(theta)
        return np.abs(s) ** self.p * s, np.abs(c) ** self.p * c

    def draw(self, rng, size):
        a1, a2 = self.weights_from_angle(rng.uniform(0.0, TWO_PI, size))
        if self.background is None:
            a0 = _zero(size)
        else:
            a0 = np.asarray(self.background.sample(child(rng), size), dtype=float)
        return RuleBatch(a0, a1, a2)

    def mean_sum(self):
        return 0.0

    def mean_a0(self):
        return 0.0 if self.background is None else self.background.mean

    def q_closed_form(self, gamma):
        return KacClassical().q_closed_form((self.p + 1.0) * gamma)

    def q_quadrature(self, gamma):
        return _angle_q(self.p + 1.0, gamma)

    def cross_moments(self):
        # E[A1 A2] = 0 since theta -> -theta flips A1 only
        if self.background is None:
            return CrossMoments(0.0, 0.0, 0.0)
        return CrossMoments(self.background.second_moment, 0.0, 0.0)

    def expect_weights(self, f):
        return _angle_expectation(lambda th: f(*self.weights_from_angle(th)))

    @property
    def has_background(self):
        return self.background is not None

    def describe(self):
        out = {"type": self.kind, "p": self.p}
        if self.background is not None:
            out["background"] = self.background.describe()
        return out


@dataclass(frozen=True)
class SavingPropensity(Kernel):
    """Trade with saving: ``A1 = lam + eta (1 - lam)``, ``A2 = eta (1 - lam)``."""

    lam: float = 0.0
    eta: Distribution = field(default_factory=dists.UniformOn01)
    kind = "saving_propensity"

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigurationError(f"saving propensity must lie in [0, 1], got {self.lam}")
        dists.check_distribution(self.eta, what="eta")
        lo, hi = self.eta.support
        if lo < 0 or hi > 1:
            raise ConfigurationError("eta must be supported on [0, 1]")
        if abs(self.eta.mean - 0.5) > 1e-12:
            raise ConfigurationError("eta must be symmetric about 1/2")

    def weights_from_share(self, eta):
        eta = np.asarray(eta, dtype=float)
        return self.lam + eta * (1.0 - self.lam), eta * (1.0 - self.lam)

    def draw(self, rng, size):
        a1, a2 = self.weights_from_share(self.eta.sample(rng, size))
        return RuleBatch(_zero(size), a1, a2)

    def mean_sum(self):
        return self.lam + 2.0 * (1.0 - self.lam) * self.eta.mean

    def mean_a0(self):
        return 0.0

    def q_closed_form(self, gamma):
        first = self.eta.affine_abs_moment(self.lam, 1.0 - self.lam, gamma)
        second = self.eta.affine_abs_moment(0.0, 1.0 - self.lam, gamma)
        if first is None or second is None:
            return None
        return first + second

    def cross_moments(self):
        lam, e1, e2 = self.lam, self.eta.mean, self.eta.second_moment
        return CrossMoments(0.0, lam * (1 - lam) * e1 + (1 - lam) ** 2 * e2, 0.0)

    def expect_weights(self, f):
        return self.eta.expect(lambda e: f(*self.weights_from_share(e)))

    @property
    def nonnegative(self):
        return True

    @property
    def has_background(self):
        return False

    def describe(self):
        return {"type": self.kind, "lam": self.lam, "eta": self.eta.describe()}


@dataclass(frozen=True)
class PureGambling(Kernel):
    """``A1 = A2 = eta``."""

    eta: Distribution = field(default_factory=dists.UniformOn01)
    kind = "pure_gambling"

    def __post_init__(self):
        dists.check_distribution(self.eta, what="eta")

    def draw(self, rng, size):
        e = np.asarray(self.eta.sample(rng, size), dtype=float)
        return RuleBatch(_zero(size), e, e.copy())

    def mean_sum(self):
        return 2.0 * self.eta.mean

    def mean_a0(self):
        return 0.0

    def q_closed_form(self, gamma):
        m = self.eta.abs_moment(gamma)
        return None if m is None else 2.0 * m

    def cross_moments(self):
        return CrossMoments(0.0, self.eta.second_moment, 0.0)

    def expect_weights(self, f):
        return self.eta.expect(lambda e: f(e, e))

    @property
    def nonnegative(self):
        return self.eta.nonnegative

    @property
    def has_background(self):
        return False

    def describe(self):
        return {"type": self.kind, "eta": self.eta.describe()}


def _scaled_q(base, factor_moment, gamma):
    qb = base.q_closed_form(gamma)
    return None if qb is None else factor_moment * qb


@dataclass(frozen=True)
class RedistributionFull(Kernel):
    """Every trade is taxed: ``A_i = (1 - eps) A~_i``, ``A0 = eps A~0``."""

    base: Kernel
    eps: float
    a0dist: Distribution
    kind = "redistribution_full"

    def __post_init__(self):
        _check_base(self.base)
        if not 0.0 < self.eps < 1.0:
            raise ConfigurationError(f"eps must lie in (0, 1), got {self.eps}")
        dists.check_distribution(self.a0dist, what="a0dist")

    def draw(self, rng, size):
        b = self.base.draw(rng, size)
        a0t = np.asarray(self.a0dist.sample(child(rng), size), dtype=float)
        f = 1.0 - self.eps
        return RuleBatch(self.eps * a0t, f * b.a1, f * b.a2)

    def mean_sum(self):
        ms = self.base.mean_sum()
        return None if ms is None else (1.0 - self.eps) * ms

    def mean_a0(self):
        return self.eps * self.a0dist.mean

    def q_closed_form(self, gamma):
        return _scaled_q(self.base, (1.0 - self.eps) ** gamma, gamma)

    def cross_moments(self):
        bc, ms = self.base.cross_moments(), self.base.mean_sum()
        if bc is None or ms is None:
            return None
        e, f = self.eps, 1.0 - self.eps
        return CrossMoments(e * e * self.a0dist.second_moment, f * f * bc.a1a2,
                            e * f * self.a0dist.mean * ms)

    def expect_weights(self, f):
        s = 1.0 - self.eps
        return self.base.expect_weights(lambda a1, a2: f(s * a1, s * a2))

    @property
    def nonnegative(self):
        return self.base.nonnegative and self.a0dist.nonnegative

    def describe(self):
        return {"type": self.kind, "eps": self.eps, "base": self.base.describe(),
                "a0dist": self.a0dist.describe()}


@dataclass(frozen=True)
class RedistributionBernoulli(Kernel):
    """Taxation applied to a trade only when an independent coin ``Delta`` shows 1.

    ``A_i = (1 - eps Delta) A~_i``, ``A0 = eps Delta A~0`` with
    ``P(Delta = 1) = delta``.
    """

    base: Kernel
    eps: float
    delta: float
    a0dist: Distribution
    kind = "redistribution_bernoulli"

    def __post_init__(self):
        _check_base(self.base)
        if not 0.0 < self.eps < 1.0:
            raise ConfigurationError(f"eps must lie in (0, 1), got {self.eps}")
        if not 0.0 <= self.delta <= 1.0:
            raise ConfigurationError(f"delta must lie in [0, 1], got {self.delta}")
        dists.check_distribution(self.a0dist, what="a0dist")

    def combine(self, a1t, a2t, taxed, a0t):
        """Apply the rule to base weights, coin outcomes and tax refunds."""
        d = np.asarray(taxed, dtype=float)
        shrink = 1.0 - self.eps * d
        return RuleBatch(self.eps * d * np.asarray(a0t, dtype=float), shrink * a1t, shrink * a2t)

    def draw(self, rng, size):
        b = self.base.draw(rng, size)
        sub = child(rng)
        taxed = sub.random(size) < self.delta
        a0t = np.asarray(self.a0dist.sample(sub, size), dtype=float)
        return self.combine(b.a1, b.a2, taxed, a0t)

    def tax_factor(self, gamma):
        """``E[(1 - eps Delta)^gamma]``."""
        return 1.0 + self.delta * ((1.0 - self.eps) ** gamma - 1.0)

    def mean_sum(self):
        ms = self.base.mean_sum()
        return None if ms is None else (1.0 - self.eps * self.delta) * ms

    def mean_a0(self):
        return self.eps * self.delta * self.a0dist.mean

    def q_closed_form(self, gamma):
        return _scaled_q(self.base, self.tax_factor(gamma), gamma)

    def cross_moments(self):
        bc, ms = self.base.cross_moments(), self.base.mean_sum()
        if bc is None or ms is None:
            return None
        e, d = self.eps, self.delta
        return CrossMoments(e * e * d * self.a0dist.second_moment, self.tax_factor(2.0) * bc.a1a2,
                            e * d * (1.0 - e) * self.a0dist.mean * ms)

    def expect_weights(self, f):
        # sum over the coin, integrate the base latent variables
        s = 1.0 - self.eps
        untaxed = self.base.expect_weights(f) if self.delta < 1.0 else 0.0
        taxed = self.base.expect_weights(lambda a1, a2: f(s * a1, s * a2)) if self.delta > 0.0 else 0.0
        return (1.0 - self.delta) * untaxed + self.delta * taxed

    @property
    def nonnegative(self):
        return self.base.nonnegative and self.a0dist.nonnegative

    def describe(self):
        return {"type": self.kind, "eps": self.eps, "delta": self.delta,
                "base": self.base.describe(), "a0dist": self.a0dist.describe()}


@dataclass(frozen=True)
class ChiMinusOne(Kernel):
    """``(0, U^-eps A1*, U^-eps A2*)`` with ``U`` uniform on [0, 1]."""

    base: Kernel
    eps: float
    kind = "chi_minus_one"

    def __post_init__(self):
        _check_base(self.base)
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise ConfigurationError(f"eps must be > 0, got {self.eps}")

    def draw(self, rng, size):
        b = self.base.draw(rng, size)
        # 1 - U avoids U = 0 exactly
        scale = (1.0 - rng.random(size)) ** (-self.eps)
        return RuleBatch(_zero(size), scale * b.a1, scale * b.a2)

    def mean_sum(self):
        ms = self.base.mean_sum()
        return None if ms is None else _u_power_mean(-self.eps) * ms

    def mean_a0(self):
        return 0.0

    def q_closed_form(self, gamma):
        return _scaled_q(self.base, _u_power_mean(-self.eps * gamma), gamma)

    def cross_moments(self):
        bc = self.base.cross_moments()
        if bc is None:
            return None
        return CrossMoments(0.0, _u_power_mean(-2.0 * self.eps) * bc.a1a2, 0.0)

    @property
    def nonnegative(self):
        return self.base.nonnegative

    @property
    def has_background(self):
        return False

    def describe(self):
        return {"type": self.kind, "eps": self.eps, "base": self.base.describe()}


@dataclass(frozen=True)
class ChiZero(Kernel):
    """``A_i = A_i*`` with an independent exponential ``A0`` of mean ``eps m0``."""

    base: Kernel
    eps: float
    m0: float
    kind = "chi_zero"

    def __post_init__(self):
        _check_base(self.base)
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise ConfigurationError(f"eps must be > 0, got {self.eps}")
        if not (self.m0 > 0 and math.isfinite(self.m0)):
            raise ConfigurationError(f"m0 must be > 0, got {self.m0}")

    @property
    def a0_law(self):
        return dists.Exponential(self.eps * self.m0)

    def draw(self, rng, size):
        b = self.base.draw(rng, size)
        return RuleBatch(np.asarray(self.a0_law.sample(child(rng), size), dtype=float), b.a1, b.a2)

    def mean_sum(self):
        return self.base.mean_sum()

    def mean_a0(self):
        return self.eps * self.m0

    def q_closed_form(self, gamma):
        return self.base.q_closed_form(gamma)

    def cross_moments(self):
        bc, ms = self.base.cross_moments(), self.base.mean_sum()
        if bc is None or ms is None:
            return None
        lam = self.eps * self.m0
        return CrossMoments(2.0 * lam * lam, bc.a1a2, lam * ms)

    def expect_weights(self, f):
        return self.base.expect_weights(f)

    @property
    def nonnegative(self):
        return self.base.nonnegative

    def describe(self):
        return {"type": self.kind, "eps": self.eps, "m0": self.m0, "base": self.base.describe()}


@dataclass(frozen=True)
class ChiGeneral(Kernel):
    """Drift-diffusion redistribution with ``delta = eps * chi``.

    ``A_i = U^delta A_i*`` and ``A0 = (1 - U^delta) (delta + eps) / delta * m0``,
    all driven by one uniform ``U``.
    """

    base: Kernel
    eps: float
    chi: float
    m0: float
    kind = "chi_general"

    def __post_init__(self):
        _check_base(self.base)
        if not 0.0 < self.eps <= 1.0:
            raise ConfigurationError(f"eps must lie in (0, 1], got {self.eps}")
        if not (self.chi > -1.0 and math.isfinite(self.chi)) or self.chi == 0.0:
            raise ConfigurationError(f"chi must satisfy chi > -1 and chi != 0, got {self.chi}")
        if not math.isfinite(self.m0):
            raise ConfigurationError("m0 must be finite")

    @property
    def delta(self):
        return self.eps * self.chi

    @property
    def a0_scale(self):
        d = self.delta
        return (d + self.eps) / d * self.m0

    def combine(self, a1s, a2s, u):
        ud = np.asarray(u, dtype=float) ** self.delta
        return RuleBatch((1.0 - ud) * self.a0_scale, ud * a1s, ud * a2s)

    def draw(self, rng, size):
        b = self.base.draw(rng, size)
        return self.combine(b.a1, b.a2, 1.0 - rng.random(size))

    def mean_sum(self):
        ms = self.base.mean_sum()
        return None if ms is None else ms * _u_power_mean(self.delta)

    def mean_a0(self):
        return (1.0 - _u_power_mean(self.delta)) * self.a0_scale

    def q_closed_form(self, gamma):
        return _scaled_q(self.base, _u_power_mean(self.delta * gamma), gamma)

    def cross_moments(self):
        bc, ms = self.base.cross_moments(), self.base.mean_sum()
        if bc is None or ms is None:
            return None
        d, c = self.delta, self.a0_scale
        e1, e2 = _u_power_mean(d), _u_power_mean(2 * d)
        return CrossMoments(c * c * (1.0 - 2.0 * e1 + e2), e2 * bc.a1a2, c * (e1 - e2) * ms)

    @property
    def nonnegative(self):
        return self.base.nonnegative and self.m0 >= 0

    def describe(self):
        return {"type": self.kind, "eps": self.eps, "chi": self.chi, "m0": self.m0,
                "base": self.base.describe()}


@dataclass(frozen=True)
class ThermalBathDiff(Kernel):
    """``A0 = E_a - E_b`` with independent exponentials of means ``a`` and ``b``."""

    base: Kernel
    a: float
    b: float
    kind = "thermal_bath_diff"

    def __post_init__(self):
        _check_base(self.base)
        if not (self.a > 0 and self.b > 0 and math.isfinite(self.a) and math.isfinite(self.b)):
            raise ConfigurationError("exponential means a and b must be > 0")

    @property
    def drift(self):
        """``m0 = a - b``."""
        return self.a - self.b

    @property
    def diffusion(self):
        """``sigma^2 = a b``."""
        return self.a * self.b

    def draw(self, rng, size):
        w = self.base.draw(rng, size)
        sub = child(rng)
        a0 = sub.exponential(self.a, size) - sub.exponential(self.b, size)
        return RuleBatch(a0, w.a1, w.a2)

    def mean_sum(self):
        return self.base.mean_sum()

    def mean_a0(self):
        return self.a - self.b

    def q_closed_form(self, gamma):
        return self.base.q_closed_form(gamma)

    def q_quadrature(self, gamma):
        if hasattr(self.base, "q_quadrature"):
            return self.base.q_quadrature(gamma)
        raise UnsupportedMethodError("base kernel has no quadrature route")

    def cross_moments(self):
        bc, ms = self.base.cross_moments(), self.base.mean_sum()
        if bc is None or ms is None:
            return None
        a, b = self.a, self.b
        return CrossMoments(a * a + b * b + (a - b) ** 2, bc.a1a2, (a - b) * ms)

    def expect_weights(self, f):
        return self.base.expect_weights(f)

    def describe(self):
        return {"type": self.kind, "a": self.a, "b": self.b, "base": self.base.describe()}


def bath_exponential_means(m0, sigma2):
    """Means ``(a, b)`` of the exponential pair realizing drift ``m0`` and diffusion ``sigma2``."""
    if sigma2 <= 0:
        raise ConfigurationError("sigma2 must be > 0")
    root = math.sqrt(m0 * m0 + 4.0 * sigma2)
    return 0.5 * (m0 + root), 0.5 * (-m0 + root)


@dataclass(frozen=True, eq=False)
class Custom(Kernel):
    """User-supplied sampler ``sampler(rng, size) -> (a0, a1, a2)`` plus optional facts."""

    sampler: Callable
    declared_mean_sum: Optional[float] = None
    declared_mean_a0: Optional[float] = None
    q: Optional[Callable[[float], float]] = None
    declared_cross_moments: Optional[CrossMoments] = None
    declared_nonnegative: bool = False
    background: bool = True
    name: str = "custom"
    kind = "custom"

    def draw(self, rng, size):
        a0, a1, a2 = self.sampler(rng, size)
        return RuleBatch(*(np.broadcast_to(np.asarray(x, dtype=float), (size,)).copy() for x in (a0, a1, a2)))

    def mean_sum(self):
        return self.declared_mean_sum

    def mean_a0(self):
        return self.declared_mean_a0

    def q_closed_form(self, gamma):
        return None if self.q is None else float(self.q(gamma))

    def cross_moments(self):
        return self.declared_cross_moments

    @property
    def nonnegative(self):
        return self.declared_nonnegative

    @property
    def has_background(self):
        return self.background

    def describe(self):
        return {"type": self.kind, "name": self.name}


@dataclass(frozen=True)
class Degenerate(Kernel):
    """Base weights with the background ``A0 = m (1 - A1 - A2)`` built in.

    The point mass at ``m`` is then a fixed point of the collision map.
    """

    base: Kernel
    m: float
    kind = "degenerate"

    def __post_init__(self):
        _check_base(self.base)

    def draw(self, rng, size):
        b = self.base.draw(rng, size)
        return RuleBatch(self.m * (1.0 - b.a1 - b.a2), b.a1, b.a2)

    def mean_sum(self):
        return self.base.mean_sum()

    def mean_a0(self):
        ms = self.base.mean_sum()
        return None if ms is None else self.m * (1.0 - ms)

    def q_closed_form(self, gamma):
        return self.base.q_closed_form(gamma)

    def cross_moments(self):
        bc, ms, q2 = self.base.cross_moments(), self.base.mean_sum(), self.base.q_closed_form(2.0)
        if bc is None or ms is None or q2 is None:
            return None
        es2 = q2 + 2.0 * bc.a1a2  # E[(A1 + A2)^2]
        m = self.m
        return CrossMoments(m * m * (1.0 - 2.0 * ms + es2), bc.a1a2, m * (ms - es2))

    def expect_weights(self, f):
        return self.base.expect_weights(f)

    @property
    def nonnegative(self):
        return False

    def describe(self):
        return {"type": self.kind, "m": self.m, "base": self.base.describe()}


# ---------------------------------------------------------------------------
# operations

def sample_rule(kernel, rng):
    """One draw of ``(A0, A1, A2)``."""
    b = kernel.draw(as_generator(rng), 1)
    return RuleSample(float(b.a0[0]), float(b.a1[0]), float(b.a2[0]))


def _mc_mean(values):
    values = np.asarray(values, dtype=float)
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


def q_gamma(kernel, gamma, method="closed_form", reps=100_000, rng=None):
    """``q(gamma) = E|A1|^gamma + E|A2|^gamma``.

    ``method`` is ``"closed_form"``, ``"quadrature"`` or ``"monte_carlo"``; the
    Monte Carlo route returns ``(estimate, standard_error)``.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    if method == "closed_form":
        val = kernel.q_closed_form(gamma)
        if val is None:
            raise UnsupportedMethodError(f"{type(kernel).__name__} declares no closed form for q")
        return float(val)
    if method == "quadrature":
        if hasattr(kernel, "q_quadrature"):
            return float(kernel.q_quadrature(gamma))
        return float(kernel.expect_weights(
            lambda a1, a2: float(abs_power(a1, gamma)) + float(abs_power(a2, gamma))))
    if method == "monte_carlo":
        b = kernel.draw(as_generator(rng), reps)
        return _mc_mean(abs_power(b.a1, gamma) + abs_power(b.a2, gamma))
    raise ValueError(f"unknown method {method!r}")


def q_value(kernel, gamma, reps=100_000, rng=None):
    """Best available ``q(gamma)``: closed form, then quadrature, then Monte Carlo."""
    val = kernel.q_closed_form(gamma)
    if val is not None:
        return float(val)
    try:
        return q_gamma(kernel, gamma, "quadrature")
    except UnsupportedMethodError:
        return q_gamma(kernel, gamma, "monte_carlo", reps=reps, rng=rng)[0]


def mean_sum(kernel, reps=None, rng=None):
    """``E[A1 + A2]``; Monte Carlo (estimate, se) only when ``reps`` is given."""
    val = kernel.mean_sum()
    if val is not None:
        return float(val)
    if reps is None:
        raise UnsupportedMethodError("E[A1 + A2] not declared; pass reps for a Monte Carlo estimate")
    b = kernel.draw(as_generator(rng), reps)
    return _mc_mean(b.a1 + b.a2)


def mean_a0(kernel, reps=None, rng=None):
    val = kernel.mean_a0()
    if val is not None:
        return float(val)
    if reps is None:
        raise UnsupportedMethodError("E[A0] not declared; pass reps for a Monte Carlo estimate")
    return _mc_mean(kernel.draw(as_generator(rng), reps).a0)


def conserves_mass(kernel):
    """True when ``E[A1 + A2] = 1`` (declared)."""
    ms = kernel.mean_sum()
    if ms is None:
        raise UnsupportedMethodError("E[A1 + A2] not declared")
    return abs(ms - 1.0) <= EXACT_TOL


def m_bar(kernel):
    """Forced steady mean ``E[A0] / (1 - E[A1 + A2])``."""
    ms, ma = kernel.mean_sum(), kernel.mean_a0()
    if ms is None or ma is None:
        raise UnsupportedMethodError("m_bar needs declared E[A1 + A2] and E[A0]")
    if abs(ms - 1.0) <= EXACT_TOL:
        raise UndefinedMeanError(
            "E[A1 + A2] = 1 so the steady mean is not forced; pin the mean m0 instead")
    return ma / (1.0 - ms)


def is_degenerate_fixed_point(kernel, m, reps=10_000, tol=1e-12, rng=None):
    """Sampling test of ``m (1 - A1 - A2) = A0``.

    A ``False`` answer is a certificate; ``True`` only means no violation showed up.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    b = kernel.draw(as_generator(rng), reps)
    return bool(np.all(np.abs(m * (1.0 - b.a1 - b.a2) - b.a0) <= tol))
