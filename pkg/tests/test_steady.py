import itertools
import math
import warnings

import numpy as np
import pytest
from scipy import stats

from wildkac import distributions as D
from wildkac import kernels as K
from wildkac.exceptions import (ConfigurationError, ConvergenceWarning, InfiniteMomentError,
                                ResourceCapError)
from wildkac.measure import EmpiricalMeasure
from wildkac.metrics import wasserstein
from wildkac.steady import (SteadyConfig, iterate_pool, m_star_from_rules, sample_m_star,
                            sample_m_star_batch, solve_steady, steady_moments)

from conftest import within_se

SHRUNK = K.PureGambling(D.UniformInterval(0.0, 0.8))
CHI_ZERO = K.ChiZero(SHRUNK, 0.2, 1.0)
CHI_GENERAL = K.ChiGeneral(SHRUNK, 0.2, 1.0, 1.0)


# --- configuration ---------------------------------------------------------

@pytest.mark.parametrize("kwargs", [dict(pool_size=50), dict(tol=0.0), dict(max_iters=0),
                                    dict(gamma_check=2.5), dict(mean_pin=math.inf), dict(min_iters=-1)])
def test_config_validation(kwargs):
    with pytest.raises(ConfigurationError):
        SteadyConfig(**kwargs)


def test_kernel_checks():
    with pytest.raises(ConfigurationError, match="q"):
        SteadyConfig().check_kernel(K.KacClassical())
    with pytest.raises(ConfigurationError, match="pinned"):
        SteadyConfig().check_kernel(K.SavingPropensity(0.3))
    with pytest.raises(ConfigurationError, match="forced"):
        SteadyConfig(mean_pin=1.0).check_kernel(CHI_ZERO)
    assert SteadyConfig(mean_pin=1.0).check_kernel(K.SavingPropensity(0.3)) < 1


# --- one sweep ---------------------------------------------------------------

def test_iterate_degenerate_pool_is_fixed():
    m = 2.5
    out = iterate_pool(np.full(1000, m), K.Degenerate(K.SavingPropensity(0.4), m), np.random.default_rng(0))
    assert np.allclose(out.samples, m, rtol=0, atol=1e-12)


def test_iterate_zero_pool_with_kac_stays_zero():
    out = iterate_pool(EmpiricalMeasure(np.zeros(500)), K.KacClassical(), 1)
    assert np.all(out.samples == 0.0)


def test_iterate_keeps_forced_mean():
    mbar = K.m_bar(CHI_ZERO)
    out = iterate_pool(np.full(100_000, mbar), CHI_ZERO, np.random.default_rng(2))
    assert within_se(out.mean, mbar, out.mean_se())


# --- solver -------------------------------------------------------------------

def test_degenerate_kernel_solves_to_point_mass():
    res = solve_steady(K.Degenerate(K.InelasticKac(1.0), 2.0), SteadyConfig(pool_size=1000, min_iters=0), 0)
    assert res.converged and res.iterations == 1
    assert res.final_gap == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(res.measure.samples, 2.0, atol=1e-12)


def test_solver_mean_positivity_and_variance():
    cfg = SteadyConfig(pool_size=50_000, tol=0.05, min_iters=40)
    res = solve_steady(CHI_GENERAL, cfg, seed=3)
    x = res.measure
    ms = K.mean_sum(CHI_GENERAL)
    # the pool mean is autocorrelated across sweeps; stationary variance ~ Var/n / (1 - ms^2)
    assert within_se(x.mean, 1.0, x.mean_se() / math.sqrt(1 - ms * ms))
    assert x.samples.min() >= 0.0
    assert x.variance == pytest.approx(steady_moments(CHI_GENERAL).variance, rel=0.05)
    assert x.meta["t"] == "steady" and x.meta["converged"] is True
    assert [e["iteration"] for e in res.log] == list(range(1, res.iterations + 1))


def test_solver_is_near_a_fixed_point():
    cfg = SteadyConfig(pool_size=20_000, tol=0.05, min_iters=30)
    res = solve_steady(CHI_ZERO, cfg, seed=4)
    nxt = iterate_pool(res.measure, CHI_ZERO, np.random.default_rng(5))
    assert wasserstein(2.0, res.measure, nxt) <= 2 * cfg.tol


def test_mean_pinning_is_exact():
    res = solve_steady(K.SavingPropensity(0.3), SteadyConfig(pool_size=5000, mean_pin=1.5, tol=0.05), 6)
    assert res.measure.mean == pytest.approx(1.5, abs=1e-12)


def test_pinned_solver_rejects_background_mean():
    k = K.Custom(lambda rng, n: (np.full(n, 0.5), np.full(n, 0.3), np.full(n, 0.7)),
                 declared_mean_sum=1.0, declared_mean_a0=0.5, q=lambda g: 0.3**g + 0.7**g)
    with pytest.raises(ConfigurationError, match="E\\[A0\\] = 0"):
        solve_steady(k, SteadyConfig(pool_size=100, mean_pin=1.0), 0)


def test_non_convergence_is_flagged():
    with pytest.warns(ConvergenceWarning):
        res = solve_steady(CHI_ZERO, SteadyConfig(pool_size=1000, max_iters=2, tol=1e-6), 7)
    assert not res.converged and res.iterations == 2


def test_solver_workers_and_seed_determinism():
    cfg = SteadyConfig(pool_size=40_000, tol=0.05, min_iters=5, max_iters=5)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        a = solve_steady(CHI_ZERO, cfg, 8, workers=1)
        b = solve_steady(CHI_ZERO, cfg, 8, workers=3)
    assert np.array_equal(a.measure.samples, b.measure.samples)


def test_moment_finiteness_boundary():
    # weights eta * U^-eps: q(beta) = 2 c^beta / ((beta + 1)(1 - eps beta)) crosses 1 near beta = 3.75
    eps, c = 0.25, 0.6

    def sampler(rng, n):
        eta = c * rng.random(n) * (1 - rng.random(n)) ** (-eps)
        return rng.exponential(1.0, n), eta, eta

    k = K.Custom(sampler, declared_mean_sum=c / (1 - eps), declared_mean_a0=1.0,
                 q=lambda g: 2 * c**g / (g + 1) / (1 - eps * g) if eps * g < 1 else math.inf)
    med = {}
    for n in (5_000, 80_000):
        m2, m8 = [], []
        for s in range(8):
            cfg = SteadyConfig(pool_size=n, tol=1e9, min_iters=40, max_iters=40)
            x = solve_steady(k, cfg, seed=s, warn=False).measure.samples
            m2.append(np.mean(x**2))
            m8.append(np.mean(x**8))
        med[n] = (np.median(m2), np.median(m8))
    assert med[80_000][0] == pytest.approx(med[5_000][0], rel=0.1)  # beta = 2 < beta*: stable
    assert med[80_000][1] > 3 * med[5_000][1]  # beta = 8 > beta*: keeps growing


# --- complete-tree oracle ----------------------------------------------------

def test_m_star_small_cases():
    assert sample_m_star(0, CHI_ZERO, 1.3, 0) == 1.3
    assert m_star_from_rules(1, 2.0, [(0.5, 0.3, 0.6)]) == pytest.approx(2.0 * 0.9 + 0.5)
    with pytest.raises(ResourceCapError):
        sample_m_star(23, CHI_ZERO, 1.0, 0)


@pytest.mark.parametrize("kernel,m", [(CHI_ZERO, 1.0), (K.SavingPropensity(0.3), 2.0)])
def test_m_star_mean(kernel, m):
    x = sample_m_star_batch(4, kernel, m, 100_000, np.random.default_rng(9))
    assert within_se(x.mean(), m, x.std(ddof=1) / math.sqrt(x.size))


def _dfs(depth, m, rules):
    # depth-first evaluation of the complete tree, consuming rules in pre-order
    it = iter(rules)

    def node(level, w):
        if level == depth:
            return m * w
        a0, a1, a2 = next(it)
        return w * a0 + node(level + 1, w * a1) + node(level + 1, w * a2)

    return node(0, 1.0)


def test_m_star_matches_exhaustive_enumeration():
    # two-point rule law; depth 3 has 7 internal nodes -> 2^7 equally likely assignments
    r_lo, r_hi = (0.2, 0.1, 0.5), (0.6, 0.4, 0.3)
    rule_law = K.Custom(lambda rng, n: (lambda b: (np.where(b, r_hi[0], r_lo[0]), np.where(b, r_hi[1], r_lo[1]),
                                                   np.where(b, r_hi[2], r_lo[2])))(rng.random(n) < 0.5))
    m = 1.5
    exact, by_dfs = {}, []
    for choice in itertools.product([r_lo, r_hi], repeat=7):
        v = round(m_star_from_rules(3, m, choice), 12)
        exact[v] = exact.get(v, 0) + 1 / 128
        by_dfs.append(round(_dfs(3, m, choice), 12))
    # breadth-first and depth-first orders enumerate the same law
    assert sorted(by_dfs) == sorted(v for v, p in exact.items() for _ in range(round(p * 128)))
    draws = np.round(sample_m_star_batch(3, rule_law, m, 64_000, np.random.default_rng(10)), 12)
    support = sorted(exact)
    assert set(np.unique(draws)) <= set(support)
    counts = np.array([np.sum(draws == v) for v in support])
    expected = np.array([exact[v] for v in support]) * draws.size
    assert stats.chisquare(counts, expected).pvalue > 1e-3


# --- closed-form moments ------------------------------------------------------

def test_steady_moment_examples():
    sm = steady_moments(K.Degenerate(K.SavingPropensity(0.3), 2.0), m0=2.0)
    assert sm.mean == 2.0 and sm.variance == pytest.approx(0.0, abs=1e-12)
    s2 = 0.7
    sm = steady_moments(K.InelasticKac(1.0, D.Gaussian(0.0, math.sqrt(s2))))
    assert sm.mean == 0.0 and sm.second_moment == pytest.approx(4 * s2, rel=1e-12)
    with pytest.raises(InfiniteMomentError):
        steady_moments(K.KacClassical(), m0=0.0)


def test_steady_moments_monte_carlo_cross_moments():
    def sampler(rng, n):
        a = rng.random(n) * 0.6
        return rng.exponential(1.0, n), a, a

    k = K.Custom(sampler, declared_mean_sum=0.6, declared_mean_a0=1.0, q=lambda g: 2 * 0.6**g / (g + 1))
    sm = steady_moments(k, mc_reps=200_000, rng=0)
    assert sm.se is not None
    # E a0^2 = 2, E a1 a2 = 0.12, E a0 (a1 + a2) = 0.6, mean 2.5, q(2) = 0.24
    exact = (2 + 2 * 0.12 * 6.25 + 2 * 0.6 * 2.5) / 0.76
    assert sm.second_moment == pytest.approx(exact, rel=0.02)
