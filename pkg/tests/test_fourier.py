import math

import numpy as np
import pytest

from wildkac import distributions as D
from wildkac import kernels as K
from wildkac.fourier import (charfun, default_grid, ecf_at, stationarity_residual,
                             thermal_bath_residual)
from wildkac.measure import EmpiricalMeasure
from wildkac.steady import SteadyConfig, solve_steady

GRID = default_grid()


def test_default_grid():
    assert GRID.size == 41 and GRID[0] == -5.0 and GRID[-1] == 5.0 and 0.0 in GRID


def test_charfun_exact_identities():
    x = np.random.default_rng(0).standard_cauchy(1000)
    cf = charfun(EmpiricalMeasure(x), np.concatenate([GRID, -GRID]))
    assert cf.values[20] == 1.0 and cf.se[20] == 0.0
    assert np.array_equal(cf.values[41:], np.conj(cf.values[:41]))
    assert np.all(np.abs(cf.values) <= 1 + 3 * cf.se)


def test_charfun_point_mass():
    m = 0.7
    cf = charfun(np.full(100, m), GRID)
    assert np.allclose(cf.values, np.exp(1j * GRID * m), rtol=0, atol=1e-15)


def test_charfun_exponential():
    eps, m0 = 0.2, 1.5
    x = D.Exponential(eps * m0).sample(np.random.default_rng(1), 100_000)
    cf = charfun(x, GRID)
    assert np.all(np.abs(cf.values - 1 / (1 - 1j * eps * m0 * GRID)) <= 3 * cf.se)


def test_charfun_of_bath_background():
    a, b = 0.8, 0.3
    x = K.ThermalBathDiff(K.InelasticKac(1.0), a, b).draw(np.random.default_rng(2), 100_000).a0
    cf = charfun(x, GRID)
    target = 1 / (1 - 1j * (a - b) * GRID + a * b * GRID**2)
    assert np.all(np.abs(cf.values - target) <= 3 * cf.se)


def test_charfun_rejects_infinite_grid():
    with pytest.raises(ValueError):
        charfun(np.zeros(3), [np.inf])


def test_nufft_matches_direct_sum():
    rng = np.random.default_rng(3)
    x = rng.normal(size=20_000)
    freqs = rng.uniform(-6, 6, size=200)  # 4e6 terms -> NUFFT route
    direct = np.exp(1j * np.outer(freqs, x)).mean(axis=1)
    assert np.max(np.abs(ecf_at(x, freqs) - direct)) < 1e-10


def test_degenerate_residual_is_zero():
    m = 1.3
    k = K.Degenerate(K.SavingPropensity(0.3), m)
    rep = stationarity_residual(k, np.full(200, m), GRID, 1000, np.random.default_rng(4))
    assert rep.max_abs_residual < 1e-12


def test_kac_gaussian_residual_within_noise():
    x = np.random.default_rng(5).normal(size=100_000)
    rep = stationarity_residual(K.KacClassical(), x, GRID, 100_000, np.random.default_rng(6))
    assert np.all(rep.residual <= 3 * rep.se + 1e-12)


def test_bath_residual_zero_for_point_mass_at_zero():
    rep = thermal_bath_residual(1.0, 0.0, 0.0, np.zeros(100), GRID, 1000, np.random.default_rng(7))
    assert rep.max_abs_residual == 0.0


def test_residual_report_serialization():
    rep = stationarity_residual(K.KacClassical(), np.zeros(10), [0.0, 1.0], 10, 0)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "xi,residual,se" and len(lines) == 3 and len(rep.per_point) == 2


def test_residual_is_discriminative_and_shrinks():
    k = K.ChiZero(K.PureGambling(D.UniformInterval(0.0, 0.8)), 0.2, 1.0)
    res = {}
    for n in (5_000, 20_000):
        pool = solve_steady(k, SteadyConfig(pool_size=n, tol=0.1, min_iters=30), seed=8).measure
        res[n] = stationarity_residual(k, pool, GRID, n, np.random.default_rng(9)).max_abs_residual
    wrong = stationarity_residual(k, np.full(20_000, K.m_bar(k)), GRID, 20_000, np.random.default_rng(9))
    assert res[20_000] < res[5_000]
    assert wrong.max_abs_residual >= 5 * res[20_000]
