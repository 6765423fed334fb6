import math

import numpy as np
import pytest

from wildkac import distributions as D
from wildkac.exceptions import ConfigurationError
from wildkac.measure import EmpiricalMeasure

from conftest import within_se

ALL = [D.PointMass(1.5), D.UniformInterval(-1.0, 3.0), D.UniformOn01(), D.Bernoulli(0.3),
       D.SymmetricTwoPoint(0.2), D.TwoPoint(-1.0, 2.0, 0.25), D.Exponential(2.0),
       D.Gaussian(0.5, 1.5), D.EmpiricalFromSamples(np.array([3.0, -1.0, 0.5, 0.5]))]


@pytest.mark.parametrize("dist", ALL, ids=lambda d: type(d).__name__)
def test_moments_match_samples(dist):
    x = np.asarray(dist.sample(np.random.default_rng(0), 200_000), dtype=float)
    se1 = x.std(ddof=1) / math.sqrt(x.size)
    se2 = (x**2).std(ddof=1) / math.sqrt(x.size)
    assert within_se(x.mean(), dist.mean, se1)
    assert within_se((x**2).mean(), dist.second_moment, se2)


@pytest.mark.parametrize("dist", ALL, ids=lambda d: type(d).__name__)
@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("c", [0.0, 0.3])
def test_affine_abs_moment_matches_quadrature(dist, gamma, c):
    s = -0.7
    exact = dist.affine_abs_moment(c, s, gamma)
    if exact is None:
        # closed forms are coded only for unshifted exponential and centred Gaussian laws
        if isinstance(dist, D.Exponential):
            assert c != 0.0
        else:
            assert isinstance(dist, D.Gaussian) and c + s * dist.loc != 0.0
        return
    assert exact == pytest.approx(dist.expect(lambda x: abs(c + s * x) ** gamma), abs=1e-8)


def test_abs_power_zero_convention():
    assert D.abs_power(0.0, 0.0) == 0.0
    assert np.array_equal(D.abs_power(np.array([0.0, -2.0]), 0.0), [0.0, 1.0])
    assert D.abs_power(-2.0, 2.0) == 4.0


def test_symmetric_two_point_atoms():
    d = D.SymmetricTwoPoint(0.2)
    assert d.mean == pytest.approx(0.5)
    assert set(np.unique(d.sample(np.random.default_rng(1), 100))) <= {0.2, 0.8}


@pytest.mark.parametrize("make", [lambda: D.UniformInterval(2.0, 1.0), lambda: D.TwoPoint(1.0, 0.0, 0.5),
                                  lambda: D.EmpiricalFromSamples(np.array([])),
                                  lambda: D.SymmetricTwoPoint(0.2, -0.1)])
def test_invalid(make):
    with pytest.raises(ConfigurationError):
        make()


def test_check_distribution_rejects_wrong_family():
    with pytest.raises(ConfigurationError):
        D.check_distribution(D.Bernoulli(0.5), D.INITIAL_TYPES, what="init")


# --- empirical measure --------------------------------------------------

def test_measure_sorted_readonly_and_round_trip(tmp_path):
    x = np.random.default_rng(2).normal(size=1000) * 1e-3 + 1 / 3
    m = EmpiricalMeasure(x, {"t": 1.0, "seed": 4})
    assert np.all(np.diff(m.samples) >= 0)
    with pytest.raises(ValueError):
        m.samples[0] = 0.0
    p = tmp_path / "m.txt"
    m.save(p)
    back = EmpiricalMeasure.load(p)
    assert np.array_equal(back.samples, m.samples)  # 17 significant digits round-trip bit-exactly
    assert back.meta == m.meta
    assert p.read_text() == back.dumps()


def test_measure_rejects_bad_input():
    with pytest.raises(ValueError):
        EmpiricalMeasure(np.array([]))
    with pytest.raises(ValueError):
        EmpiricalMeasure(np.array([1.0, np.nan]))
    with pytest.raises(ConfigurationError):
        EmpiricalMeasure.loads('{"count": 3}\n1.0\n2.0\n')


def test_measure_statistics():
    m = EmpiricalMeasure(np.array([1.0, 2.0, 3.0, 4.0]))
    assert m.mean == 2.5
    assert m.variance == pytest.approx(5 / 3)
    assert m.spread == 3.0
    assert m.moment(2) == pytest.approx(7.5)
