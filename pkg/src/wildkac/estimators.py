"""Estimator-style wrappers around the steady-state solver and the Wild sampler.

They follow the scikit-learn conventions (constructor stores parameters only,
``fit`` returns ``self``, fitted state ends in an underscore) so they compose
with ``get_params``/``set_params`` and ``clone``. Inputs are one column of
real samples.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._rng import as_generator
from ._validation import check_kernel, check_samples
from .distributions import EmpiricalFromSamples
from .fourier import default_grid, stationarity_residual
from .metrics import quantile_distance
from .steady import SteadyConfig, solve_steady
from .wild import T_MAX, sample_mu_t


class SteadyStateEstimator(BaseEstimator):
    """Population-dynamics fit of the steady state of ``kernel``.

    ``fit(X)`` starts from the pool ``X`` when given (its size sets the pool
    size), otherwise from a point mass at the target mean.
    """

    def __init__(self, kernel=None, pool_size=100_000, tol=1e-2, max_iters=500, min_iters=20,
                 mean_pin=None, gamma_check=2.0, seed=0, workers=1):
        self.kernel = kernel
        self.pool_size = pool_size
        self.tol = tol
        self.max_iters = max_iters
        self.min_iters = min_iters
        self.mean_pin = mean_pin
        self.gamma_check = gamma_check
        self.seed = seed
        self.workers = workers

    def fit(self, X=None, y=None):
        kernel = check_kernel(self.kernel)
        init = None if X is None else check_samples(X, min_count=100)
        size = self.pool_size if init is None else init.size
        config = SteadyConfig(pool_size=size, max_iters=self.max_iters, tol=self.tol,
                              mean_pin=self.mean_pin, gamma_check=self.gamma_check,
                              min_iters=self.min_iters)
        res = solve_steady(kernel, config, self.seed, init_pool=init, workers=self.workers)
        self.measure_ = res.measure
        self.n_iter_ = res.iterations
        self.final_gap_ = res.final_gap
        self.converged_ = res.converged
        self.log_ = res.log
        return self

    def sample(self, n_samples=1, random_state=None):
        """Draw from the fitted empirical steady state (with replacement)."""
        check_is_fitted(self, "measure_")
        rng = as_generator(random_state)
        return self.measure_.samples[rng.integers(0, self.measure_.n, n_samples)]

    def residual(self, xi=None, mc_pairs=100_000, random_state=None):
        """Stationarity residual of the fitted pool on ``xi`` (default ``|xi| <= 5``)."""
        check_is_fitted(self, "measure_")
        grid = default_grid() if xi is None else np.asarray(xi, dtype=float)
        return stationarity_residual(self.kernel, self.measure_, grid, mc_pairs,
                                     as_generator(random_state))

    def score(self, X, y=None):
        """Negative ``l_1`` distance between the samples ``X`` and the fitted pool."""
        check_is_fitted(self, "measure_")
        return -quantile_distance(1.0, np.sort(check_samples(X)), self.measure_.samples)


class WildSampler(TransformerMixin, BaseEstimator):
    """Evolve the empirical law of the input samples to time ``t``.

    ``transform(X)`` returns ``len(X)`` draws (one column) of the solution at
    time ``t`` started from the empirical distribution fitted on ``X``.
    """

    def __init__(self, kernel=None, t=1.0, seed=0, t_max=T_MAX, workers=1):
        self.kernel = kernel
        self.t = t
        self.seed = seed
        self.t_max = t_max
        self.workers = workers

    def fit(self, X, y=None):
        check_kernel(self.kernel)
        self.init_ = EmpiricalFromSamples(check_samples(X))
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        check_is_fitted(self, "init_")
        n = check_samples(X).size
        mu = sample_mu_t(float(self.t), self.kernel, self.init_, n, self.seed,
                         t_max=self.t_max, workers=self.workers)
        return mu.samples.reshape(-1, 1)

    def evolve(self, n_samples):
        """The time-``t`` law as an :class:`EmpiricalMeasure` of ``n_samples`` draws."""
        check_is_fitted(self, "init_")
        return sample_mu_t(float(self.t), self.kernel, self.init_, n_samples, self.seed,
                           t_max=self.t_max, workers=self.workers)
