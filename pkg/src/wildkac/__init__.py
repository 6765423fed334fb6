"""Monte Carlo toolkit for one-dimensional kinetic equations with Maxwell-type collisions.

Collision rules, exact Wild-sum sampling of the time-t solution, a
population-dynamics steady-state solver, Wasserstein contraction checks and
characteristic-function residuals.
"""

from . import distributions, kernels
from .distributions import (Bernoulli, EmpiricalFromSamples, Exponential, Gaussian, PointMass,
                            SymmetricTwoPoint, TwoPoint, UniformInterval, UniformOn01)
from .estimators import SteadyStateEstimator, WildSampler
from .exceptions import (ConfigurationError, ConvergenceWarning, InfiniteMomentError,
                         PreconditionError, ResourceCapError, UndefinedMeanError,
                         UnsupportedMethodError, WildKacError)
from .fourier import charfun, stationarity_residual, thermal_bath_residual
from .kernels import (ChiGeneral, ChiMinusOne, ChiZero, Custom, Degenerate, InelasticKac,
                      KacClassical, PureGambling, RedistributionBernoulli, RedistributionFull,
                      SavingPropensity, ThermalBathDiff, conserves_mass, is_degenerate_fixed_point,
                      m_bar, q_gamma, q_value, sample_rule)
from .measure import EmpiricalMeasure
from .metrics import contraction_check, quantile_distance, wasserstein
from .steady import SteadyConfig, sample_m_star, solve_steady, steady_moments
from .wild import c_n, leaf_weight_moment, sample_mu_t, sample_nu, sample_w_star

__version__ = "0.1.0"
