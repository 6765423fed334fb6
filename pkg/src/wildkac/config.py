"""TOML run configuration: kernel and distribution tables, command sections.

Kernels are described by a ``[kernel]`` table with a ``type`` key; wrapper
kernels nest their base rule in ``[kernel.base]``. Errors carry the dotted key
path of the offending entry.
"""

from __future__ import annotations

import copy
import os

import numpy as np
import tomli

from . import distributions as D
from . import kernels as K
from .exceptions import ConfigurationError
from .measure import EmpiricalMeasure


class _Table:
    """Read-tracking view of a config table so unknown keys can be reported."""

    def __init__(self, data, path):
        if not isinstance(data, dict):
            raise ConfigurationError("expected a table", path)
        self.data = data
        self.path = path
        self.used = set()

    def _key(self, key):
        return f"{self.path}.{key}" if self.path else key

    def get(self, key, default=None, kind=float):
        self.used.add(key)
        if key not in self.data:
            return default
        return _coerce(self.data[key], kind, self._key(key))

    def require(self, key, kind=float):
        if key not in self.data:
            raise ConfigurationError("missing required key", self._key(key))
        return self.get(key, kind=kind)

    def sub(self, key, required=True):
        self.used.add(key)
        if key not in self.data:
            if required:
                raise ConfigurationError("missing required table", self._key(key))
            return None
        return _Table(self.data[key], self._key(key))

    def finish(self):
        extra = sorted(set(self.data) - self.used)
        if extra:
            raise ConfigurationError(f"unknown key {extra[0]!r}", self._key(extra[0]))


def _coerce(value, kind, path):
    try:
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise TypeError
            return float(value)
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise TypeError
            return int(value)
        if kind is str:
            if not isinstance(value, str):
                raise TypeError
            return value
        if kind is bool:
            if not isinstance(value, bool):
                raise TypeError
            return value
        if kind is list:
            if not isinstance(value, list):
                raise TypeError
            return [_coerce(v, float, path) for v in value]
    except TypeError:
        raise ConfigurationError(f"expected {kind.__name__}, got {value!r}", path) from None
    return value


def distribution_from_table(tab, base_dir="."):
    kind = tab.require("type", str)
    try:
        if kind == "point_mass":
            dist = D.PointMass(tab.require("value"))
        elif kind == "uniform":
            dist = D.UniformInterval(tab.require("low"), tab.require("high"))
        elif kind == "uniform01":
            dist = D.UniformOn01()
        elif kind == "bernoulli":
            dist = D.Bernoulli(tab.require("p"))
        elif kind == "symmetric_two_point":
            dist = D.SymmetricTwoPoint(tab.require("x"), tab.get("p", 0.5))
        elif kind == "two_point":
            dist = D.TwoPoint(tab.require("low"), tab.require("high"), tab.get("p", 0.5))
        elif kind == "exponential":
            dist = D.Exponential(tab.require("mean"))
        elif kind == "gaussian":
            dist = D.Gaussian(tab.get("mean", 0.0), tab.get("std", 1.0))
        elif kind == "empirical":
            values = tab.get("values", None, kind=list)
            path = tab.get("path", None, kind=str)
            if (values is None) == (path is None):
                raise ConfigurationError("give exactly one of 'values' or 'path'", tab.path)
            if path is not None:
                values = EmpiricalMeasure.load(os.path.join(base_dir, path)).samples
            dist = D.EmpiricalFromSamples(np.asarray(values))
        else:
            raise ConfigurationError(f"unknown distribution type {kind!r}", tab._key("type"))
    except ConfigurationError as exc:
        if exc.path is None:
            raise ConfigurationError(str(exc), tab.path) from None
        raise
    tab.finish()
    return dist


def kernel_from_table(tab, base_dir="."):
    kind = tab.require("type", str)

    def base():
        return kernel_from_table(tab.sub("base"), base_dir)

    def dist(key, required=True, default=None):
        sub = tab.sub(key, required=required)
        return default if sub is None else distribution_from_table(sub, base_dir)

    try:
        if kind == "kac":
            k = K.KacClassical()
        elif kind == "inelastic_kac":
            k = K.InelasticKac(tab.get("p", 1.0), dist("background", required=False))
        elif kind == "saving_propensity":
            k = K.SavingPropensity(tab.require("lam"), dist("eta", False, D.UniformOn01()))
        elif kind == "pure_gambling":
            k = K.PureGambling(dist("eta", False, D.UniformOn01()))
        elif kind == "redistribution_full":
            k = K.RedistributionFull(base(), tab.require("eps"), dist("a0dist"))
        elif kind == "redistribution_bernoulli":
            k = K.RedistributionBernoulli(base(), tab.require("eps"), tab.require("delta"), dist("a0dist"))
        elif kind == "chi_minus_one":
            k = K.ChiMinusOne(base(), tab.require("eps"))
        elif kind == "chi_zero":
            k = K.ChiZero(base(), tab.require("eps"), tab.require("m0"))
        elif kind == "chi_general":
            k = K.ChiGeneral(base(), tab.require("eps"), tab.require("chi"), tab.require("m0"))
        elif kind == "thermal_bath_diff":
            b = base()
            if "a" in tab.data or "b" in tab.data:
                a, bb = tab.require("a"), tab.require("b")
            else:
                a, bb = K.bath_exponential_means(tab.require("m0"), tab.require("sigma2"))
            k = K.ThermalBathDiff(b, a, bb)
        elif kind == "degenerate":
            k = K.Degenerate(base(), tab.require("m"))
        else:
            raise ConfigurationError(f"unknown kernel type {kind!r}", tab._key("type"))
    except ConfigurationError as exc:
        if exc.path is None:
            raise ConfigurationError(str(exc), tab.path) from None
        raise
    tab.finish()
    return k


def kernel_from_config(data, path="kernel", base_dir="."):
    return kernel_from_table(_Table(data, path), base_dir)


def distribution_from_config(data, path="init", base_dir="."):
    return distribution_from_table(_Table(data, path), base_dir)


def load_config(path):
    """Parse a TOML file; the directory of the file anchors relative paths."""
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from None
    return data


def section(data, name):
    """Command section as a tracked table (empty when absent)."""
    return _Table(copy.deepcopy(data.get(name, {})), name)
