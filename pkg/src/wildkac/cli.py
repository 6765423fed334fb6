"""Command-line front end: ``wildkac {simulate,steady,contraction,moments}``.

Each command reads one TOML file, runs deterministically from its seed, and
writes CSV and JSON artifacts whose headers embed the resolved configuration.
Wall-clock timings go to ``run.log`` only, so primary outputs are
byte-identical across reruns and across ``--workers`` settings.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import math
import os
import sys
import time
import warnings

import numpy as np

from . import kernels as K
from ._rng import check_seed, substream
from .config import distribution_from_config, kernel_from_config, load_config, section
from .exceptions import (ConfigurationError, ConvergenceWarning, InfiniteMomentError,
                         PreconditionError, ResourceCapError, UndefinedMeanError,
                         UnsupportedMethodError)
from .fourier import default_grid, stationarity_residual
from .measure import EmpiricalMeasure
from .metrics import contraction_check
from .steady import SteadyConfig, solve_steady, steady_moments
from .wild import T_MAX, c_n, sample_mu_t

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PRECONDITION = 3
EXIT_NONCONVERGED = 4

# stream keys for the auxiliary random tasks of a run
_KEY_STEADY = 10
_KEY_RESIDUAL = 11
_KEY_CONTRACTION = 12
_KEY_MOMENTS = 13

log = logging.getLogger("wildkac")


class NonConvergence(Exception):
    pass


class Run:
    """Resolved configuration of one command invocation."""

    def __init__(self, data, seed_override, config_path, out_dir, workers, strict):
        self.data = copy.deepcopy(data)
        if seed_override is not None:
            self.data["seed"] = seed_override
        if "seed" not in self.data:
            raise ConfigurationError("missing required key (no silent nondeterminism)", "seed")
        try:
            self.seed = check_seed(self.data["seed"])
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(str(exc), "seed") from None
        self.base_dir = os.path.dirname(os.path.abspath(config_path)) if config_path else "."
        if "kernel" not in self.data:
            raise ConfigurationError("missing required table", "kernel")
        self.kernel = kernel_from_config(self.data["kernel"], "kernel", self.base_dir)
        self.init = None
        if "init" in self.data:
            self.init = distribution_from_config(self.data["init"], "init", self.base_dir)
        self.out = out_dir
        self.workers = workers
        self.strict = strict

    def require_init(self):
        if self.init is None:
            raise ConfigurationError("missing required table", "init")
        return self.init

    def header(self):
        """Resolved configuration embedded in every output."""
        return {"config": _jsonable(self.data), "seed": self.seed,
                "kernel": self.kernel.describe(),
                "init": None if self.init is None else self.init.describe()}

    def path(self, name):
        return os.path.join(self.out, name)

    def write_json(self, name, payload):
        body = {"header": self.header(), **payload}
        with open(self.path(name), "w") as fh:
            fh.write(json.dumps(_jsonable(body), sort_keys=True, indent=2) + "\n")

    def write_csv(self, name, columns, rows):
        buf = io.StringIO()
        buf.write("# " + json.dumps(_jsonable(self.header()), sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(v) for v in row])
        with open(self.path(name), "w") as fh:
            fh.write(buf.getvalue())

    def write_measure(self, name, measure):
        m = measure.with_meta(**self.header())
        m.save(self.path(name))


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _q_table(kernel, gammas):
    rows = []
    for g in gammas:
        try:
            rows.append((g, K.q_value(kernel, g, rng=substream(0, _KEY_MOMENTS))))
        except (UnsupportedMethodError, ValueError):
            rows.append((g, None))
    return rows


def _steady_config(tab):
    return SteadyConfig(
        pool_size=tab.get("pool_size", 100_000, int),
        max_iters=tab.get("max_iters", 500, int),
        tol=tab.get("tol", 1e-2),
        mean_pin=tab.get("mean_pin", None),
        gamma_check=tab.get("gamma_check", 2.0),
        min_iters=tab.get("min_iters", 20, int),
    )


def _xi_grid(tab):
    explicit = tab.get("xi", None, list)
    if explicit is not None:
        return np.asarray(explicit, dtype=float)
    return default_grid(tab.get("xi_half_width", 5.0), tab.get("xi_count", 41, int))


def _steady_section(run):
    """Parse the whole ``[steady]`` table: solver config, ``mc_pairs`` and the xi grid."""
    tab = section(run.data, "steady")
    config = _steady_config(tab)
    mc_pairs = tab.get("mc_pairs", 100_000, int)
    xi = _xi_grid(tab)
    tab.finish()
    return config, mc_pairs, xi


def _solve(run, config):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        res = solve_steady(run.kernel, config, int(substream(run.seed, _KEY_STEADY).integers(0, 2**63)),
                           workers=run.workers, warn=False)
    return res


# ---------------------------------------------------------------------------
# commands

def cmd_simulate(run):
    tab = section(run.data, "simulate")
    t = tab.require("t")
    n = tab.get("n_samples", 10_000, int)
    t_max = tab.get("t_max", T_MAX)
    gammas = tab.get("gammas", [1.0, 2.0], list)
    tab.finish()
    init = run.require_init()
    mu = sample_mu_t(t, run.kernel, init, n, run.seed, t_max=t_max, workers=run.workers)
    run.write_measure("samples.txt", mu)
    summary = {"t": t, "n_samples": n, "mean": mu.mean, "mean_se": mu.mean_se(),
               "variance": mu.variance, "second_moment": mu.moment(2),
               "second_moment_se": mu.moment_se(2),
               "q": [{"gamma": g, "q": q} for g, q in _q_table(run.kernel, gammas)]}
    run.write_json("summary.json", summary)
    return EXIT_OK


def cmd_steady(run):
    config, mc_pairs, xi = _steady_section(run)
    res = _solve(run, config)
    run.write_measure("steady.txt", res.measure)
    run.write_json("convergence.json", {"iterations": res.iterations, "final_gap": res.final_gap,
                                        "converged": res.converged, "log": res.log})
    rep = stationarity_residual(run.kernel, res.measure, xi, mc_pairs, substream(run.seed, _KEY_RESIDUAL))
    run.write_csv("residual.csv", ["xi", "residual", "se"], rep.per_point)
    predicted = None
    try:
        sm = steady_moments(run.kernel, m0=config.mean_pin)
        predicted = {"mean": sm.mean, "second_moment": sm.second_moment, "variance": sm.variance}
    except (InfiniteMomentError, UnsupportedMethodError) as exc:
        predicted = {"unavailable": str(exc)}
    m = res.measure
    run.write_json("steady_summary.json", {
        "mean": m.mean, "mean_se": m.mean_se(), "variance": m.variance, "spread": m.spread,
        "iterations": res.iterations, "final_gap": res.final_gap, "converged": res.converged,
        "max_abs_residual": rep.max_abs_residual, "mc_pairs": mc_pairs, "predicted": predicted})
    if not res.converged:
        log.warning("steady solver did not converge (gap %.3g > tol %.3g)", res.final_gap, config.tol)
        if run.strict:
            raise NonConvergence(f"gap {res.final_gap:.3g} > tol {config.tol:.3g}")
    return EXIT_OK


def cmd_contraction(run):
    tab = section(run.data, "contraction")
    gamma = tab.require("gamma")
    times = tab.get("times", [0.5, 1.0, 2.0, 4.0], list)
    n = tab.get("n_samples", 10_000, int)
    slack = tab.get("slack", 0.15)
    n_boot = tab.get("n_boot", 100, int)
    floor_factor = tab.get("floor_factor", 3.0)
    ref_path = tab.get("steady_ref", None, str)
    tab.finish()
    init = run.require_init()
    if ref_path is not None:
        full = os.path.join(run.base_dir, ref_path)
        if not os.path.exists(full):
            raise ConfigurationError(f"file not found: {ref_path}", "contraction.steady_ref")
        ref = EmpiricalMeasure.load(full)
        ref_info = {"source": ref_path}
    else:
        config = _steady_section(run)[0]
        res = _solve(run, config)
        if not res.converged and run.strict:
            raise NonConvergence(f"reference steady state: gap {res.final_gap:.3g} > tol {config.tol:.3g}")
        ref = res.measure
        ref_info = {"source": "solved", "iterations": res.iterations, "converged": res.converged,
                    "final_gap": res.final_gap}
    rep = contraction_check(run.kernel, init, gamma, times, n, ref.samples,
                            int(substream(run.seed, _KEY_CONTRACTION).integers(0, 2**63)),
                            slack=slack, floor_factor=floor_factor, n_boot=n_boot, workers=run.workers)
    rows = zip(rep.times, rep.observed, rep.bounds, rep.mc_floor, rep.passed)
    run.write_csv("contraction.csv", ["t", "observed", "bound", "mc_floor", "pass"], rows)
    run.write_json("contraction.json", {**rep.summary(), "n_samples": n, "reference": ref_info,
                                        "times": rep.times, "observed": rep.observed,
                                        "bounds": rep.bounds, "passed": rep.passed})
    return EXIT_OK


def redistribution_identity(kernel, betas):
    """Rows ``(beta, q_wrapped, tax_factor, q_base, product, abs_diff)``.

    ``q_wrapped`` integrates the wrapped weights directly; the product is the
    tax factor times the closed form of the base kernel.
    """
    if isinstance(kernel, K.RedistributionBernoulli):
        factor = kernel.tax_factor
    elif isinstance(kernel, K.RedistributionFull):
        factor = lambda b: (1.0 - kernel.eps) ** b  # noqa: E731
    else:
        raise ConfigurationError("the redistribution comparison needs a redistribution kernel",
                                 "kernel.type")
    rows = []
    for b in betas:
        wrapped = K.q_gamma(kernel, b, "quadrature")
        base = K.q_gamma(kernel.base, b, "closed_form")
        prod = factor(b) * base
        rows.append((b, wrapped, factor(b), base, prod, abs(wrapped - prod)))
    return rows


def cmd_moments(run):
    tab = section(run.data, "moments")
    gammas = tab.get("gammas", [0.5, 1.0, 1.5, 2.0, 3.0], list)
    n_max = tab.get("n_max", 20, int)
    betas = tab.get("betas", [1.0, 2.0, 3.0], list)
    tolerance = tab.get("identity_tol", 1e-8)
    mc_reps = tab.get("mc_reps", 0, int)
    tab.finish()
    rows = []
    rng = substream(run.seed, _KEY_MOMENTS)
    for g in gammas:
        row = {"gamma": g}
        for method in ("closed_form", "quadrature"):
            try:
                row[method] = K.q_gamma(run.kernel, g, method)
            except UnsupportedMethodError:
                row[method] = ""
        if mc_reps > 0:
            row["monte_carlo"], row["monte_carlo_se"] = K.q_gamma(run.kernel, g, "monte_carlo",
                                                                  reps=mc_reps, rng=rng)
        else:
            row["monte_carlo"] = row["monte_carlo_se"] = ""
        rows.append(row)
    cols = ["gamma", "closed_form", "quadrature", "monte_carlo", "monte_carlo_se"]
    run.write_csv("moments.csv", cols, [[r[c] for c in cols] for r in rows])
    cn_rows = []
    for r in rows:
        q = r["closed_form"] if r["closed_form"] != "" else r["quadrature"]
        if q == "" or not q > 0:
            continue
        cn_rows.extend((r["gamma"], q, n, c_n(q, n)) for n in range(n_max + 1))
    run.write_csv("cn.csv", ["gamma", "q", "n", "c_n"], cn_rows)
    try:
        mbar = {"m_bar": K.m_bar(run.kernel)}
    except (UndefinedMeanError, UnsupportedMethodError) as exc:
        mbar = {"m_bar": None, "reason": str(exc)}
    payload = {"mean_sum": run.kernel.mean_sum(), "mean_a0": run.kernel.mean_a0(), **mbar}
    if isinstance(run.kernel, (K.RedistributionBernoulli, K.RedistributionFull)):
        ident = redistribution_identity(run.kernel, betas)
        run.write_csv("redistribution.csv",
                      ["beta", "q_wrapped", "tax_factor", "q_base", "product", "abs_diff", "within_tol"],
                      [(*r, r[-1] <= tolerance) for r in ident])
        payload["identity_tol"] = tolerance
        payload["identity_max_abs_diff"] = max(r[-1] for r in ident)
    run.write_json("moments.json", payload)
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "steady": cmd_steady,
            "contraction": cmd_contraction, "moments": cmd_moments}


def build_parser():
    p = argparse.ArgumentParser(prog="wildkac", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, metavar="PATH", help="TOML run configuration")
    p.add_argument("--seed", type=int, default=None, metavar="U64", help="overrides the config seed")
    p.add_argument("--out", default=".", metavar="DIR", help="output directory (created if missing)")
    p.add_argument("--workers", type=int, default=1, metavar="N", help="thread cap; results do not depend on it")
    p.add_argument("--strict", action="store_true", help="treat solver non-convergence as an error (exit 4)")
    return p


def _setup_log(out_dir):
    handler = logging.FileHandler(os.path.join(out_dir, "run.log"))
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    return handler


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    os.makedirs(args.out, exist_ok=True)
    handler = _setup_log(args.out)
    try:
        start = time.perf_counter()
        run = Run(load_config(args.config), args.seed, args.config, args.out, args.workers, args.strict)
        code = COMMANDS[args.command](run)
        log.info("%s finished in %.3f s (workers=%d)", args.command, time.perf_counter() - start, args.workers)
        return code
    except (ConfigurationError, ResourceCapError, UnsupportedMethodError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (PreconditionError, UndefinedMeanError, InfiniteMomentError) as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        log.error("precondition violated: %s", exc)
        return EXIT_PRECONDITION
    except NonConvergence as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        log.error("not converged: %s", exc)
        return EXIT_NONCONVERGED
    finally:
        log.removeHandler(handler)
        handler.close()


if __name__ == "__main__":
    sys.exit(main())
