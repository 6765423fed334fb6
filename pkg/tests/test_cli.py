import json

import numpy as np
import pytest

from wildkac import kernels as K
from wildkac.cli import EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_OK, EXIT_PRECONDITION, main
from wildkac.config import kernel_from_config
from wildkac.exceptions import ConfigurationError
from wildkac.measure import EmpiricalMeasure

BASE = """
seed = 7

[kernel]
type = "redistribution_bernoulli"
eps = 0.1
delta = 0.5
[kernel.base]
type = "saving_propensity"
lam = 0.3
[kernel.a0dist]
type = "exponential"
mean = 1.0

[init]
type = "exponential"
mean = 1.0
"""


def write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run(tmp_path, command, text, *extra, out="out"):
    cfg = write(tmp_path, text)
    code = main([command, "--config", cfg, "--out", str(tmp_path / out), *extra])
    return code, tmp_path / out


# --- config parsing -----------------------------------------------------------

def test_nested_kernel_table():
    k = kernel_from_config({"type": "chi_general", "eps": 0.2, "chi": 1, "m0": 1.0,
                            "base": {"type": "pure_gambling", "eta": {"type": "uniform", "low": 0, "high": 0.8}}})
    assert isinstance(k, K.ChiGeneral) and k.delta == pytest.approx(0.2)


def test_bath_from_drift_and_diffusion():
    k = kernel_from_config({"type": "thermal_bath_diff", "m0": 0.3, "sigma2": 0.5,
                            "base": {"type": "inelastic_kac", "p": 1.0}})
    assert k.drift == pytest.approx(0.3) and k.diffusion == pytest.approx(0.5)


@pytest.mark.parametrize("table,path", [
    ({"type": "nope"}, "kernel.type"),
    ({"type": "chi_zero", "eps": 0.2, "m0": 1.0}, "kernel.base"),
    ({"type": "chi_zero", "eps": 0.2, "m0": 1.0, "base": {"type": "saving_propensity", "lam": "x"}},
     "kernel.base.lam"),
    ({"type": "saving_propensity", "lam": 0.3, "eta": {"type": "bernoulli", "p": 0.5, "q": 1}},
     "kernel.eta.q"),
    ({"type": "redistribution_full", "eps": 1.5, "a0dist": {"type": "exponential", "mean": 1.0},
      "base": {"type": "kac"}}, "kernel"),
])
def test_errors_carry_key_path(table, path):
    with pytest.raises(ConfigurationError) as err:
        kernel_from_config(table)
    assert err.value.path == path


# --- commands -------------------------------------------------------------------

SIM = BASE + "\n[simulate]\nt = 1.0\nn_samples = 1500\n"


def test_simulate_outputs(tmp_path):
    code, out = run(tmp_path, "simulate", SIM)
    assert code == EXIT_OK
    m = EmpiricalMeasure.load(out / "samples.txt")
    assert m.n == 1500 and m.meta["seed"] == 7 and m.meta["config"]["simulate"]["t"] == 1.0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["header"]["seed"] == 7
    assert summary["mean"] == pytest.approx(m.mean)
    assert [row["gamma"] for row in summary["q"]] == [1.0, 2.0]
    assert "runtime" not in json.dumps(summary)
    assert "finished" in (out / "run.log").read_text()


def test_simulate_gaussian_at_time_zero(tmp_path):
    text = BASE.split("[init]")[0] + '[init]\ntype = "gaussian"\nmean = 0.0\nstd = 1.0\n[simulate]\nt = 0.0\nn_samples = 10000\n'
    code, out = run(tmp_path, "simulate", text)
    s = json.loads((out / "summary.json").read_text())
    assert code == EXIT_OK
    se_var = np.sqrt(2.0 / 10_000)
    assert abs(s["variance"] - 1.0) <= 3 * se_var


def test_seed_override_and_determinism(tmp_path):
    run(tmp_path, "simulate", SIM, "--seed", "99", out="a")
    run(tmp_path, "simulate", SIM, "--seed", "99", out="b")
    run(tmp_path, "simulate", SIM, "--seed", "99", "--workers", "4", out="c")
    a = (tmp_path / "a" / "samples.txt").read_bytes()
    assert a == (tmp_path / "b" / "samples.txt").read_bytes() == (tmp_path / "c" / "samples.txt").read_bytes()
    assert json.loads(a.splitlines()[0])["seed"] == 99


def test_missing_seed_is_a_config_error(tmp_path, capsys):
    code, _ = run(tmp_path, "simulate", SIM.replace("seed = 7", ""))
    assert code == EXIT_CONFIG and "seed" in capsys.readouterr().err


def test_bad_value_reports_path(tmp_path, capsys):
    code, _ = run(tmp_path, "simulate", SIM.replace("lam = 0.3", 'lam = "high"'))
    assert code == EXIT_CONFIG and "kernel.base.lam" in capsys.readouterr().err


def test_unknown_section_key(tmp_path, capsys):
    code, _ = run(tmp_path, "simulate", SIM + "colour = 1\n")
    assert code == EXIT_CONFIG and "simulate.colour" in capsys.readouterr().err


def test_time_cap_is_a_config_error(tmp_path):
    code, _ = run(tmp_path, "simulate", SIM.replace("t = 1.0", "t = 20.0"))
    assert code == EXIT_CONFIG


def test_missing_reference_file(tmp_path, capsys):
    text = BASE + '\n[contraction]\ngamma = 1.0\nsteady_ref = "nowhere.txt"\n'
    code, _ = run(tmp_path, "contraction", text)
    assert code == EXIT_CONFIG and "contraction.steady_ref" in capsys.readouterr().err


def test_empirical_init_from_file(tmp_path):
    EmpiricalMeasure(np.array([0.5, 1.0, 1.5])).save(tmp_path / "init.txt")
    text = BASE.replace('[init]\ntype = "exponential"\nmean = 1.0', '[init]\ntype = "empirical"\npath = "init.txt"')
    code, out = run(tmp_path, "simulate", text + "\n[simulate]\nt = 0.0\nn_samples = 50\n")
    assert code == EXIT_OK
    assert set(EmpiricalMeasure.load(out / "samples.txt").samples) <= {0.5, 1.0, 1.5}


def test_precondition_exit_code(tmp_path, capsys):
    text = """seed = 1
[kernel]
type = "inelastic_kac"
[kernel.background]
type = "two_point"
low = -1.0
high = 1.0
[init]
type = "gaussian"
mean = 3.0
[contraction]
gamma = 2.0
[steady]
pool_size = 1000
"""
    code, _ = run(tmp_path, "contraction", text)
    assert code == EXIT_PRECONDITION and "forced mean" in capsys.readouterr().err


def test_strict_non_convergence(tmp_path):
    text = BASE + "\n[steady]\npool_size = 1000\nmax_iters = 2\ntol = 1e-6\nmc_pairs = 100\n"
    code, out = run(tmp_path, "steady", text, "--strict")
    assert code == EXIT_NONCONVERGED
    assert json.loads((out / "convergence.json").read_text())["converged"] is False
    code, _ = run(tmp_path, "steady", text, out="lenient")
    assert code == EXIT_OK


def test_steady_and_moments_outputs(tmp_path):
    text = BASE + "\n[steady]\npool_size = 5000\ntol = 0.05\nmc_pairs = 2000\nxi_count = 11\n"
    code, out = run(tmp_path, "steady", text)
    assert code == EXIT_OK
    for name in ("steady.txt", "convergence.json", "steady_summary.json", "residual.csv"):
        assert (out / name).exists()
    lines = (out / "residual.csv").read_text().splitlines()
    assert lines[0].startswith("# ") and lines[1] == "xi,residual,se" and len(lines) == 13
    log = json.loads((out / "convergence.json").read_text())["log"]
    assert set(log[0]) == {"iteration", "gap", "mean", "variance"}

    code, out = run(tmp_path, "moments", text, out="mom")
    assert code == EXIT_OK
    m = json.loads((out / "moments.json").read_text())
    assert m["m_bar"] == pytest.approx(1.0) and m["identity_max_abs_diff"] <= 1e-8
    cn = (out / "cn.csv").read_text().splitlines()
    assert cn[1] == "gamma,q,n,c_n" and len(cn) == 2 + 5 * 21


def test_moments_for_conserving_kernel(tmp_path):
    text = 'seed = 3\n[kernel]\ntype = "saving_propensity"\nlam = 0.3\n'
    code, out = run(tmp_path, "moments", text)
    assert code == EXIT_OK
    m = json.loads((out / "moments.json").read_text())
    assert m["m_bar"] is None and "pin" in m["reason"]
    assert not (out / "redistribution.csv").exists()


def test_contraction_shares_the_steady_table(tmp_path):
    text = BASE + ("\n[steady]\npool_size = 5000\ntol = 0.05\nmc_pairs = 100\n"
                   "[contraction]\ngamma = 1.0\ntimes = [1.0]\nn_samples = 500\nn_boot = 10\n")
    code, out = run(tmp_path, "contraction", text)
    assert code == EXIT_OK
    rep = json.loads((out / "contraction.json").read_text())
    assert rep["reference"]["source"] == "solved" and rep["proposition"] == "gamma=1"
    assert (out / "contraction.csv").read_text().splitlines()[1] == "t,observed,bound,mc_floor,pass"
