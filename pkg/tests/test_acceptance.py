"""Acceptance suite: one test per criterion, each run through the shipped configs.

Every metric is judged against the stated tolerance here rather than the
tolerance carried by the config, so a loosened config cannot pass silently.
Each test prints one PASS/FAIL line and registers it for the terminal summary.
"""

import copy
import functools
import math
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import pytest
from conftest import ACCEPTANCE

from horolab import cli

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@functools.lru_cache(maxsize=None)
def _raw(name):
    with open(CONFIGS / f"{name}.toml", "rb") as fh:
        return tomllib.load(fh)


@functools.lru_cache(maxsize=None)
def _run(name, n=None, **params):
    raw = copy.deepcopy(_raw(name))
    raw.setdefault("params", {}).update(params)
    if n is not None:
        raw["model"]["n"] = n
    cfg = cli.validate_config(raw)
    recs, _ = cli.run_config(cfg)
    return cfg, recs


def _worst(recs, metric):
    vals = [r.value for r in recs if r.metric == metric]
    assert vals, f"no {metric} records"
    return max(vals)


def _matches_expectation(cfg, recs):
    return all(r.passed == (not (r.control and cfg["expect"] == "fail")) for r in recs)


def _report(k, checks):
    """checks: list of (label, value, ok)."""
    ok = all(c[2] for c in checks)
    msg = "; ".join(f"{label} {value:.3g}" + ("" if good else " (FAIL)") for label, value, good in checks)
    ACCEPTANCE[k] = (ok, msg)
    print(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {msg}")
    assert ok, msg


def test_criterion_01_determinant_identity():
    checks = []
    for name in ("jacobi_h2", "jacobi_h3"):
        cfg, recs = _run(name)
        assert cfg["params"]["samples"] >= 32 and cfg["params"]["t_values"] == [0.5, 1.0, 2.0, 5.0, 10.0]
        w = _worst(recs, "det_identity")
        checks.append((f"{name} det residual", w, w < 1e-8))
    _report(1, checks)


def test_criterion_02_representation():
    checks = []
    for name in ("jacobi_h2", "jacobi_h3"):
        _, recs = _run(name)
        w = _worst(recs, "representation")
        checks.append((f"{name} representation residual", w, w < 1e-6))
    _report(2, checks)


def test_criterion_03_asymptotic_harmonicity():
    cfg, recs = _run("harmonicity_h3")
    assert cfg["params"]["sample_size"] >= 200
    dev = _worst(recs, "trU_minus_h")
    ccfg, crecs = _run("harmonicity_rotsym_control")
    cdev = _worst(crecs, "trU_max_deviation")
    _report(3, [("H3 max |trU - 2|", dev, dev < 1e-6),
                ("rotsym deviation", cdev, cdev > 1e-2 and _matches_expectation(ccfg, crecs))])


def test_criterion_04_radon_nikodym():
    checks = []
    for d in (1.0, 2.0):
        cfg, recs = _run("radon_nikodym_h2", distance=d)
        assert cfg["params"]["directions"] >= 64 and cfg["params"]["t"] == 20.0 and cfg["params"]["t_far"] == 40.0
        gap, fd = _worst(recs, "rn_gap"), _worst(recs, "formula_vs_numeric")
        nd = _worst(recs, "gap_not_decreasing")
        checks += [(f"d={d:g} gap(t=20)", gap, gap < 1e-4), (f"d={d:g} FD residual", fd, fd < 1e-5),
                   (f"d={d:g} non-decreasing gaps", nd, nd == 0)]
    _report(4, checks)


def test_criterion_05_change_of_base():
    _, recs = _run("radon_nikodym_h2", distance=1.0)
    checks = [(f"f={r.params['f']}", r.value, r.value < 1e-6) for r in recs if r.metric == "base_change"]
    assert len(checks) == 3
    _report(5, checks)


def test_criterion_06_dirichlet():
    cfg, recs = _run("dirichlet_h2")
    assert cfg["params"]["grid_points"] >= 100 and cfg["params"]["step"] == 1e-3
    orc, lap = _worst(recs, "poisson_oracle"), _worst(recs, "laplacian_extension")
    bnd = {r.params["sequence"]: r.value for r in recs if r.metric == "boundary_error"}
    mp = _worst(recs, "maximum_principle_violations")
    _report(6, [("|H_f - tanh(1/2)|", orc, orc < 1e-6), ("Laplacian residual", lap, lap < 1e-4),
                ("radial error at d=8", bnd["radial"], bnd["radial"] < 1e-2),
                ("cone error at d=8", bnd["cone"], bnd["cone"] < 1e-2),
                ("max principle violations", mp, mp == 0)])


def test_criterion_07_kernel_facts():
    _, recs = _run("dirichlet_h2")
    b, k = _worst(recs, "laplacian_busemann_minus_h"), _worst(recs, "laplacian_kernel")
    _report(7, [("|Delta b - h|", b, b < 5e-3), ("|Delta e^{-hb}|", k, k < 1e-4)])


def test_criterion_08_horosphere_volume():
    checks = []
    for n in (2, 3):
        cfg, recs = _run("horosphere_volume_h3", n=n)
        assert max(abs(t) for t in cfg["params"]["t_values"]) == 3.0
        w = _worst(recs, "volume_scaling")
        checks.append((f"H{n} volume scaling", w, w < 1e-6))
        _, grecs = _run("growth_h3", n=n)
        s, b = _worst(grecs, "slope_relative_error"), _worst(grecs, "slope_over_bound")
        checks += [(f"H{n} slope rel. error", s, s < 0.02), (f"H{n} slope / bound", b, b <= 1.0)]
    _report(8, checks)


def test_criterion_09_horospherical_means():
    _, recs = _run("horospherical_means_h2")
    rec = next(r for r in recs if r.metric == "mean_minus_boundary_value")
    assert rec.params["radius"] == 128.0
    _report(9, [("|g_J(0) - f(xi)| at r=128", rec.value, rec.value < 0.02)])


def test_criterion_10_eigenfunction_means():
    cfg, recs = _run("eigen_means_h2")
    assert cfg["params"]["lambda"] == pytest.approx((1.0 / 2) ** 2 + 1)
    dec, fin = _worst(recs, "decay_shortfall"), _worst(recs, "final_mean")
    ode, coef = _worst(recs, "ode_residual"), _worst(recs, "basis_coefficients")
    _report(10, [("5 |g_J(0)| / |g_1(0)|", dec, dec <= 1.0), ("|g_J(0)|", fin, fin < 0.05),
                 ("ODE residual", ode, ode < 5e-2), ("basis coefficients", coef, coef < 0.05)])


def test_criterion_11_hyperbolicity():
    cfg, recs = _run("hyperbolicity_h2")
    assert cfg["params"]["sample_size"] >= 2000 and cfg["params"]["radius"] == 10.0
    d4 = _worst(recs, "delta4")
    ccfg, crecs = _run("hyperbolicity_e2_control")
    cd4 = _worst(crecs, "delta4")
    sw = _worst(recs, "sandwich_left_violations") + _worst(crecs, "sandwich_left_violations")
    _report(11, [("H2 four-point deficit", d4, d4 <= 0.70),
                 ("E2 deficit", cd4, cd4 >= 1.0 and _matches_expectation(ccfg, crecs)),
                 ("sandwich violations", sw, sw == 0)])


def test_criterion_12_divergence():
    cfg, recs = _run("divergence_h2")
    env = [r for r in recs if r.metric == "envelope_violations"]
    assert sorted(r.params["angle_over_pi"] for r in env) == pytest.approx([1 / 6, 1 / 3, 1 / 2])
    ccfg, crecs = _run("divergence_e2_control")
    cexp = sum(r.value for r in crecs if r.metric == "exp_branch_violations")
    _report(12, [("H2 envelope violations", sum(r.value for r in env), all(r.value == 0 for r in env)),
                 ("E2 exp-branch violations", cexp, cexp > 0 and _matches_expectation(ccfg, crecs))])


def test_criterion_13_cone_horoball():
    _, recs = _run("busemann_h2")
    inc = _worst(recs, "cone_C1_late_increment")
    ccfg, crecs = _run("busemann_e2_control")
    c1 = _worst(crecs, "cone_C1")
    _report(13, [("H2 late increment", inc, inc < 1e-3),
                 ("E2 deficit", c1, c1 > 10.0 and math.isfinite(c1) and _matches_expectation(ccfg, crecs))])
