import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from horolab import jacobi as jc
from horolab.exceptions import ModelError, NonExponentialGrowth
from horolab.models import make_model

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


def _sample(M, seed, radius=2.0):
    rng = np.random.default_rng(seed)
    p = M.random_point(rng, radius)
    return p, M.random_unit(rng, p)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_propagator_constant_curvature(n):
    # Y'' = Y on H^n: Phi(t) = [[cosh t, sinh t], [sinh t, cosh t]] blockwise
    M = make_model("hyperbolic", n)
    p, v = _sample(M, n)
    t = np.array([0.0, 0.5, 2.0, 7.0])
    Phi = jc.propagator(M, p, v, t)
    m = n - 1
    for k, tk in enumerate(t):
        assert np.allclose(Phi[k][:m, :m], math.cosh(tk) * np.eye(m), rtol=1e-10, atol=1e-12)
        assert np.allclose(Phi[k][:m, m:], math.sinh(tk) * np.eye(m), rtol=1e-10, atol=1e-12)


def test_propagator_flat(E2):
    Phi = jc.propagator(E2, E2.origin(), np.array([1.0, 0.0]), np.array([0.0, 3.0]))
    assert Phi[1][0, 1] == pytest.approx(3.0)
    assert Phi[1][0, 0] == pytest.approx(1.0)


def test_propagator_negative_times(H2):
    o = H2.origin()
    v = H2.tangent_basis(o)[0]
    Phi = jc.propagator(H2, o, v, np.array([-2.0, 0.0, 1.0]))
    assert Phi[0][0, 1] == pytest.approx(math.sinh(-2.0), rel=1e-10)


def test_propagator_rejects_unsorted_grid(H2):
    o = H2.origin()
    with pytest.raises(ModelError):
        jc.propagator(H2, o, H2.tangent_basis(o)[0], np.array([1.0, 0.5]))


@pytest.mark.parametrize("n", [2, 3])
def test_stable_unstable_limits_hyperbolic(n):
    M = make_model("hyperbolic", n)
    lim = jc.asymptotic_tensors(M, *_sample(M, 7))
    assert np.allclose(lim.U, np.eye(n - 1), atol=1e-10)
    assert np.allclose(lim.S, -np.eye(n - 1), atol=1e-10)
    assert lim.trU == pytest.approx(n - 1, abs=1e-10)
    assert lim.rank == 1


def test_flat_limits_vanish_with_full_rank():
    E = make_model("euclidean", 3)
    lim = jc.asymptotic_tensors(E, E.origin(), np.array([1.0, 0.0, 0.0]))
    assert np.abs(lim.U).max() < 1e-9
    assert np.abs(lim.S).max() < 1e-9
    assert lim.rank == 3


def test_boundary_tensor(H2):
    # S_{v,r}(t) = sinh(r - t) / sinh(r) on H^2
    o = H2.origin()
    J = jc.boundary_tensor_S(H2, o, H2.tangent_basis(o)[0], 3.0, np.array([0.0, 1.0, 3.0]))
    assert np.allclose(J.values[:, 0, 0], np.sinh(3.0 - np.array([0.0, 1.0, 3.0])) / math.sinh(3.0), atol=1e-12)
    assert J.wronskian_residual() < 1e-10


def test_det_limit_constant_oracle(H2, H3):
    # U - S'_{v,t}(0) = (1 + coth t) I on H^n, limit 2^{n-1}
    t = np.array([0.5, 1.0, 5.0, 20.0])
    for M in (H2, H3):
        p, v = _sample(M, 3)
        vals = jc.det_limit_constant(M, p, v, t)
        assert np.allclose(vals, (1.0 + 1.0 / np.tanh(t)) ** (M.n - 1), rtol=1e-10)
        assert np.all(np.diff(vals) <= 0)


@given(seeds, st.sampled_from([0.5, 1.0, 2.0, 5.0, 10.0]))
def test_identities_property(seed, t):
    M = make_model("hyperbolic", 3)
    r1, r2 = jc.jacobi_identity_checks(M, *_sample(M, seed), t)
    assert r1 < 1e-8
    assert r2 < 1e-6


def test_identities_small_t(H2):
    o = H2.origin()
    r1, r2 = jc.jacobi_identity_checks(H2, o, H2.tangent_basis(o)[0], 1e-6)
    assert r1 < 1e-8 and r2 < 1e-6
    with pytest.raises(ModelError):
        jc.jacobi_identity_checks(H2, o, H2.tangent_basis(o)[0], 0.0)


def test_identities_need_h():
    R = make_model("rotsym", 2)
    with pytest.raises(ModelError):
        jc.jacobi_identity_checks(R, np.array([1.0, 0.0]), np.array([1.0, 0.0]), 1.0)


def test_unstable_tensor_growth(H2):
    o = H2.origin()
    Ut = jc.unstable_tensor(H2, o, H2.tangent_basis(o)[0], np.array([0.0, 2.0]))
    assert Ut.values[1][0, 0] == pytest.approx(math.exp(2.0), rel=1e-10)


def test_gauss_panels_integrate_exactly():
    x, w = jc.gauss_panels(7.3)
    assert math.fsum(w * np.exp(x)) == pytest.approx(math.expm1(7.3), rel=1e-14)


def test_divergence_constants_h2_oracle(H2):
    # on H^2 sigma_min(A_v(t)) = sinh t; independent least squares of log sinh t on [1, 10]
    t = np.linspace(1.0, 10.0, 91)
    slope, icpt = np.polyfit(t, np.log(np.sinh(t)), 1)
    assert slope == pytest.approx(1.00501767, abs=1e-8)
    c = jc.fit_divergence_constants(H2, 4, 0)
    assert c.rho / 2 == pytest.approx(slope, abs=1e-9)
    assert c.a == pytest.approx(math.exp(icpt), rel=1e-8)
    assert c.a == pytest.approx(0.48225804, abs=1e-8)
    # the fitted rate carries the bias of log(1 - e^{-2t}) / 2 on the window
    assert abs(c.rho / 2 - 1.0) < 1e-2


def test_divergence_constants_reject_flat(E2):
    with pytest.raises(NonExponentialGrowth):
        jc.fit_divergence_constants(E2, 2, 0)


def test_harmonicity_scan_h2(H2):
    rep = jc.harmonicity_scan(H2, 8, 0)
    assert rep["max_dev"] < 1e-6
    assert rep["max_dev_from_h"] < 1e-6


def test_harmonicity_scan_validates():
    with pytest.raises(ModelError):
        jc.harmonicity_scan(make_model("hyperbolic", 2), 0, 0)


def test_rotsym_reversal_consistency():
    # U(v) via backward integration equals -S(-v) via forward shooting along -v
    R = make_model("rotsym", 2)
    p = np.array([1.0, 0.4])
    v = R.unit(p, np.array([0.3, 1.0]))
    lim = jc.asymptotic_tensors(R, p, v)
    back = jc.asymptotic_tensors(R, p, -v)
    assert np.allclose(lim.U, -back.S, atol=1e-8)
