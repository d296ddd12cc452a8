import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from horolab import boundary as bd
from horolab import jacobi as jc
from horolab.exceptions import ModelError
from horolab.models import make_model

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


def _disk_busemann(y, xi):
    # b_{0, xi}(y) = -log((1 - |y|^2) / |y - xi|^2) in the Poincare disk
    return -math.log((1.0 - y @ y) / np.sum((y - xi) ** 2))


def test_halfspace_oracle_h3(H3):
    base = H3.from_chart(np.array([0.0, 0.0, 1.0]), "halfspace")
    up = H3.from_chart(np.array([0.0, 0.0, math.e]), "halfspace")
    xi = bd.boundary_point(H3, base, H3.log(base, up))
    p = H3.from_chart(np.array([0.0, 0.0, 2.0]), "halfspace")
    assert bd.busemann(H3, xi, p) == pytest.approx(-math.log(2.0), abs=1e-14)
    assert bd.busemann(H3, xi, p, 40.0, mode="limit") == pytest.approx(-math.log(2.0), abs=1e-8)
    # moving horizontally keeps the height, hence the Busemann value
    q = H3.from_chart(np.array([3.0, -1.0, 2.0]), "halfspace")
    assert bd.busemann(H3, xi, q) == pytest.approx(-math.log(2.0), abs=1e-12)


@given(seeds)
def test_disk_oracle(seed):
    M = make_model("hyperbolic", 2)
    rng = np.random.default_rng(seed)
    o = M.origin()
    v = M.random_unit(rng, o)
    x = M.random_point(rng, 4.0)
    xi_disk = M.tangent_to_sphere(o, v)
    assert bd.busemann(M, bd.BoundaryPoint(o, v), x) == pytest.approx(
        _disk_busemann(M.to_chart(x, "ball"), xi_disk), abs=1e-9)


def test_flat_busemann(E2):
    xi = bd.BoundaryPoint(np.zeros(2), np.array([1.0, 0.0]))
    assert bd.busemann(E2, xi, np.array([3.0, 5.0])) == pytest.approx(-3.0)
    # the flat tail is algebraic, so the limit needs large radii
    assert bd.busemann(E2, xi, np.array([3.0, 5.0]), 4000.0, mode="limit", tol=1e-4) == pytest.approx(-3.0, abs=1e-4)


def test_busemann_mode_errors(H2):
    o = H2.origin()
    xi = bd.BoundaryPoint(o, H2.tangent_basis(o)[0])
    with pytest.raises(ModelError):
        bd.busemann(H2, xi, o, mode="series")
    far = H2.exp(o, H2.tangent_basis(o)[1], 5.0)
    with pytest.raises(ModelError):
        bd.busemann(H2, xi, far, r_max=3.0, mode="limit")


@given(seeds)
def test_gradient_routes_agree(seed):
    M = make_model("hyperbolic", 3)
    rng = np.random.default_rng(seed)
    o = M.origin()
    xi = bd.BoundaryPoint(o, M.random_unit(rng, o))
    q = M.random_point(rng, 3.0)
    w_cf = bd.busemann_gradient(M, xi, q, "closed_form")
    w_fd = bd.busemann_gradient(M, xi, q, "fd")
    assert M.norm(q, w_cf) == pytest.approx(1.0, abs=1e-12)
    assert np.abs(w_cf - w_fd).max() < 1e-4
    # c_w is asymptotic to c_v, so t -> d(c_v(t), c_w(t)) is convex and bounded, hence
    # nonincreasing; beyond t ~ 10 hyperboloid coordinates cannot resolve the distance
    ds = [M.dist(M.exp(o, xi.dir, t), M.exp(q, w_cf, t)) for t in (0.0, 2.5, 5.0, 7.5, 10.0)]
    assert max(ds) <= M.dist(o, q) + 1e-6
    assert np.all(np.diff(ds) <= 1e-6)


@given(seeds)
def test_rebase_and_cocycle(seed):
    M = make_model("hyperbolic", 2)
    rng = np.random.default_rng(seed)
    o = M.origin()
    xi = bd.BoundaryPoint(o, M.random_unit(rng, o))
    p, q = M.random_point(rng, 3.0), M.random_point(rng, 3.0)
    xq = bd.rebase_boundary_point(M, xi, q)
    back = bd.rebase_boundary_point(M, xq, o)
    assert bd.angle_between(M, o, back.dir, xi.dir) < 1e-7
    assert bd.busemann(M, xq, p) == pytest.approx(bd.busemann(M, xi, p) - bd.busemann(M, xi, q), abs=2e-7)


def test_same_as(H2):
    o = H2.origin()
    a = bd.BoundaryPoint(o, H2.tangent_basis(o)[0])
    assert a.same_as(bd.BoundaryPoint(o, H2.tangent_basis(o)[0]))
    assert not a.same_as(bd.BoundaryPoint(o, H2.tangent_basis(o)[1]))
    with pytest.raises(ModelError):
        a.same_as(bd.BoundaryPoint(H2.exp(o, a.dir, 1.0), a.dir))


def test_gromov_product_and_segment(H2):
    rng = np.random.default_rng(4)
    x0, x, y = (H2.random_point(rng, 3.0) for _ in range(3))
    g = bd.gromov_product(H2, x0, x, y)
    assert g == pytest.approx(0.5 * (H2.dist(x, x0) + H2.dist(y, x0) - H2.dist(x, y)))
    # sandwich: (x|y) <= d(x0, [x, y]) <= (x|y) + const on H^2
    d = bd.distance_to_segment(H2, x0, x, y)
    assert g <= d + 1e-9
    assert d - g < 1.0
    mid = bd.segment_point(H2, x, y, 0.5)
    assert H2.dist(x, mid) == pytest.approx(0.5 * H2.dist(x, y), rel=1e-10)


def test_hyperbolicity_probe_small(H2, E2):
    rep = bd.hyperbolicity_probe(H2, 200, 5.0, 0, 50)
    assert rep.delta4 < math.log(2.0) + 1e-9
    assert rep.sandwich_violations == 0
    assert rep.gromconv["forward"] and rep.gromconv["backward"]
    flat = bd.hyperbolicity_probe(E2, 200, 10.0, 0, 50)
    assert flat.delta4 > 1.0
    assert flat.sandwich_violations == 0
    with pytest.raises(ModelError):
        bd.hyperbolicity_probe(H2, 0, 1.0, 0)


def test_divergence_profile(H2, E2):
    c = jc.fit_divergence_constants(H2, 2, 0)
    o = H2.origin()
    t = np.arange(0.0, 10.01, 0.5)
    assert bd.divergence_profile(H2, o, H2.tangent_basis(o)[0], math.pi / 3, t, c)["holds"]
    flat = bd.divergence_profile(E2, E2.origin(), np.array([1.0, 0.0]), math.pi / 3, t, c)
    assert not flat["holds"]
    assert any(r["branch"] == "exp" and not r["ok"] for r in flat["rows"])
    with pytest.raises(ModelError):
        bd.divergence_profile(H2, o, H2.tangent_basis(o)[0], 4.0, t, c)


def test_cone_oracle(H2):
    # sup over the complement of C(v, delta) of d(p,q) - b_v(q) at distance s
    # is s - log(cosh s - sinh s cos delta), tending to -2 log sin(delta/2)
    o = H2.origin()
    delta = math.pi / 4
    cone = bd.ConeSpec(H2.tangent_basis(o)[0], delta)
    rep = bd.cone_horoball_check(H2, o, cone, np.arange(0.5, 20.01, 0.5))
    s = 20.0
    assert rep["C1"] == pytest.approx(s - math.log(math.cosh(s) - math.sinh(s) * math.cos(delta)), abs=1e-9)
    assert rep["C1"] == pytest.approx(-2.0 * math.log(math.sin(delta / 2.0)), abs=1e-6)
    assert rep["stable"] and rep["late_increment"] < 1e-3
    inside = H2.exp(o, bd.rotate_in_plane(cone.v0, H2.tangent_basis(o)[1], 0.1), 2.0)
    assert bd.in_cone(H2, cone, o, inside)
    assert not bd.in_cone(H2, cone, o, H2.exp(o, H2.tangent_basis(o)[1], 2.0))


def test_cone_flat_unbounded(E2):
    cone = bd.ConeSpec(np.array([1.0, 0.0]), math.pi / 4)
    rep = bd.cone_horoball_check(E2, np.zeros(2), cone, np.arange(0.5, 20.01, 0.5))
    # b_v(q) = -s cos(theta) in the plane, so the deficit s (1 + cos theta) peaks at theta = delta
    assert rep["C1"] == pytest.approx(20.0 * (1.0 + math.cos(math.pi / 4)), abs=1e-9)
    assert not rep["stable"]
    assert rep["counterexample"] is not None


@pytest.mark.parametrize("delta", [0.0, math.pi, -1.0])
def test_cone_spec_validation(delta):
    with pytest.raises(ModelError):
        bd.ConeSpec(np.array([1.0, 0.0]), delta)
