"""Harmonic extension of boundary data through the Busemann Poisson kernel.

With a fixed base point x0 and boundary data f on the unit sphere at x0,

    H_f(x) = (1/omega_n) int_{S_{x0}X} f(v) exp(-h b_{x0,v}(x)) dv,

which equals the visibility integral of f with respect to mu_x.  The
integral is evaluated with nested refinement of the sphere rule, since the
kernel concentrates as x approaches the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_legendre

from .boundary import BoundaryPoint, busemann, rebase_boundary_point
from .exceptions import ConvergenceError, ModelError
from .measures import SphereQuadrature, sphere_quadrature, visibility_integral
from .models import minkowski, null_pairing

EXT_TOL = 1e-14
MAX_NODES = 2 ** 23


@dataclass(frozen=True)
class BoundaryFunction:
    """Boundary data given by a vectorized rule on unit vectors at the base point.

    ``rule`` maps an (N, n) array of orthonormal sphere coordinates at
    ``base`` to N values; ``lower`` and ``upper`` bound its range.
    """

    M: object
    base: np.ndarray
    rule: object
    name: str
    lower: float
    upper: float

    def on_sphere(self, coords):
        return np.asarray(self.rule(np.atleast_2d(coords)), dtype=float)

    def __call__(self, xi):
        """Value at a boundary point, rebased to the canonical base when needed."""
        if not np.allclose(xi.base, self.base, rtol=0, atol=1e-14):
            xi = rebase_boundary_point(self.M, xi, self.base)
        c = self.M.tangent_to_sphere(self.base, xi.dir)
        return float(self.on_sphere(c)[0])

    @property
    def sup_norm(self):
        return max(abs(self.lower), abs(self.upper))


def constant_function(M, base, c=1.0):
    return BoundaryFunction(M, base, lambda x: np.full(len(x), float(c)), f"const({c})", c, c)


def cos_harmonic(M, base, k=1):
    """cos(k theta) on the circle at the base point (n = 2)."""
    if M.n != 2:
        raise ModelError("cos(k theta) data need n = 2")
    return BoundaryFunction(M, base, lambda x: np.cos(k * np.arctan2(x[:, 1], x[:, 0])),
                            f"cos{k}", -1.0, 1.0)


def zonal_harmonic(M, base, degree=1):
    """Legendre polynomial P_l of the last sphere coordinate (n = 3)."""
    if M.n != 3:
        raise ModelError("zonal harmonics are provided for n = 3")
    lo = -0.5 if degree == 2 else -1.0
    return BoundaryFunction(M, base, lambda x: eval_legendre(degree, x[:, -1]),
                            f"zonal{degree}", lo, 1.0)


def lipschitz_bump(M, base, center, width):
    """max(0, 1 - angle(x, center)/width), a continuous but non-smooth datum."""
    c = np.asarray(center, dtype=float)
    c = c / np.linalg.norm(c)

    def rule(x):
        ang = np.arccos(np.clip(x @ c, -1.0, 1.0))
        return np.maximum(0.0, 1.0 - ang / width)
    return BoundaryFunction(M, base, rule, f"bump({width})", 0.0, 1.0)


def poisson_kernel(M, x0, x, xi):
    """P(x, xi) = exp(-h b_{x0,xi}(x)); P(x0, xi) = 1."""
    if M.h is None:
        raise ModelError("Poisson kernel needs the horosphere mean curvature h")
    if not np.allclose(xi.base, x0, rtol=0, atol=1e-14):
        xi = rebase_boundary_point(M, xi, x0)
    return math.exp(-M.h * busemann(M, xi, x))


def _kernel_many(M, x0, x, coords):
    """Vectorized P(x, .) at unit vectors at x0 given by sphere coordinates."""
    if M.kind == "hyperbolic":
        return null_pairing(x0, coords, x) ** (-M.h)
    if M.kind == "euclidean":
        return np.exp(M.h * ((np.asarray(x) - x0) @ M.sphere_to_tangent(x0, coords).T))
    raise ModelError(f"no vectorized kernel for {M.kind!r}")


@dataclass
class HarmonicExtension:
    """Data of the extension: model, boundary function, base and starting rule."""

    M: object
    f: BoundaryFunction
    base: np.ndarray
    quad: SphereQuadrature

    def __call__(self, x):
        return harmonic_extension(self, x)


def make_extension(M, f, order=64):
    return HarmonicExtension(M, f, f.base, sphere_quadrature(M.n, order))


def _refined_means(ext, integrand_fn, tol, max_nodes):
    """Sphere means of an integrand under nested order doubling until stable."""
    order = ext.quad.order
    prev = None
    while True:
        quad = ext.quad if order == ext.quad.order else sphere_quadrature(ext.M.n, order)
        val = quad.mean(integrand_fn(quad))
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return val, order
        if quad.nodes.shape[0] * 2 ** (ext.M.n - 1) > max_nodes:
            raise ConvergenceError(f"harmonic extension not resolved with {quad.nodes.shape[0]} nodes")
        prev = val
        order *= 2


def harmonic_extension(ext, x, tol=EXT_TOL, max_nodes=MAX_NODES, return_order=False):
    """H_f(x) by the x0-kernel quadrature with nested refinement."""
    M = ext.M
    x = np.asarray(x, dtype=float)

    def integrand(quad):
        return ext.f.on_sphere(quad.nodes) * _kernel_many(M, ext.base, x, quad.nodes)

    val, order = _refined_means(ext, integrand, tol, max_nodes)
    return (val, order) if return_order else val


def _rebase_many(M, x, vecs, base):
    """Sphere coordinates at ``base`` of the endpoints of rays (x, vecs)."""
    if M.kind == "hyperbolic":
        ell = x[None, :] + vecs
        w = ell / (-minkowski(base[None, :], ell))[:, None] - base[None, :]
        return M.tangent_to_sphere(base, w)
    return np.array([M.tangent_to_sphere(base, rebase_boundary_point(M, BoundaryPoint(x, v), base).dir)
                     for v in vecs])


def extension_by_visibility(ext, x, tol=1e-12, max_nodes=MAX_NODES):
    """Second route to H_f(x): the mu_x-integral of f, rebasing each node to x0."""
    M = ext.M
    x = np.asarray(x, dtype=float)

    def integrand(quad):
        vecs = M.sphere_to_tangent(x, quad.nodes)
        return ext.f.on_sphere(_rebase_many(M, x, vecs, ext.base))

    return _refined_means(ext, integrand, tol, max_nodes)[0]


def extension_by_visibility_loop(ext, x, order=64):
    """Unvectorized variant through :func:`visibility_integral`, for small rules."""
    return visibility_integral(ext.M, x, ext.f, sphere_quadrature(ext.M.n, order))


def laplacian_residual(M, u, x, step=1e-3, chart=None):
    """Finite-difference Laplace-Beltrami of ``u`` at the point ``x``.

    Conformal charts (ball or half-space for H^n, Cartesian for R^n) use the
    divergence form lambda^{-n} sum_i d_i(lambda^{n-2} d_i u) with the
    conformal factor at half steps; the polar formula is used on rotsym.
    For a harmonic function the result is the residual O(step^2).

    Raises
    ------
    ModelError
        If the stencil leaves the chart domain.
    """
    if M.kind == "rotsym":
        return M.laplacian(u, np.asarray(x, dtype=float), step)
    if chart is None:
        chart = "ball" if M.kind == "hyperbolic" else "cartesian"
    y = M.to_chart(np.asarray(x, dtype=float), chart)
    lam = M.conformal_factor(chart)
    n = M.n

    def inside(z):
        if M.kind != "hyperbolic":
            return True
        return np.dot(z, z) < 1.0 if chart == "ball" else z[-1] > 0.0

    def U(z):
        if not inside(z):
            raise ModelError("finite-difference stencil leaves the chart domain")
        return u(M.from_chart(z, chart))

    u0 = U(y)
    acc = 0.0
    for i in range(n):
        e = np.zeros(n)
        e[i] = step
        wp = lam(y + 0.5 * e) ** (n - 2)
        wm = lam(y - 0.5 * e) ** (n - 2)
        acc += wp * (U(y + e) - u0) - wm * (u0 - U(y - e))
    return float(acc / (step * step * lam(y) ** n))


def boundary_convergence(ext, v0, distances, angles=None, threshold=1e-2, at_distance=8.0,
                         tol=1e-10):
    """Errors |H_f(x_k) - f(xi0)| along x_k = exp(x0, w_k, d_k) -> xi0 = c_{v0}(infinity).

    ``angles`` (default zeros, the radial sequence) gives the angle of w_k
    from v0 in the plane of v0 and the first frame vector.  The report
    contains the error table, whether errors decrease monotonically, the
    error at ``at_distance`` and the fitted exponential rate.
    """
    M = ext.M
    x0 = ext.base
    v0 = M.unit(x0, v0)
    d = np.asarray(distances, dtype=float)
    ang = np.zeros_like(d) if angles is None else np.asarray(angles, dtype=float)
    u = M.frame(x0, v0)[0]
    target = ext.f(BoundaryPoint(x0, v0))
    rows = []
    for dk, ak in zip(d, ang):
        w = math.cos(ak) * v0 + math.sin(ak) * u
        x = M.exp(x0, w, dk)
        H = harmonic_extension(ext, x, tol=tol)
        rows.append({"distance": float(dk), "angle": float(ak), "H": float(H),
                     "error": abs(H - target)})
    err = np.array([r["error"] for r in rows])
    monotone = bool(np.all(np.diff(err) <= 1e-15))
    sel = np.isclose(d, at_distance)
    err_at = float(err[sel][0]) if sel.any() else float("nan")
    pos = err > 1e-15
    rate = float(np.polyfit(d[pos], np.log(err[pos]), 1)[0]) if pos.sum() >= 2 else float("nan")
    return {"rows": rows, "target": float(target), "monotone": monotone, "error_at": err_at,
            "passes": bool(err_at < threshold), "rate": rate}
