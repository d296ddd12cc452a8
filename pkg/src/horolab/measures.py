"""Visibility measures, sphere maps and their Jacobians.

For base points p, q and t large, every geodesic ray from q meets the
distance sphere S_t(p) once.  This gives a map F_t: S_qX -> S_t(p) and,
after rescaling, B_t: S_qX -> S_pX.  Its Jacobian is

    Jac B_t(v) = det A_v(s) / (det A_u(t) <N_p, N_q>),   s = d(q, F_t(v)),

with u = B_t(v) and N_x the outward radial unit field of d_x, and it tends
to exp(-h b_v(p)) as t grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np
from scipy.optimize import brentq
from scipy.special import gamma, roots_gegenbauer

from .boundary import BoundaryPoint, busemann
from .exceptions import ConvergenceError, ModelError, ModelViolation
from .jacobi import det_limit_constant, propagator

FD_STEP = 1e-5
NPNQ_MIN = 0.5


def sphere_volume(n):
    """omega_n = 2 pi^{n/2} / Gamma(n/2), the volume of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / gamma(n / 2.0)


@dataclass
class SphereQuadrature:
    """Nodes (unit vectors of R^n) and weights summing to omega_n."""

    n: int
    nodes: np.ndarray
    weights: np.ndarray
    omega_n: float
    order: int

    def integrate(self, values):
        """Weighted sum with compensated summation; divide by omega_n for the mean."""
        return math.fsum(np.asarray(values, dtype=float) * self.weights)

    def mean(self, values):
        return self.integrate(values) / self.omega_n


def _circle(order):
    th = 2.0 * math.pi * np.arange(order) / order
    return th, np.full(order, 2.0 * math.pi / order)


def _sphere2(order):
    x, wx = np.polynomial.legendre.leggauss(order)
    phi, wphi = _circle(2 * order)
    st = np.sqrt(1.0 - x * x)
    nodes = np.stack([np.outer(st, np.cos(phi)).ravel(), np.outer(st, np.sin(phi)).ravel(),
                      np.repeat(x, phi.size)], axis=-1)
    return nodes, np.outer(wx, wphi).ravel()


def sphere_quadrature(n, order=64):
    """Product rule on the unit sphere S^{n-1} of R^n.

    n = 2: trapezoid rule with ``order`` nodes; n = 3: Gauss-Legendre in the
    cosine of the polar angle (``order`` nodes) times a trapezoid rule in the
    azimuth (2*order nodes); n = 4: Gauss-Gegenbauer (weight sin^2) in the
    first polar angle times the n = 3 rule.
    """
    if order < 1:
        raise ModelError("order must be >= 1")
    if n == 2:
        th, w = _circle(order)
        nodes = np.stack([np.cos(th), np.sin(th)], axis=-1)
    elif n == 3:
        nodes, w = _sphere2(order)
    elif n == 4:
        x, wx = roots_gegenbauer(order, 1.0)
        inner, wi = _sphere2(order)
        st = np.sqrt(1.0 - x * x)
        nodes = np.concatenate([(st[:, None, None] * inner[None]).reshape(-1, 3),
                                np.repeat(x, len(wi))[:, None]], axis=-1)
        w = np.outer(wx, wi).ravel()
    else:
        raise ModelError(f"sphere quadrature supports n in (2, 3, 4), got {n}")
    return SphereQuadrature(n, nodes, w, sphere_volume(n), int(order))


def visibility_integral(M, p, f, quad):
    """(1/omega_n) int_{S_pX} f(c_v(infinity)) dv for a function f of BoundaryPoint."""
    vecs = M.sphere_to_tangent(p, quad.nodes)
    vals = [f(BoundaryPoint(p, v)) for v in vecs]
    return quad.mean(vals)


def rn_density(M, q, p):
    """Function xi -> exp(-h b_{q, xi}(p)) for boundary points based at q."""
    if M.h is None:
        raise ModelError("Radon-Nikodym density needs the constant h")
    return lambda xi: math.exp(-M.h * busemann(M, xi, p))


def change_of_base_residual(M, p, q, f, quad):
    """|int f dmu_p - int f(xi) exp(-h b_{q,xi}(p)) dmu_q| and both sides."""
    lhs = visibility_integral(M, p, f, quad)
    dens = rn_density(M, q, p)
    rhs = visibility_integral(M, q, lambda xi: f(xi) * dens(xi), quad)
    return abs(lhs - rhs), lhs, rhs


# the sphere maps F_t and B_t ----------------------------------------------------

def first_intersection(M, p, q, v, t, t0=0.0, n_check=33):
    """First time s > 0 with d(p, c_v(s)) = t for the ray c_v from q.

    The root is bracketed by [t - d(p,q), t + d(p,q)] (triangle inequality)
    and located by Brent's method; the sign pattern on a uniform sample of
    the bracket must show a single crossing.

    Returns
    -------
    (point, s)

    Raises
    ------
    ModelError
        t below max(d(p, q) + 1, t0).
    ModelViolation
        Several crossings of the distance sphere inside the bracket.
    """
    d = M.dist(p, q)
    if d > 0 and t < max(d + 1.0, t0):
        raise ModelError(f"t={t} is below the admissible threshold max(d(p,q)+1, t0)")
    lo, hi = max(t - d - 1e-9, 0.0), t + d + 1e-9
    g = lambda s: M.dist(p, M.exp(q, v, s)) - t
    glo, ghi = g(lo), g(hi)
    if glo > 0 or ghi < 0:
        raise ConvergenceError("distance sphere not bracketed")
    if glo == 0:
        s = lo
    elif ghi == 0:
        s = hi
    else:
        s = brentq(g, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200)
    if d > 0:
        grid = np.linspace(lo, hi, n_check)
        signs = np.sign([g(x) for x in grid])
        signs = signs[signs != 0]
        if np.count_nonzero(np.diff(signs)) > 1:
            raise ModelViolation("geodesic ray crosses the distance sphere more than once")
    return M.exp(q, v, s), float(s)


def boundary_direction_map(M, p, q, v, t, t0=0.0):
    """B_t(v): unit initial vector at p of the geodesic through F_t(v)."""
    x, _ = first_intersection(M, p, q, v, t, t0)
    w = M.log(p, x)
    return w / M.norm(p, w)


def _det_A(M, base, u, s):
    m = M.m
    Phi = propagator(M, base, u, np.array([s]))[0]
    return float(np.linalg.det(Phi[:m, m:]))


@dataclass
class JacobianComparison:
    v: np.ndarray
    t: float
    s: float
    jac_formula: float
    jac_numeric: float
    radon_nikodym_target: float
    npnq: float
    residuals: dict = field(default_factory=dict)


def jacobian_numeric(M, p, q, v, t, step=FD_STEP):
    """|det dB_t(v)| by central differences, rotating v in 2-planes at q."""
    u = boundary_direction_map(M, p, q, v, t)
    Eq = M.frame(q, v)
    Ep = M.frame(p, u)
    J = np.empty((M.m, M.m))
    for i, e in enumerate(Eq):
        plus = boundary_direction_map(M, p, q, math.cos(step) * v + math.sin(step) * e, t)
        minus = boundary_direction_map(M, p, q, math.cos(step) * v - math.sin(step) * e, t)
        dB = (plus - minus) / (2.0 * step)
        J[i] = [M.inner(p, dB, f) for f in Ep]
    return abs(float(np.linalg.det(J)))


def jacobian_comparison(M, p, q, v, t, numeric=True):
    """Analytic and finite-difference Jacobians of B_t at v and the RN gap."""
    if M.h is None:
        raise ModelError("the Radon-Nikodym target needs the constant h")
    v = M.unit(q, v)
    x, s = first_intersection(M, p, q, v, t)
    w = M.log(p, x)
    u = w / M.norm(p, w)
    npnq = 1.0 if M.dist(p, q) == 0 else M.cos_angle_at(x, p, q)
    if npnq < NPNQ_MIN:
        raise ModelViolation(f"<N_p, N_q> = {npnq:.3g} is far from 1 on the distance sphere")
    formula = _det_A(M, q, v, s) / (_det_A(M, p, u, t) * npnq)
    target = math.exp(-M.h * busemann(M, BoundaryPoint(q, v), p))
    res = {"rn_gap": abs(formula - target)}
    num = float("nan")
    if numeric:
        num = jacobian_numeric(M, p, q, v, t)
        res["formula_vs_numeric"] = abs(formula - num) / formula
    return JacobianComparison(v, float(t), s, float(formula), num, target, float(npnq), res)


# extended precision -------------------------------------------------------------

def rn_gap_extended(M, p, q, v, t, dps=60):
    """Radon-Nikodym gap |Jac B_t(v) - exp(-h b_v(p))| in extended precision.

    For t beyond about 15 the gap on H^n is below double-precision
    resolution.  This path repeats the analytic Jacobian in mpmath: Lorentz
    geometry for F_t, the hyperbolic law of cosines for <N_p, N_q>, and the
    matrix exponential of the constant-curvature Jacobi system for det A.
    """
    if M.kind != "hyperbolic":
        raise ModelError("extended-precision path is implemented for the hyperboloid model")
    with mp.workdps(dps):
        P = mp.matrix([mp.mpf(float(c)) for c in p])
        Q = mp.matrix([mp.mpf(float(c)) for c in q])
        V = mp.matrix([mp.mpf(float(c)) for c in v])

        def mink(a, b):
            return -a[0] * b[0] + sum(a[i] * b[i] for i in range(1, len(a)))

        P = P / mp.sqrt(-mink(P, P))
        Q = Q / mp.sqrt(-mink(Q, Q))
        V = V + mink(V, Q) * Q
        V = V / mp.sqrt(mink(V, V))
        T = mp.mpf(t)
        alpha, beta = -mink(P, Q), -mink(P, V)
        # alpha cosh s + beta sinh s = cosh t, solved for e^s
        a, b, c = (alpha + beta) / 2, -mp.cosh(T), (alpha - beta) / 2
        es = (-b + mp.sqrt(b * b - 4 * a * c)) / (2 * a)
        s = mp.log(es)
        dpq = mp.acosh(alpha)
        cosang = (mp.cosh(T) * mp.cosh(s) - mp.cosh(dpq)) / (mp.sinh(T) * mp.sinh(s))
        m = M.m

        def detA(time):
            G = mp.zeros(2 * m, 2 * m)
            for i in range(m):
                G[i, m + i] = 1
                G[m + i, i] = -M.constant_curvature
            E = mp.expm(G * time)
            return mp.det(E[0:m, m:2 * m])

        formula = detA(s) / (detA(T) * cosang)
        target = mp.e ** (-M.h * mp.log(-mink(P, Q + V)))
        gap = abs(formula - target)
        return gap, formula, target


def universal_constant(M, p, v, t_values):
    """Values of det(U(v) - S'_{v,t}(0)) along t; their limit is the constant A."""
    return det_limit_constant(M, p, v, t_values)
