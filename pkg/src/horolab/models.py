"""Concrete Riemannian model spaces.

Three kinds are provided:

* ``hyperbolic`` -- real hyperbolic space H^n of curvature -1 in the
  hyperboloid model (points ``x`` in R^{n+1} with <x, x> = -1, x_0 > 0 for
  the Lorentzian product).  Poincare ball and upper half-space charts are
  available as coordinate conversions.
* ``euclidean`` -- flat R^n, used as a negative control.
* ``rotsym`` -- a rotationally symmetric surface dr^2 + phi(r)^2 dtheta^2 with
  prescribed Gauss curvature K(r) < 0; points are polar pairs (r, theta) and
  tangent vectors are given by their components in the orthonormal polar
  frame (d/dr, phi^{-1} d/dtheta).

Every model exposes the same small set of methods (``exp``, ``log``,
``dist``, ``frame``, ``curvature_fn``, ...), and the module level functions
:func:`exp_map`, :func:`log_map`, :func:`distance` and
:func:`curvature_along` simply delegate to them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .exceptions import ConvergenceError, ModelError

MAX_DIM = 4
GEODESIC_RTOL = 1e-10
GEODESIC_ATOL = 1e-12
UNIT_TOL = 1e-12


def minkowski(x, y):
    """Lorentzian product ``-x0*y0 + x1*y1 + ...`` along the last axis."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return -x[..., 0] * y[..., 0] + np.sum(x[..., 1:] * y[..., 1:], axis=-1)


def lorentz_boost(p):
    """Lorentz matrix mapping the origin (1, 0, ..., 0) to ``p``.

    The remaining columns form an orthonormal basis of T_pH^n.
    """
    p = np.asarray(p, dtype=float)
    dim = p.shape[0]
    ps = p[1:]
    L = np.empty((dim, dim))
    L[0, 0] = p[0]
    L[0, 1:] = ps
    L[1:, 0] = ps
    L[1:, 1:] = np.eye(dim - 1) + np.outer(ps, ps) / (1.0 + p[0])
    return L


def lorentz_inverse(L):
    """Inverse of a Lorentz matrix, ``eta L^T eta``."""
    eta = np.ones(L.shape[0])
    eta[0] = -1.0
    return eta[:, None] * L.T * eta[None, :]


def null_pairing(base, coords, x):
    """-<x, base + v> for unit tangent vectors v at ``base`` given by sphere coordinates.

    Evaluated as 1/(y0 + |y'|) + |y'| |y'/|y'| - c|^2 / 2 with y = L_base^{-1} x,
    which avoids the cancellation in -<x, base + v> when x is far out in the
    direction of v.  ``coords`` may be (n,) or (N, n).
    """
    base = np.asarray(base, dtype=float)
    x = np.asarray(x, dtype=float)
    if base[0] == 1.0 and not np.any(base[1:]):
        y = x
    else:
        y = lorentz_inverse(lorentz_boost(base)) @ x
    ys = y[1:]
    r = float(np.linalg.norm(ys))
    c = np.asarray(coords, dtype=float)
    head = 1.0 / (abs(y[0]) + r)
    if r == 0.0:
        return np.full(c.shape[:-1], head) if c.ndim > 1 else head
    diff = ys / r - c
    return head + 0.5 * r * np.sum(diff * diff, axis=-1)


# chart conversions for the hyperboloid ---------------------------------------

def hyperboloid_to_ball(x):
    x = np.asarray(x, dtype=float)
    return x[..., 1:] / (1.0 + x[..., :1])


def ball_to_hyperboloid(b):
    b = np.asarray(b, dtype=float)
    s = np.sum(b * b, axis=-1, keepdims=True)
    if np.any(s >= 1.0):
        raise ModelError("point outside the unit ball")
    return np.concatenate([(1.0 + s) / (1.0 - s), 2.0 * b / (1.0 - s)], axis=-1)


def hyperboloid_to_halfspace(x):
    """Upper half-space coordinates with the ideal point ``o + e_n`` sent to infinity.

    The height is ``y_n = 1 / (x_0 - x_n)`` and ``y_i = x_i y_n``; the origin
    maps to (0, ..., 0, 1) and the Busemann function of the ray from the
    origin towards ``e_n`` is ``-log y_n``.
    """
    x = np.asarray(x, dtype=float)
    height = 1.0 / (x[..., :1] - x[..., -1:])
    return np.concatenate([x[..., 1:-1] * height, height], axis=-1)


def halfspace_to_hyperboloid(y):
    y = np.asarray(y, dtype=float)
    yn = y[..., -1:]
    if np.any(yn <= 0.0):
        raise ModelError("point outside the upper half-space")
    s = np.sum(y * y, axis=-1, keepdims=True)
    x0 = (s + 1.0) / (2.0 * yn)
    xn = (s - 1.0) / (2.0 * yn)
    return np.concatenate([x0, y[..., :-1] / yn, xn], axis=-1)


def ball_to_halfspace(b):
    """Direct formula: ``y_n = (1-|b|^2)/|b-e_n|^2``, ``y' = 2 b'/|b-e_n|^2``."""
    b = np.asarray(b, dtype=float)
    en = np.zeros(b.shape[-1])
    en[-1] = 1.0
    q = np.sum((b - en) ** 2, axis=-1, keepdims=True)
    s = np.sum(b * b, axis=-1, keepdims=True)
    return np.concatenate([2.0 * b[..., :-1] / q, (1.0 - s) / q], axis=-1)


def halfspace_to_ball(y):
    """Inverse of :func:`ball_to_halfspace`, ``b = (2 y', |y|^2 - 1) / (|y'|^2 + (y_n+1)^2)``."""
    y = np.asarray(y, dtype=float)
    s = np.sum(y * y, axis=-1, keepdims=True)
    q = np.sum(y[..., :-1] ** 2, axis=-1, keepdims=True) + (y[..., -1:] + 1.0) ** 2
    return np.concatenate([2.0 * y[..., :-1] / q, (s - 1.0) / q], axis=-1)


def _orthonormal_complement(c):
    """Rows spanning the orthogonal complement of the unit vector ``c`` in R^k."""
    k = c.shape[0]
    # QR of [c | I] gives c followed by an orthonormal completion
    q, _ = np.linalg.qr(np.column_stack([c, np.eye(k)]))
    return q[:, 1:k].T


@dataclass(frozen=True)
class ModelSpace:
    """Common data of all model spaces.

    ``h`` is the horosphere mean curvature when the model is asymptotically
    harmonic and ``None`` otherwise.  ``curvature_bounds`` holds the pair
    (R0, R0') bounding ``|R|`` and ``|grad R|``.
    """

    kind: str
    n: int
    h: float | None
    curvature_bounds: tuple

    @property
    def m(self):
        """Dimension of the orthogonal complement of a geodesic, n - 1."""
        return self.n - 1

    @property
    def constant_curvature(self):
        return None

    # defaults shared by the models -------------------------------------

    def check_unit(self, p, v):
        nv = self.norm(p, v)
        if abs(nv - 1.0) > 1e-9:
            raise ModelError(f"tangent vector is not unit (norm {nv!r})")

    def norm(self, p, v):
        return math.sqrt(max(float(self.inner(p, v, v)), 0.0))

    def unit(self, p, v):
        return np.asarray(v, dtype=float) / self.norm(p, v)

    def random_unit(self, rng, p):
        g = rng.standard_normal(self.n)
        g /= np.linalg.norm(g)
        return g @ self.tangent_basis(p)

    def random_point(self, rng, radius):
        """A point at distance uniform in [0, radius] from the origin, in a uniform direction."""
        o = self.origin()
        return self.exp(o, self.random_unit(rng, o), radius * rng.random())

    def transport_frame(self, p, v, t):
        """Parallel translate of :meth:`frame` to c_v(t); constant for the closed-form models."""
        return self.frame(p, v)

    def sphere_to_tangent(self, p, coords):
        """Map unit vectors in R^n (orthonormal coordinates) to tangent vectors at ``p``."""
        return np.asarray(coords, dtype=float) @ self.tangent_basis(p)

    def tangent_to_sphere(self, p, vecs):
        E = self.tangent_basis(p)
        vecs = np.asarray(vecs, dtype=float)
        return np.stack([self.inner(p, vecs, e) for e in E], axis=-1)

    def cos_angle_at(self, y, p, q):
        u = self.log(y, p)
        w = self.log(y, q)
        return float(self.inner(y, u, w) / (self.norm(y, u) * self.norm(y, w)))


@dataclass(frozen=True)
class HyperbolicSpace(ModelSpace):
    """H^n with curvature -1 in the hyperboloid chart."""

    @property
    def constant_curvature(self):
        return -1.0

    @property
    def dim(self):
        return self.n + 1

    def origin(self):
        o = np.zeros(self.n + 1)
        o[0] = 1.0
        return o

    def project(self, x):
        """Renormalize onto the hyperboloid to remove small drift."""
        x = np.asarray(x, dtype=float)
        s = -minkowski(x, x)
        return x / np.sqrt(s)[..., None] if np.ndim(s) else x / math.sqrt(s)

    def is_point(self, x, tol=UNIT_TOL):
        x = np.asarray(x, dtype=float)
        return x[0] > 0 and abs(minkowski(x, x) + 1.0) <= tol * max(1.0, x[0] ** 2)

    def inner(self, p, u, w):
        return minkowski(u, w)

    def tangent_basis(self, p):
        return lorentz_boost(p)[:, 1:].T

    def tangent_to_sphere(self, p, vecs):
        return (np.asarray(vecs, dtype=float) @ (lorentz_inverse(lorentz_boost(p)).T))[..., 1:]

    def _origin_direction(self, p, v):
        """Boost at p and the unit direction at the origin corresponding to v.

        Working at the origin keeps the direction exactly tangent; the plain
        formula cosh(t) p + sinh(t) v amplifies the rounding error in <p, v>
        by sinh(t) |p| when p is far from the origin.
        """
        L = lorentz_boost(p)
        u = (lorentz_inverse(L) @ np.asarray(v, dtype=float))[1:]
        nrm = np.linalg.norm(u)
        if nrm == 0.0:
            raise ModelError("zero tangent vector")
        return L, u / nrm

    def exp(self, p, v, t):
        L, u = self._origin_direction(p, v)
        a, b = L[:, 0], L[:, 1:] @ u
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return math.cosh(t) * a + math.sinh(t) * b
        return np.cosh(t)[:, None] * a + np.sinh(t)[:, None] * b

    def velocity(self, p, v, t):
        L, u = self._origin_direction(p, v)
        return math.sinh(t) * L[:, 0] + math.cosh(t) * (L[:, 1:] @ u)

    def dist(self, p, q):
        a = -minkowski(p, q)
        diff = np.asarray(p, dtype=float) - np.asarray(q, dtype=float)
        chord = np.sqrt(np.maximum(minkowski(diff, diff), 0.0))
        near = 2.0 * np.arcsinh(0.5 * chord)
        far = np.arccosh(np.maximum(a, 1.0))
        d = np.where(a < 2.0, near, far)
        return float(d) if np.ndim(d) == 0 else d

    def log(self, p, q):
        d = self.dist(p, q)
        if d == 0.0:
            return np.zeros_like(np.asarray(p, dtype=float))
        L = lorentz_boost(p)
        y = (lorentz_inverse(L) @ np.asarray(q, dtype=float))[1:]
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            return np.zeros_like(np.asarray(p, dtype=float))
        return d * (L[:, 1:] @ (y / nrm))

    def frame(self, p, v):
        E = self.tangent_basis(p)
        c = E @ (np.asarray(v) * np.r_[-1.0, np.ones(self.n)])
        return _orthonormal_complement(c / np.linalg.norm(c)) @ E

    def curvature_fn(self, p, v, t_max=None):
        R = -np.eye(self.m)
        return lambda t: R

    def cos_angle_at(self, y, p, q):
        a = self.dist(y, p)
        b = self.dist(y, q)
        if min(a, b) > 1.0:
            c = self.dist(p, q)
            num = math.cosh(a) * math.cosh(b) - math.cosh(c)
            return float(num / (math.sinh(a) * math.sinh(b)))
        return ModelSpace.cos_angle_at(self, y, p, q)

    def to_chart(self, x, chart):
        if chart == "hyperboloid":
            return np.asarray(x, dtype=float)
        if chart == "ball":
            return hyperboloid_to_ball(x)
        if chart == "halfspace":
            return hyperboloid_to_halfspace(x)
        raise ModelError(f"unknown chart {chart!r}")

    def from_chart(self, y, chart):
        if chart == "hyperboloid":
            return np.asarray(y, dtype=float)
        if chart == "ball":
            return ball_to_hyperboloid(y)
        if chart == "halfspace":
            return halfspace_to_hyperboloid(y)
        raise ModelError(f"unknown chart {chart!r}")

    def conformal_factor(self, chart):
        """Scalar lambda(y) with metric lambda^2 |dy|^2 in the given chart."""
        if chart == "ball":
            return lambda y: 2.0 / (1.0 - np.dot(y, y))
        if chart == "halfspace":
            return lambda y: 1.0 / y[-1]
        raise ModelError(f"chart {chart!r} is not conformal")


@dataclass(frozen=True)
class EuclideanSpace(ModelSpace):
    """Flat R^n in Cartesian coordinates."""

    @property
    def constant_curvature(self):
        return 0.0

    def origin(self):
        return np.zeros(self.n)

    def project(self, x):
        return np.asarray(x, dtype=float)

    def inner(self, p, u, w):
        return np.sum(np.asarray(u) * np.asarray(w), axis=-1)

    def tangent_basis(self, p):
        return np.eye(self.n)

    def exp(self, p, v, t):
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return np.asarray(p, dtype=float) + float(t) * np.asarray(v, dtype=float)
        return p + t[:, None] * v

    def velocity(self, p, v, t):
        return np.asarray(v, dtype=float)

    def dist(self, p, q):
        d = np.linalg.norm(np.asarray(q, dtype=float) - np.asarray(p, dtype=float), axis=-1)
        return float(d) if np.ndim(d) == 0 else d

    def log(self, p, q):
        return np.asarray(q, dtype=float) - np.asarray(p, dtype=float)

    def frame(self, p, v):
        v = np.asarray(v, dtype=float)
        return _orthonormal_complement(v / np.linalg.norm(v))

    def curvature_fn(self, p, v, t_max=None):
        R = np.zeros((self.m, self.m))
        return lambda t: R

    def to_chart(self, x, chart):
        if chart in ("cartesian", "ball", "halfspace", "hyperboloid"):
            return np.asarray(x, dtype=float)
        raise ModelError(f"unknown chart {chart!r}")

    from_chart = to_chart

    def conformal_factor(self, chart):
        return lambda y: 1.0


def default_profile(r):
    """Curvature profile K(r) = -1 - exp(-r) of the rotationally symmetric control."""
    return -1.0 - np.exp(-np.abs(r))


@dataclass(frozen=True)
class RotSymSurface(ModelSpace):
    """Surface dr^2 + phi(r)^2 dtheta^2 with Gauss curvature K(r) = -phi''/phi.

    The warping function solves phi'' = -K phi, phi(0) = 0, phi'(0) = 1 and is
    tabulated once on [0, r_table] by a high order adaptive integrator.
    """

    profile: Callable = field(default=default_profile, compare=False)
    profile_params: dict = field(default_factory=dict, compare=False)
    r_table: float = 220.0
    _warp: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        K = self.profile
        sol = solve_ivp(lambda r, y: [y[1], -K(r) * y[0]], (0.0, self.r_table), [0.0, 1.0],
                        method="DOP853", rtol=1e-12, atol=1e-14, dense_output=True)
        if not sol.success:
            raise ConvergenceError(f"warping function integration failed: {sol.message}")
        object.__setattr__(self, "_warp", sol.sol)

    def warp(self, r):
        """(phi, phi') at signed radius r, using the odd extension of phi."""
        r = np.asarray(r, dtype=float)
        ar = np.abs(r)
        if np.any(ar > self.r_table):
            raise ConvergenceError("geodesic left the tabulated warping range")
        phi, dphi = self._warp(ar)
        return np.sign(r) * phi, dphi

    def K(self, r):
        return self.profile(np.abs(np.asarray(r, dtype=float)))

    def origin(self):
        return np.zeros(2)

    def project(self, x):
        x = np.asarray(x, dtype=float)
        return np.array([x[0], x[1] % (2 * math.pi)])

    def inner(self, p, u, w):
        return np.sum(np.asarray(u) * np.asarray(w), axis=-1)

    def tangent_basis(self, p):
        return np.eye(2)

    def to_cartesian(self, p):
        p = np.asarray(p, dtype=float)
        return np.stack([p[..., 0] * np.cos(p[..., 1]), p[..., 0] * np.sin(p[..., 1])], axis=-1)

    # geodesics -----------------------------------------------------------

    def _rhs(self, t, y):
        r, _, a, b = y
        phi, dphi = self.warp(r)
        ratio = dphi / phi if phi != 0.0 else 0.0
        theta_dot = b / phi if phi != 0.0 else 0.0
        return [a, theta_dot, ratio * b * b, -ratio * a * b]

    def _initial_state(self, p, v):
        r, theta = float(p[0]), float(p[1])
        a, b = float(v[0]), float(v[1])
        s = math.hypot(a, b)
        a, b = a / s, b / s
        if r == 0.0:
            return [0.0, theta + math.atan2(b, a), 1.0, 0.0]
        return [r, theta, a, b]

    def _integrate(self, p, v, t_end, dense=False, t_eval=None):
        sol = solve_ivp(self._rhs, (0.0, t_end), self._initial_state(p, v), method="DOP853",
                        rtol=GEODESIC_RTOL, atol=GEODESIC_ATOL, dense_output=dense, t_eval=t_eval)
        if not sol.success:
            raise ConvergenceError(f"geodesic integration failed: {sol.message}")
        return sol

    @staticmethod
    def _state_to_point(y):
        r, theta, a, b = y
        if r < 0:
            return np.array([-r, (theta + math.pi) % (2 * math.pi)]), np.array([-a, -b])
        return np.array([r, theta % (2 * math.pi)]), np.array([a, b])

    def exp(self, p, v, t):
        t = np.asarray(t, dtype=float)
        if t.ndim:
            return np.array([self.exp(p, v, float(s)) for s in t])
        t = float(t)
        if t == 0.0:
            return self.project(p)
        if t < 0:
            return self.exp(p, -np.asarray(v, dtype=float), -t)
        sol = self._integrate(p, v, t)
        return self._state_to_point(sol.y[:, -1])[0]

    def velocity(self, p, v, t):
        if t < 0:
            return -self.velocity(p, -np.asarray(v, dtype=float), -t)
        if t == 0.0:
            return self.unit(p, v)
        sol = self._integrate(p, v, t)
        w = self._state_to_point(sol.y[:, -1])[1]
        return w / np.linalg.norm(w)

    def frame(self, p, v):
        a, b = self.unit(p, v)
        return np.array([[-b, a]])

    def transport_frame(self, p, v, t):
        return self.frame(None, self.velocity(p, v, t))

    def curvature_fn(self, p, v, t_max=70.0):
        """Curvature K(r(t)) along c_v for t in [-t_max, t_max] as a 1x1 matrix."""
        fwd = self._integrate(p, v, t_max, dense=True).sol
        bwd = self._integrate(p, -np.asarray(v, dtype=float), t_max, dense=True).sol

        def R(t):
            r = fwd(t)[0] if t >= 0 else bwd(-t)[0]
            return np.array([[float(self.K(r))]])
        return R

    # shooting ------------------------------------------------------------

    def _closest(self, p, alpha, q_xy, length):
        """Closest approach of the geodesic in direction alpha to the chart point q_xy."""
        v = np.array([math.cos(alpha), math.sin(alpha)])
        sol = self._integrate(p, v, length, dense=True).sol

        def chart(s):
            r, th, a, b = sol(s)
            phi, _ = self.warp(r)
            x = np.array([r * math.cos(th), r * math.sin(th)])
            # d/ds of (r cos th, r sin th) with th' = b / phi
            thd = b / phi if phi != 0.0 else 0.0
            dx = a * np.array([math.cos(th), math.sin(th)]) + r * thd * np.array([-math.sin(th), math.cos(th)])
            return x, dx

        grid = np.linspace(0.0, length, 257)
        r, th = sol(grid)[:2]
        xs = np.column_stack([r * np.cos(th), r * np.sin(th)])
        k = int(np.argmin(np.linalg.norm(xs - q_xy, axis=1)))

        def g(s):
            x, dx = chart(s)
            return float(np.dot(x - q_xy, dx))

        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
        if g(lo) < 0 < g(hi):
            s_star = brentq(g, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
        else:
            s_star = grid[k]
        x, dx = chart(s_star)
        side = dx[0] * (q_xy[1] - x[1]) - dx[1] * (q_xy[0] - x[0])
        return s_star, float(np.linalg.norm(x - q_xy)), side

    def _shoot(self, p, q):
        """Direction angle (orthonormal frame at p) and length of the geodesic from p to q."""
        p = self.project(p)
        q = self.project(q)
        if p[0] == 0.0:
            return (q[1] - p[1]) % (2 * math.pi), float(q[0])
        q_xy = self.to_cartesian(q)
        length = p[0] + q[0] + 0.5
        alphas = np.linspace(0.0, 2 * math.pi, 49)
        scan = [self._closest(p, a, q_xy, length) for a in alphas]
        best = None
        for i in range(len(alphas) - 1):
            (s0, d0, side0), (s1, d1, side1) = scan[i], scan[i + 1]
            if side0 == 0.0 and s0 > 0 and d0 < 1e-12:
                return alphas[i], s0
            if side0 * side1 < 0 and s0 > 0 and s1 > 0:
                score = d0 + d1
                if best is None or score < best[0]:
                    best = (score, alphas[i], alphas[i + 1])
        if best is None:
            raise ConvergenceError("shooting failed to bracket the direction")
        alpha = brentq(lambda a: self._closest(p, a, q_xy, length)[2], best[1], best[2],
                       xtol=1e-14, rtol=4 * np.finfo(float).eps)
        s, miss, _ = self._closest(p, alpha, q_xy, length)
        if miss > 1e-7:
            raise ConvergenceError(f"shooting missed the target by {miss:.3e}")
        return alpha % (2 * math.pi), s

    def dist(self, p, q):
        if np.allclose(self.to_cartesian(self.project(p)), self.to_cartesian(self.project(q)), atol=0, rtol=0):
            return 0.0
        return self._shoot(p, q)[1]

    def log(self, p, q):
        if self.dist(p, q) == 0.0:
            return np.zeros(2)
        alpha, s = self._shoot(p, q)
        return s * np.array([math.cos(alpha), math.sin(alpha)])

    def laplacian(self, u, x, step):
        """Laplace-Beltrami u_rr + (phi'/phi) u_r + u_thth / phi^2 by central differences in (r, theta)."""
        r, th = float(x[0]), float(x[1])
        if r - step <= 0:
            raise ModelError("stencil leaves the polar chart")
        phi, dphi = self.warp(r)
        u0 = u(np.array([r, th]))
        ur_p, ur_m = u(np.array([r + step, th])), u(np.array([r - step, th]))
        ut_p, ut_m = u(np.array([r, th + step])), u(np.array([r, th - step]))
        u_rr = (ur_p - 2 * u0 + ur_m) / step ** 2
        u_r = (ur_p - ur_m) / (2 * step)
        u_tt = (ut_p - 2 * u0 + ut_m) / step ** 2
        return float(u_rr + dphi / phi * u_r + u_tt / phi ** 2)


def make_profile(params):
    """Curvature profile K(r) = -k0 - k1 exp(-decay r) from config parameters."""
    k0 = float(params.get("k0", 1.0))
    k1 = float(params.get("k1", 1.0))
    decay = float(params.get("decay", 1.0))
    return lambda r: -k0 - k1 * np.exp(-decay * np.abs(r))


def make_model(kind, n=2, params=None):
    """Instantiate a model space.

    Parameters
    ----------
    kind : {"hyperbolic", "euclidean", "rotsym"}
    n : int
        Dimension, 2 <= n <= 4 (rotsym is a surface, n = 2).
    params : dict, optional
        For ``rotsym`` either ``{"profile": callable}`` or the coefficients
        ``k0, k1, decay`` of K(r) = -k0 - k1 exp(-decay r).

    Raises
    ------
    ModelError
        Unsupported kind or dimension, or a curvature profile that is not
        strictly negative.
    """
    params = dict(params or {})
    if not isinstance(n, (int, np.integer)) or not 2 <= n <= MAX_DIM:
        raise ModelError(f"unsupported dimension n={n!r}; expected 2 <= n <= {MAX_DIM}")
    if kind == "hyperbolic":
        return HyperbolicSpace("hyperbolic", int(n), float(n - 1), (1.0, 0.0))
    if kind == "euclidean":
        return EuclideanSpace("euclidean", int(n), 0.0, (0.0, 0.0))
    if kind == "rotsym":
        if n != 2:
            raise ModelError("the rotationally symmetric control is a surface (n=2)")
        profile = params.pop("profile", None) or make_profile(params)
        r = np.linspace(0.0, 220.0, 4401)
        K = np.asarray(profile(r), dtype=float)
        if not np.all(np.isfinite(K)) or K.max() >= 0.0:
            raise ModelError("rotsym curvature profile must satisfy sup K < 0")
        dK = np.abs(np.gradient(K, r)).max()
        return RotSymSurface("rotsym", 2, None, (float(np.abs(K).max()), float(dK)),
                             profile=profile, profile_params=params)
    raise ModelError(f"unknown model kind {kind!r}")


def exp_map(M, p, v, t):
    """c_v(t) for a unit vector v at p."""
    M.check_unit(p, v)
    return M.exp(p, v, t)


def distance(M, p, q):
    return M.dist(p, q)


def log_map(M, p, q):
    """Inverse exponential map; ``exp_map(p, log/|log|, |log|) == q``."""
    return M.log(p, q)


def curvature_along(M, p, v, t):
    """Matrix of w -> R(w, c')c' in the parallel frame of c_v'(t)^perp at time t."""
    M.check_unit(p, v)
    F = M.transport_frame(p, v, t)
    G = np.array([[M.inner(None, a, b) for b in F] for a in F])
    if np.abs(G - np.eye(M.m)).max() > 1e-10:
        raise ModelError("parallel frame is not orthonormal")
    return M.curvature_fn(p, v, abs(t) + 1.0)(t)


def parallel_frame(M, p, v, t_grid):
    """GeodesicFrame: per-sample orthonormal bases of c_v'(t)^perp."""
    return np.array([M.transport_frame(p, v, float(t)) for t in t_grid])
