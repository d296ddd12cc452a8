"""Horospheres, their normal flow, volumes, exhaustions and horospherical means.

A horosphere H_t = b^{-1}(t) of a boundary point xi is handled in the upper
half-space chart attached to xi: a Lorentz isometry T sends the base point
of xi to the origin and its direction to e_n, so that b = -log y_n and

    H_t = {y_n = e^{-t}},   intrinsic coordinates u = y' / y_n,

in which the induced metric is Euclidean.  The flow of grad b fixes y' and
scales y_n by e^{-s}; intrinsic lengths grow by e^{s}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import gamma

from .boundary import BoundaryPoint, busemann
from .exceptions import ConvergenceError, ModelError
from .measures import sphere_quadrature
from .models import (halfspace_to_hyperboloid, hyperboloid_to_ball, lorentz_boost, lorentz_inverse,
                     minkowski)

FD_STEP = 1e-4
R0 = 1e-3
GROWTH_MARGIN = 0.02


def ball_volume(k, r):
    """Volume of the Euclidean k-ball of radius r (k = 1 gives the length 2r)."""
    return math.pi ** (k / 2.0) / gamma(k / 2.0 + 1.0) * r ** k


def sphere_measure(k, r):
    """(k-1)-dimensional measure of the boundary of a k-ball; counting measure for k = 1."""
    if k == 1:
        return 2.0
    return 2.0 * math.pi ** (k / 2.0) / gamma(k / 2.0) * r ** (k - 1)


def _householder(c, target):
    w = c - target
    nw = np.dot(w, w)
    if nw < 1e-30:
        return np.eye(len(c))
    return np.eye(len(c)) - 2.0 * np.outer(w, w) / nw


@dataclass
class Horosphere:
    """Level set b_xi^{-1}(level) with its half-space chart.

    ``T`` (hyperbolic) is the Lorentz matrix of the chart isometry and
    ``Tinv`` its inverse; on flat space ``frame`` spans the hyperplane.
    """

    M: object
    xi: BoundaryPoint
    level: float = 0.0
    T: np.ndarray | None = field(default=None, repr=False)
    Tinv: np.ndarray | None = field(default=None, repr=False)
    frame: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        M = self.M
        if M.kind == "hyperbolic":
            base = np.asarray(self.xi.base, dtype=float)
            Linv = lorentz_inverse(lorentz_boost(base))
            c = (Linv @ self.xi.dir)[1:]
            c = c / np.linalg.norm(c)
            en = np.zeros(M.n)
            en[-1] = 1.0
            R = np.eye(M.n + 1)
            R[1:, 1:] = _householder(c, en)
            self.T = R @ Linv
            self.Tinv = lorentz_inverse(self.T)
        elif M.kind == "euclidean":
            self.frame = M.frame(self.xi.base, self.xi.dir)
        else:
            raise ModelError("horosphere charts are available for hyperbolic and Euclidean models")

    @property
    def height(self):
        return math.exp(-self.level)

    def to_halfspace(self, x):
        x = np.asarray(x, dtype=float)
        y = x @ self.T.T
        height = 1.0 / (y[..., :1] - y[..., -1:])
        return np.concatenate([y[..., 1:-1] * height, height], axis=-1)

    def from_halfspace(self, y):
        return halfspace_to_hyperboloid(y) @ self.Tinv.T

    def at_level(self, level):
        return Horosphere(self.M, self.xi, level)


def horosphere(M, base, direction, level=0.0):
    base = M.project(np.asarray(base, dtype=float))
    return Horosphere(M, BoundaryPoint(base, M.unit(base, direction)), float(level))


def horosphere_point(H, coords):
    """Point(s) of H with intrinsic (flat) coordinates ``coords``, shape (..., n-1)."""
    u = np.asarray(coords, dtype=float)
    if H.M.kind == "euclidean":
        return H.xi.base - H.level * H.xi.dir + u @ H.frame
    hgt = H.height
    y = np.concatenate([u * hgt, np.full(u.shape[:-1] + (1,), hgt)], axis=-1)
    return H.from_halfspace(y)


def intrinsic_coords(H, x):
    if H.M.kind == "euclidean":
        return (np.asarray(x) - H.xi.base) @ H.frame.T
    y = H.to_halfspace(x)
    return y[..., :-1] / y[..., -1:]


def eta_flow(H, x, s):
    """Flow of grad b for time s: a point of H_t goes to H_{t+s}."""
    if H.M.kind == "euclidean":
        return np.asarray(x, dtype=float) - s * H.xi.dir
    y = H.to_halfspace(x)
    y = np.concatenate([y[..., :-1], y[..., -1:] * math.exp(-s)], axis=-1)
    return H.from_halfspace(y)


def busemann_residual(H, points):
    """max |b(x) - level| over the given points."""
    pts = np.atleast_2d(points)
    return max(abs(busemann(H.M, H.xi, x) - H.level) for x in pts)


# regions and volumes ---------------------------------------------------------------

@dataclass(frozen=True)
class Region:
    """Intrinsic ball (center, radius) or box (lower, upper) on a horosphere."""

    kind: str
    center: tuple = ()
    radius: float = 0.0
    lower: tuple = ()
    upper: tuple = ()

    def flowed(self, s, h_scale):
        """Image under eta_s, in intrinsic coordinates of the new level."""
        k = math.exp(s) if h_scale else 1.0
        if self.kind == "ball":
            return Region("ball", tuple(np.multiply(self.center, k)), self.radius * k)
        return Region("box", lower=tuple(np.multiply(self.lower, k)), upper=tuple(np.multiply(self.upper, k)))


def ball_region(center, radius):
    return Region("ball", tuple(np.atleast_1d(np.asarray(center, dtype=float))), float(radius))


def box_region(lower, upper):
    return Region("box", lower=tuple(map(float, lower)), upper=tuple(map(float, upper)))


def _induced_density(H, u):
    """sqrt(det G) of the embedding u -> horosphere_point(u), G by central differences."""
    k = H.M.n - 1
    J = []
    for i in range(k):
        e = np.zeros(k)
        e[i] = FD_STEP
        J.append((horosphere_point(H, u + e) - horosphere_point(H, u - e)) / (2.0 * FD_STEP))
    G = np.array([[float(H.M.inner(None, a, b)) for b in J] for a in J])
    return math.sqrt(max(np.linalg.det(G), 0.0))


def _gl(a, b, order):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def region_quadrature(region, k, order=24, azimuth=64):
    """Nodes and weights (flat measure) on a region of R^k, k = 1, 2 or 3."""
    if region.kind == "box":
        if region.radius == 0 and not region.lower:
            return np.zeros((0, k)), np.zeros(0)
        axes = [_gl(lo, hi, order) for lo, hi in zip(region.lower, region.upper)]
        grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
        wts = np.meshgrid(*[a[1] for a in axes], indexing="ij")
        nodes = np.stack([g.ravel() for g in grids], axis=-1)
        return nodes, np.prod([w.ravel() for w in wts], axis=0)
    r = region.radius
    c = np.asarray(region.center, dtype=float)
    if r <= 0:
        return np.zeros((0, k)), np.zeros(0)
    rad, wr = geometric_panels(r, order)
    if k == 1:
        nodes = np.concatenate([-rad[::-1], rad])[:, None]
        w = np.concatenate([wr[::-1], wr])
    elif k == 2:
        phi = 2.0 * math.pi * np.arange(azimuth) / azimuth
        nodes = np.stack([np.outer(rad, np.cos(phi)).ravel(), np.outer(rad, np.sin(phi)).ravel()], -1)
        w = np.outer(wr * rad, np.full(azimuth, 2.0 * math.pi / azimuth)).ravel()
    elif k == 3:
        sq = sphere_quadrature(3, max(8, azimuth // 4))
        nodes = (rad[:, None, None] * sq.nodes[None]).reshape(-1, 3)
        w = np.outer(wr * rad ** 2, sq.weights).ravel()
    else:
        raise ModelError("regions of dimension 1-3 are supported")
    return nodes + c, w


def geometric_panels(r, order=24, first=0.25, sub=2):
    """Composite Gauss-Legendre on [0, r] with panel edges 0, first, 2 first, 4 first, ..."""
    edges = [0.0]
    e = first
    while e < r:
        edges.append(e)
        e *= 2.0
    edges.append(r)
    edges = np.unique(edges)
    fine = np.concatenate([np.linspace(a, b, sub + 1)[:-1] for a, b in zip(edges[:-1], edges[1:])] + [[r]])
    nodes, weights = [], []
    for a, b in zip(fine[:-1], fine[1:]):
        x, w = _gl(a, b, order)
        nodes.append(x)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def region_volume(H, region, method="closed_form", order=24):
    """(vol_{n-1}(region), vol_{n-2}(boundary)) in the induced metric.

    ``closed_form`` uses that intrinsic coordinates are isometric to flat
    R^{n-1}; ``quadrature`` integrates the first fundamental form of the
    embedding into the hyperboloid, obtained by finite differences.
    """
    k = H.M.n - 1
    if region.kind == "ball":
        r = region.radius
        if r <= 0:
            return 0.0, 0.0
        bnd = sphere_measure(k, r)
        if method == "closed_form":
            return ball_volume(k, r), bnd
    elif region.kind == "box":
        if not region.lower:
            return 0.0, 0.0
        sides = np.subtract(region.upper, region.lower)
        if np.any(sides <= 0):
            return 0.0, 0.0
        if k == 1:
            bnd = 2.0
        else:
            prod = float(np.prod(sides))
            bnd = float(sum(2.0 * prod / s for s in sides))
        if method == "closed_form":
            return float(np.prod(sides)), bnd
    else:
        raise ModelError(f"unknown region kind {region.kind!r}")
    if method != "quadrature":
        raise ModelError(f"unknown volume method {method!r}")
    nodes, w = region_quadrature(region, k, order)
    dens = np.array([_induced_density(H, u) for u in nodes])
    return float(math.fsum(dens * w)), bnd


def volume_scaling_check(H, region, t, method="closed_form"):
    """|vol(eta_t A) - e^{ht} vol(A)| / (e^{ht} vol(A)) for a region A on H."""
    if H.M.h is None:
        raise ModelError("volume scaling needs the constant h")
    vol, _ = region_volume(H, region, method)
    img = region.flowed(t, H.M.kind == "hyperbolic")
    vol_t, _ = region_volume(H.at_level(H.level + t), img, method)
    if vol == 0.0:
        return 0.0
    target = math.exp(H.M.h * t) * vol
    return abs(vol_t - target) / target


def growth_fit(H, radii, rho=None, method="closed_form", margin=GROWTH_MARGIN):
    """Log-log slope of vol_{n-1}(B_H(r)) and the polynomial bound slope <= 2h/rho.

    ``rho`` is the fitted exponential rate of the Jacobi tensors; the bound
    is checked as slope <= (2h/rho)(1 + margin).
    """
    r = np.asarray(radii, dtype=float)
    if np.any(np.diff(r) <= 0):
        raise ModelError("radii must be increasing")
    vols = np.array([region_volume(H, ball_region(np.zeros(H.M.n - 1), ri), method)[0] for ri in r])
    slope = float(np.polyfit(np.log(r), np.log(vols), 1)[0])
    out = {"radii": r, "volumes": vols, "slope": slope}
    if rho is not None and H.M.h is not None:
        bound = 2.0 * H.M.h / rho
        out.update(bound=bound, bound_holds=bool(slope <= bound * (1.0 + margin)))
    return out


@dataclass
class Exhaustion:
    horosphere: Horosphere
    radii: np.ndarray
    volumes: np.ndarray
    boundary: np.ndarray

    @property
    def ratios(self):
        return self.boundary / self.volumes

    def region(self, j):
        return ball_region(np.zeros(self.horosphere.M.n - 1), self.radii[j])


def make_exhaustion(H, radii):
    """Nested intrinsic balls about the foot point with decreasing isoperimetric ratios.

    Raises
    ------
    ModelError
        Radii not strictly increasing, or ratios not strictly decreasing.
    """
    r = np.asarray(radii, dtype=float)
    if r.ndim != 1 or r.size < 1 or np.any(r <= 0) or np.any(np.diff(r) <= 0):
        raise ModelError("exhaustion radii must be positive and strictly increasing")
    vols, bnds = zip(*(region_volume(H, ball_region(np.zeros(H.M.n - 1), ri)) for ri in r))
    ex = Exhaustion(H, r, np.array(vols), np.array(bnds))
    if np.any(np.diff(ex.ratios) >= 0):
        raise ModelError("isoperimetric ratios are not decreasing")
    return ex


def default_exhaustion(H, jmax=7):
    return make_exhaustion(H, 2.0 ** np.arange(1, jmax + 1))


# horospherical means -------------------------------------------------------------

def horospherical_mean(M, f, exhaustion, j, t=0.0, order=24, azimuth=64, vectorized=False):
    """g_j(t): mean of f over eta_t(K_j) with the induced (flat) measure.

    ``f`` maps a point (or, with ``vectorized``, an array of points) to a
    real value.  The flowed region is the intrinsic ball of radius
    r_j e^{t} on the horosphere at level + t.
    """
    H = exhaustion.horosphere
    k = M.n - 1
    reg = exhaustion.region(j).flowed(t, M.kind == "hyperbolic")
    Ht = H.at_level(H.level + t)
    nodes, w = region_quadrature(reg, k, order, azimuth)
    pts = horosphere_point(Ht, nodes)
    vals = np.asarray(f(pts)) if vectorized else np.array([f(x) for x in pts])
    return math.fsum(vals * w) / math.fsum(w)


def mean_profile(M, f, exhaustion, t_grid, js=None, **kw):
    """Array g[j, k] = g_j(t_k)."""
    js = range(len(exhaustion.radii)) if js is None else js
    return np.array([[horospherical_mean(M, f, exhaustion, j, t, **kw) for t in t_grid] for j in js])


def escaping_directions(H, n_dirs=16, chart_radius=1.0 - 1e-6):
    """Largest ball-chart angle between e_n and horosphere points escaping along rays.

    Points of H are taken along intrinsic rays until their ball-chart radius
    reaches ``chart_radius``; in the chart normalized by T the center of H
    is e_n, so the angle measures how far escaping points stay from it.
    """
    k = H.M.n - 1
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(n_dirs):
        d = rng.standard_normal(k)
        d /= np.linalg.norm(d)
        lo, hi = 0.0, 1.0
        rad = lambda s: np.linalg.norm(hyperboloid_to_ball(H.T @ horosphere_point(H, s * d)))
        while rad(hi) < chart_radius:
            hi *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if rad(mid) < chart_radius else (lo, mid)
        b = hyperboloid_to_ball(H.T @ horosphere_point(H, hi * d))
        worst = max(worst, math.acos(min(1.0, b[-1] / np.linalg.norm(b))))
    return worst


# radial eigenfunctions ---------------------------------------------------------------

@dataclass
class RadialEigenfunction:
    """phi'' + (n-1) coth(r) phi' + lambda phi = 0 with phi(0) = 1, phi'(0) = 0."""

    lam: float
    mu: complex
    n: int
    r_max: float
    sol: object = field(repr=False)
    c_mu: float | None = None
    c_mu_tol: float | None = None

    def __call__(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        if np.any(r > self.r_max):
            raise ModelError("radius beyond the integrated range")
        small = r < R0
        out = np.empty_like(r)
        out[small] = 1.0 - self.lam * r[small] ** 2 / (2.0 * self.n)
        if (~small).any():
            out[~small] = self.sol(r[~small])[0]
        return out

    def derivative(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        small = r < R0
        out = np.empty_like(r)
        out[small] = -self.lam * r[small] / self.n
        if (~small).any():
            out[~small] = self.sol(r[~small])[1]
        return out


def radial_eigenfunction(M, lam, r_max=30.0):
    """Radial eigenfunction of the Laplacian about a point of H^n.

    The coth singularity at r = 0 is avoided by starting at r0 = 1e-3 from
    the series 1 - lambda r^2 / (2n).  For 0 < lambda < (h/2)^2 the tail
    constant c of phi ~ c exp((kappa - h/2) r), kappa = sqrt((h/2)^2 - lambda),
    is fitted at r_max.
    """
    if M.kind != "hyperbolic":
        raise ModelError("radial eigenfunctions are implemented for H^n")
    n, h = M.n, M.h
    lam = float(lam)
    r0 = R0
    y0 = [1.0 - lam * r0 ** 2 / (2 * n), -lam * r0 / n]

    def rhs(r, y):
        return [y[1], -(n - 1) / math.tanh(r) * y[1] - lam * y[0]]

    sol = solve_ivp(rhs, (r0, r_max), y0, method="DOP853", rtol=1e-12, atol=1e-14, dense_output=True)
    if not sol.success:
        raise ConvergenceError(f"radial eigenfunction integration failed: {sol.message}")
    disc = (h / 2.0) ** 2 - lam
    mu = complex(0.0, math.sqrt(disc)) if disc > 0 else complex(math.sqrt(-disc), 0.0)
    ef = RadialEigenfunction(lam, mu, n, r_max, sol.sol)
    if 0.0 < lam < (h / 2.0) ** 2:
        kappa = math.sqrt(disc)
        rate = kappa - h / 2.0
        c_end = float(sol.sol(r_max)[0] * math.exp(-rate * r_max))
        c_half = float(sol.sol(0.5 * r_max)[0] * math.exp(-rate * 0.5 * r_max))
        ef.c_mu, ef.c_mu_tol = c_end, abs(c_end - c_half)
    return ef


def eigenfunction_field(M, ef, pole):
    """Vectorized x -> phi(d(pole, x)) on the hyperboloid."""
    pole = np.asarray(pole, dtype=float)

    def f(pts):
        pts = np.atleast_2d(pts)
        a = -minkowski(pts, pole[None, :])
        diff = pts - pole[None, :]
        chord = np.sqrt(np.maximum(minkowski(diff, diff), 0.0))
        d = np.where(a < 2.0, 2.0 * np.arcsinh(0.5 * chord), np.arccosh(np.maximum(a, 1.0)))
        return ef(d)
    return f


def mean_ode_fit(M, f, exhaustion, t_grid, lam, **kw):
    """Horospherical means of an eigenfunction and the ODE g'' + h g' + lambda g = 0.

    Returns g[j, k], the finite-difference ODE residual per j (interior
    points of ``t_grid``), the isoperimetric ratios, the least-squares
    coefficients of g_J against the two-dimensional solution basis, and
    |g_j(0)| per j.
    """
    t = np.asarray(t_grid, dtype=float)
    dt = np.diff(t)
    if not np.allclose(dt, dt[0]):
        raise ModelError("t_grid must be uniform")
    dt = dt[0]
    h = M.h
    g = mean_profile(M, f, exhaustion, t, **kw)
    g2 = (g[:, 2:] - 2 * g[:, 1:-1] + g[:, :-2]) / dt ** 2
    g1 = (g[:, 2:] - g[:, :-2]) / (2 * dt)
    res = np.abs(g2 + h * g1 + lam * g[:, 1:-1]).max(axis=1)
    disc = (h / 2.0) ** 2 - lam
    env = np.exp(-h * t / 2.0)
    if abs(disc) < 1e-14:
        basis = np.stack([env, t * env], axis=1)
    elif disc > 0:
        basis = np.stack([np.exp((-h / 2 + math.sqrt(disc)) * t), np.exp((-h / 2 - math.sqrt(disc)) * t)], 1)
    else:
        w = math.sqrt(-disc)
        basis = np.stack([env * np.cos(w * t), env * np.sin(w * t)], axis=1)
    coef, *_ = np.linalg.lstsq(basis, g[-1], rcond=None)
    fit_res = float(np.abs(basis @ coef - g[-1]).max())
    return {"g": g, "ode_residual": res, "ratios": exhaustion.ratios, "coefficients": coef,
            "fit_residual": fit_res, "g0": np.abs(g[:, 0])}
