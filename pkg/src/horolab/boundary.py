"""Busemann functions, boundary points and Gromov-product probes.

A boundary point is stored as a base point together with a unit vector
there; the ideal point is the endpoint of the geodesic ray it spans.  On
the hyperboloid the Busemann function of such a ray has the closed form

    b(x) = log(-<x, p0 + v>),

where ``p0 + v`` is the null vector of the ray's light-like direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .exceptions import ConvergenceError, ModelError
from .models import minkowski, null_pairing

FD_STEP = 1e-5
GRAD_TOL = 1e-4


@dataclass(frozen=True)
class BoundaryPoint:
    """Ideal point c_dir(infinity) seen from ``base``."""

    base: np.ndarray
    dir: np.ndarray

    def null_vector(self):
        """Light-like vector base + dir (hyperboloid model only)."""
        return np.asarray(self.base, dtype=float) + np.asarray(self.dir, dtype=float)

    def same_as(self, other, tol=1e-9):
        """Equality for points sharing the base, i.e. injectivity of v -> c_v(infinity)."""
        if not np.allclose(self.base, other.base, atol=tol, rtol=0):
            raise ModelError("boundary points have different base points; rebase first")
        return bool(np.abs(np.asarray(self.dir) - np.asarray(other.dir)).max() <= tol)


@dataclass(frozen=True)
class ConeSpec:
    """Cone C(v0, delta) of geodesic rays from the base of v0 within angle delta."""

    v0: np.ndarray
    delta: float
    C1: float | None = None

    def __post_init__(self):
        if not 0.0 < self.delta < math.pi:
            raise ModelError("cone angle must lie in (0, pi)")


@dataclass
class HyperbolicityReport:
    delta4: float
    delta_sandwich: float
    samples: int
    seed: int
    sandwich_left_min: float = 0.0
    sandwich_violations: int = 0
    gromconv: dict | None = None
    rows: list | None = None


def boundary_point(M, base, direction):
    base = M.project(np.asarray(base, dtype=float))
    direction = M.unit(base, direction)
    return BoundaryPoint(base, direction)


# Busemann functions -----------------------------------------------------------

def _closed_form(M, xi, p):
    if M.kind == "hyperbolic":
        c = M.tangent_to_sphere(xi.base, xi.dir)
        return float(np.log(null_pairing(xi.base, c / np.linalg.norm(c), p)))
    if M.kind == "euclidean":
        return float(-np.dot(np.asarray(p) - xi.base, xi.dir))
    raise ModelError(f"no closed-form Busemann function for {M.kind!r}")


def busemann_limit(M, xi, p, r_max, levels=4):
    """b_{v,r}(p) = d(c_v(r), p) - r at doubled radii with Aitken extrapolation.

    Returns the extrapolated value and the difference of the last two Aitken
    estimates as an error indicator.  The doubling handles both exponential
    (curved) and algebraic (flat) tails.
    """
    radii = r_max / 2.0 ** np.arange(levels - 1, -1, -1)
    vals = np.array([M.dist(M.exp(xi.base, xi.dir, float(r)), p) - r for r in radii])
    est = []
    for k in range(levels - 2):
        b0, b1, b2 = vals[k:k + 3]
        den = (b2 - b1) - (b1 - b0)
        if abs(den) < 1e-300 or abs(b2 - b1) < 1e-15:
            est.append(b2)
        else:
            est.append(b2 - (b2 - b1) ** 2 / den)
    return float(est[-1]), float(abs(est[-1] - est[-2])) if len(est) > 1 else float(abs(vals[-1] - vals[-2]))


def busemann(M, xi, p, r_max=None, mode="closed_form", tol=1e-6):
    """Busemann function b_v(p) = lim d(c_v(t), p) - t of the boundary point ``xi``.

    Parameters
    ----------
    mode : {"closed_form", "limit"}
        ``limit`` evaluates the defining limit numerically, see
        :func:`busemann_limit`.
    r_max : float, optional
        Largest radius of the limit mode; must exceed d(base, p) + 1.

    Raises
    ------
    ConvergenceError
        Extrapolated limit changes by more than ``tol``.
    """
    if mode == "closed_form":
        return _closed_form(M, xi, p)
    if mode != "limit":
        raise ModelError(f"unknown Busemann mode {mode!r}")
    dp = M.dist(xi.base, p)
    if r_max is None:
        r_max = max(40.0, 8.0 * (dp + 1.0))
    if r_max <= dp + 1.0:
        raise ModelError("r_max must exceed d(base, p) + 1")
    val, err = busemann_limit(M, xi, p, r_max)
    if err > tol:
        raise ConvergenceError(f"Busemann extrapolation not converged (change {err:.3e})")
    return val


def _default_mode(M):
    return "closed_form" if M.kind in ("hyperbolic", "euclidean") else "limit"


def busemann_gradient(M, xi, q, method=None):
    """Unit vector -grad b_v(q), pointing from q to the boundary point.

    ``method`` is ``"closed_form"`` (hyperbolic and Euclidean) or ``"fd"``:
    central differences of the Busemann function in an orthonormal basis at
    q, step 1e-5.

    Raises
    ------
    ConvergenceError
        The finite-difference gradient is not of unit length within 1e-4.
    """
    q = np.asarray(q, dtype=float)
    if method is None:
        method = "closed_form" if M.kind in ("hyperbolic", "euclidean") else "fd"
    if method == "closed_form":
        if M.kind == "hyperbolic":
            ell = xi.null_vector()
            w = ell / (-minkowski(q, ell)) - q
            return w / math.sqrt(minkowski(w, w))
        if M.kind == "euclidean":
            return np.array(xi.dir, dtype=float)
        raise ModelError(f"no closed-form gradient for {M.kind!r}")
    mode = _default_mode(M)
    E = M.tangent_basis(q)
    g = np.empty(len(E))
    for i, e in enumerate(E):
        bp = busemann(M, xi, M.exp(q, e, FD_STEP), mode=mode)
        bm = busemann(M, xi, M.exp(q, e, -FD_STEP), mode=mode)
        g[i] = (bp - bm) / (2.0 * FD_STEP)
    ng = float(np.linalg.norm(g))
    if abs(ng - 1.0) > GRAD_TOL:
        raise ConvergenceError(f"Busemann gradient has norm {ng:.6f}, expected 1")
    return -(g / ng) @ E


def rebase_boundary_point(M, xi, q):
    """The same ideal point described from base q."""
    q = M.project(np.asarray(q, dtype=float))
    if np.array_equal(q, xi.base):
        return xi
    return BoundaryPoint(q, busemann_gradient(M, xi, q))


def angle_between(M, p, u, w):
    c = M.inner(p, u, w) / (M.norm(p, u) * M.norm(p, w))
    # atan2 form keeps accuracy for nearly parallel vectors
    s = M.norm(p, np.asarray(u) / M.norm(p, u) - c * np.asarray(w) / M.norm(p, w))
    return float(math.atan2(s, c))


# Gromov products and hyperbolicity ---------------------------------------------

def gromov_product(M, x0, x, y):
    """(x|y)_{x0} = (d(x, x0) + d(y, x0) - d(x, y)) / 2."""
    return 0.5 * (M.dist(x, x0) + M.dist(y, x0) - M.dist(x, y))


def _four_point_deficit(M, x0, x, y, z):
    gxy = gromov_product(M, x0, x, y)
    gxz = gromov_product(M, x0, x, z)
    gyz = gromov_product(M, x0, y, z)
    return max(min(gxz, gyz) - gxy, min(gxy, gyz) - gxz, min(gxy, gxz) - gyz)


def segment_point(M, x, y, s):
    """Point at fraction s in [0, 1] of the geodesic segment from x to y."""
    if s == 0.0:
        return np.asarray(x, dtype=float)
    w = M.log(x, y)
    d = M.norm(x, w)
    if d == 0.0:
        return np.asarray(x, dtype=float)
    return M.exp(x, w / d, s * d)


def distance_to_segment(M, x0, x, y, samples=64):
    """min over the geodesic segment of d(x0, .), by sampling and golden-section refinement."""
    w = M.log(x, y)
    d = M.norm(x, w)
    if d == 0.0:
        return M.dist(x0, x)
    u = w / d
    f = lambda s: M.dist(x0, M.exp(x, u, s * d))
    s = np.linspace(0.0, 1.0, samples)
    vals = np.array([f(si) for si in s])
    k = int(np.argmin(vals))
    lo, hi = s[max(k - 1, 0)], s[min(k + 1, samples - 1)]
    res = minimize_scalar(f, bracket=None, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    return float(min(res.fun, vals[k]))


def gromconv_check(M, p, v, w_perp, n_terms=10):
    """Two-way check of (x_n|y_n)_p -> infinity  <=>  d -> infinity and angle -> 0.

    Three radial sequences are used: diverging distances with angles e^{-k}
    (products must grow), diverging distances at a fixed angle, and bounded
    distances with shrinking angles (products must stay bounded).
    """
    def pair(t, ang):
        x = M.exp(p, v, t)
        u = math.cos(ang) * v + math.sin(ang) * w_perp
        return x, M.exp(p, u, t)

    k = np.arange(1, n_terms + 1)
    conv = [gromov_product(M, p, *pair(2.0 * j, math.exp(-j))) for j in k]
    fixed = [gromov_product(M, p, *pair(2.0 * j, math.pi / 3)) for j in k]
    bounded = [gromov_product(M, p, *pair(3.0, math.exp(-j))) for j in k]
    growing = bool(np.all(np.diff(conv) > 0) and conv[-1] > 2.0 * conv[0] + 1.0)
    fixed_bounded = bool(np.ptp(fixed[n_terms // 2:]) < 1e-6 * max(1.0, abs(fixed[-1])) + 1e-9)
    bounded_bounded = bool(max(bounded) <= 3.0 + 1e-12)
    return {"converging": conv, "fixed_angle": fixed, "bounded_distance": bounded,
            "forward": growing, "backward": fixed_bounded and bounded_bounded}


def hyperbolicity_probe(M, sample_size, radius, seed, sandwich_samples=None, gromconv=True):
    """Sampled four-point and geodesic-sandwich deficits in a ball.

    ``delta4`` is the largest value of min{(x|z), (y|z)} - (x|y) over the
    three pairings of each sampled triple (with a sampled base point x0).
    ``delta_sandwich`` is the largest excess d(x0, [x, y]) - (x|y); the left
    inequality d(x0, [x, y]) >= (x|y) is checked on every sample and
    violations below -1e-9 are counted.
    """
    if sample_size < 1:
        raise ModelError("sample_size must be >= 1")
    rng = np.random.default_rng(seed)
    if sandwich_samples is None:
        sandwich_samples = min(int(sample_size), 200)
    delta4 = 0.0
    rows = []
    for _ in range(int(sample_size)):
        x0, x, y, z = (M.random_point(rng, radius) for _ in range(4))
        d4 = _four_point_deficit(M, x0, x, y, z)
        delta4 = max(delta4, d4)
        rows.append(d4)
    excess = []
    for _ in range(int(sandwich_samples)):
        x0, x, y = (M.random_point(rng, radius) for _ in range(3))
        excess.append(distance_to_segment(M, x0, x, y) - gromov_product(M, x0, x, y))
    excess = np.array(excess)
    gc = None
    if gromconv:
        o = M.origin()
        gc = gromconv_check(M, o, M.tangent_basis(o)[0], M.tangent_basis(o)[1])
    return HyperbolicityReport(
        delta4=float(delta4), delta_sandwich=float(max(excess.max(), 0.0)), samples=int(sample_size),
        seed=int(seed), sandwich_left_min=float(excess.min()),
        sandwich_violations=int(np.sum(excess < -1e-9)), gromconv=gc, rows=rows)


# divergence of geodesics ------------------------------------------------------

def rotate_in_plane(v, u, angle):
    """cos(angle) v + sin(angle) u for orthonormal v, u."""
    return math.cos(angle) * np.asarray(v) + math.sin(angle) * np.asarray(u)


def divergence_profile(M, p, v, angle, t_grid, constants, u=None):
    """Distances d(c_v(t), c_w(t)) for w at the given angle, with the envelope check.

    The lower envelope follows the case split of the uniform divergence
    estimate: when the connecting geodesic stays outside the ball of radius
    max(t/2, 1) about p the exponential branch a e^{rho t/4} * angle applies;
    otherwise min(t/pi, a e^{rho t/4}) * angle is used.

    Returns a dict of per-t rows and the first violating time (or None).
    """
    if not 0.0 <= angle <= math.pi:
        raise ModelError("angle must lie in [0, pi]")
    if u is None:
        u = M.frame(p, v)[0]
    w = rotate_in_plane(v, u, angle)
    rows = []
    first = None
    for t in np.asarray(t_grid, dtype=float):
        x, y = M.exp(p, v, t), M.exp(p, w, t)
        d = M.dist(x, y) if angle > 0 else 0.0
        expo = constants.a * math.exp(constants.rho * t / 4.0)
        if d > 0:
            r_min = distance_to_segment(M, p, x, y)
        else:
            r_min = t
        if r_min >= max(t / 2.0, 1.0):
            branch, bound = "exp", expo * angle
        else:
            branch, bound = "min", min(t / math.pi, expo) * angle
        ok = d >= bound - 1e-12 * max(1.0, bound)
        rows.append({"t": float(t), "d": float(d), "bound": float(bound), "branch": branch,
                     "r_min": float(r_min), "ok": bool(ok)})
        if not ok and first is None:
            first = float(t)
    return {"rows": rows, "first_violation": first, "holds": first is None}


# cones and horoballs ------------------------------------------------------------

def in_cone(M, cone, p, q):
    """Membership of q in C(v0, delta): the angle at the base between v0 and log(q)."""
    lq = M.log(p, q)
    if M.norm(p, lq) == 0.0:
        return True
    return angle_between(M, p, cone.v0, lq) <= cone.delta


def cone_horoball_check(M, p, cone, distances, n_angles=33, seed=0, stable_after=10.0,
                        stable_tol=1e-3):
    """Deficit d(p, q) - b_v(q) for q outside the cone C(v, delta), v = cone.v0.

    The running maximum over distance shells estimates C1(delta).  On a
    rank one model it stabilizes; on flat space the deficit is unbounded and
    the shell maxima form a certified counterexample sequence.
    """
    rng = np.random.default_rng(seed)
    v = M.unit(p, cone.v0)
    xi = BoundaryPoint(p, v)
    mode = _default_mode(M)
    angles = np.linspace(cone.delta, math.pi, n_angles)
    perps = [M.frame(p, v)[0]]
    if M.n > 2:
        for _ in range(3):
            g = M.random_unit(rng, p)
            g = g - M.inner(p, g, v) * v
            perps.append(g / M.norm(p, g))
    rows = []
    running = -np.inf
    for s in np.asarray(distances, dtype=float):
        shell = -np.inf
        arg = None
        for u in perps:
            for sign in (1.0, -1.0):
                for th in angles:
                    w = rotate_in_plane(v, sign * u, th)
                    q = M.exp(p, w, s)
                    dfc = s - busemann(M, xi, q, mode=mode)
                    if dfc > shell:
                        shell, arg = dfc, q
        running = max(running, shell)
        rows.append({"distance": float(s), "shell_max": float(shell), "C1": float(running), "q": arg})
    C = np.array([r["C1"] for r in rows])
    dist = np.array([r["distance"] for r in rows])
    late = np.diff(C)[dist[1:] > stable_after]
    incr = float(late.max()) if late.size else 0.0
    stable = incr < stable_tol
    return {"rows": rows, "C1": float(C[-1]), "late_increment": incr, "stable": bool(stable),
            "counterexample": None if stable else [(r["distance"], r["shell_max"]) for r in rows]}
