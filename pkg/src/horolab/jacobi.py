"""Orthogonal Jacobi tensors along geodesics.

All tensors are (n-1)x(n-1) matrices acting on the orthogonal complement of
the geodesic, written in a parallel orthonormal frame.  They solve

    A''(t) + R(t) A(t) = 0,

with ``R(t)`` from :meth:`ModelSpace.curvature_fn`.  Everything is built
from the fundamental propagator

    Phi(t) = [[J0(t), A(t)], [J0'(t), A'(t)]],   Phi(0) = I,

so that the tensor with data (A0, A0') at t = 0 is ``Phi[:m] @ [A0; A0']``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .exceptions import ConvergenceError, ModelError, ModelViolation, NonExponentialGrowth

JACOBI_RTOL = 1e-12
JACOBI_ATOL = 1e-14
DEFAULT_SCHEDULE = (2.0, 4.0, 8.0, 16.0, 32.0, 64.0)
CAUCHY_TOL = 1e-10
KERNEL_EPS = 1e-6


@dataclass
class JacobiTensor:
    """Samples of a Jacobi tensor and its derivative on ``t_grid``."""

    v: np.ndarray
    t_grid: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray

    def wronskian(self):
        """A'^T A - A^T A' at every sample; constant along a Jacobi tensor."""
        A, dA = self.values, self.derivatives
        return np.swapaxes(dA, -1, -2) @ A - np.swapaxes(A, -1, -2) @ dA

    def wronskian_residual(self):
        W = self.wronskian()
        scale = max(1.0, float(np.abs(self.values).max() * np.abs(self.derivatives).max()))
        return float(np.abs(W - W[0]).max() / scale)


@dataclass
class JacobiLimits:
    """Limits of the two-point tensors at one unit vector.

    ``tol`` is the last Cauchy increment of the truncation schedule and
    ``r_used`` the radius at which it was reached.
    """

    U: np.ndarray
    S: np.ndarray
    D: np.ndarray
    rank: int
    trU: float
    r_used: float
    tol: float


@dataclass
class DivergenceConstants:
    """Fitted constants of ``|A_v(t) x| >= a exp(rho t / 2) |x|``."""

    a: float
    rho: float
    a2: float
    slope_spread: float = 0.0
    samples: int = 0


def _split_grid(t_grid):
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or np.any(np.diff(t) <= 0):
        raise ModelError("t_grid must be a strictly increasing 1-d array")
    return t


def propagator(M, p, v, t_grid, R=None):
    """Fundamental matrix Phi(t), shape (len(t_grid), 2m, 2m).

    Negative sample times are handled by a separate backward integration.
    """
    t = _split_grid(t_grid)
    m = M.m
    if R is None:
        R = M.curvature_fn(p, v, float(np.abs(t).max()) + 1.0)

    def rhs(s, y):
        Y = y.reshape(2 * m, 2 * m)
        out = np.empty_like(Y)
        out[:m] = Y[m:]
        out[m:] = -R(s) @ Y[:m]
        return out.ravel()

    out = np.empty((t.size, 2 * m, 2 * m))
    y0 = np.eye(2 * m).ravel()
    for sign in (1.0, -1.0):
        mask = (t > 0) if sign > 0 else (t < 0)
        out[t == 0] = np.eye(2 * m)
        if not mask.any():
            continue
        ts = t[mask]
        order = np.argsort(sign * ts)
        ts_sorted = ts[order]
        sol = solve_ivp(rhs, (0.0, ts_sorted[-1]), y0, method="DOP853", t_eval=ts_sorted,
                        rtol=JACOBI_RTOL, atol=JACOBI_ATOL)
        if not sol.success:
            raise ConvergenceError(f"Jacobi integration failed: {sol.message}")
        vals = sol.y.T.reshape(-1, 2 * m, 2 * m)
        idx = np.nonzero(mask)[0][order]
        out[idx] = vals
    return out


def integrate_jacobi(M, p, v, A0, dA0, t_grid):
    """Jacobi tensor with A(0) = A0, A'(0) = dA0 along c_v, sampled on ``t_grid``."""
    A0 = np.atleast_2d(np.asarray(A0, dtype=float))
    dA0 = np.atleast_2d(np.asarray(dA0, dtype=float))
    m = M.m
    if A0.shape != (m, m) or dA0.shape != (m, m):
        raise ModelError(f"initial data must be {m}x{m} matrices")
    t = _split_grid(t_grid)
    Phi = propagator(M, p, v, t)
    Y = Phi @ np.vstack([A0, dA0])
    return JacobiTensor(np.asarray(v, dtype=float), t, Y[:, :m], Y[:, m:])


def _s_prime_from_phi(Phi_r):
    """S'_{v,r}(0) = -A(r)^{-1} J0(r) from the propagator at r."""
    m = Phi_r.shape[0] // 2
    J0, A = Phi_r[:m, :m], Phi_r[:m, m:]
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] <= 1e-12 * max(sv[0], 1e-300):
        raise ModelViolation("A_v(r) is singular: conjugate points along the geodesic")
    return -np.linalg.solve(A, J0)


def boundary_tensor_S(M, p, v, r, t_grid=None):
    """Two-point tensor S_{v,r}: S(0) = I, S(r) = 0.

    Returns the tensor sampled on ``t_grid`` (default: 0 and r); its derivative
    at t = 0 is ``derivatives[0]`` when the grid starts at 0.
    """
    if r <= 0:
        raise ModelError("r must be positive")
    t = np.asarray([0.0, r] if t_grid is None else t_grid, dtype=float)
    grid = np.union1d(t, [0.0, r])
    Phi = propagator(M, p, v, grid)
    m = M.m
    C = _s_prime_from_phi(Phi[np.searchsorted(grid, r)])
    Y = Phi @ np.vstack([np.eye(m), C])
    idx = np.searchsorted(grid, t)
    return JacobiTensor(np.asarray(v, dtype=float), t, Y[idx, :m], Y[idx, m:])


def _reversed_curvature(M, p, v, t_max):
    R = M.curvature_fn(p, v, t_max)
    return lambda s: R(-s)


def _limit_from_schedule(values, schedule, tol):
    """Cauchy limit of a sequence indexed by doubling radii.

    When the increments halve (algebraic 1/r tail) the Richardson combination
    2 S_{2r} - S_r is used instead.
    """
    incs = [float(np.abs(values[k] - values[k - 1]).max()) for k in range(1, len(values))]
    for k, inc in enumerate(incs, start=1):
        if inc < tol:
            return values[k], schedule[k], inc
    rich = [2 * values[k] - values[k - 1] for k in range(1, len(values))]
    if len(incs) >= 3:
        ratios = [incs[k] / incs[k - 1] for k in range(1, len(incs)) if incs[k - 1] > 0]
        if ratios and abs(ratios[-1] - 0.5) < 0.05:
            for k in range(1, len(rich)):
                inc = float(np.abs(rich[k] - rich[k - 1]).max())
                if inc < tol:
                    return rich[k], schedule[k + 1], inc
    raise ConvergenceError(f"stable/unstable limit not converged (last increment {incs[-1]:.3e})")


def stable_derivative(M, p, v, r_schedule=DEFAULT_SCHEDULE, tol=CAUCHY_TOL, reverse=False):
    """S(v) = lim S'_{v,r}(0); with ``reverse`` the curvature is read along c_{-v}."""
    sched = np.asarray(r_schedule, dtype=float)
    if np.any(np.diff(sched) <= 0):
        raise ModelError("r_schedule must be increasing")
    R = _reversed_curvature(M, p, v, sched[-1] + 1.0) if reverse else None
    Phi = propagator(M, p, v, sched, R=R)
    vals = [_s_prime_from_phi(P) for P in Phi]
    return _limit_from_schedule(vals, sched, tol)


def asymptotic_tensors(M, p, v, r_schedule=DEFAULT_SCHEDULE, eps=KERNEL_EPS, tol=CAUCHY_TOL):
    """Stable and unstable limits U(v), S(v), D(v) = U(v) - S(v) and rank(v).

    U(v) is obtained as -S(-v) through the reversal U_{v,r}(t) = S_{-v,r}(-t),
    i.e. by integrating along c_v backwards in time.
    """
    S, r1, tol1 = stable_derivative(M, p, v, r_schedule, tol)
    negU, r2, tol2 = stable_derivative(M, p, v, r_schedule, tol, reverse=True)
    U = -negU
    D = U - S
    Ds = 0.5 * (D + D.T)
    lam = np.linalg.eigvalsh(Ds)
    norm = float(np.abs(lam).max())
    if norm < 1e-12:
        rank = M.n
    else:
        rank = int(np.sum(lam < eps * norm)) + 1
    return JacobiLimits(U, S, D, rank, float(np.trace(U)), max(r1, r2), max(tol1, tol2))


def unstable_tensor(M, p, v, t_grid, limits=None):
    """U_v(t) with U_v(0) = I, U_v'(0) = U(v)."""
    if limits is None:
        limits = asymptotic_tensors(M, p, v)
    return integrate_jacobi(M, p, v, np.eye(M.m), limits.U, t_grid)


def harmonicity_scan(M, sample_size, seed, radius=2.0, r_schedule=DEFAULT_SCHEDULE):
    """Sample tr U(v) over footpoints in a ball and uniform directions.

    Returns a dict with the sample rows, the mean, and the largest deviation
    from the mean.  The model constant h is never used.
    """
    if sample_size < 1:
        raise ModelError("sample_size must be >= 1")
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(int(sample_size)):
        p = M.random_point(rng, radius)
        v = M.random_unit(rng, p)
        lim = asymptotic_tensors(M, p, v, r_schedule)
        rows.append({"p": p, "v": v, "trU": lim.trU, "rank": lim.rank, "tol": lim.tol})
    tr = np.array([r["trU"] for r in rows])
    mean = float(np.mean(tr))
    return {"rows": rows, "mean": mean, "max_dev": float(np.abs(tr - mean).max()),
            "max_dev_from_h": None if M.h is None else float(np.abs(tr - M.h).max())}


def gauss_panels(t, panel=1.0, order=16):
    """Composite Gauss-Legendre nodes and weights on [0, t]."""
    k = max(1, int(math.ceil(t / panel)))
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, t, k + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x).ravel()
    weights = (half[:, None] * w).ravel()
    return nodes, weights


def jacobi_identity_checks(M, p, v, t, limits=None):
    """Residuals of the determinant and representation identities at time t.

    r1 = |det A_v(t) det(U(v) - S'_{v,t}(0)) - e^{ht}| / e^{ht}
    r2 = |A_v(t) - U_v(t) int_0^t (U_v^T U_v)^{-1}| / |A_v(t)|
    """
    if t <= 0:
        raise ModelError("t must be positive")
    if M.h is None:
        raise ModelError("determinant identity needs an asymptotically harmonic model")
    if limits is None:
        limits = asymptotic_tensors(M, p, v)
    m = M.m
    nodes, weights = gauss_panels(t)
    grid = np.union1d(nodes, [t])
    Phi = propagator(M, p, v, grid)
    Pt = Phi[-1]
    A_t = Pt[:m, m:]
    Sp = _s_prime_from_phi(Pt)
    eht = math.exp(M.h * t)
    r1 = abs(np.linalg.det(A_t) * np.linalg.det(limits.U - Sp) - eht) / eht

    Uv = Phi[:, :m, :m] + Phi[:, :m, m:] @ limits.U
    integral = np.zeros((m, m))
    for k, s in enumerate(nodes):
        i = np.searchsorted(grid, s)
        Us = Uv[i]
        integral += weights[k] * np.linalg.inv(Us.T @ Us)
    U_t = Uv[-1]
    if np.linalg.svd(U_t, compute_uv=False)[-1] == 0.0:
        raise ModelViolation("U_v(t) is singular")
    r2 = np.linalg.norm(A_t - U_t @ integral, 2) / np.linalg.norm(A_t, 2)
    return float(r1), float(r2)


def det_limit_constant(M, p, v, t_values, limits=None):
    """Values of det(U(v) - S'_{v,t}(0)); nonincreasing in t, with limit det D(v)."""
    if limits is None:
        limits = asymptotic_tensors(M, p, v)
    Phi = propagator(M, p, v, np.asarray(t_values, dtype=float))
    return np.array([np.linalg.det(limits.U - _s_prime_from_phi(P)) for P in Phi])


def fit_divergence_constants(M, sample_size=16, seed=0, t_range=(1.0, 10.0), num=91,
                             radius=2.0, curvature_ratio=0.8):
    """Least-squares fit of log sigma_min(A_v(t)) = (rho/2) t + log a.

    The fit pools all sampled directions.  ``a2`` bounds the decay of the
    stable tensor, |S_v(t)| <= a2 exp(-rho t / 2).

    Raises
    ------
    NonExponentialGrowth
        If the growth rate over the second half of the range is below
        ``curvature_ratio`` times that of the first half, as for the
        logarithmic growth of log t in flat space.
    """
    rng = np.random.default_rng(seed)
    t = np.linspace(t_range[0], t_range[1], num)
    half = num // 2
    logs, logS = [], []
    for _ in range(int(sample_size)):
        p = M.random_point(rng, radius)
        v = M.random_unit(rng, p)
        Phi = propagator(M, p, v, t)
        m = M.m
        A = Phi[:, :m, m:]
        sig = np.linalg.svd(A, compute_uv=False)[:, -1]
        if np.any(sig <= 0):
            raise ModelViolation("A_v(t) is singular")
        ls = np.log(sig)
        s1 = np.polyfit(t[:half], ls[:half], 1)[0]
        s2 = np.polyfit(t[half:], ls[half:], 1)[0]
        if s1 <= 0 or s2 < curvature_ratio * s1:
            raise NonExponentialGrowth(
                f"log sigma_min(A) is not asymptotically linear (slopes {s1:.4g}, {s2:.4g})")
        logs.append(ls)
        try:
            lim = asymptotic_tensors(M, p, v)
        except ConvergenceError as exc:
            raise NonExponentialGrowth(str(exc)) from exc
        S = Phi[:, :m, :m] + A @ lim.S
        logS.append(np.log(np.linalg.norm(S, 2, axis=(1, 2))))
    L = np.concatenate(logs)
    T = np.tile(t, len(logs))
    slope, icpt = np.polyfit(T, L, 1)
    per = [np.polyfit(t, ls, 1)[0] for ls in logs]
    rho = 2.0 * slope
    a = math.exp(icpt)
    a2 = float(np.exp(np.max(np.concatenate(logS) + slope * T)))
    return DivergenceConstants(a=a, rho=rho, a2=a2, slope_spread=float(np.ptp(per)), samples=len(logs))
