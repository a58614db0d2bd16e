"""Support functions of the superlevel-set family and the identities they satisfy.

For a solution u on a convex ring the sets {u > t} are convex; their support
functions h(theta, t) form a two-parameter table. Its t-derivatives encode
|grad u| on the level sets, and the p-Laplacian can be rewritten purely in
terms of h, its angular second derivative and its t-derivatives. Supremal
convolutions combine two such tables linearly, row by row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.stats import qmc

from . import convex
from .convex import TWO_PI, trig_eval
from .errors import GridMismatch, SingularLevel
from .ring import RingProblem, ScalarField, level_support


def _fd_t(C, dt):
    """First t-derivative: central differences, second-order one-sided at the ends."""
    D = np.empty_like(C)
    D[1:-1] = (C[2:] - C[:-2]) / (2 * dt)
    D[0] = (-3 * C[0] + 4 * C[1] - C[2]) / (2 * dt)
    D[-1] = (3 * C[-1] - 4 * C[-2] + C[-3]) / (2 * dt)
    return D


def _fd_tt(C, dt):
    D = np.empty_like(C)
    D[1:-1] = (C[2:] - 2 * C[1:-1] + C[:-2]) / dt**2
    D[0] = (2 * C[0] - 5 * C[1] + 4 * C[2] - C[3]) / dt**2
    D[-1] = (2 * C[-1] - 5 * C[-2] + 4 * C[-3] - C[-4]) / dt**2
    return D


def _eval_rows(C, theta, order=0):
    """Evaluate coefficient rows (N, 1 + 2K) at angles, giving an (N, M) grid."""
    K = (C.shape[1] - 1) // 2
    k = np.arange(1, K + 1, dtype=float)
    ph = np.multiply.outer(theta, k) + order * np.pi / 2
    out = (np.cos(ph) @ (C[:, 1:K + 1] * k**order).T + np.sin(ph) @ (C[:, K + 1:] * k**order).T).T
    if order == 0:
        out = out + C[:, :1]
    return out


@dataclass(frozen=True, eq=False)
class SupportCoordTable:
    """h(theta_i, t_k) with partial derivatives on the same grid.

    Rows are trigonometric series (coefficient layout c0, a_1..a_K, b_1..b_K);
    grids have shape (len(t), len(theta)).
    """

    theta: np.ndarray
    t: np.ndarray
    coef: np.ndarray
    eps0: float
    inner: convex.SupportFn | None = None

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def Kmax(self) -> int:
        return (self.coef.shape[1] - 1) // 2

    @property
    def coef_t(self):
        return _fd_t(self.coef, self.dt)

    @property
    def coef_tt(self):
        return _fd_tt(self.coef, self.dt)

    @property
    def h(self):
        return _eval_rows(self.coef, self.theta)

    @property
    def h_thth(self):
        return _eval_rows(self.coef, self.theta, 2)

    @property
    def h_th(self):
        return _eval_rows(self.coef, self.theta, 1)

    @property
    def h_t(self):
        return _eval_rows(self.coef_t, self.theta)

    @property
    def h_tt(self):
        return _eval_rows(self.coef_tt, self.theta)

    @property
    def h_tht(self):
        return _eval_rows(self.coef_t, self.theta, 1)

    def row(self, k: int) -> convex.SupportFn:
        K = self.Kmax
        c = self.coef[k]
        return convex.SupportFn(c[0], c[1:K + 1], c[K + 1:], validate=False)

    def same_grid(self, other: "SupportCoordTable") -> bool:
        return (self.theta.shape == other.theta.shape and self.t.shape == other.t.shape
                and np.allclose(self.theta, other.theta) and np.allclose(self.t, other.t)
                and self.coef.shape == other.coef.shape and np.isclose(self.eps0, other.eps0))

    def _spline(self):
        return CubicSpline(self.t, self.coef, axis=0)

    def support_at(self, theta, t, order: int = 0):
        """h(theta, t) at scattered points, cubic in t and exact in theta."""
        theta = np.asarray(theta, dtype=float)
        C = self._spline()(np.asarray(t, dtype=float))
        K = self.Kmax
        k = np.arange(1, K + 1, dtype=float)
        ph = theta[:, None] * k[None, :] + order * np.pi / 2
        out = np.sum(np.cos(ph) * C[:, 1:K + 1] * k**order + np.sin(ph) * C[:, K + 1:] * k**order, axis=1)
        return out + (C[:, 0] if order == 0 else 0.0)

    def points(self):
        """F(theta_i, t_k) = h omega + h_theta omega_perp, shape (N, M, 2)."""
        c, s = np.cos(self.theta), np.sin(self.theta)
        h, ht = self.h, self.h_th
        return np.stack([h * c - ht * s, h * s + ht * c], axis=-1)

    def lincomb(self, other: "SupportCoordTable", lam: float) -> "SupportCoordTable":
        return SupportCoordTable(self.theta, self.t, (1 - lam) * self.coef + lam * other.coef, self.eps0, self.inner)

    def monotone_in_t(self) -> bool:
        return bool(np.all(np.diff(self.h, axis=0) < 0))


def default_t_grid(eps0: float, n: int = 32) -> np.ndarray:
    return np.linspace(0.0, 0.5 * eps0, n)


def build_table(prob: RingProblem, field: ScalarField, t_grid=None, theta_grid=None,
                Kmax: int = 32, method: str = "cubic") -> SupportCoordTable:
    """Support-encode the level sets {u > t_k} as trigonometric series."""
    eps0 = prob.eps0
    t_grid = default_t_grid(eps0) if t_grid is None else np.asarray(t_grid, dtype=float)
    if t_grid.size < 4 or not np.allclose(np.diff(t_grid), t_grid[1] - t_grid[0]):
        raise ValueError("t_grid must be uniform with at least 4 levels")
    if t_grid[0] < 0 or t_grid[-1] >= eps0:
        raise ValueError("t_grid must lie in [0, eps0)")
    M = field.mesh.M_ang if theta_grid is None else np.size(theta_grid)
    theta = np.arange(M) * (TWO_PI / M)
    if theta_grid is not None and not np.allclose(theta_grid, theta):
        raise ValueError("theta_grid must be equispaced starting at 0")
    K = min(Kmax, (M - 1) // 2)
    coef = np.empty((t_grid.size, 1 + 2 * K))
    for n, tk in enumerate(t_grid):
        row = level_support(field, float(tk), M=M, Kmax=K, method=method)
        a, b = row.padded(K)
        coef[n] = np.concatenate([[row.c0], a, b])
    return SupportCoordTable(theta, t_grid, coef, eps0, prob.inner)


# ---------------------------------------------------------------- identities

@dataclass(frozen=True)
class IdentityReport:
    support: float   # |h(nu, u(x)) - <x, nu>|
    gradient: float  # distance of F(theta, t) from the level {u = t}
    speed: float     # |h_t + 1/|grad u||
    n_probe: int


def _ring_probes(field: ScalarField, n: int, seed: int, t_max: float):
    """Quasi-random points of the ring with 0 < u < t_max."""
    m = field.mesh
    out = []
    sob = qmc.Sobol(2, scramble=True, seed=seed)
    while sum(len(o) for o in out) < n:
        z = sob.random(4096)
        phi = z[:, 0] * TWO_PI
        rI = convex.radial_from_support(field.problem.inner, phi)
        rK = convex.radial_from_support(field.problem.outer, phi)
        r = rI + z[:, 1] * (rK - rI)
        pts = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
        u = field(pts)
        ok = np.isfinite(u) & (u > 0) & (u < t_max)
        out.append(pts[ok])
    return np.concatenate(out)[:n]


def ids1_check(table: SupportCoordTable, field: ScalarField, n_probe: int = 2000, seed: int = 0) -> IdentityReport:
    """Sup norms of the three level-set identities for the support table."""
    t_max = table.t[-1]
    pts = _ring_probes(field, n_probe, seed, t_max)
    u = field(pts)
    g = field.gradient(pts)
    nu = -g / np.linalg.norm(g, axis=1, keepdims=True)
    ang = np.arctan2(nu[:, 1], nu[:, 0])
    r1 = np.abs(table.support_at(ang, u) - np.sum(pts * nu, axis=1))

    F = table.points().reshape(-1, 2)
    tk = np.repeat(table.t, table.theta.size)
    uF = field(F)
    gF = np.linalg.norm(field.gradient(F), axis=1)
    r2 = np.abs(uF - tk) / gF
    r3 = np.abs(table.h_t.ravel() + 1.0 / gF)
    return IdentityReport(float(np.nanmax(r1)), float(np.nanmax(r2)), float(np.nanmax(r3)), int(pts.shape[0]))


@dataclass(frozen=True, eq=False)
class PlaphuResult:
    bracket: np.ndarray
    minus_plap: np.ndarray
    scale: float

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.bracket)))

    def interior(self) -> np.ndarray:
        return self.bracket[1:-1]


def plaphu_residual(table: SupportCoordTable, p: float) -> PlaphuResult:
    """Bracket B of the p-Laplacian in support coordinates and -Delta_p u = B (-h_t)^-(p-1)."""
    ht = table.h_t
    if np.any(np.abs(ht) < 1e-8):
        raise SingularLevel("h_t vanishes on the table")
    rad = table.h_thth + table.h
    B = 1.0 / rad + (p - 1) / ht**2 * (table.h_tht**2 / rad - table.h_tt)
    with np.errstate(invalid="ignore"):
        lap = B * (-ht) ** (-(p - 1))
    return PlaphuResult(B, lap, float(np.max(np.abs(1.0 / rad))))


# ---------------------------------------------------------- supremal convolution

@dataclass(frozen=True, eq=False)
class SupConvField:
    lam: float
    table: SupportCoordTable

    def gauge(self, points) -> np.ndarray:
        """max_i <x, xi_i> - h*(theta_i, t_k) for every probe and level, shape (n, N)."""
        pts = np.atleast_2d(points)
        xi = np.column_stack([np.cos(self.table.theta), np.sin(self.table.theta)])
        H = self.table.h
        out = np.empty((pts.shape[0], H.shape[0]))
        for a in range(0, pts.shape[0], 512):
            proj = pts[a:a + 512] @ xi.T
            out[a:a + 512] = np.max(proj[:, None, :] - H[None, :, :], axis=2)
        return out

    def __call__(self, points) -> np.ndarray:
        """u*(x): the largest level whose combined set contains x, linear between levels.

        Zero outside the t = 0 set and NaN beyond the last tabulated level.
        """
        g = self.gauge(points)
        t = self.table.t
        inside = g <= 0
        k = np.where(inside.any(axis=1), inside.shape[1] - 1 - np.argmax(inside[:, ::-1], axis=1), -1)
        out = np.zeros(g.shape[0])
        top = k == g.shape[1] - 1
        mid = (k >= 0) & ~top
        ii = np.nonzero(mid)[0]
        g0 = g[ii, k[ii]]
        g1 = g[ii, k[ii] + 1]
        out[ii] = t[k[ii]] + (t[k[ii] + 1] - t[k[ii]]) * (-g0) / (g1 - g0)
        out[top] = np.nan
        return out


def supremal_convolution(t1: SupportCoordTable, t2: SupportCoordTable, lam: float) -> SupConvField:
    if not t1.same_grid(t2):
        raise GridMismatch("tables must share theta and t grids and eps0")
    if t1.inner is not None and t2.inner is not None and not t1.inner.allclose(t2.inner):
        raise GridMismatch("tables come from different inner bodies")
    if not 0 <= lam <= 1:
        raise ValueError("lambda must lie in [0, 1]")
    return SupConvField(float(lam), t1.lincomb(t2, lam))


@dataclass(frozen=True)
class CompareReport:
    max_violation: float
    tol_discrete: float
    n_probe: int

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tol_discrete


def subsolution_compare(sc: SupConvField, field: ScalarField, n_probe: int = 10_000, seed: int = 0) -> CompareReport:
    """max(u* - u_K) over quasi-random ring points where u* is resolved."""
    pts = []
    sob = qmc.Sobol(2, scramble=True, seed=seed)
    while sum(len(x) for x in pts) < n_probe:
        z = sob.random(8192)
        phi = z[:, 0] * TWO_PI
        rI = convex.radial_from_support(field.problem.inner, phi)
        rK = convex.radial_from_support(field.problem.outer, phi)
        r = rI + z[:, 1] * (rK - rI)
        P = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
        ustar = sc(P)
        ok = np.isfinite(ustar) & np.isfinite(field(P))
        pts.append(P[ok])
    P = np.concatenate(pts)[:n_probe]
    diff = sc(P) - field(P)
    tol = 5 * max(field.h_mesh, sc.table.dt)
    return CompareReport(float(np.max(diff)), float(tol), int(P.shape[0]))


@dataclass(frozen=True)
class SignReport:
    max_bracket: float
    tol: float
    scale: float

    @property
    def passed(self) -> bool:
        return self.max_bracket <= self.tol


def subsolution_sign_check(sc: SupConvField, p: float, rel_tol: float = 5e-2) -> SignReport:
    """Largest bracket B* over interior levels; a subsolution has B* <= 0."""
    res = plaphu_residual(sc.table, p)
    mx = float(np.max(res.interior()))
    return SignReport(mx, rel_tol * res.scale, res.scale)


# -------------------------------------------------- matrix convexity inequalities

def matrix_fractional(M, z):
    """<M^-1 z, z> for SPD M (batched over leading axes)."""
    return np.einsum("...i,...i->...", np.linalg.solve(M, z[..., None])[..., 0], z)


def trace_inverse_weighted(M, t):
    """t^2 trace(M^-1)."""
    return np.asarray(t) ** 2 * np.trace(np.linalg.inv(M), axis1=-2, axis2=-1)


def cstech_gaps(M1, M2, z1, z2, t1, t2, lam):
    """Right-hand minus left-hand sides of both convexity inequalities (>= 0 when they hold)."""
    Ml = (1 - lam) * M1 + lam * M2
    zl = (1 - lam) * z1 + lam * z2
    tl = (1 - lam) * t1 + lam * t2
    g1 = (1 - lam) * matrix_fractional(M1, z1) + lam * matrix_fractional(M2, z2) - matrix_fractional(Ml, zl)
    g2 = (1 - lam) * trace_inverse_weighted(M1, t1) + lam * trace_inverse_weighted(M2, t2) \
        - trace_inverse_weighted(Ml, tl)
    return g1, g2


def random_spd(rng, n, cond_max=1e3):
    A = rng.normal(size=(n, 2, 2))
    Q, _ = np.linalg.qr(A)
    ev = np.exp(rng.uniform(0, np.log(cond_max), size=(n, 2))) * rng.uniform(0.1, 10, size=(n, 1))
    return np.einsum("nij,nj,nkj->nik", Q, ev, Q)
