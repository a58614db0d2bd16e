"""p-Laplace Dirichlet problems on planar convex rings.

The ring between an inner body I and an outer body K is meshed by a
structured radial-angular triangulation and the regularised p-Dirichlet
energy is minimised over continuous piecewise-linear functions with damped
Newton steps and continuation in the regularisation parameter.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from matplotlib.tri import LinearTriInterpolator, Triangulation
from scipy.interpolate import CubicSpline, RectBivariateSpline

from . import convex
from .convex import SupportFn, TWO_PI
from .errors import (
    InvalidProblem,
    LevelOutOfRange,
    MeshQualityFailure,
    NonConvergence,
    OffsetOutsideRing,
)

DELTA_STAGES = (1e-1, 1e-2, 1e-3)


@dataclass(frozen=True, eq=False)
class RingProblem:
    """Dirichlet problem u = 0 on the outer boundary, u = data on the inner one.

    ``inner_data`` is either a positive constant or an array of values at the
    M_angular inner boundary nodes (polar angles 2 pi i / M_angular).
    """

    outer: SupportFn
    inner: SupportFn
    p: float
    inner_data: float | np.ndarray = 1.0
    mesh: tuple[int, int] = (256, 128)
    reg_delta: float = 1e-6
    tol: float = 1e-10
    max_iter: int = 10_000

    def __post_init__(self):
        if not 2.0 <= self.p < 3.0:
            raise InvalidProblem(f"p must lie in [2, 3), got {self.p}")
        M_ang, M_rad = (int(m) for m in self.mesh)
        object.__setattr__(self, "mesh", (M_ang, M_rad))
        if M_ang < 8 or M_rad < 2:
            raise InvalidProblem(f"mesh {self.mesh} too coarse")
        data = self.inner_data
        if np.ndim(data) == 0:
            data = float(data)
        else:
            data = np.asarray(data, dtype=float).copy()
            if data.shape != (M_ang,):
                raise InvalidProblem(f"sampled inner data must have length {M_ang}")
            data.setflags(write=False)
        if np.any(np.asarray(data) <= 0):
            raise InvalidProblem("inner data must be positive")
        object.__setattr__(self, "inner_data", data)
        if convex.min_support(self.inner) <= 0:
            raise InvalidProblem("origin must be interior to the inner body")
        gap = convex.support_gap(self.outer, self.inner)
        margin = 1e-3 * convex.diam(self.outer)
        if gap < margin:
            raise InvalidProblem(f"inner body not strictly inside outer body (gap {gap:.3g} < {margin:.3g})")

    @property
    def constant_data(self) -> bool:
        return np.ndim(self.inner_data) == 0

    @property
    def eps0(self) -> float:
        return float(np.max(self.inner_data))

    def scaled(self, lam: float) -> "RingProblem":
        """Same problem with all lengths multiplied by lam and data unchanged."""
        return RingProblem(self.outer.scaled(lam), self.inner.scaled(lam), self.p, self.inner_data,
                           self.mesh, self.reg_delta, self.tol, self.max_iter)

    def with_(self, **kw) -> "RingProblem":
        args = dict(outer=self.outer, inner=self.inner, p=self.p, inner_data=self.inner_data,
                    mesh=self.mesh, reg_delta=self.reg_delta, tol=self.tol, max_iter=self.max_iter)
        args.update(kw)
        return RingProblem(**args)


# ------------------------------------------------------------------------ mesh

@dataclass(frozen=True, eq=False)
class Mesh:
    M_ang: int
    M_rad: int
    theta: np.ndarray
    s: np.ndarray
    rho_inner: np.ndarray
    rho_outer: np.ndarray
    nodes: np.ndarray
    triangles: np.ndarray
    area: np.ndarray
    grad_op: np.ndarray  # (E, 2, 3): element gradient from the three vertex values
    quality: float

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    def index(self, i, j):
        return np.asarray(j) * self.M_ang + np.asarray(i) % self.M_ang

    @property
    def inner_nodes(self) -> np.ndarray:
        return np.arange(self.M_ang)

    @property
    def outer_nodes(self) -> np.ndarray:
        return self.M_rad * self.M_ang + np.arange(self.M_ang)

    @property
    def h_mesh(self) -> float:
        """Largest radial element size."""
        return float(np.max(self.rho_outer - self.rho_inner) / self.M_rad)

    def polygon(self, side: str) -> np.ndarray:
        idx = self.outer_nodes if side == "outer" else self.inner_nodes
        return self.nodes[idx]


def build_mesh(prob: RingProblem) -> Mesh:
    """Structured triangulation of the ring along rays from the origin."""
    M_ang, M_rad = prob.mesh
    theta = np.arange(M_ang) * (TWO_PI / M_ang)
    s = np.linspace(0.0, 1.0, M_rad + 1)
    rI = convex.radial_from_support(prob.inner, theta)
    rK = convex.radial_from_support(prob.outer, theta)
    rad = rI[None, :] + s[:, None] * (rK - rI)[None, :]
    nodes = np.column_stack([(rad * np.cos(theta)).ravel(), (rad * np.sin(theta)).ravel()])

    i = np.arange(M_ang)
    j = np.arange(M_rad)
    I, J = np.meshgrid(i, j)
    a = J * M_ang + I
    b = J * M_ang + (I + 1) % M_ang
    c = b + M_ang
    d = a + M_ang
    tri = np.concatenate([np.stack([a, c, b], -1).reshape(-1, 3), np.stack([a, d, c], -1).reshape(-1, 3)])
    # interleave so the two halves of each quad are adjacent in memory
    tri = tri.reshape(2, -1, 3).transpose(1, 0, 2).reshape(-1, 3)

    P = nodes[tri]
    e1 = P[:, 1] - P[:, 0]
    e2 = P[:, 2] - P[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    area = 0.5 * det
    if np.any(area <= 0):
        raise MeshQualityFailure(f"{int(np.sum(area <= 0))} degenerate or inverted elements")
    # J = [e1 e2]; grad u = J^-T [u1 - u0, u2 - u0]
    inv = np.empty((tri.shape[0], 2, 2))
    inv[:, 0, 0] = e2[:, 1] / det
    inv[:, 0, 1] = -e2[:, 0] / det
    inv[:, 1, 0] = -e1[:, 1] / det
    inv[:, 1, 1] = e1[:, 0] / det
    D = np.array([[-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])
    grad_op = np.einsum("eba,bk->eak", inv, D)

    la = np.linalg.norm(P[:, 1] - P[:, 2], axis=1)
    lb = np.linalg.norm(P[:, 2] - P[:, 0], axis=1)
    lc = np.linalg.norm(P[:, 0] - P[:, 1], axis=1)
    inr = 2 * area / (la + lb + lc)
    circ = la * lb * lc / (4 * area)
    quality = float(np.min(inr / circ))
    if not quality > 1e-8:
        raise MeshQualityFailure(f"element quality {quality:.3e}")
    return Mesh(M_ang, M_rad, theta, s, rI, rK, nodes, tri, area, grad_op, quality)


# ---------------------------------------------------------------------- solver

class _Assembler:
    """Energy, gradient and Hessian of sum_e area_e (|grad u|^2 + delta^2)^(p/2)."""

    def __init__(self, mesh: Mesh, p: float, fixed: np.ndarray):
        self.mesh = mesh
        self.p = p
        tri = mesh.triangles
        N = mesh.n_nodes
        rows = np.repeat(tri, 3, axis=1).ravel()
        cols = np.tile(tri, (1, 3)).ravel()
        free = np.ones(N, dtype=bool)
        free[fixed] = False
        self.free = free
        keep = free[rows] & free[cols]
        self.keep = keep
        keys = np.concatenate([rows[keep] * N + cols[keep], fixed * N + fixed])
        uniq, inv = np.unique(keys, return_inverse=True)
        self.inv = inv
        self.n_keep = int(keep.sum())
        self.n_fixed = fixed.size
        r = uniq // N
        self.indices = (uniq % N).astype(np.int32)
        self.indptr = np.searchsorted(r, np.arange(N + 1)).astype(np.int32)
        self.N = N
        self.nnz = uniq.size

    def grads(self, u):
        return np.einsum("eak,ek->ea", self.mesh.grad_op, u[self.mesh.triangles])

    def energy(self, u, delta):
        g = self.grads(u)
        q = np.einsum("ea,ea->e", g, g) + delta**2
        return float(np.sum(self.mesh.area * q ** (self.p / 2)))

    def gradient_hessian(self, u, delta, hessian=True):
        m = self.mesh
        p = self.p
        g = self.grads(u)
        q = np.einsum("ea,ea->e", g, g) + delta**2
        w = m.area * p * q ** ((p - 2) / 2)
        Gt_g = np.einsum("eak,ea->ek", m.grad_op, g)
        grad = np.bincount(m.triangles.ravel(), weights=(w[:, None] * Gt_g).ravel(), minlength=self.N)
        if not hessian:
            return grad, None
        GtG = np.einsum("eak,eal->ekl", m.grad_op, m.grad_op)
        w2 = m.area * p * (p - 2) * q ** ((p - 4) / 2)
        local = w[:, None, None] * GtG + w2[:, None, None] * Gt_g[:, :, None] * Gt_g[:, None, :]
        vals = np.concatenate([local.ravel()[self.keep], np.ones(self.n_fixed)])
        data = np.bincount(self.inv, weights=vals, minlength=self.nnz)
        H = sp.csr_matrix((data, self.indices, self.indptr), shape=(self.N, self.N))
        return grad, H


@dataclass(eq=False)
class SolveStats:
    iterations: list = field(default_factory=list)
    grad_norm: float = float("nan")
    seconds: float = 0.0


class ScalarField:
    """Converged discrete solution with interpolation and level-set queries."""

    def __init__(self, problem: RingProblem, mesh: Mesh, u: np.ndarray, stats: SolveStats | None = None):
        self.problem = problem
        self.mesh = mesh
        u = np.asarray(u, dtype=float).copy()
        u.setflags(write=False)
        self.u = u
        self.stats = stats or SolveStats()

    @property
    def p(self) -> float:
        return self.problem.p

    @property
    def h_mesh(self) -> float:
        return self.mesh.h_mesh

    def values_grid(self) -> np.ndarray:
        """Nodal values as a (M_rad + 1, M_ang) array; row 0 is the inner boundary."""
        return self.u.reshape(self.mesh.M_rad + 1, self.mesh.M_ang)

    @cached_property
    def element_gradients(self) -> np.ndarray:
        return np.einsum("eak,ek->ea", self.mesh.grad_op, self.u[self.mesh.triangles])

    @cached_property
    def recovered_gradients(self) -> np.ndarray:
        """Nodal gradients by area-weighted averaging of element gradients."""
        m = self.mesh
        t = m.triangles.ravel()
        wa = np.repeat(m.area, 3)
        den = np.bincount(t, weights=wa, minlength=m.n_nodes)
        g = self.element_gradients
        gx = np.bincount(t, weights=np.repeat(m.area * g[:, 0], 3), minlength=m.n_nodes) / den
        gy = np.bincount(t, weights=np.repeat(m.area * g[:, 1], 3), minlength=m.n_nodes) / den
        return np.column_stack([gx, gy])

    @cached_property
    def min_element_gradient(self) -> float:
        return float(np.min(np.linalg.norm(self.element_gradients, axis=1)))

    @cached_property
    def _triangulation(self) -> Triangulation:
        return Triangulation(self.mesh.nodes[:, 0], self.mesh.nodes[:, 1], self.mesh.triangles)

    @cached_property
    def _finder(self):
        return self._triangulation.get_trifinder()

    @cached_property
    def _interp(self):
        return LinearTriInterpolator(self._triangulation, self.u, trifinder=self._finder)

    @cached_property
    def _interp_grad(self):
        g = self.recovered_gradients
        return (LinearTriInterpolator(self._triangulation, g[:, 0], trifinder=self._finder),
                LinearTriInterpolator(self._triangulation, g[:, 1], trifinder=self._finder))

    def __call__(self, points) -> np.ndarray:
        """Piecewise-linear interpolant; NaN outside the ring."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.ma.filled(self._interp(pts[:, 0], pts[:, 1]).astype(float), np.nan)

    def gradient(self, points, recovered: bool = True) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if recovered:
            gx, gy = self._interp_grad
            return np.column_stack([np.ma.filled(gx(pts[:, 0], pts[:, 1]).astype(float), np.nan),
                                    np.ma.filled(gy(pts[:, 0], pts[:, 1]).astype(float), np.nan)])
        e = self._finder(pts[:, 0], pts[:, 1])
        out = np.full((pts.shape[0], 2), np.nan)
        ok = e >= 0
        out[ok] = self.element_gradients[e[ok]]
        return out

    @cached_property
    def _polar_spline(self):
        m = self.mesh
        pad = 3
        U = self.values_grid()
        Up = np.concatenate([U[:, -pad:], U, U[:, :pad]], axis=1)
        dth = TWO_PI / m.M_ang
        th = np.arange(-pad, m.M_ang + pad) * dth
        return RectBivariateSpline(m.s, th, Up, kx=3, ky=3)

    def polar_eval(self, points) -> np.ndarray:
        """Bicubic interpolant in the (angle, radial fraction) grid coordinates; NaN outside."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        phi = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), TWO_PI)
        r = np.hypot(pts[:, 0], pts[:, 1])
        rI = convex.radial_from_support(self.problem.inner, phi)
        rK = convex.radial_from_support(self.problem.outer, phi)
        s = (r - rI) / (rK - rI)
        out = np.full(pts.shape[0], np.nan)
        ok = (s >= 0) & (s <= 1)
        out[ok] = self._polar_spline.ev(s[ok], phi[ok])
        return out

    def comparison_violations(self) -> int:
        """Nodes with u outside [0, max inner data]; zero tolerance."""
        return int(np.sum((self.u < 0) | (self.u > self.problem.eps0)))

    def radial_monotone(self) -> bool:
        return bool(np.all(np.diff(self.values_grid(), axis=0) <= 0))


def initial_guess(prob: RingProblem, mesh: Mesh) -> np.ndarray:
    data = np.broadcast_to(np.asarray(prob.inner_data, dtype=float), (mesh.M_ang,))
    return ((1.0 - mesh.s)[:, None] * data[None, :]).ravel()


def solve(prob: RingProblem, mesh: Mesh | None = None, u0: np.ndarray | None = None) -> ScalarField:
    """Minimise the discrete regularised p-Dirichlet energy.

    Stages run at delta = 1e-1, 1e-2, 1e-3 and finally ``reg_delta``, each
    warm-started from the previous one. A stage ends once the max-norm of
    the energy gradient over free nodes is at most ``tol``.
    """
    t_start = time.perf_counter()
    mesh = mesh or build_mesh(prob)
    u = initial_guess(prob, mesh) if u0 is None else np.array(u0, dtype=float)
    fixed = np.concatenate([mesh.inner_nodes, mesh.outer_nodes])
    u[mesh.outer_nodes] = 0.0
    u[mesh.inner_nodes] = np.broadcast_to(prob.inner_data, (mesh.M_ang,))
    asm = _Assembler(mesh, prob.p, fixed)
    free = asm.free
    stages = [d for d in DELTA_STAGES if d > prob.reg_delta] + [prob.reg_delta]
    stats = SolveStats()
    gn = np.inf
    for stage, delta in enumerate(stages):
        it = 0
        while True:
            grad, H = asm.gradient_hessian(u, delta)
            grad[~free] = 0.0
            gn = float(np.max(np.abs(grad)))
            if gn <= prob.tol:
                break
            if it >= prob.max_iter:
                raise NonConvergence(stage, it, gn)
            du = spla.spsolve(H.tocsc(), -grad)
            du[~free] = 0.0
            slope = float(grad @ du)
            e0 = asm.energy(u, delta)
            alpha = 1.0
            if -slope > 1e-13 * abs(e0):
                while alpha > 1e-10:
                    if asm.energy(u + alpha * du, delta) <= e0 + 1e-4 * alpha * slope:
                        break
                    alpha *= 0.5
            u = u + alpha * du
            it += 1
        stats.iterations.append(it)
    stats.grad_norm = gn
    stats.seconds = time.perf_counter() - t_start
    return ScalarField(prob, mesh, u, stats)


# ------------------------------------------------------------ boundary gradient

@dataclass(frozen=True, eq=False)
class BoundaryGradient:
    theta: np.ndarray
    points: np.ndarray
    grad: np.ndarray
    grad_element: np.ndarray
    grad_h: np.ndarray
    grad_2h: np.ndarray


def _polygon_foot(mesh: Mesh, points, normals, side: str):
    """Move points along their normals onto the mesh boundary polygon."""
    poly = mesh.polygon(side)
    M = mesh.M_ang
    phi = np.arctan2(points[:, 1], points[:, 0]) % TWO_PI
    base = np.floor(phi / (TWO_PI / M)).astype(int)
    out = points.copy()
    done = np.zeros(points.shape[0], dtype=bool)
    for shift in (0, -1, 1, -2, 2):
        i = (base + shift) % M
        P0 = poly[i]
        e = poly[(i + 1) % M] - P0
        rhs = points - P0
        # tau * e + sigma * nu = rhs
        det = e[:, 0] * normals[:, 1] - e[:, 1] * normals[:, 0]
        tau = (rhs[:, 0] * normals[:, 1] - rhs[:, 1] * normals[:, 0]) / det
        sigma = (e[:, 0] * rhs[:, 1] - e[:, 1] * rhs[:, 0]) / det
        ok = (~done) & (tau >= -1e-12) & (tau <= 1 + 1e-12)
        out[ok] = points[ok] - sigma[ok, None] * normals[ok]
        done |= ok
    return out


def offset_gradient(field: ScalarField, points, normals, side: str = "outer", foot: bool = True):
    """Inward-offset ratio estimates of |grad u| at boundary points.

    Returns (richardson, q(h), q(2h), element) where q(d) = u(x - d nu)/d on
    the outer side and (eps0 - u(x + d nu))/d on the inner side.
    """
    points = np.atleast_2d(points)
    normals = np.atleast_2d(normals)
    base = _polygon_foot(field.mesh, points, normals, side) if foot else points
    h = field.h_mesh
    if side == "outer":
        inward = -normals
        ref = 0.0
        sign = 1.0
    else:
        if not field.problem.constant_data:
            raise ValueError("inner offset ratio requires constant inner data")
        inward = normals
        ref = field.problem.eps0
        sign = -1.0
    q = []
    for d in (h, 2 * h):
        vals = field(base + d * inward)
        if np.any(~np.isfinite(vals)):
            raise OffsetOutsideRing(f"offset {d:.3g} leaves the ring at {int(np.sum(~np.isfinite(vals)))} samples")
        q.append(sign * (vals - ref) / d)
    qh, q2h = q
    elem = np.linalg.norm(field.gradient(base + 0.25 * h * inward, recovered=False), axis=1)
    return 2 * qh - q2h, qh, q2h, elem


def boundary_gradient(field: ScalarField, side: str = "outer", M: int | None = None) -> BoundaryGradient:
    """|grad u| at the Gauss-parameterised boundary samples F(theta_j)."""
    M = M or field.mesh.M_ang
    body = field.problem.outer if side == "outer" else field.problem.inner
    gp = convex.gauss_param(body, M)
    rich, qh, q2h, elem = offset_gradient(field, gp.positions, gp.normals, side)
    return BoundaryGradient(gp.theta, gp.positions, rich, elem, qh, q2h)


# ------------------------------------------------------------------ level sets

@dataclass(frozen=True, eq=False)
class LevelCurve:
    level: float
    phi: np.ndarray
    radii: np.ndarray

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.radii * np.cos(self.phi), self.radii * np.sin(self.phi)])

    def segments(self):
        P = self.points
        Q = np.roll(P, -1, axis=0)
        return P, Q


def level_set(field: ScalarField, s: float, method: str = "linear") -> LevelCurve:
    """Crossings of {u = s} along the radial grid lines, ordered by angle.

    ``method='cubic'`` replaces the linear crossing by the root of a cubic
    spline through the nodal values along each ray.
    """
    if not 0 < s < field.problem.eps0:
        raise LevelOutOfRange(f"level {s} outside (0, {field.problem.eps0})")
    m = field.mesh
    U = field.values_grid()
    above = U >= s
    # outermost node on each ray still at or above the level
    j = m.M_rad - np.argmax(above[::-1], axis=0)
    j = np.clip(j, 0, m.M_rad - 1)
    cols = np.arange(m.M_ang)
    u0 = U[j, cols]
    u1 = U[j + 1, cols]
    frac = (u0 - s) / (u0 - u1)
    ds = m.s[1] - m.s[0]
    if method == "cubic":
        spl = CubicSpline(m.s, U, axis=0)
        c = spl.c[:, j, cols]  # (4, M_ang)
        x = frac * ds
        for _ in range(30):
            f = ((c[0] * x + c[1]) * x + c[2]) * x + c[3] - s
            df = (3 * c[0] * x + 2 * c[1]) * x + c[2]
            x = np.clip(x - f / df, 0.0, ds)
        frac = x / ds
    elif method != "linear":
        raise ValueError(f"unknown method {method!r}")
    sv = m.s[j] + frac * ds
    radii = m.rho_inner + sv * (m.rho_outer - m.rho_inner)
    return LevelCurve(float(s), m.theta.copy(), radii)


def convexity_defect(points) -> float:
    """Largest clockwise turn (as sine of the turning angle) along a closed polyline."""
    P = np.asarray(points, dtype=float)
    e1 = P - np.roll(P, 1, axis=0)
    e2 = np.roll(P, -1, axis=0) - P
    cr = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    sn = cr / (np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1))
    return float(max(0.0, -np.min(sn)))


def level_support(field: ScalarField, t: float, M: int | None = None, Kmax: int = 32,
                  method: str = "cubic") -> SupportFn:
    """Smooth support function of the superlevel set {u > t} (t = 0 is the outer body)."""
    M = M or field.mesh.M_ang
    if t == 0:
        radii = field.mesh.rho_outer
    else:
        radii = level_set(field, t, method=method).radii
    return convex.support_of_star_curve(radii, M=M, Kmax=Kmax).smooth


@dataclass(frozen=True)
class RestartReport:
    t: float
    discrepancy: float
    n_nodes: int


def sublevel_restart_check(field: ScalarField, t: float, Kmax: int = 32) -> RestartReport:
    """Compare a fresh solve on {u > t} with the rescaled restriction (u - t)/(1 - t/eps0)."""
    prob = field.problem
    if not prob.constant_data:
        raise ValueError("restart check needs constant inner data")
    eps0 = prob.eps0
    if not 0 <= t < eps0 / 2:
        raise LevelOutOfRange(f"t={t} outside [0, eps0/2)")
    if t == 0:
        return RestartReport(0.0, 0.0, field.mesh.n_nodes)
    outer_t = level_support(field, t, Kmax=Kmax)
    fresh = solve(prob.with_(outer=outer_t))
    interior = np.arange(fresh.mesh.M_ang, fresh.mesh.outer_nodes[0])
    pts = fresh.mesh.nodes[interior]
    expected = (field(pts) - t) / (1 - t / eps0)
    diff = np.abs(fresh.u[interior] - expected)
    return RestartReport(float(t), float(np.nanmax(diff)), int(np.sum(np.isfinite(diff))))


# ------------------------------------------------- near-boundary behaviour

@dataclass(frozen=True)
class DecayReport:
    """Largest value of dist(x, dK) / (s max(1/|grad u|)) over level points."""

    worst_ratio: float
    n_points: int
    slack: float = 0.05

    @property
    def violations(self) -> int:
        return int(self.worst_ratio > 1 + self.slack)


def decay_check(field: ScalarField, s_list, slack: float = 0.05) -> DecayReport:
    """Distance of each level-set vertex from the outer boundary against the linear decay bound."""
    inv_grad = 1.0 / float(np.min(boundary_gradient(field).grad))
    worst, n = 0.0, 0
    for s in s_list:
        pts = level_set(field, float(s)).points
        d, _, _ = convex.dist_and_project(field.problem.outer, pts)
        worst = max(worst, float(np.max(d / (s * inv_grad))))
        n += pts.shape[0]
    return DecayReport(worst, n, slack)


@dataclass(frozen=True)
class HarnackWindow:
    lo: float
    hi: float
    n_points: int

    @property
    def constant(self) -> float:
        """Smallest L with the ratio inside [1/L, L]."""
        return max(self.hi, 1.0 / self.lo)


def harnack_window(field: ScalarField, s_list) -> HarnackWindow:
    """Range of |grad u| dist(x, dK) / u(x) over the given level sets."""
    lo, hi, n = np.inf, 0.0, 0
    for s in s_list:
        pts = level_set(field, float(s)).points
        d, _, _ = convex.dist_and_project(field.problem.outer, pts)
        g = np.linalg.norm(field.gradient(pts), axis=1)
        ratio = g * d / s
        ratio = ratio[np.isfinite(ratio)]
        lo, hi, n = min(lo, ratio.min()), max(hi, ratio.max()), n + ratio.size
    return HarnackWindow(float(lo), float(hi), n)
