"""Planar convex bodies encoded by truncated Fourier support functions.

A body is stored through its support function

    h(theta) = c0 + sum_k (a_k cos(k theta) + b_k sin(k theta)),

so derivatives are exact, Minkowski combination is coefficientwise and the
curvature radius of the boundary at normal angle theta is h'' + h.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np

from .errors import (
    CurvatureFloorViolation,
    DegenerateSet,
    GenerationFailed,
    NotInterior,
    OriginNotInterior,
)

N_COARSE = 4096
N_BISECT = 60
TWO_PI = 2.0 * np.pi
_GRID = np.arange(N_COARSE) * (TWO_PI / N_COARSE)
_STEP = TWO_PI / N_COARSE


def trig_eval(c0, a, b, theta, order=0):
    """Evaluate a trigonometric series or one of its derivatives.

    Broadcasts over ``theta``; ``a`` and ``b`` hold the k = 1..K coefficients.
    """
    theta = np.asarray(theta, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    base = np.full(theta.shape, float(c0) if order == 0 else 0.0)
    if a.size == 0:
        return base
    k = np.arange(1, a.size + 1, dtype=float)
    phase = np.multiply.outer(theta, k) + order * np.pi / 2
    scale = k**order
    return base + np.cos(phase) @ (a * scale) + np.sin(phase) @ (b * scale)


def _bisect(df, lo, hi):
    """Vectorised bisection for a root of an increasing function on [lo, hi]."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(N_BISECT):
        mid = 0.5 * (lo + hi)
        pos = df(mid) > 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
    return 0.5 * (lo + hi)


@dataclass(frozen=True, eq=False)
class SupportFn:
    """Support function of a planar convex body as a truncated Fourier series.

    Parameters
    ----------
    c0 : float
        Mean value of h (half the mean width).
    a, b : array_like
        Cosine and sine coefficients for k = 1..Kmax.
    kappa_floor : float, optional
        Smallest admissible curvature radius h'' + h. Defaults to 0.05 * c0.
    validate : bool
        Check the curvature floor at construction. Only degenerate helper
        bodies (the origin) skip this.
    """

    c0: float
    a: np.ndarray
    b: np.ndarray
    kappa_floor: float | None = None
    validate: bool = True

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float)).copy()
        b = np.atleast_1d(np.asarray(self.b, dtype=float)).copy()
        n = max(a.size, b.size)
        a = np.pad(a, (0, n - a.size))
        b = np.pad(b, (0, n - b.size))
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "c0", float(self.c0))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if self.kappa_floor is None:
            object.__setattr__(self, "kappa_floor", 0.05 * self.c0)
        if self.validate:
            if not self.kappa_floor > 0:
                raise CurvatureFloorViolation(f"kappa_floor must be positive, got {self.kappa_floor}")
            rmin, th = min_curvature_radius(self)
            if rmin < self.kappa_floor:
                raise CurvatureFloorViolation(
                    f"min curvature radius {rmin:.6g} at theta={th:.4f} < floor {self.kappa_floor:.6g}"
                )

    @property
    def Kmax(self) -> int:
        return int(self.a.size)

    @property
    def coefficients(self) -> np.ndarray:
        """Flat coefficient vector (c0, a1, b1, a2, b2, ...)."""
        out = np.empty(1 + 2 * self.Kmax)
        out[0] = self.c0
        out[1::2] = self.a
        out[2::2] = self.b
        return out

    @classmethod
    def from_coefficients(cls, coef, kappa_floor=None, validate=True) -> "SupportFn":
        coef = np.asarray(coef, dtype=float)
        if coef.size % 2 == 0:
            coef = np.append(coef, 0.0)
        return cls(coef[0], coef[1::2], coef[2::2], kappa_floor=kappa_floor, validate=validate)

    def __call__(self, theta, order=0):
        return trig_eval(self.c0, self.a, self.b, theta, order)

    def padded(self, K: int) -> tuple[np.ndarray, np.ndarray]:
        return np.pad(self.a, (0, K - self.Kmax)), np.pad(self.b, (0, K - self.Kmax))

    def allclose(self, other: "SupportFn", atol=1e-12) -> bool:
        K = max(self.Kmax, other.Kmax)
        a1, b1 = self.padded(K)
        a2, b2 = other.padded(K)
        return bool(
            abs(self.c0 - other.c0) <= atol and np.allclose(a1, a2, atol=atol) and np.allclose(b1, b2, atol=atol)
        )

    def is_zero(self) -> bool:
        return self.c0 == 0.0 and not np.any(self.a) and not np.any(self.b)

    def scaled(self, lam: float) -> "SupportFn":
        return SupportFn(lam * self.c0, lam * self.a, lam * self.b, kappa_floor=lam * self.kappa_floor,
                         validate=self.validate and lam > 0)


class BodyPoint(NamedTuple):
    position: np.ndarray
    normal_angle: float
    arc_weight: float


@dataclass(frozen=True, eq=False)
class GaussParam:
    """Boundary sampled at equispaced normal angles (arrays of length M)."""

    theta: np.ndarray
    positions: np.ndarray
    arc_weight: np.ndarray
    h: np.ndarray
    radius: np.ndarray

    def __len__(self):
        return self.theta.size

    def __iter__(self) -> Iterator[BodyPoint]:
        for x, th, w in zip(self.positions, self.theta, self.arc_weight):
            yield BodyPoint(x, float(th), float(w))

    @property
    def normals(self) -> np.ndarray:
        return np.column_stack([np.cos(self.theta), np.sin(self.theta)])

    @property
    def perimeter(self) -> float:
        return float(self.arc_weight.sum())


# ---------------------------------------------------------------- constructors

def disk(radius=1.0, center=(0.0, 0.0), kappa_floor=None) -> SupportFn:
    return SupportFn(radius, [center[0]], [center[1]], kappa_floor=kappa_floor)


def origin(Kmax=1) -> SupportFn:
    """The degenerate body {0}; only valid as a Minkowski summand."""
    return SupportFn(0.0, np.zeros(Kmax), np.zeros(Kmax), kappa_floor=0.0, validate=False)


def ellipse(semi_x=2.0, semi_y=1.0, angle=0.0, Kmax=64, kappa_floor=None) -> SupportFn:
    """Ellipse support function resolved to machine precision by FFT."""
    M = 4 * Kmax
    th = np.arange(M) * TWO_PI / M
    vals = np.sqrt((semi_x * np.cos(th - angle)) ** 2 + (semi_y * np.sin(th - angle)) ** 2)
    return fit_support(th, vals, Kmax, kappa_floor=kappa_floor, project=False)


def square_support(theta, half_side=1.0):
    """Exact support function of the square [-s, s]^2 (not smooth)."""
    theta = np.asarray(theta, dtype=float)
    return half_side * (np.abs(np.cos(theta)) + np.abs(np.sin(theta)))


def fourier(c0, a=(), b=(), kappa_floor=None) -> SupportFn:
    return SupportFn(c0, a, b, kappa_floor=kappa_floor)


# ------------------------------------------------------------------ evaluation

def evaluate(h: SupportFn, theta, order: int = 0):
    """h, h' or h'' at ``theta``, exactly from the coefficients."""
    if order not in (0, 1, 2, 3):
        raise ValueError("order must be 0, 1, 2 or 3")
    return h(theta, order)


def curvature_radius(h: SupportFn, theta):
    return h(theta, 2) + h(theta)


def _refined_extremum(c0, a, b, order, sign):
    """Extremum of sign * d^order(series) over the circle; returns (value, angle)."""
    vals = sign * trig_eval(c0, a, b, _GRID, order)
    k = int(np.argmin(vals))
    th = _bisect(lambda t: sign * trig_eval(c0, a, b, t, order + 1), _GRID[k] - _STEP, _GRID[k] + _STEP)
    v_ref = sign * trig_eval(c0, a, b, th, order)
    if v_ref <= vals[k]:
        return float(sign * v_ref), float(th % TWO_PI)
    return float(sign * vals[k]), float(_GRID[k])


def min_curvature_radius(h: SupportFn) -> tuple[float, float]:
    """Minimum of h'' + h and the normal angle where it is attained."""
    # h'' + h has coefficients (1 - k^2) a_k, (1 - k^2) b_k
    k = np.arange(1, h.Kmax + 1, dtype=float)
    return _refined_extremum(h.c0, (1 - k**2) * h.a, (1 - k**2) * h.b, 0, 1.0)


def min_support(h: SupportFn) -> float:
    return _refined_extremum(h.c0, h.a, h.b, 0, 1.0)[0]


def support_gap(outer: SupportFn, inner: SupportFn) -> float:
    """min over theta of h_outer - h_inner; positive iff inner lies strictly inside outer."""
    c0, a, b = _combine_raw(outer, inner, 1.0, -1.0)
    return _refined_extremum(c0, a, b, 0, 1.0)[0]


def diam(h: SupportFn) -> float:
    """Diameter of the body, i.e. its maximal width h(theta) + h(theta + pi)."""
    k = np.arange(1, h.Kmax + 1)
    even = (k % 2 == 0).astype(float)
    return -_refined_extremum(-2 * h.c0, -2 * even * h.a, -2 * even * h.b, 0, 1.0)[0]


# ------------------------------------------------------------------ operations

def _combine_raw(h1: SupportFn, h2: SupportFn, alpha, beta):
    K = max(h1.Kmax, h2.Kmax)
    a1, b1 = h1.padded(K)
    a2, b2 = h2.padded(K)
    return alpha * h1.c0 + beta * h2.c0, alpha * a1 + beta * a2, alpha * b1 + beta * b2


def minkowski_combine(h1: SupportFn, h2: SupportFn, alpha: float, beta: float) -> SupportFn:
    """Support function of alpha*K1 + beta*K2 for alpha, beta >= 0."""
    if alpha < 0 or beta < 0 or alpha + beta <= 0:
        raise ValueError("need alpha, beta >= 0 with alpha + beta > 0")
    c0, a, b = _combine_raw(h1, h2, alpha, beta)
    floor = alpha * h1.kappa_floor + beta * h2.kappa_floor
    return SupportFn(c0, a, b, kappa_floor=floor, validate=floor > 0)


def support_combine(h1: SupportFn, h2: SupportFn, alpha: float, beta: float, kappa_floor=None) -> SupportFn:
    """Signed linear combination alpha*h1 + beta*h2, revalidated as a C2+ body.

    Needed for neighbourhood families with negative parameter, where the
    combination is a Minkowski difference.
    """
    c0, a, b = _combine_raw(h1, h2, alpha, beta)
    return SupportFn(c0, a, b, kappa_floor=kappa_floor)


def gauss_param(h: SupportFn, M: int) -> GaussParam:
    """Boundary points F(theta_j) = grad h at theta_j = 2 pi j / M."""
    if M < 16:
        raise ValueError("M must be at least 16")
    th = np.arange(M) * (TWO_PI / M)
    h0, h1, h2 = h(th), h(th, 1), h(th, 2)
    c, s = np.cos(th), np.sin(th)
    pos = np.column_stack([h0 * c - h1 * s, h0 * s + h1 * c])
    rad = h2 + h0
    return GaussParam(th, pos, rad * (TWO_PI / M), h0, rad)


def boundary_point(h: SupportFn, theta):
    """F(theta) for arbitrary normal angles, shape (..., 2)."""
    theta = np.asarray(theta, dtype=float)
    h0, h1 = h(theta), h(theta, 1)
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([h0 * c - h1 * s, h0 * s + h1 * c], axis=-1)


def _chunks(n, size):
    for i in range(0, n, size):
        yield slice(i, min(i + size, n))


def radial_from_support(h: SupportFn, phi, return_normal: bool = False):
    """Radial function rho(phi) of the body, for directions given by angle.

    rho(omega) = min over xi with <omega, xi> > 0 of h(xi) / <omega, xi>.
    With ``return_normal`` also returns the minimising normal angle, which is
    the outward normal of the boundary at rho(omega) * omega.
    """
    if min_support(h) <= 0:
        raise OriginNotInterior("support function is not positive; origin is not interior")
    phi_arr = np.atleast_1d(np.asarray(phi, dtype=float))
    rho = np.empty_like(phi_arr)
    psi = np.empty_like(phi_arr)
    H = h(_GRID)
    for sl in _chunks(phi_arr.size, 512):
        ph = phi_arr[sl]
        cosd = np.cos(_GRID[None, :] - ph[:, None])
        with np.errstate(divide="ignore"):
            ratio = np.where(cosd > 1e-9, H[None, :] / np.where(cosd > 1e-9, cosd, 1.0), np.inf)
        k = np.argmin(ratio, axis=1)

        def df(t, ph=ph):
            return h(t, 1) * np.cos(t - ph) + h(t) * np.sin(t - ph)

        t = _bisect(df, _GRID[k] - _STEP, _GRID[k] + _STEP)
        rho[sl] = h(t) / np.cos(t - ph)
        psi[sl] = t % TWO_PI
    if np.ndim(phi) == 0:
        rho, psi = float(rho[0]), float(psi[0])
    return (rho, psi) if return_normal else rho


def dist_and_project(h: SupportFn, x):
    """Distance from interior point(s) x to the boundary, the foot point and normal angle.

    dist = min over xi of h(xi) - <x, xi>, attained at xi*, and the nearest
    boundary point is x + dist * xi*.
    """
    x = np.asarray(x, dtype=float)
    pts = np.atleast_2d(x)
    n = pts.shape[0]
    dist = np.empty(n)
    ang = np.empty(n)
    H = h(_GRID)
    C, S = np.cos(_GRID), np.sin(_GRID)
    for sl in _chunks(n, 1024):
        px, py = pts[sl, 0], pts[sl, 1]
        vals = H[None, :] - px[:, None] * C[None, :] - py[:, None] * S[None, :]
        k = np.argmin(vals, axis=1)

        def df(t, px=px, py=py):
            return h(t, 1) + px * np.sin(t) - py * np.cos(t)

        t = _bisect(df, _GRID[k] - _STEP, _GRID[k] + _STEP)
        d_ref = h(t) - px * np.cos(t) - py * np.sin(t)
        coarse = vals[np.arange(k.size), k]
        better = d_ref <= coarse
        dist[sl] = np.where(better, d_ref, coarse)
        ang[sl] = np.where(better, t, _GRID[k]) % TWO_PI
    if np.any(dist <= 0):
        raise NotInterior(f"{int(np.sum(dist <= 0))} point(s) are not strictly interior")
    xi = np.column_stack([np.cos(ang), np.sin(ang)])
    foot = pts + dist[:, None] * xi
    if x.ndim == 1:
        return float(dist[0]), foot[0], float(ang[0])
    return dist, foot, ang


def hausdorff(h1: SupportFn, h2: SupportFn) -> float:
    """Hausdorff distance, i.e. the sup norm of h1 - h2."""
    c0, a, b = _combine_raw(h1, h2, 1.0, -1.0)
    vmax, _ = _refined_extremum(c0, a, b, 0, -1.0)
    vmin, _ = _refined_extremum(c0, a, b, 0, 1.0)
    return float(max(abs(vmax), abs(vmin)))


def random_body(seed: int, Kmax: int = 8, decay: float = 2.0, amplitude: float = 0.1,
                kappa_floor: float | None = None) -> SupportFn:
    """Seeded random C2+ perturbation of the unit disk.

    Modes k = 2..Kmax get coefficients uniform in +-amplitude * k^-decay;
    draws failing the curvature floor are rejected.
    """
    rng = np.random.default_rng(seed)
    floor = 0.05 if kappa_floor is None else kappa_floor
    k = np.arange(2, Kmax + 1, dtype=float)
    bound = amplitude * k ** (-decay)
    for _ in range(1000):
        a = np.concatenate([[0.0], rng.uniform(-bound, bound)])
        b = np.concatenate([[0.0], rng.uniform(-bound, bound)])
        try:
            return SupportFn(1.0, a, b, kappa_floor=floor)
        except CurvatureFloorViolation:
            continue
    raise GenerationFailed(f"no admissible body after 1000 draws (seed={seed}, amplitude={amplitude})")


# ------------------------------------------------------------------- sampling

@dataclass(frozen=True, eq=False)
class SupportSample:
    theta: np.ndarray
    values: np.ndarray
    smooth: SupportFn


def fit_support(theta, values, Kmax: int, kappa_floor=None, project: bool = True) -> SupportFn:
    """Least-squares trigonometric fit of sampled support values.

    When ``project`` is set and the fit violates the curvature floor, the
    k >= 2 modes are damped by the largest factor that restores it.
    """
    theta = np.asarray(theta, dtype=float)
    values = np.asarray(values, dtype=float)
    k = np.arange(1, Kmax + 1)
    M = theta.size
    if M > 2 * Kmax and np.allclose(theta, np.arange(M) * (TWO_PI / M), atol=1e-14):
        # equispaced samples: the least-squares fit is the truncated DFT
        X = np.fft.rfft(values) / M
        c0, a, b = X.real[0], 2 * X.real[1:Kmax + 1], -2 * X.imag[1:Kmax + 1]
    else:
        kt = np.multiply.outer(theta, k)
        A = np.hstack([np.ones((M, 1)), np.cos(kt), np.sin(kt)])
        coef, *_ = np.linalg.lstsq(A, values, rcond=None)
        c0, a, b = coef[0], coef[1:Kmax + 1], coef[Kmax + 1:]
    floor = 0.05 * c0 if kappa_floor is None else kappa_floor
    raw = SupportFn(c0, a, b, kappa_floor=floor, validate=False)
    if not project or min_curvature_radius(raw)[0] >= floor:
        return SupportFn(c0, a, b, kappa_floor=floor, validate=project)
    damp = np.ones(Kmax)
    damp[1:] = 0.0
    lo, hi = 0.0, 1.0
    for _ in range(50):
        g = 0.5 * (lo + hi)
        w = np.where(k >= 2, g, 1.0)
        trial = SupportFn(c0, a * w, b * w, kappa_floor=floor, validate=False)
        if min_curvature_radius(trial)[0] >= floor:
            lo = g
        else:
            hi = g
    w = np.where(k >= 2, lo, 1.0)
    return SupportFn(c0, a * w, b * w, kappa_floor=floor)


def support_of_points(points, M: int, Kmax: int = 16, kappa_floor=None) -> SupportSample:
    """Support function of a finite point set at M equispaced normals, plus a smooth fit."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise DegenerateSet("need at least three points")
    sv = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
    if sv[-1] <= 1e-12 * max(sv[0], 1e-300):
        raise DegenerateSet("points are collinear")
    th = np.arange(M) * (TWO_PI / M)
    vals = np.max(pts @ np.vstack([np.cos(th), np.sin(th)]), axis=0)
    Kfit = min(Kmax, (M - 1) // 2)
    return SupportSample(th, vals, fit_support(th, vals, Kfit, kappa_floor=kappa_floor))


def _radial_series(radii):
    """Trigonometric interpolant of radii sampled at phi_i = 2 pi i / N."""
    N = radii.size
    X = np.fft.rfft(radii) / N
    a = 2 * X.real[1:]
    b = -2 * X.imag[1:]
    if N % 2 == 0:
        a[-1] *= 0.5
        b[-1] = 0.0
    return X.real[0], a, b


def support_of_star_curve(radii, M: int = 256, Kmax: int = 32, kappa_floor=None,
                          oversample: int = 16) -> SupportSample:
    """Support function of a smooth star-shaped curve given by equispaced radii.

    The radial function is interpolated trigonometrically, so the support
    values carry no chord error. Used to support-encode extracted level sets.
    """
    radii = np.asarray(radii, dtype=float)
    r0, ra, rb = _radial_series(radii)
    Nd = oversample * radii.size
    phi = np.arange(Nd) * (TWO_PI / Nd)
    r = trig_eval(r0, ra, rb, phi)
    pts = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
    th = np.arange(M) * (TWO_PI / M)
    k = np.argmax(pts @ np.vstack([np.cos(th), np.sin(th)]), axis=0)
    step = TWO_PI / Nd

    def df(f):
        rr, dr = trig_eval(r0, ra, rb, f), trig_eval(r0, ra, rb, f, 1)
        return -(dr * np.cos(f - th) - rr * np.sin(f - th))

    f = _bisect(df, phi[k] - step, phi[k] + step)
    vals = trig_eval(r0, ra, rb, f) * np.cos(f - th)
    Kfit = min(Kmax, (M - 1) // 2)
    return SupportSample(th, vals, fit_support(th, vals, Kfit, kappa_floor=kappa_floor))


# ---------------------------------------------------------- property helpers

def rayleigh_quadrature(a, b, n: int = 10_000) -> float:
    """Quadrature of <a, w><w, b> over the unit circle (exact value pi <a, b>)."""
    th = np.arange(n) * (TWO_PI / n)
    w = np.column_stack([np.cos(th), np.sin(th)])
    return float(np.sum((w @ np.asarray(a)) * (w @ np.asarray(b))) * TWO_PI / n)


def projection_gaps(h: SupportFn, x, n_tangent: int = 100, rng=None):
    """Values <x - foot, v> over random tangent vectors v at the foot point.

    The projection inequality requires all of them to be <= 0.
    """
    rng = np.random.default_rng(rng)
    _, foot, ang = dist_and_project(h, x)
    tang = np.column_stack([-np.sin(ang), np.cos(ang)])
    c = rng.uniform(-1.0, 1.0, size=(np.atleast_1d(ang).size, n_tangent))
    diff = np.atleast_2d(np.asarray(x) - foot)
    return (diff[:, 0] * tang[:, 0] + diff[:, 1] * tang[:, 1])[:, None] * c


# -------------------------------------------------------------- serialisation

def save_body(h: SupportFn, path) -> None:
    """Write the coefficient vector as one value per line with a short header."""
    lines = [
        "# support function coefficients: c0, a1, b1, a2, b2, ...",
        f"# Kmax {h.Kmax}",
        f"# kappa_floor {h.kappa_floor!r}",
    ]
    lines += [repr(float(c)) for c in h.coefficients]
    Path(path).write_text("\n".join(lines) + "\n")


def load_body(path) -> SupportFn:
    floor = None
    vals = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if parts and parts[0] == "kappa_floor":
                floor = float(parts[1])
            continue
        vals.append(float(line))
    return SupportFn.from_coefficients(vals, kappa_floor=floor)
