"""Boundary p-harmonic measure, the functional T and its level-set limit."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import convex
from .convex import TWO_PI
from .errors import LevelUnresolvable
from .ring import RingProblem, ScalarField, boundary_gradient, level_set, offset_gradient


@dataclass(frozen=True, eq=False)
class BoundaryMeasure:
    """Density |grad u|^(p-1) sampled at equispaced normal angles."""

    theta: np.ndarray
    density: np.ndarray
    arc_weight: np.ndarray
    h: np.ndarray
    radius: np.ndarray

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.density * self.arc_weight))

    @property
    def spherical_density(self) -> np.ndarray:
        """Pushforward density per unit angle under the Gauss map."""
        return self.density * self.radius

    @property
    def spherical_mass(self) -> float:
        return float(np.sum(self.spherical_density) * TWO_PI / self.theta.size)

    def integrate(self, f) -> float:
        """Integral of f(theta) against the pushforward measure."""
        vals = f(self.theta) if callable(f) else np.asarray(f)
        return float(np.sum(vals * self.spherical_density) * TWO_PI / self.theta.size)


@dataclass(eq=False)
class FunctionalReport:
    T_direct: float
    T_spherical: float
    mass: float
    ratio_sweep: list = field(default_factory=list)
    limchar_ratio: float | None = None
    variation: float | None = None

    @property
    def rel_gap(self) -> float:
        return abs(self.T_direct - self.T_spherical) / abs(self.T_direct)


def measure(prob: RingProblem, field: ScalarField, M: int | None = None) -> BoundaryMeasure:
    M = M or field.mesh.M_ang
    bg = boundary_gradient(field, "outer", M)
    gp = convex.gauss_param(prob.outer, M)
    dens = np.maximum(bg.grad, 0.0) ** (prob.p - 1)
    return BoundaryMeasure(gp.theta, dens, gp.arc_weight, gp.h, gp.radius)


def _direct_T(prob: RingProblem, field: ScalarField) -> float:
    """T as an arclength integral over the mesh boundary vertices (polar sampling)."""
    m = field.mesh
    X = m.polygon("outer")
    _, psi = convex.radial_from_support(prob.outer, m.theta, return_normal=True)
    nu = np.column_stack([np.cos(psi), np.sin(psi)])
    grad = offset_gradient(field, X, nu, "outer", foot=False)[0]
    seg = np.linalg.norm(np.roll(X, -1, axis=0) - X, axis=1)
    w = 0.5 * (seg + np.roll(seg, 1))
    return float(np.sum(prob.outer(psi) * np.maximum(grad, 0.0) ** (prob.p - 1) * w))


def functional_T(prob: RingProblem, field: ScalarField, mu: BoundaryMeasure | None = None) -> FunctionalReport:
    """T computed twice: along the boundary by arclength and over the circle of normals."""
    mu = mu or measure(prob, field)
    T_sph = mu.integrate(mu.h)
    return FunctionalReport(_direct_T(prob, field), T_sph, mu.total_mass)


def level_integral(prob: RingProblem, field: ScalarField, s: float) -> float:
    """s^(p-1) times the integral of dist(x, boundary)^-(p-1) over the level {u = s}."""
    curve = level_set(field, s)
    P, Q = curve.segments()
    mid = 0.5 * (P + Q)
    d, _, _ = convex.dist_and_project(prob.outer, mid)
    seg = np.linalg.norm(Q - P, axis=1)
    return float(s ** (prob.p - 1) * np.sum(seg * d ** (-(prob.p - 1))))


def limchar_sweep(prob: RingProblem, field: ScalarField, s_list, report: FunctionalReport | None = None,
                  check: bool = True) -> FunctionalReport:
    """Level integrals I(s) for decreasing s and their ratio to T."""
    report = report or functional_T(prob, field)
    s_list = [float(s) for s in s_list]
    if check:
        gmax = float(np.max(boundary_gradient(field).grad))
        lo = 4 * field.h_mesh * gmax
        for s in s_list:
            if s > 0.2 * prob.eps0 or s < lo:
                raise LevelUnresolvable(f"level {s:g} outside resolvable range [{lo:.3g}, {0.2 * prob.eps0:g}]")
    sweep = [(s, level_integral(prob, field, s)) for s in s_list]
    report.ratio_sweep = sweep
    s_min, I_min = min(sweep)
    report.limchar_ratio = report.T_direct / I_min
    if len(sweep) >= 2:
        I_last, I_prev = sweep[-1][1], sweep[-2][1]
        report.variation = abs(I_last - I_prev) / abs(I_last)
    return report
