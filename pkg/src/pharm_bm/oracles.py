"""Closed forms for radially symmetric rings between concentric circles.

Radial p-harmonic functions in the plane satisfy rho |u'|^(p-1) = const, so
u = A rho^alpha + B with alpha = (p - 2)/(p - 1), and u = A log rho + B at p = 2.
"""

from __future__ import annotations

import numpy as np


def exponent(p: float) -> float:
    return (p - 2.0) / (p - 1.0)


def annulus_u(rho, p, r, R, eps0=1.0):
    """Solution with u(R) = 0 and u(r) = eps0."""
    rho = np.asarray(rho, dtype=float)
    if p == 2:
        return eps0 * np.log(R / rho) / np.log(R / r)
    a = exponent(p)
    return eps0 * (rho**a - R**a) / (r**a - R**a)


def annulus_grad(rho, p, r, R, eps0=1.0):
    """|u'(rho)|."""
    rho = np.asarray(rho, dtype=float)
    if p == 2:
        return eps0 / (rho * np.log(R / r))
    a = exponent(p)
    return eps0 * a * rho ** (a - 1) / (R**a - r**a)


def annulus_level_radius(s, p, r, R, eps0=1.0):
    """Radius of the level set {u = s}."""
    s = np.asarray(s, dtype=float)
    if p == 2:
        return R * (r / R) ** (s / eps0)
    a = exponent(p)
    return ((s / eps0) * (r**a - R**a) + R**a) ** (1 / a)


def annulus_T(p, r, R, eps0=1.0):
    """Boundary integral of h |grad u|^(p-1) over the circle of radius R."""
    return 2 * np.pi * R * R * annulus_grad(R, p, r, R, eps0) ** (p - 1)


def annulus_mass(p, r, R, eps0=1.0):
    return 2 * np.pi * R * annulus_grad(R, p, r, R, eps0) ** (p - 1)


def annulus_dlogT_dlogR(p, r, R):
    """Logarithmic derivative of annulus_T in R at fixed r."""
    if p == 2:
        return 1.0 - 1.0 / np.log(R / r)
    a = exponent(p)
    q = (r / R) ** a
    return 1.0 - (p - 2) / (1 - q)


def stationary_radius(p, r):
    """Outer radius minimising annulus_T at fixed inner radius r."""
    if p == 2:
        return np.e * r
    return r * (3 - p) ** (-1.0 / exponent(p))


def transported_disk_dlogT(p, r_inner, c):
    """d/dt log T along B_1 -> (B_1 + t B_c)/(1+t) with transported inner data.

    The inner circle of radius ``r_inner`` is the eps0-level of a presolve and
    carries data u0(x/(1+t)); returns the exact logarithmic derivative at t=0
    together with the value (3 - p)(c - 1) of the boundary-integral formula.
    """
    # data eps(t) = u0(r_inner/(1+t)); d log eps/dt = -u0'(r) r / u0(r) at t=0,
    # which only depends on the presolve through the level radius
    if p == 2:
        dlog_eps = 1.0 / np.log(1.0 / r_inner)
    else:
        a = exponent(p)
        q = r_inner**a
        dlog_eps = a * q / (1 - q)
    exact = c * annulus_dlogT_dlogR(p, r_inner, 1.0) + (p - 1) * dlog_eps - (3 - p)
    return exact, (3 - p) * (c - 1)
