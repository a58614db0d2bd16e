"""SVG figures for run reports. Figures are built without pyplot so nothing touches global state."""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure

matplotlib.rcParams["svg.hashsalt"] = "pharm-bm"
matplotlib.rcParams["svg.fonttype"] = "none"

WIDTH = 5.5


def _figure(ncols: int = 1, height: float = 3.6):
    fig = Figure(figsize=(WIDTH * ncols, height), layout="constrained")
    axes = [fig.add_subplot(1, ncols, i + 1) for i in range(ncols)]
    return fig, axes if ncols > 1 else axes[0]


def save_svg(fig: Figure, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def body_outline(h, M=512):
    from .convex import gauss_param

    P = gauss_param(h, M).positions
    return np.vstack([P, P[:1]])


def bodies_plot(bodies: dict):
    fig, ax = _figure(height=WIDTH)
    for label, h in bodies.items():
        P = body_outline(h)
        ax.plot(P[:, 0], P[:, 1], lw=1.2, label=label)
    ax.set_aspect("equal")
    ax.legend(frameon=False, fontsize=8)
    return fig


def field_plot(field, levels=12):
    fig, ax = _figure(height=WIDTH)
    m = field.mesh
    cs = ax.tricontourf(m.nodes[:, 0], m.nodes[:, 1], m.triangles, field.u, levels=levels, cmap="viridis")
    ax.tricontour(m.nodes[:, 0], m.nodes[:, 1], m.triangles, field.u, levels=levels, colors="k", linewidths=0.3)
    fig.colorbar(cs, ax=ax, shrink=0.8, label="u")
    ax.set_aspect("equal")
    return fig


def oracle_plot(rho, err, p):
    fig, ax = _figure()
    ax.semilogy(rho, np.maximum(np.abs(err), 1e-16), ".", ms=2)
    ax.set_xlabel(r"$\rho$")
    ax.set_ylabel("|u - u_exact|")
    ax.set_title(f"annulus, p = {p:g}")
    return fig


def limchar_plot(sweep, T=None):
    s, I = np.array(sweep).T
    fig, ax = _figure()
    ax.plot(s, I, "o-", label="I(s)")
    if T is not None:
        ax.axhline(T, color="0.4", ls="--", lw=0.8, label="T")
    ax.set_xscale("log")
    ax.set_xlabel("s")
    ax.set_ylabel("I(s)")
    ax.legend(frameon=False)
    return fig


def residual_heatmap(table, bracket, title="bracket"):
    fig, ax = _figure()
    lim = float(np.max(np.abs(bracket))) or 1.0
    im = ax.pcolormesh(table.theta, table.t, bracket, cmap="RdBu_r", vmin=-lim, vmax=lim, shading="nearest")
    fig.colorbar(im, ax=ax, label=title)
    ax.set_xlabel(r"$\theta$")
    ax.set_ylabel("t")
    return fig


def margin_plot(rows):
    fig, axes = _figure(ncols=2)
    for sem, mk in (("fixed-inner", "o"), ("transported", "s")):
        sel = [r for r in rows if r["semantics"] == sem]
        if not sel:
            continue
        for pair in dict.fromkeys(r["pair"] for r in sel):
            pr = [r for r in sel if r["pair"] == pair]
            lam = [r["lambda"] for r in pr]
            axes[0].plot(lam, [r["rel_margin"] for r in pr], mk + "-", ms=3, lw=0.6)
            axes[1].plot(lam, [r["concavity_defect"] for r in pr], mk + "-", ms=3, lw=0.6)
    axes[0].axhline(0, color="k", lw=0.6)
    axes[1].axhline(0, color="k", lw=0.6)
    axes[0].set_ylabel("relative min-form margin")
    axes[1].set_ylabel("concavity defect")
    for ax in axes:
        ax.set_xlabel(r"$\lambda$")
    return fig


def homogeneity_plot(rows, degree):
    lam = np.array([r["lambda"] for r in rows])
    ratio = np.array([r["ratio"] for r in rows])
    fig, ax = _figure()
    ax.loglog(lam, ratio, "o", label="T(scaled) / T")
    g = np.geomspace(lam.min(), lam.max(), 50)
    ax.loglog(g, g**degree, "-", lw=0.8, label=f"slope {degree:g}")
    ax.set_xlabel(r"$\lambda$")
    ax.legend(frameon=False)
    return fig


def hadamard_plot(report):
    ts = np.array([r.t for r in report.records])
    T = np.array([r.T for r in report.records])
    order = np.argsort(ts)
    fig, ax = _figure()
    ax.plot(ts[order], T[order], "o-", label="T(K_t)")
    g = np.linspace(ts.min(), ts.max(), 20)
    ax.plot(g, report.T0 + report.rhs * g, "--", lw=0.8, label="boundary-integral slope")
    ax.set_xlabel("t")
    ax.legend(frameon=False)
    return fig


def locality_plot(report):
    fig, axes = _figure(ncols=2)
    R = [r["R"] for r in report.sweep]
    axes[0].plot(R, [r["T"] for r in report.sweep], "o", label="solved")
    axes[0].plot(R, [r["T_closed"] for r in report.sweep], "-", lw=0.8, label="closed form")
    axes[0].axvline(report.R_star_closed, color="0.5", ls="--", lw=0.8)
    axes[0].axvline(report.R_star, color="C3", ls=":", lw=0.8)
    axes[0].set_xscale("log")
    axes[0].set_yscale("log")
    axes[0].set_xlabel("R")
    axes[0].set_ylabel("T(R)")
    axes[0].legend(frameon=False)
    Rt = [r["R"] for r in report.thin]
    axes[1].plot(Rt, [r["T"] for r in report.thin], "o-", ms=3)
    axes[1].set_xlabel("R (thin ring)")
    axes[1].set_ylabel("T(R)")
    return fig


def measure_plot(mu):
    fig, ax = _figure()
    ax.plot(mu.theta, mu.spherical_density, lw=1.0)
    ax.set_xlabel(r"normal angle $\theta$")
    ax.set_ylabel("measure density")
    ax.set_xlim(0, 2 * np.pi)
    return fig


def bm_p_plot(rows):
    fig, ax = _figure()
    p = [r["p"] for r in rows]
    ax.plot(p, [r["min_rel_margin"] for r in rows], "o-")
    ax.axhline(0, color="k", lw=0.6)
    ax.set_xlabel("p")
    ax.set_ylabel("worst relative margin")
    return fig
