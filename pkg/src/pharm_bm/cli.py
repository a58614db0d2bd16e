"""Command line interface: one subcommand per experiment, each writing a run directory."""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, acceptance, convex, dumps, harness, oracles, plotting
from . import supportcoords as sc
from .config import ExperimentConfig, from_dict, load
from .errors import ConfigError, PharmError
from .measure import functional_T, limchar_sweep, measure
from .report import RunDirectory
from .ring import RingProblem, solve


def _mesh(ctx, param, value):
    if value is None:
        return None
    try:
        a, b = value.lower().split("x")
        return int(a), int(b)
    except ValueError:
        raise click.BadParameter("expected MxN, e.g. 256x128") from None


def common(fn):
    fn = click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                      help="Experiment config (JSON).")(fn)
    fn = click.option("--out", type=click.Path(file_okay=False), help="Run directory (overrides the config).")(fn)
    fn = click.option("--serial", is_flag=True, help="Deterministic single-process reference path.")(fn)
    fn = click.option("--mesh", callback=_mesh, help="Mesh as M_angxM_rad (overrides the config).")(fn)
    return fn


def _setup(config_path, out, mesh, default_name) -> tuple[ExperimentConfig, RunDirectory]:
    cfg = load(config_path) if config_path else ExperimentConfig(name=default_name,
                                                                 output=Path("runs") / default_name)
    if mesh is not None:
        cfg.mesh = mesh
    run = RunDirectory(out or cfg.output, cfg.to_dict())
    return cfg, run


def _fig(cfg, run, name, builder, *args):
    if cfg.plots:
        run.figure(name, builder(*args))


def _ring(cfg: ExperimentConfig) -> RingProblem:
    return cfg.problem(cfg.K0)


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except ConfigError as exc:
            click.echo(f"config error:\n{exc}", err=True)
            ctx.exit(2)
        except PharmError as exc:
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            ctx.exit(3)


@click.group(cls=_Group)
@click.version_option(__version__, prog_name="pharm-bm")
def main():
    """p-harmonic measures, support coordinates and Brunn-Minkowski checks on planar convex rings."""


@main.command()
@click.option("--p", "p_values", type=float, multiple=True, help="Exponent(s); default 2.5.")
@click.option("--r", "r", type=float, default=0.25, show_default=True)
@click.option("--R", "R", type=float, default=1.0, show_default=True)
@click.option("--dump", type=click.Choice(["text", "binary"]), help="Also write the nodal field.")
@common
def oracle(p_values, r, R, dump, config_path, out, serial, mesh):
    """Annulus solve against the closed-form radial solution."""
    cfg, run = _setup(config_path, out, mesh or (256, 128), "oracle")
    rows = []
    for p in p_values or (cfg.p,):
        prob = RingProblem(convex.disk(R), convex.disk(r), p, cfg.eps0, cfg.mesh, cfg.reg_delta, cfg.tol)
        fld = solve(prob)
        rho = np.hypot(*fld.mesh.nodes.T)
        err = fld.u - oracles.annulus_u(rho, p, r, R, cfg.eps0)
        rows.append({"p": p, "M_ang": cfg.mesh[0], "M_rad": cfg.mesh[1], "max_error": float(np.max(np.abs(err))),
                     "seconds": fld.stats.seconds, "iterations": int(sum(fld.stats.iterations)),
                     "comparison_violations": fld.comparison_violations()})
        click.echo(f"p={p:g} mesh={cfg.mesh[0]}x{cfg.mesh[1]}: max error {rows[-1]['max_error']:.3e} "
                   f"({rows[-1]['seconds']:.2f}s)")
        _fig(cfg, run, f"oracle_error_p{p:g}", plotting.oracle_plot, rho, err, p)
        if dump == "text":
            dumps.write_field_text(fld, run.path / f"field_p{p:g}.txt")
        elif dump == "binary":
            dumps.write_field_binary(fld, run.path / f"field_p{p:g}.npz")
    run.results(list(rows[0]), rows)
    tol = cfg.tolerance("oracle_max_error")
    ok = all(row["max_error"] <= tol for row in rows)
    run.summary({"rows": rows, "tolerance": tol, "passed": ok})
    sys.exit(0 if ok else 1)


@main.command()
@click.option("--dump", type=click.Choice(["text", "binary"]), help="Also write the nodal field.")
@common
def functional(dump, config_path, out, serial, mesh):
    """Functional T by the direct and spherical routes on the configured ring."""
    cfg, run = _setup(config_path, out, mesh, "functional")
    prob = _ring(cfg)
    fld = solve(prob)
    rep = functional_T(prob, fld)
    row = {"T_direct": rep.T_direct, "T_spherical": rep.T_spherical, "mass": rep.mass, "rel_gap": rep.rel_gap,
           "min_element_gradient": fld.min_element_gradient, "seconds": fld.stats.seconds}
    if not any([*prob.outer.a, *prob.outer.b, *prob.inner.a, *prob.inner.b]):
        row["T_closed_form"] = oracles.annulus_T(prob.p, prob.inner.c0, prob.outer.c0, cfg.eps0)
    run.results(list(row), [row])
    run.summary(row)
    _fig(cfg, run, "bodies", plotting.bodies_plot, {"outer": prob.outer, "inner": prob.inner})
    _fig(cfg, run, "field", plotting.field_plot, fld)
    if dump == "text":
        dumps.write_field_text(fld, run.path / "field.txt")
    elif dump == "binary":
        dumps.write_field_binary(fld, run.path / "field.npz")
    click.echo(f"T_direct {rep.T_direct:.6f}  T_spherical {rep.T_spherical:.6f}  gap {rep.rel_gap:.2e}")


@main.command("measure")
@common
def measure_cmd(config_path, out, serial, mesh):
    """Density of the boundary measure on the unit circle of normals."""
    cfg, run = _setup(config_path, out, mesh, "measure")
    prob = _ring(cfg)
    fld = solve(prob)
    mu = measure(prob, fld)
    rows = [{"theta": th, "density": d, "spherical_density": sd, "h": h}
            for th, d, sd, h in zip(mu.theta, mu.density, mu.spherical_density, mu.h)]
    run.results(["theta", "density", "spherical_density", "h"], rows)
    run.summary({"total_mass": mu.total_mass, "spherical_mass": mu.spherical_mass, "n": len(rows)})
    _fig(cfg, run, "measure", plotting.measure_plot, mu)
    click.echo(f"total mass {mu.total_mass:.6f} (spherical {mu.spherical_mass:.6f})")


@main.command()
@common
def limchar(config_path, out, serial, mesh):
    """Level integrals I(s) near the outer boundary and their ratio to T."""
    cfg, run = _setup(config_path, out, mesh, "limchar")
    prob = _ring(cfg)
    fld = solve(prob)
    rep = limchar_sweep(prob, fld, [s * prob.eps0 for s in cfg.s_list])
    rows = [{"s": s, "I": I, "T_over_I": rep.T_direct / I} for s, I in rep.ratio_sweep]
    run.results(["s", "I", "T_over_I"], rows)
    run.summary({"T": rep.T_direct, "ratio": rep.limchar_ratio, "variation": rep.variation,
                 "passed": rep.variation <= cfg.tolerance("limchar_variation")})
    _fig(cfg, run, "limchar", plotting.limchar_plot, rep.ratio_sweep, rep.T_direct)
    click.echo(f"T/I(s_min) = {rep.limchar_ratio:.5f}, variation over last halving {rep.variation:.2%}")


def _table(cfg, prob, fld):
    return sc.build_table(prob, fld, t_grid=sc.default_t_grid(prob.eps0, cfg.t_levels))


@main.command()
@common
def residual(config_path, out, serial, mesh):
    """Support-coordinate p-Laplacian residual on the level-set table."""
    cfg, run = _setup(config_path, out, mesh, "residual")
    prob = _ring(cfg)
    fld = solve(prob)
    tab = _table(cfg, prob, fld)
    res = sc.plaphu_residual(tab, prob.p)
    dumps.write_table(tab, run.path / "table.txt")
    rows = [{"t": t, "max_abs_bracket": float(np.max(np.abs(b)))} for t, b in zip(tab.t, res.bracket)]
    run.results(["t", "max_abs_bracket"], rows)
    run.summary({"sup": res.sup, "scale": res.scale, "levels": int(tab.t.size), "angles": int(tab.theta.size),
                 "passed": res.sup <= cfg.tolerance("plaphu_sup")})
    _fig(cfg, run, "bracket", plotting.residual_heatmap, tab, res.bracket)
    click.echo(f"sup |bracket| = {res.sup:.3e} over {tab.t.size} levels")


@main.command()
@common
def ids(config_path, out, serial, mesh):
    """Support, gradient and speed identities of the level-set table."""
    cfg, run = _setup(config_path, out, mesh, "ids")
    prob = _ring(cfg)
    fld = solve(prob)
    rep = sc.ids1_check(_table(cfg, prob, fld), fld)
    row = {"support": rep.support, "gradient": rep.gradient, "speed": rep.speed, "n_probe": rep.n_probe}
    run.results(list(row), [row])
    tol = cfg.tolerance("ids1_sup")
    run.summary({**row, "tolerance": tol, "passed": max(rep.support, rep.gradient, rep.speed) <= tol})
    click.echo(f"support {rep.support:.2e}  gradient {rep.gradient:.2e}  speed {rep.speed:.2e}")


def _with_kprime(cfg: ExperimentConfig, Kp) -> ExperimentConfig:
    """Config copy whose K' is the given body."""
    doc = cfg.to_dict()
    doc["bodies"]["Kprime"] = {"kind": "fourier", "c0": Kp.c0, "a": list(Kp.a), "b": list(Kp.b)}
    return from_dict(doc)


def _pairs(cfg: ExperimentConfig, mode: str):
    """(label, K1, K2, pair_t, config) for the configured pair or one per seed."""
    K1, K2 = cfg.body("K1"), cfg.body("K2")
    if K1 is not None and K2 is not None:
        return [("config", K1, K2, cfg.pair_t, cfg)]
    out = []
    for seed in cfg.seeds:
        if mode == "family":
            fp = harness.family_pair(seed, cfg.K0, cfg.hausdorff_max, cfg.tau)
            out.append((str(seed), fp.K1, fp.K2, (fp.t1, fp.t2), _with_kprime(cfg, fp.Kprime)))
        else:
            out.append((str(seed), *harness.random_pair(seed, cfg.K0, cfg.hausdorff_max), None, cfg))
    return out


PAIR_MODE = click.option("--pairs", "mode", type=click.Choice(["random", "family"]), default="random",
                         show_default=True, help="How to draw pairs when K1/K2 are not in the config.")


@main.command()
@PAIR_MODE
@common
def supconv(mode, config_path, out, serial, mesh):
    """Supremal convolution of two ring solutions against the solution on the combined body."""
    cfg, run = _setup(config_path, out, mesh, "supconv")
    inner = cfg.inner_body()
    rows = []
    for label, K1, K2, _, _ in _pairs(cfg, mode):
        tabs = []
        for K in (K1, K2):
            prob = cfg.problem(K, inner)
            tabs.append(_table(cfg, prob, solve(prob)))
        for lam in cfg.lambdas:
            prob = cfg.problem(convex.minkowski_combine(K1, K2, 1 - lam, lam), inner)
            fld = solve(prob)
            S = sc.supremal_convolution(tabs[0], tabs[1], lam)
            cmp_ = sc.subsolution_compare(S, fld)
            sign = sc.subsolution_sign_check(S, prob.p, cfg.tolerance("sign_rel"))
            rows.append({"pair": label, "lambda": lam, "max_violation": cmp_.max_violation,
                         "tol_discrete": cmp_.tol_discrete, "max_bracket": sign.max_bracket, "sign_tol": sign.tol,
                         "passed": cmp_.passed and sign.passed})
            click.echo(f"pair {label} lambda={lam:g}: violation {cmp_.max_violation:.2e} "
                       f"(tol {cmp_.tol_discrete:.2e}), bracket {sign.max_bracket:.2e}")
    run.results(list(rows[0]), rows)
    ok = all(r["passed"] for r in rows)
    run.summary({"rows": len(rows), "passed": ok})
    sys.exit(0 if ok else 1)


@main.command()
@PAIR_MODE
@click.option("--p", "p_values", type=float, multiple=True, help="Repeat the check for each exponent.")
@common
def bm(mode, p_values, config_path, out, serial, mesh):
    """Per-lambda Brunn-Minkowski margins along Minkowski segments."""
    cfg, run = _setup(config_path, out, mesh, "bm")
    tol = cfg.tolerance("bm_margin_rel")
    rows, summary = [], []
    for p in p_values or (cfg.p,):
        cfg.p = p
        worst = np.inf
        for label, K1, K2, pair_t, pcfg in _pairs(cfg, mode):
            pcfg.p = p
            if pair_t is not None:
                rep = harness.bm_concavity_check(pcfg, K1, K2, *pair_t, pair=label, serial=serial)
            else:
                rep = harness.bm_min_check(pcfg, K1, K2, label, serial)
            rows += [{"p": p, **r} for r in rep.rows]
            worst = min(worst, rep.min_rel_margin())
            click.echo(f"p={p:g} pair {label}: worst relative margin {rep.min_rel_margin():+.3e}")
        summary.append({"p": p, "min_rel_margin": worst, "passed": worst >= -tol})
    run.results(["p", *harness.BM_COLUMNS], rows)
    run.table("by_p", ["p", "min_rel_margin", "passed"], summary)
    run.summary({"by_p": summary, "tolerance": tol})
    _fig(cfg, run, "margins", plotting.margin_plot, rows)
    if len(summary) > 1:
        _fig(cfg, run, "margins_by_p", plotting.bm_p_plot, summary)
    sys.exit(0 if all(s["passed"] for s in summary) else 1)


@main.command()
@click.option("--homothetic", is_flag=True, help="Rescale the inner body with the family instead.")
@common
def hadamard(homothetic, config_path, out, serial, mesh):
    """Finite-difference derivative of T along the family against the boundary-integral formula."""
    cfg, run = _setup(config_path, out, mesh, "hadamard")
    if homothetic:
        rep = harness.hadamard_homothetic(cfg, cfg.inner_spec.get("scale", 0.8), serial)
    else:
        rep = harness.hadamard_check(cfg, serial)
    rows = [{"t": r.t, "T": r.T} for r in sorted(rep.records, key=lambda r: r.t)]
    run.results(["t", "T"], rows)
    run.summary({"route": rep.route, "T0": rep.T0, "lhs": rep.lhs, "rhs": rep.rhs, "rel_error": rep.rel_error,
                 "tol": rep.tol, "solved_lhs": rep.solved_lhs, "D_quarter": rep.D_quarter,
                 "D_eighth": rep.D_eighth, "reference": rep.reference, "passed": rep.passed})
    _fig(cfg, run, "hadamard", plotting.hadamard_plot, rep)
    click.echo(f"{rep.route}: derivative {rep.lhs:.6f} vs formula {rep.rhs:.6f} (rel. error {rep.rel_error:.2e})")
    sys.exit(0 if rep.passed else 1)


@main.command()
@common
def homogeneity(config_path, out, serial, mesh):
    """Log-log slope of T under dilation of the whole configuration."""
    cfg, run = _setup(config_path, out, mesh, "homogeneity")
    rep = harness.homogeneity_check(cfg, serial=serial)
    run.results(["lambda", "T", "ratio", "expected_ratio"], rep.rows)
    run.summary({"slope": rep.slope, "expected": rep.expected, "tol": rep.tol, "passed": rep.passed})
    _fig(cfg, run, "homogeneity", plotting.homogeneity_plot, rep.rows, rep.expected)
    click.echo(f"slope {rep.slope:.6f} (expected {rep.expected:g})")
    sys.exit(0 if rep.passed else 1)


@main.command()
@common
def locality(config_path, out, serial, mesh):
    """T(R) along concentric dilates: thick sweep around the stationary radius, thin window."""
    cfg, run = _setup(config_path, out, mesh, "locality")
    rep = harness.locality_probe(cfg, serial)
    run.results(list(rep.sweep[0]), rep.sweep + rep.refined)
    run.table("thin", list(rep.thin[0]), rep.thin)
    run.table("margins", list(rep.margins[0]), rep.margins)
    run.summary({"R_star": rep.R_star, "R_star_closed": rep.R_star_closed,
                 "argmin_rel_error": rep.argmin_rel_error, "thin_monotone": rep.thin_monotone,
                 "thin_min_margin": rep.thin_min_margin, "passed": rep.passed})
    _fig(cfg, run, "locality", plotting.locality_plot, rep)
    click.echo(f"R* = {rep.R_star:.4f} (closed form {rep.R_star_closed:.4f}); thin ring monotone: {rep.thin_monotone}")
    sys.exit(0 if rep.passed else 1)


@main.command()
@click.option("--quick", is_flag=True, help="Reduced meshes and counts.")
@click.option("--only", type=click.IntRange(1, 10), multiple=True, help="Run only these criteria.")
@click.option("--out", type=click.Path(file_okay=False), default="runs/suite", show_default=True)
def suite(quick, only, out):
    """Run the acceptance battery; exits nonzero if any criterion fails."""
    run = RunDirectory(out)
    results = acceptance.run_all("quick" if quick else "full", set(only) or None, echo=click.echo)
    rows = [{"criterion": c.number, "name": c.name, "passed": c.passed, "seconds": c.seconds, "detail": c.detail}
            for c in results]
    run.results(["criterion", "name", "passed", "seconds", "detail"], rows)
    run.summary({"profile": "quick" if quick else "full",
                 "criteria": {c.number: {"name": c.name, "passed": c.passed, "values": c.values} for c in results}})
    n_fail = sum(not c.passed for c in results)
    click.echo(f"{len(results) - n_fail}/{len(results)} criteria passed")
    sys.exit(1 if n_fail else 0)
