"""Neighbourhood families, Brunn-Minkowski and variation checks, locality sweeps.

Two variation semantics are available. ``fixed-inner`` keeps a common inner
body with constant data along every family. ``transported`` fixes the inner
curve as a level set of a presolve ``u0`` on a wider ring and feeds it the
data ``u0(x / (1 + t))`` when the outer body is ``K0 + t K'``; the functional
of the normalised body ``(K0 + t K') / (1 + t)`` is then that of the
unnormalised solve divided by ``(1 + t)^(3 - p)``.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from . import convex, oracles
from .config import ExperimentConfig
from .convex import SupportFn
from .errors import ConfigError, CurvatureFloorViolation, DataOutOfPresolveRange, NeighborhoodTooLarge
from .measure import functional_T, measure
from .ring import RingProblem, ScalarField, build_mesh, level_support, solve


def n_workers(serial: bool = False) -> int:
    if serial:
        return 1
    env = os.environ.get("PHARM_BM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def pmap(fn, items, serial: bool = False) -> list:
    """Order-preserving map over a process pool; serial when asked or when one worker is available."""
    items = list(items)
    n = min(n_workers(serial), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


# --------------------------------------------------------------------- solves

@dataclass(frozen=True)
class RunRecord:
    T: float
    T_direct: float
    mass: float
    seconds: float
    iterations: int
    comparison_violations: int
    n_nodes: int
    min_element_gradient: float


def record(prob: RingProblem, fld: ScalarField) -> RunRecord:
    rep = functional_T(prob, fld)
    return RunRecord(rep.T_spherical, rep.T_direct, rep.mass, fld.stats.seconds, sum(fld.stats.iterations),
                     fld.comparison_violations(), fld.mesh.n_nodes, fld.min_element_gradient)


def solve_T(prob: RingProblem) -> RunRecord:
    return record(prob, solve(prob))


def homogeneity_degree(p: float) -> float:
    """n - p + 1 in the plane."""
    return 3.0 - p


# ------------------------------------------------------------------- families

def family_body(K0: SupportFn, Kp: SupportFn, t: float) -> SupportFn:
    """(K0 + t K') / (1 + t); a Minkowski difference when t < 0."""
    if Kp.is_zero():
        return K0.scaled(1.0 / (1.0 + t))
    return convex.support_combine(K0, Kp, 1.0 / (1.0 + t), t / (1.0 + t))


def dilated_body(K0: SupportFn, Kp: SupportFn, t: float) -> SupportFn:
    """K0 + t K' without normalisation."""
    if Kp.is_zero():
        return K0
    return convex.support_combine(K0, Kp, 1.0, t)


def family_t_grid(tau: float, n: int) -> np.ndarray:
    """2n + 1 symmetric points strictly inside (-tau, tau)."""
    return tau * np.arange(-n, n + 1) / (n + 1)


def family(config: ExperimentConfig, inner: SupportFn | None = None) -> list[tuple[float, SupportFn]]:
    K0, Kp = config.K0, config.Kprime
    if Kp is None:
        raise ConfigError("family needs a Kprime body")
    if inner is None and "scale" in config.inner_spec:
        inner = config.inner_body()
    out = []
    for t in family_t_grid(config.tau, config.n_family):
        try:
            Kt = family_body(K0, Kp, float(t))
        except CurvatureFloorViolation as exc:
            raise NeighborhoodTooLarge(f"K_t is not C2+ at t={t:g}: {exc}") from None
        if inner is not None:
            gap = convex.support_gap(Kt, inner)
            if gap < 1e-3 * convex.diam(Kt):
                raise NeighborhoodTooLarge(f"K_t at t={t:g} does not contain the inner body (gap {gap:.3g})")
        out.append((float(t), Kt))
    return out


def combination_parameter(t1: float, t2: float, lam: float) -> float:
    """s with (1 - lam) K_t1 + lam K_t2 = K_s along a family."""
    a = (1 - lam) / (1 + t1) + lam / (1 + t2)
    b = (1 - lam) * t1 / (1 + t1) + lam * t2 / (1 + t2)
    return b / a


def _perturbed(K0: SupportFn, bump: SupportFn) -> SupportFn:
    """K0 plus the non-constant modes of ``bump``."""
    K = max(K0.Kmax, bump.Kmax)
    a0, b0 = K0.padded(K)
    a1, b1 = bump.padded(K)
    return SupportFn(K0.c0, a0 + a1, b0 + b1)


def random_pair(seed: int, K0: SupportFn, hausdorff_max: float = 0.05, amplitude: float = 0.1,
                Kmax: int = 8, decay: float = 2.0) -> tuple[SupportFn, SupportFn]:
    """Two independently drawn random perturbations of K0, each within ``hausdorff_max``."""
    bodies = []
    for slot in range(2):
        for attempt in range(1000):
            sub = 1_000_003 * seed + 1009 * slot + attempt
            K = _perturbed(K0, convex.random_body(sub, Kmax=Kmax, decay=decay, amplitude=amplitude))
            if convex.hausdorff(K, K0) <= hausdorff_max:
                bodies.append(K)
                break
        else:
            raise NeighborhoodTooLarge(f"no body within Hausdorff {hausdorff_max} for seed {seed}")
    return bodies[0], bodies[1]


@dataclass(frozen=True)
class FamilyPair:
    K1: SupportFn
    K2: SupportFn
    t1: float
    t2: float
    Kprime: SupportFn


def family_pair(seed: int, K0: SupportFn, hausdorff_max: float = 0.05, tau: float = 0.1,
                weight=(0.4, 0.6), amplitude: float = 0.1) -> FamilyPair:
    """Two members K_t1, K_t2 of the family through K0 in a random direction K' = c * random body."""
    rng = np.random.default_rng(seed)
    Kp = convex.random_body(seed, amplitude=amplitude).scaled(rng.uniform(*weight))
    for _ in range(1000):
        t1, t2 = np.sort(rng.uniform(-tau, tau, size=2))
        if t2 - t1 < 0.2 * tau:
            continue
        K1, K2 = family_body(K0, Kp, t1), family_body(K0, Kp, t2)
        if max(convex.hausdorff(K1, K0), convex.hausdorff(K2, K0)) <= hausdorff_max:
            return FamilyPair(K1, K2, float(t1), float(t2), Kp)
    raise NeighborhoodTooLarge(f"no family pair within Hausdorff {hausdorff_max} for seed {seed}")


# ------------------------------------------------------- transported semantics

@dataclass(frozen=True, eq=False)
class TransportedSetup:
    """Presolve on a wider ring plus the level curve used as fixed inner boundary."""

    presolve: RingProblem
    u0: np.ndarray
    curve: SupportFn
    level: float
    K0: SupportFn
    Kprime: SupportFn
    p: float
    mesh: tuple[int, int]
    reg_delta: float
    tol: float

    def presolve_field(self) -> ScalarField:
        return ScalarField(self.presolve, build_mesh(self.presolve), self.u0)


def transported_setup(config: ExperimentConfig, mesh=None) -> TransportedSetup:
    spec = config.inner_spec
    level = float(spec.get("level_set", 0.5))
    pre_scale = float(spec.get("presolve_scale", 0.25))
    pre_data = float(spec.get("presolve_data", 1.0))
    if not 0 < level < pre_data:
        raise ConfigError(f"level_set {level} must lie in (0, {pre_data})")
    mesh = tuple(mesh or config.mesh)
    K0 = config.K0
    pre = RingProblem(K0, K0.scaled(pre_scale), config.p, pre_data, mesh, config.reg_delta, config.tol)
    u0 = solve(pre)
    curve = level_support(u0, level)
    Kp = config.Kprime if config.Kprime is not None else convex.origin()
    return TransportedSetup(pre, u0.u, curve, level, K0, Kp, config.p, mesh, config.reg_delta, config.tol)


@dataclass(frozen=True)
class TransportedRecord:
    t: float
    T: float  # functional of the normalised body
    Gamma: float  # functional of the unnormalised solve
    hadamard_integral: float  # integral of h_K' - h_K0 against the measure (t = 0 only)
    record: RunRecord


def transported_solve(setup: TransportedSetup, t: float, u0: ScalarField | None = None) -> TransportedRecord:
    u0 = u0 or setup.presolve_field()
    Kt = dilated_body(setup.K0, setup.Kprime, t)
    M_ang = setup.mesh[0]
    theta = np.arange(M_ang) * (2 * np.pi / M_ang)
    rho = convex.radial_from_support(setup.curve, theta)
    x = rho[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])
    data = u0.polar_eval(x / (1 + t))
    if not np.all(np.isfinite(data)):
        raise DataOutOfPresolveRange(f"x/(1+t) leaves the presolved ring at t={t:g}")
    prob = RingProblem(Kt, setup.curve, setup.p, data, setup.mesh, setup.reg_delta, setup.tol)
    fld = solve(prob)
    rec = record(prob, fld)
    integral = np.nan
    if t == 0:
        mu = measure(prob, fld)
        integral = mu.integrate(setup.Kprime(mu.theta) - setup.K0(mu.theta))
    return TransportedRecord(float(t), rec.T / (1 + t) ** homogeneity_degree(setup.p), rec.T, float(integral), rec)


def _transported_job(setup: TransportedSetup, t: float) -> TransportedRecord:
    return transported_solve(setup, t)


@dataclass
class HadamardReport:
    label: str
    route: str  # "identity" or "solved"
    tau: float
    T0: float
    lhs: float
    rhs: float
    rel_error: float
    tol: float
    solved_lhs: float
    D_quarter: float
    D_eighth: float
    records: list = field(default_factory=list)
    reference: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.rel_error <= self.tol)


def _is_centered_disk(h: SupportFn) -> bool:
    return not np.any(h.a) and not np.any(h.b)


def hadamard_check(config: ExperimentConfig, serial: bool = False, label: str | None = None,
                   setup: TransportedSetup | None = None) -> HadamardReport:
    """Finite-difference derivative of T along (K0 + t K')/(1 + t) against the boundary-integral formula.

    Central differences at t = +-tau/4 and +-tau/8 are Richardson-combined.
    When K' = K0 or K' = {0} the family is a pure dilation and the derivative
    follows from the scaling identity; the solved derivative is reported alongside.
    """
    setup = setup or transported_setup(config)
    q = homogeneity_degree(config.p)
    tau = config.tau
    ts = [0.0, -tau / 4, tau / 4, -tau / 8, tau / 8]
    recs = pmap(partial(_transported_job, setup), ts, serial)
    T = {r.t: r.T for r in recs}
    zero = recs[0]
    T0 = zero.Gamma
    rhs = q * zero.hadamard_integral
    D4 = (T[tau / 4] - T[-tau / 4]) / (tau / 2)
    D8 = (T[tau / 8] - T[-tau / 8]) / (tau / 4)
    solved = (4 * D8 - D4) / 3
    Kp = setup.Kprime
    if Kp.allclose(setup.K0, atol=1e-14):
        route, lhs = "identity", 0.0
    elif Kp.is_zero():
        route, lhs = "identity", -q * T0
    else:
        route, lhs = "solved", solved
    rel_tol = config.tolerance("hadamard_identity" if route == "identity" else "hadamard_rel")
    denom = abs(rhs) if rhs != 0 else abs(T0)
    rel = abs(lhs - rhs) / denom
    reference = {}
    if _is_centered_disk(setup.K0) and setup.K0.c0 == 1.0 and _is_centered_disk(Kp):
        exact, formula = oracles.transported_disk_dlogT(config.p, setup.curve.c0, Kp.c0)
        reference = {"level_radius": setup.curve.c0, "exact_dlogT": exact, "formula_dlogT": formula,
                     "solved_dlogT": solved / T0}
    return HadamardReport(label or config.name, route, tau, T0, lhs, rhs, rel, rel_tol, solved, D4, D8,
                          recs, reference)


def hadamard_homothetic(config: ExperimentConfig, scale: float = 0.8, serial: bool = False) -> HadamardReport:
    """Same finite-difference test with the inner body rescaled along the family, inner = scale * K_t."""
    K0 = config.K0
    Kp = config.Kprime if config.Kprime is not None else convex.origin()
    q = homogeneity_degree(config.p)
    tau = config.tau
    ts = [0.0, -tau / 4, tau / 4, -tau / 8, tau / 8]
    probs = []
    for t in ts:
        Kt = family_body(K0, Kp, t)
        probs.append(config.problem(Kt, inner=Kt.scaled(scale)))
    recs = pmap(solve_T, probs, serial)
    T = dict(zip(ts, (r.T for r in recs)))
    fld = solve(probs[0])
    mu = measure(probs[0], fld)
    rhs = q * mu.integrate(Kp(mu.theta) - K0(mu.theta))
    D4 = (T[tau / 4] - T[-tau / 4]) / (tau / 2)
    D8 = (T[tau / 8] - T[-tau / 8]) / (tau / 4)
    lhs = (4 * D8 - D4) / 3
    denom = abs(rhs) if rhs != 0 else abs(T[0.0])
    trecs = [TransportedRecord(t, r.T, r.T, rhs / q if t == 0 else np.nan, r) for t, r in zip(ts, recs)]
    return HadamardReport(f"{config.name}-homothetic", "solved", tau, T[0.0], lhs, rhs, abs(lhs - rhs) / denom,
                          config.tolerance("hadamard_rel"), lhs, D4, D8, trecs)


# ------------------------------------------------------------ Brunn-Minkowski

BM_COLUMNS = ["pair", "semantics", "lambda", "T_lambda", "T_K1", "T_K2", "min_T", "margin", "rel_margin",
              "concavity_defect"]


@dataclass
class BMReport:
    rows: list
    meta: dict = field(default_factory=dict)
    records: list = field(default_factory=list)

    def margins(self, semantics: str = "fixed-inner") -> np.ndarray:
        return np.array([r["margin"] for r in self.rows if r["semantics"] == semantics])

    def min_rel_margin(self, semantics: str = "fixed-inner") -> float:
        return float(min(r["rel_margin"] for r in self.rows if r["semantics"] == semantics))

    def passed(self, rel_tol: float) -> bool:
        return self.min_rel_margin() >= -rel_tol


def _bm_rows(pair, semantics, lambdas, T1, T2, T_lams, p):
    e = 1.0 / homogeneity_degree(p)
    rows = []
    for lam, Tl in zip(lambdas, T_lams):
        m = min(T1, T2)
        rows.append({
            "pair": pair, "semantics": semantics, "lambda": float(lam), "T_lambda": Tl, "T_K1": T1, "T_K2": T2,
            "min_T": m, "margin": Tl - m, "rel_margin": (Tl - m) / m,
            "concavity_defect": Tl**e - (1 - lam) * T1**e - lam * T2**e,
        })
    return rows


def bm_min_check(config: ExperimentConfig, K1: SupportFn, K2: SupportFn, pair: str = "0",
                 serial: bool = False, inner: SupportFn | None = None) -> BMReport:
    """T on the Minkowski segment between K1 and K2 with a common inner body and constant data."""
    lams = list(config.lambdas)
    bodies = [K1, K2] + [convex.minkowski_combine(K1, K2, 1 - lam, lam) for lam in lams]
    recs = pmap(solve_T, [config.problem(K, inner) for K in bodies], serial)
    T1, T2 = recs[0].T, recs[1].T
    rows = _bm_rows(pair, "fixed-inner", lams, T1, T2, [r.T for r in recs[2:]], config.p)
    K0 = config.K0
    meta = {"p": config.p, "mesh": list(config.mesh), "semantics": "fixed-inner",
            "hausdorff_K1": convex.hausdorff(K1, K0), "hausdorff_K2": convex.hausdorff(K2, K0),
            "comparison_violations": int(sum(r.comparison_violations for r in recs))}
    return BMReport(rows, meta, recs)


def bm_concavity_check(config: ExperimentConfig, K1: SupportFn, K2: SupportFn, t1: float | None = None,
                       t2: float | None = None, pair: str = "0", serial: bool = False,
                       setup: TransportedSetup | None = None) -> BMReport:
    """Concavity defect of T^(1/(3-p)) along the segment, in both semantics.

    The transported rows need K1 = K_t1 and K2 = K_t2 in the configured
    family; every K_lambda is then again a family member K_s. For K' = {0}
    the family is a pure dilation and the scaling identity gives T directly.
    """
    if t1 is None and config.pair_t is not None:
        t1, t2 = config.pair_t
    inner = None
    if "scale" not in config.inner_spec:
        # fixed-inner rows reuse the transported inner curve with constant data
        setup = setup or transported_setup(config)
        inner = setup.curve
    rep = bm_min_check(config, K1, K2, pair, serial, inner)
    if t1 is None or t2 is None:
        rep.meta["transported"] = "skipped: pair is not given by family parameters"
        return rep
    Kp = config.Kprime if config.Kprime is not None else convex.origin()
    for t, K in ((t1, K1), (t2, K2)):
        if not family_body(config.K0, Kp, t).allclose(K, atol=1e-9):
            raise ValueError(f"body is not the family member at t={t}")
    lams = list(config.lambdas)
    s = [combination_parameter(t1, t2, lam) for lam in lams]
    q = homogeneity_degree(config.p)
    setup = setup or transported_setup(config)
    if Kp.is_zero():
        T0 = transported_solve(setup, 0.0).T
        Tfam = {t: T0 * (1 + t) ** (-q) for t in [t1, t2, *s]}
        rep.meta["transported"] = "scaling identity (pure dilation family)"
    else:
        ts = [t1, t2, *s]
        recs = pmap(partial(_transported_job, setup), ts, serial)
        Tfam = {t: r.T for t, r in zip(ts, recs)}
        rep.meta["transported"] = "solved"
    rep.rows += _bm_rows(pair, "transported", lams, Tfam[t1], Tfam[t2], [Tfam[x] for x in s], config.p)
    rep.meta["pair_t"] = [t1, t2]
    return rep


# ------------------------------------------------------------------ homogeneity

@dataclass
class HomogeneityReport:
    rows: list
    slope: float
    expected: float
    tol: float

    @property
    def passed(self) -> bool:
        return abs(self.slope - self.expected) <= self.tol


def homogeneity_check(config: ExperimentConfig, lam_list=None, serial: bool = False,
                      base: RingProblem | None = None) -> HomogeneityReport:
    """Slope of log T against log lambda when the whole ring is dilated by lambda."""
    lams = sorted({1.0, *map(float, lam_list if lam_list is not None else config.scales)})
    base = base or config.problem(config.K0)
    recs = pmap(solve_T, [base.scaled(lam) for lam in lams], serial)
    T = np.array([r.T for r in recs])
    slope = float(np.polyfit(np.log(lams), np.log(T), 1)[0])
    q = homogeneity_degree(base.p)
    T1 = T[lams.index(1.0)]
    rows = [{"lambda": lam, "T": Ti, "ratio": Ti / T1, "expected_ratio": lam**q} for lam, Ti in zip(lams, T)]
    return HomogeneityReport(rows, slope, q, config.tolerance("homogeneity_slope"))


# --------------------------------------------------------------------- locality

@dataclass
class LocalityReport:
    r: float
    sweep: list
    refined: list
    R_star: float
    R_star_closed: float
    thin: list
    margins: list
    thin_margins: list
    tol: float

    @property
    def argmin_rel_error(self) -> float:
        return abs(self.R_star - self.R_star_closed) / self.R_star_closed

    @property
    def thin_monotone(self) -> bool:
        T = [row["T"] for row in self.thin]
        return bool(np.all(np.diff(T) < 0))

    @property
    def thin_min_margin(self) -> float:
        return float(min(m["margin"] for m in self.thin_margins))

    @property
    def passed(self) -> bool:
        return self.argmin_rel_error <= self.tol and self.thin_monotone and self.thin_min_margin >= 0


def _disk_T(args) -> float:
    R, r, p, eps0, mesh, reg, tol = args
    return solve_T(RingProblem(convex.disk(R), convex.disk(r), p, eps0, mesh, reg, tol)).T


def _pair_margins(R, T, R_star=None):
    """Min-form margins for every grid radius strictly between two others."""
    out = []
    for i in range(len(R)):
        for j in range(i + 2, len(R)):
            for k in range(i + 1, j):
                lam = (R[k] - R[i]) / (R[j] - R[i])
                m = T[k] - min(T[i], T[j])
                row = {"R1": R[i], "R2": R[j], "lambda": lam, "R_lambda": R[k], "margin": m,
                       "rel_margin": m / min(T[i], T[j])}
                if R_star is not None:
                    row["straddles"] = bool(R[i] < R_star < R[j])
                out.append(row)
    return out


def locality_probe(config: ExperimentConfig, serial: bool = False) -> LocalityReport:
    """T(R) for concentric rings with fixed inner radius: thick sweep around the stationary radius, thin window."""
    loc = config.locality
    p, eps0 = config.p, config.eps0
    r = float(loc["r"])
    lo, hi = (float(f) * r for f in loc["R_factors"])
    mesh = tuple(loc["mesh"])

    def args(R, m, rr):
        return (float(R), rr, p, eps0, m, config.reg_delta, config.tol)

    R = np.geomspace(lo, hi, int(loc["n"]))
    T = pmap(_disk_T, [args(x, mesh, r) for x in R], serial)
    k = int(np.argmin(T))
    a, b = R[max(k - 1, 0)], R[min(k + 1, len(R) - 1)]
    Rr = np.geomspace(a, b, int(loc["n_refine"]))
    Rr[0], Rr[-1] = a, b
    Tr = pmap(_disk_T, [args(x, mesh, r) for x in Rr[1:-1]], serial)
    Tr = [T[max(k - 1, 0)], *Tr, T[min(k + 1, len(R) - 1)]]
    c2, c1, _ = np.polyfit(np.log(Rr), np.log(Tr), 2)
    R_star = float(np.exp(-c1 / (2 * c2)))
    R_closed = float(oracles.stationary_radius(p, r))
    sweep = [{"R": float(x), "T": float(t), "T_closed": float(oracles.annulus_T(p, r, x, eps0))} for x, t in zip(R, T)]
    refined = [{"R": float(x), "T": float(t), "T_closed": float(oracles.annulus_T(p, r, x, eps0))}
               for x, t in zip(Rr, Tr)]
    rt = float(loc["thin_r"])
    Rt = np.linspace(*map(float, loc["thin_R"]), int(loc["thin_n"]))
    Tt = pmap(_disk_T, [args(x, tuple(config.mesh), rt) for x in Rt], serial)
    thin = [{"R": float(x), "T": float(t), "T_closed": float(oracles.annulus_T(p, rt, x, eps0))} for x, t in zip(Rt, Tt)]
    return LocalityReport(r, sweep, refined, R_star, R_closed, thin, _pair_margins(list(R), T, R_closed),
                          _pair_margins(list(Rt), Tt), config.tolerance("locality_argmin"))
