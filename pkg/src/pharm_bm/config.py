"""Experiment configuration: JSON documents with bodies/solver/experiment/output sections."""

from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from . import convex
from .convex import SupportFn
from .errors import ConfigError
from .ring import RingProblem

DEFAULT_TOLERANCES = {
    "oracle_max_error": 1e-3,
    "oracle_seconds": 60.0,
    "functional_rel": 1e-2,
    "functional_gap": 5e-3,
    "homogeneity_slope": 1e-3,
    "hadamard_rel": 5e-2,
    "hadamard_identity": 1e-10,
    "plaphu_sup": 5e-2,
    "ids1_sup": 3e-2,
    "refinement_factor": 1.5,
    "sign_rel": 5e-2,
    "bm_margin_rel": 1e-3,
    "disk_margin_rel": 5e-2,
    "limchar_variation": 2e-2,
    "limchar_ratio": 2e-2,
    "locality_argmin": 2e-2,
    "decay_slack": 5e-2,
}

DEFAULT_LOCALITY = {
    "r": 0.25,
    "R_factors": [1.1, 12.0],
    "n": 12,
    "n_refine": 9,
    "mesh": [256, 128],
    "thin_r": 0.8,
    "thin_R": [0.9, 1.1],
    "thin_n": 11,
}


def _schema() -> dict:
    text = resources.files("pharm_bm").joinpath("schema/experiment.schema.json").read_text()
    return json.loads(text)


def make_body(spec: dict | None) -> SupportFn | None:
    """Body from a ``{"kind": ..., parameters}`` mapping; an optional ``scale`` dilates it.

    A disk of radius 0 is the one-point body {0}.
    """
    if spec is None:
        return None
    kind = spec["kind"]
    if kind == "disk":
        radius = float(spec.get("radius", 1.0))
        center = spec.get("center", [0.0, 0.0])
        if radius == 0.0 and not any(center):
            body = convex.origin()
        else:
            body = convex.disk(radius, center)
    elif kind == "ellipse":
        body = convex.ellipse(spec.get("semi_x", 2.0), spec.get("semi_y", 1.0), spec.get("angle", 0.0),
                              Kmax=spec.get("Kmax", 64))
    elif kind == "fourier":
        body = convex.fourier(spec["c0"], spec.get("a", ()), spec.get("b", ()))
    elif kind == "random":
        body = convex.random_body(spec["seed"], Kmax=spec.get("Kmax", 8), decay=spec.get("decay", 2.0),
                                  amplitude=spec.get("amplitude", 0.1))
    else:
        raise ConfigError(f"unknown body kind {kind!r}")
    scale = spec.get("scale")
    if scale is not None and scale != 1:
        body = convex.origin() if scale == 0 else body.scaled(float(scale))
    return body


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    bodies: dict = field(default_factory=lambda: {"K0": {"kind": "disk", "radius": 1.0},
                                                  "Kprime": {"kind": "disk", "radius": 0.5},
                                                  "inner": {"scale": 0.8}})
    p: float = 2.5
    eps0: float = 1.0
    mesh: tuple[int, int] = (256, 64)
    reg_delta: float = 1e-6
    tol: float = 1e-10
    max_iter: int = 10_000
    semantics: str = "fixed-inner"
    tau: float = 0.05
    n_family: int = 2
    lambdas: list = field(default_factory=lambda: [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
    seeds: list = field(default_factory=lambda: list(range(20)))
    pair_t: list | None = None
    hausdorff_max: float = 0.05
    scales: list = field(default_factory=lambda: [0.9, 1.1, 1.2, 2.0])
    s_list: list = field(default_factory=lambda: [0.1, 0.05, 0.025])
    t_levels: int = 32
    locality: dict = field(default_factory=lambda: dict(DEFAULT_LOCALITY))
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output: Path = Path("runs/experiment")
    plots: bool = True
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def K0(self) -> SupportFn:
        return make_body(self.bodies["K0"])

    @property
    def Kprime(self) -> SupportFn | None:
        return make_body(self.bodies.get("Kprime"))

    def body(self, key: str) -> SupportFn | None:
        return make_body(self.bodies.get(key))

    @property
    def inner_spec(self) -> dict:
        return self.bodies.get("inner", {"scale": 0.8})

    def inner_body(self) -> SupportFn:
        """Fixed inner body for the fixed-inner construction."""
        spec = self.inner_spec
        if "scale" not in spec:
            raise ConfigError("inner body is a presolve level set; use the transported construction")
        return self.K0.scaled(float(spec["scale"]))

    def problem(self, outer: SupportFn, inner: SupportFn | None = None, data=None, mesh=None) -> RingProblem:
        return RingProblem(outer, self.inner_body() if inner is None else inner, self.p,
                           self.eps0 if data is None else data, tuple(mesh or self.mesh),
                           self.reg_delta, self.tol, self.max_iter)

    def tolerance(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "bodies": copy.deepcopy(self.bodies),
            "solver": {"p": self.p, "eps0": self.eps0, "mesh": list(self.mesh), "reg_delta": self.reg_delta,
                       "tol": self.tol, "max_iter": self.max_iter},
            "experiment": {"semantics": self.semantics, "tau": self.tau, "n_family": self.n_family,
                           "lambdas": list(self.lambdas), "seeds": list(self.seeds),
                           **({"pair_t": list(self.pair_t)} if self.pair_t is not None else {}),
                           "hausdorff_max": self.hausdorff_max, "scales": list(self.scales),
                           "s_list": list(self.s_list), "t_levels": self.t_levels,
                           "locality": dict(self.locality), "tolerances": dict(self.tolerances)},
            "output": {"directory": str(self.output), "plots": self.plots},
        }


def from_dict(doc: dict) -> ExperimentConfig:
    """Build a config from an already-validated document, filling defaults."""
    base = ExperimentConfig()
    bodies = dict(base.bodies)
    bodies.update(doc.get("bodies", {}))
    solver = doc.get("solver", {})
    exp = doc.get("experiment", {})
    out = doc.get("output", {})
    locality = dict(DEFAULT_LOCALITY)
    locality.update(exp.get("locality", {}))
    tolerances = dict(DEFAULT_TOLERANCES)
    tolerances.update(exp.get("tolerances", {}))
    return ExperimentConfig(
        name=doc.get("name", base.name),
        bodies=bodies,
        p=float(solver.get("p", base.p)),
        eps0=float(solver.get("eps0", base.eps0)),
        mesh=tuple(solver.get("mesh", base.mesh)),
        reg_delta=float(solver.get("reg_delta", base.reg_delta)),
        tol=float(solver.get("tol", base.tol)),
        max_iter=int(solver.get("max_iter", base.max_iter)),
        semantics=exp.get("semantics", base.semantics),
        tau=float(exp.get("tau", base.tau)),
        n_family=int(exp.get("n_family", base.n_family)),
        lambdas=list(exp.get("lambdas", base.lambdas)),
        seeds=list(exp.get("seeds", base.seeds)),
        pair_t=exp.get("pair_t"),
        hausdorff_max=float(exp.get("hausdorff_max", base.hausdorff_max)),
        scales=list(exp.get("scales", base.scales)),
        s_list=list(exp.get("s_list", base.s_list)),
        t_levels=int(exp.get("t_levels", base.t_levels)),
        locality=locality,
        tolerances=tolerances,
        output=Path(out.get("directory", f"runs/{doc.get('name', base.name)}")),
        plots=bool(out.get("plots", True)),
        raw=doc,
    )


def _line_of(text: str, path) -> int:
    """Best-effort line number of the JSON node at ``path`` (keys and list indices)."""
    pos = 0
    for key in path:
        if isinstance(key, str):
            m = re.compile(r'"%s"\s*:' % re.escape(key)).search(text, pos)
            if m is None:
                break
            pos = m.start()
        else:
            # step into the list and skip ``key`` top-level items
            start = text.find("[", pos)
            if start < 0:
                break
            depth, count, i = 0, 0, start + 1
            while i < len(text) and count < key:
                ch = text[i]
                if ch in "[{":
                    depth += 1
                elif ch in "]}":
                    depth -= 1
                elif ch == "," and depth == 0:
                    count += 1
                i += 1
            pos = i
    return text.count("\n", 0, pos) + 1


def validate(doc: dict, text: str = "", source: str = "<config>") -> None:
    validator = jsonschema.Draft202012Validator(_schema())
    found = []
    for err in validator.iter_errors(doc):
        where = "/".join(map(str, err.absolute_path)) or "(root)"
        ln = _line_of(text, list(err.absolute_path)) if text else 0
        found.append((ln, where, err.message))
    if found:
        raise ConfigError("\n".join(f"{source}:{ln}: {where}: {msg}" for ln, where, msg in sorted(found)))


def loads(text: str, source: str = "<config>") -> ExperimentConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: {exc.msg} (column {exc.colno})") from None
    validate(doc, text, source)
    return from_dict(doc)


def load(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return loads(text, str(path))
