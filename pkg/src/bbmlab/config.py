"""Declarative experiment configuration: strict JSON schema and the generic runner.

A config either names an experiment preset (``"experiment"`` plus
``"params"``) or describes an evolution from scratch with ``domain``,
``initial_data``, ``solver`` and ``diagnostics``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import diagnostics as dg
from . import unique_continuation as uc
from .data import SpectralLaw, abs_sine, bump, constant, inline_samples, sine
from .evolution import METHODS, SolverConfig, evolve, peakon
from .grid import Grid, GridFunction
from .presets import PRESETS, ExperimentResult, coerce_params


class ConfigError(ValueError):
    """A config that cannot be parsed or fails the schema."""


DATA_PRESETS = {
    "constant": {"value": 0.0},
    "sine": {"amplitude": 0.1, "mode": 1},
    "abs-sine": {"amplitude": 1.0},
    "stationary-step": {"c0": -2.0, "a": 0.25, "b": 0.75},
    "peakon": {"c": 1.0},
    "bump": {"left": 0.25, "right": 0.75, "amplitude": 1.0},
    "gaussian": {"center": 0.5, "width": 0.1, "amplitude": 1.0},
}

DIAGNOSTICS = ("drift", "sup_drift", "regularity", "singularity", "a_decomposition", "tha4", "ch_uc", "peak")

_number = {"type": "number"}
_params = {"type": "object", "additionalProperties": {"type": ["number", "string", "boolean", "integer"]}}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name"],
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "seed": {"type": "integer", "minimum": 0},
        "experiment": {"enum": sorted(PRESETS)},
        "params": _params,
        "equation": {"enum": ["bbm", "ch"]},
        "domain": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "n_points"],
            "properties": {
                "kind": {"enum": ["circle", "line"]},
                "n_points": {"type": "integer", "minimum": 8},
                "left": _number,
                "right": _number,
            },
        },
        "initial_data": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "preset": {"enum": sorted(DATA_PRESETS)},
                "params": _params,
                "samples": {"type": "array", "items": _number},
                "spectral_law": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["slope"],
                    "properties": {"slope": _number, "seed": {"type": "integer", "minimum": 0},
                                   "amplitude": _number, "k_max": {"type": ["integer", "null"], "minimum": 1}},
                },
            },
            "oneOf": [{"required": ["preset"]}, {"required": ["samples"]}, {"required": ["spectral_law"]}],
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "method": {"enum": list(METHODS)},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "t_final": {"type": "number", "exclusiveMinimum": 0},
                "picard_tol": {"type": "number", "exclusiveMinimum": 0},
                "picard_max_iter": {"type": "integer", "minimum": 1},
                "snapshot_stride": {"type": "integer", "minimum": 1},
            },
        },
        "diagnostics": {
            "type": "array",
            "items": {
                "oneOf": [
                    {"enum": list(DIAGNOSTICS)},
                    {"type": "object", "additionalProperties": False, "required": ["kind"],
                     "properties": {"kind": {"enum": list(DIAGNOSTICS)}, "params": _params}},
                ]
            },
        },
        "output_dir": {"type": "string"},
    },
    "oneOf": [{"required": ["experiment"]}, {"required": ["domain", "initial_data"]}],
}


def _line_of(text: str, pos: int) -> int:
    return text.count("\n", 0, pos) + 1


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    seed: int = 0
    experiment: str | None = None
    params: dict = field(default_factory=dict)
    equation: str = "bbm"
    domain: dict | None = None
    initial_data: dict | None = None
    solver: dict = field(default_factory=dict)
    diagnostics: tuple = ()
    output_dir: str | None = None

    @classmethod
    def from_dict(cls, d: dict, source: str = "<config>") -> "ExperimentConfig":
        validator = jsonschema.Draft202012Validator(SCHEMA)
        errors = sorted(validator.iter_errors(d), key=lambda e: list(e.absolute_path))
        if errors:
            msgs = []
            for e in errors[:5]:
                where = ".".join(str(p) for p in e.absolute_path) or "<root>"
                msgs.append(f"{source}: field {where}: {e.message}")
            raise ConfigError("\n".join(msgs))
        if d.get("experiment") is not None:
            try:
                coerce_params(PRESETS[d["experiment"]].defaults, d.get("params", {}))
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"{source}: field params: {exc}") from None
        init = d.get("initial_data") or {}
        if "preset" in init:
            try:
                coerce_params(DATA_PRESETS[init["preset"]], init.get("params", {}))
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"{source}: field initial_data.params: {exc}") from None
        diags = tuple(x if isinstance(x, dict) else {"kind": x} for x in d.get("diagnostics", []))
        return cls(d["name"], d.get("seed", 0), d.get("experiment"), dict(d.get("params", {})),
                   d.get("equation", "bbm"), d.get("domain"), d.get("initial_data"), dict(d.get("solver", {})),
                   diags, d.get("output_dir"))

    @classmethod
    def from_json(cls, text: str, source: str = "<config>") -> "ExperimentConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        if not isinstance(d, dict):
            raise ConfigError(f"{source}: line 1: top level must be an object")
        return cls.from_dict(d, source)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        return cls.from_json(path.read_text(), str(path))

    def to_dict(self) -> dict:
        out = {"name": self.name, "seed": self.seed, "equation": self.equation}
        if self.experiment is not None:
            out["experiment"] = self.experiment
            out["params"] = dict(self.params)
        else:
            out["domain"] = self.domain
            out["initial_data"] = self.initial_data
            out["solver"] = dict(self.solver)
            out["diagnostics"] = [dict(x) for x in self.diagnostics]
        if self.output_dir is not None:
            out["output_dir"] = self.output_dir
        return out


def build_grid(domain: dict) -> Grid:
    if domain["kind"] == "circle":
        return Grid.circle(domain["n_points"])
    return Grid.line(domain.get("left", -20.0), domain.get("right", 20.0), domain["n_points"])


def build_initial_data(spec: dict, grid: Grid, seed: int = 0) -> tuple[GridFunction, SpectralLaw | None]:
    """The initial datum and, for spectral laws, the law itself (needed for refinement)."""
    if "samples" in spec:
        return inline_samples(grid, spec["samples"]), None
    if "spectral_law" in spec:
        sl = spec["spectral_law"]
        law = SpectralLaw(sl["slope"], sl.get("seed", seed), sl.get("amplitude", 0.1), sl.get("k_max"))
        return law.sample(grid), law
    name = spec["preset"]
    p = coerce_params(DATA_PRESETS[name], spec.get("params", {}))
    x = grid.x
    if name == "constant":
        return constant(grid, p["value"]), None
    if name == "sine":
        return sine(grid, p["amplitude"], p["mode"]), None
    if name == "abs-sine":
        return abs_sine(grid, p["amplitude"]), None
    if name == "stationary-step":
        return uc.stationary_step(p["c0"], p["a"], p["b"], grid), None
    if name == "peakon":
        return peakon(p["c"], 0.0, grid), None
    if name == "bump":
        return GridFunction(grid, p["amplitude"] * bump(x, p["left"], p["right"])), None
    return GridFunction(grid, p["amplitude"] * np.exp(-(((x - p["center"]) / p["width"]) ** 2))), None


def _diagnostic(kind: str, params: dict, traj, u0: GridFunction, law, equation: str) -> tuple[dict, bool]:
    final = traj.final
    if kind == "drift":
        return dg.drift_report(traj).to_dict(), False
    if kind == "sup_drift":
        return {"sup_drift": traj.sup_drift()}, False
    if kind == "regularity":
        p = coerce_params({"s": 0.5, "k_min": 8, "k_max": 128, "refine": law is not None}, params)
        rep = dg.regularity_gain(u0, traj, p["s"], (p["k_min"], p["k_max"]), law if p["refine"] else None)
        return rep.to_dict(), False
    if kind == "singularity":
        p = coerce_params({"j": 1, "eta": 0.0, "threshold": 20.0}, params)
        snaps = [{"t": float(t), **dg.singularity_localize(u, p["j"], p["eta"], p["threshold"]).to_dict()}
                 for t, u in zip(traj.times, traj.states)]
        return {"snapshots": snaps}, False
    if kind == "peak":
        return {"peak_positions": [dg.track_peak(u) for u in traj.states]}, False
    p = coerce_params({"a": 0.3, "b": 0.6, "c0": 0.0, "branch": "cond1"}, params)
    if kind == "a_decomposition":
        rep = uc.a_decomposition(final, p["a"], p["b"])
    elif kind == "tha4":
        rep = uc.uc_verdict_tha4(final, p["a"], p["b"], p["c0"], p["branch"])
    else:
        rep = uc.ch_uc_check(final, p["a"], p["b"])
    return rep.to_dict(), rep.verdict == uc.HYPOTHESIS_FAILS


def execute(cfg: ExperimentConfig) -> ExperimentResult:
    """Run a config: its preset if it names one, else the described evolution and diagnostics."""
    if cfg.experiment is not None:
        return PRESETS[cfg.experiment].run(coerce_params(PRESETS[cfg.experiment].defaults, cfg.params))
    grid = build_grid(cfg.domain)
    u0, law = build_initial_data(cfg.initial_data, grid, cfg.seed)
    solver = SolverConfig(**cfg.solver)
    traj = evolve(u0, solver, equation=cfg.equation)
    reports = {}
    failed = False
    for d in cfg.diagnostics:
        rep, bad = _diagnostic(d["kind"], d.get("params", {}), traj, u0, law, cfg.equation)
        reports[d["kind"]] = rep
        failed = failed or bad
    report = {"grid": grid.to_dict(), "solver": solver.to_dict(), "equation": cfg.equation,
              "warnings": traj.metadata.get("warnings", []), "diagnostics": reports}
    drift = {"invariants": traj} if grid.is_circle and cfg.equation == "bbm" else {}
    return ExperimentResult(report, trajectories={"trajectory": traj}, drift_tables=drift, hypothesis_failed=failed)
