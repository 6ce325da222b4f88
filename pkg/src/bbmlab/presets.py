"""Named experiments, each tied to the result it exercises.

A preset is a function of a flat parameter dictionary that returns an
:class:`ExperimentResult`: a JSON report, optional trajectories and grid
functions to write, and whether a hypothesis check failed.  Defaults are
desk-scale and each preset finishes well within a minute.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import diagnostics as dg
from . import unique_continuation as uc
from .data import SpectralLaw, abs_sine, bump, periodic_bump, sine
from .evolution import SolverConfig, SystemCoefficients, Trajectory, evolve, evolve_system
from .grid import Grid, GridFunction


@dataclass
class ExperimentResult:
    report: dict
    trajectories: dict = field(default_factory=dict)
    functions: dict = field(default_factory=dict)
    drift_tables: dict = field(default_factory=dict)
    hypothesis_failed: bool = False


@dataclass(frozen=True)
class Preset:
    name: str
    tags: tuple
    summary: str
    defaults: dict
    run: Callable[[dict], ExperimentResult]

    def catalog_entry(self) -> dict:
        return {"name": self.name, "tags": list(self.tags), "summary": self.summary, "defaults": dict(self.defaults)}


def coerce_params(defaults: dict, overrides: dict) -> dict:
    """Merge ``overrides`` into ``defaults``, casting strings to the default's type."""
    out = dict(defaults)
    for key, val in overrides.items():
        if key not in defaults:
            raise KeyError(f"unknown parameter {key!r}; expected one of {sorted(defaults)}")
        ref = defaults[key]
        if isinstance(val, str) and not isinstance(ref, str):
            if isinstance(ref, bool):
                low = val.lower()
                if low not in ("true", "false", "1", "0"):
                    raise ValueError(f"parameter {key!r} expects a boolean, got {val!r}")
                val = low in ("true", "1")
            elif isinstance(ref, int):
                val = int(val)
            else:
                val = float(val)
        elif isinstance(ref, float) and isinstance(val, int) and not isinstance(val, bool):
            val = float(val)
        out[key] = val
    return out


def _line(p) -> Grid:
    return Grid.line(p["left"], p["right"], p["n_points"])


# ----------------------------------------------------------------------------


def _zz1(p) -> ExperimentResult:
    if p["domain"] == "circle":
        grid = Grid.circle(p["n_points"])
    else:
        grid = Grid.line(-20.0, 20.0, p["n_points"])
    u0 = uc.stationary_step(p["c0"], p["a"], p["b"], grid)
    cfg = SolverConfig(dt=p["dt"], t_final=p["t_final"], snapshot_stride=p["stride"])
    traj = evolve(u0, cfg)
    drift = traj.sup_drift()
    report = {"c0": p["c0"], "outer_level": uc.conjugate_level(p["c0"]), "sup_drift": drift,
              "within_1e-10": drift <= 1e-10, "grid": grid.to_dict()}
    return ExperimentResult(report, trajectories={"trajectory": traj})


def _tha2(p) -> ExperimentResult:
    grid = Grid.circle(p["n_points"])
    u = GridFunction(grid, -1.0 + p["amplitude"] * periodic_bump(grid.x, p["bump_left"], p["bump_right"]))
    rep = uc.a_decomposition(u, p["a"], p["b"])
    return ExperimentResult(rep.to_dict(), functions={"slice": u},
                            hypothesis_failed=rep.verdict == uc.HYPOTHESIS_FAILS)


def _tha3(p) -> ExperimentResult:
    con = uc.construct_tha3(p["c0"], p["b"], p["M"])
    return ExperimentResult(con.to_dict(), functions={"u0": con.u0})


def _thap3(p) -> ExperimentResult:
    grid = Grid.circle(p["n_points"])
    res = uc.construct_thap3(p["c0"], p["a"], p["b"], grid)
    cfg = SolverConfig(dt=p["dt"], t_final=4 * p["dt"])
    rate = dg.initial_rate(evolve(res.v0, cfg))
    ia, ib = grid.nearest_index(res.a), grid.nearest_index(res.b)
    report = res.to_dict()
    report["trajectory_endpoint_rate_difference"] = float(rate[ib] - rate[ia])
    return ExperimentResult(report, functions={"v0": res.v0})


def _tha4(p) -> ExperimentResult:
    grid = Grid.circle(p["n_points"])
    x = grid.x
    c0 = p["c0"]
    amp = p["amplitude"]
    # c0 +- amp bumps with f below f(c0) inside, above outside (cond1 sign pattern for c0 > -1)
    u = c0 - amp * bump(x, p["a"], p["b"]) + amp * periodic_bump(x, p["b"] + 0.05, p["a"] + 0.95)
    u = GridFunction(grid, u)
    rep = uc.uc_verdict_tha4(u, p["a"], p["b"], c0, p["branch"])
    return ExperimentResult(rep.to_dict(), functions={"slice": u},
                            hypothesis_failed=rep.verdict == uc.HYPOTHESIS_FAILS)


def _regularity(p) -> ExperimentResult:
    law = SpectralLaw(p["slope"], p["seed"], p["amplitude"])
    grid = Grid.circle(p["n_points"])
    u0 = law.sample(grid)
    cfg = SolverConfig(dt=p["dt"], t_final=p["t_final"], snapshot_stride=int(round(p["t_final"] / p["dt"])))
    traj = evolve(u0, cfg)
    s = p["slope"] - 0.5
    rep = dg.regularity_gain(u0, traj, s, (p["k_min"], p["k_max"]), law if p["refine"] else None)
    report = rep.to_dict()
    report["law"] = law.to_dict()
    return ExperimentResult(report, trajectories={"trajectory": traj})


def _singularity(p) -> ExperimentResult:
    grid = Grid.circle(p["n_points"])
    u0 = abs_sine(grid)
    cfg = SolverConfig(dt=p["dt"], t_final=p["t_final"], snapshot_stride=p["stride"])
    traj = evolve(u0, cfg)
    rows = []
    worst = 0.0
    for t, u in zip(traj.times, traj.states):
        s = dg.singularity_localize(u, p["j"], p["eta"])
        dist = dg.circle_distance(s.points, 0.0) / grid.spacing if s.points.size else np.array([np.inf])
        worst = max(worst, float(np.max(dist)))
        rows.append({"t": float(t), "points": s.to_dict()["points"]})
    report = {"snapshots": rows, "max_distance_cells": worst, "detector_scale": [p["j"], p["eta"]]}
    return ExperimentResult(report, trajectories={"trajectory": traj})


def _peakon(p) -> ExperimentResult:
    grid = _line(p)
    from .evolution import peakon

    u0 = peakon(p["c"], 0.0, grid)
    cfg = SolverConfig(dt=p["dt"], t_final=p["t_final"], snapshot_stride=p["stride"])
    traj = evolve(u0, cfg, equation="ch")
    pos = [dg.track_peak(u) for u in traj.states]
    t_end = float(traj.times[-1])
    rel = abs(pos[-1] - p["c"] * t_end) / abs(p["c"] * t_end)
    report = {"times": traj.times.tolist(), "peak_positions": pos, "final_relative_error": rel,
              "within_2_percent": rel <= 0.02, "c": p["c"]}
    return ExperimentResult(report, trajectories={"trajectory": traj})


def _ch_uc(p) -> ExperimentResult:
    grid = _line(p)
    u = GridFunction(grid, p["amplitude"] * bump(grid.x, p["bump_left"], p["bump_right"]))
    rep = uc.ch_uc_check(u, p["a"], p["b"])
    return ExperimentResult(rep.to_dict(), functions={"slice": u},
                            hypothesis_failed=rep.verdict == uc.HYPOTHESIS_FAILS)


def _conservation(p) -> ExperimentResult:
    grid = Grid.circle(p["n_points"])
    u0 = sine(grid, p["amplitude"])
    cfg = SolverConfig(method=p["method"], dt=p["dt"], t_final=p["t_final"], snapshot_stride=p["stride"])
    traj = evolve(u0, cfg)
    rep = dg.drift_report(traj)
    report = {"drift": rep.to_dict(), "initial": traj.invariants[0].tolist()}
    return ExperimentResult(report, drift_tables={"invariants": traj})


def _sys(p) -> ExperimentResult:
    grid = Grid.circle(p["n_points"])
    u0 = sine(grid, p["amplitude"])
    v0 = GridFunction(grid, np.zeros(grid.n_points))
    cfg = SolverConfig(dt=p["dt"], t_final=p["t_final"], snapshot_stride=p["stride"])
    sys_traj = evolve_system(u0, v0, SystemCoefficients(A=0.5), cfg)
    scalar = evolve(u0, cfg)
    diff = float(np.max(np.abs(sys_traj.values[:, 0, :] - scalar.values)))
    v_max = float(np.max(np.abs(sys_traj.values[:, 1, :])))
    report = {"max_u_difference": diff, "max_abs_v": v_max, "within_1e-10": diff <= 1e-10}
    return ExperimentResult(report, trajectories={"system_u": _component(sys_traj, 0)})


def _component(traj: Trajectory, i: int) -> Trajectory:
    return Trajectory(traj.grid, traj.times, traj.values[:, i, :], metadata=traj.metadata)


PRESETS: dict[str, Preset] = {
    p.name: p
    for p in [
        Preset("zz1-stationary", ("THA2",),
               "two-level step c0 / -2-c0 is a stationary weak solution; records sup drift",
               {"c0": -2.0, "a": 0.25, "b": 0.75, "domain": "circle", "n_points": 512, "dt": 1e-3,
                "t_final": 5.0, "stride": 500}, _zz1),
        Preset("tha2-check", ("THA2", "THAP2"),
               "four-term identity on u = -1 over [a, b] plus a bump; nonzero amplitude breaks dt u(b) >= dt u(a)",
               {"a": 0.3, "b": 0.6, "n_points": 1024, "amplitude": 0.0, "bump_left": 0.7, "bump_right": 0.95},
               _tha2),
        Preset("tha3-construct", ("THA3",),
               "compactly supported line data equal to c0 on [0, b] with dt u = 0 there",
               {"c0": 1.0, "b": 1.0, "M": 24.0}, _tha3),
        Preset("thap3-construct", ("THAP3",),
               "periodic data equal to c0 on [a, b] with equal endpoint rates, by bisection on Q",
               {"c0": 0.0, "a": 0.3, "b": 0.6, "n_points": 1280, "dt": 1e-3}, _thap3),
        Preset("tha4-check", ("THA4", "THAP4"),
               "sign hypotheses for a general level c0; the identity contradicts the endpoint inequality",
               {"c0": 0.0, "a": 0.3, "b": 0.6, "n_points": 1024, "amplitude": 0.5, "branch": "cond1"}, _tha4),
        Preset("regularity-gain", ("TH1", "TH1b", "TH1c", "TH1d"),
               "spectral decay gain of u(t) - u0 and the grid-refinement test",
               {"slope": 0.9, "seed": 0, "amplitude": 0.1, "n_points": 1024, "dt": 1e-3, "t_final": 0.5,
                "k_min": 8, "k_max": 128, "refine": True}, _regularity),
        Preset("singularity-persistence", ("TH1",),
               "the kink of |sin(pi x)| stays at x = 0 under the flow",
               {"n_points": 2048, "dt": 1e-3, "t_final": 1.0, "stride": 100, "j": 1, "eta": 0.0}, _singularity),
        Preset("peakon-speed", ("IVPCH1",),
               "Camassa-Holm peakon c exp(-|x - ct|): tracked crest against ct",
               {"c": 1.0, "left": -30.0, "right": 30.0, "n_points": 8192, "dt": 1e-3, "t_final": 0.5,
                "stride": 50}, _peakon),
        Preset("ch-uc-check", ("IVPCH2",),
               "Camassa-Holm data vanishing on [a, b] with a bump outside: dt u strictly decreases on [a, b]",
               {"a": -1.0, "b": 1.0, "left": -30.0, "right": 30.0, "n_points": 6001, "amplitude": 0.5,
                "bump_left": 2.0, "bump_right": 4.0}, _ch_uc),
        Preset("conservation", ("cons",),
               "drift of the three conserved functionals for 0.1 sin(2 pi x)",
               {"amplitude": 0.1, "n_points": 512, "dt": 1e-3, "t_final": 10.0, "stride": 100, "method": "rk4"},
               _conservation),
        Preset("sys-bbm-reduction", ("sys-bbm",),
               "coupled system with v0 = 0, D = 0, A = 1/2 reproduces scalar BBM",
               {"amplitude": 0.1, "n_points": 512, "dt": 1e-3, "t_final": 1.0, "stride": 100}, _sys),
    ]
}


def list_presets() -> list[dict]:
    """Catalog of experiment presets, sorted by name."""
    return [PRESETS[k].catalog_entry() for k in sorted(PRESETS)]


def run_preset(name: str, params: dict | None = None) -> ExperimentResult:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; see `list`")
    preset = PRESETS[name]
    return preset.run(coerce_params(preset.defaults, params or {}))
