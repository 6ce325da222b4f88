"""Command-line runner.

    bbmlab run --config exp.json [--config more.json ...] [--out DIR] [--parallel]
    bbmlab preset NAME [--param k=v ...] [--out DIR]
    bbmlab list

Exit codes: 0 success, 1 execution or config error, 2 a hypothesis check
failed (a unique-continuation report with verdict HypothesisFails).
``BBMLAB_THREADS`` caps the number of configs run at once under
``--parallel``.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import io
from .config import ConfigError, ExperimentConfig, execute
from .presets import PRESETS, ExperimentResult, list_presets

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_HYPOTHESIS = 2


def versions() -> dict:
    return {"bbmlab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def write_artifacts(result: ExperimentResult, out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    paths = [io.write_json(result.report, out / "report.json")]
    for name, traj in sorted(result.trajectories.items()):
        paths.append(io.write_trajectory_csv(traj, out / f"{name}.csv"))
    for name, u in sorted(result.functions.items()):
        paths.append(io.write_gridfunction_csv(u, out / f"{name}.csv"))
    for name, traj in sorted(result.drift_tables.items()):
        paths.append(io.write_drift_csv(traj, out / f"{name}_drift.csv"))
    return paths


def run(cfg: ExperimentConfig, out: Path) -> tuple[dict, int]:
    """Execute one config, write its artifacts and manifest; returns ``(manifest, exit_code)``.

    The manifest's ``digest`` hashes the config echo and the artifact
    hashes only, so it is identical across repeated runs even though the
    wall-clock field is not.
    """
    start = time.perf_counter()
    result = execute(cfg)
    paths = write_artifacts(result, out)
    artifacts = [{"path": p.name, "sha256": io.sha256_file(p)} for p in paths]
    echo = cfg.to_dict()
    digest = hashlib.sha256(io.dumps({"config": echo, "artifacts": artifacts}).encode()).hexdigest()
    manifest = {
        "config": echo,
        "versions": versions(),
        "wall_clock_seconds": time.perf_counter() - start,
        "artifacts": artifacts,
        "digest": digest,
        "hypothesis_failed": result.hypothesis_failed,
        "summary": _summary(result.report),
    }
    io.write_json(manifest, out / "manifest.json")
    return manifest, EXIT_HYPOTHESIS if result.hypothesis_failed else EXIT_OK


def _summary(report: dict) -> dict:
    keys = ("sup_drift", "verdict", "lambda0", "Q", "final_relative_error", "max_u_difference",
            "residual_on_interval", "max_dt_on_interval", "gain_measured", "refinement_verdict",
            "max_distance_cells", "drift")
    return {k: report[k] for k in keys if k in report}


def _run_one(args) -> tuple[str, int, str]:
    cfg, out = args
    try:
        manifest, code = run(cfg, out)
        return cfg.name, code, f"{cfg.name}: wrote {len(manifest['artifacts'])} artifacts to {out}"
    except Exception as exc:  # surfaced with experiment context
        return cfg.name, EXIT_ERROR, f"{cfg.name}: {type(exc).__name__}: {exc}"


def _max_workers(n_jobs: int) -> int:
    cap = os.environ.get("BBMLAB_THREADS")
    limit = os.cpu_count() or 1
    if cap:
        try:
            limit = max(1, int(cap))
        except ValueError:
            raise ConfigError(f"BBMLAB_THREADS must be a positive integer, got {cap!r}") from None
    return max(1, min(n_jobs, limit))


def _combine(codes) -> int:
    codes = list(codes)
    if EXIT_ERROR in codes:
        return EXIT_ERROR
    if EXIT_HYPOTHESIS in codes:
        return EXIT_HYPOTHESIS
    return EXIT_OK


def _out_dir(cfg: ExperimentConfig, base: str | None, multiple: bool) -> Path:
    if base is None:
        return Path(cfg.output_dir or Path("bbmlab-out") / cfg.name)
    return Path(base) / cfg.name if multiple else Path(base)


def cmd_run(ns) -> int:
    cfgs = [ExperimentConfig.load(p) for p in ns.config]
    jobs = [(c, _out_dir(c, ns.out, len(cfgs) > 1)) for c in cfgs]
    if ns.parallel and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=_max_workers(len(jobs))) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    for _, code, msg in results:
        print(msg, file=sys.stderr if code == EXIT_ERROR else sys.stdout)
    return _combine(code for _, code, _ in results)


def _parse_params(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--param expects k=v, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def cmd_preset(ns) -> int:
    if ns.name not in PRESETS:
        raise ConfigError(f"unknown preset {ns.name!r}; run `list` for the catalog")
    cfg = ExperimentConfig.from_dict({"name": ns.name, "experiment": ns.name, "params": _parse_params(ns.param)},
                                     source="--param")
    _, code, msg = _run_one((cfg, _out_dir(cfg, ns.out, False)))
    print(msg, file=sys.stderr if code == EXIT_ERROR else sys.stdout)
    return code


def cmd_list(ns) -> int:
    for entry in list_presets():
        print(f"{entry['name']:<24} [{', '.join(entry['tags'])}] {entry['summary']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bbmlab", description="BBM / Camassa-Holm numerical laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run experiment configs")
    p.add_argument("--config", action="append", required=True, help="JSON config (repeatable)")
    p.add_argument("--out", help="output directory (one subdirectory per config when several are given)")
    p.add_argument("--parallel", action="store_true", help="run the configs concurrently")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("preset", help="run a named experiment")
    p.add_argument("name")
    p.add_argument("--param", action="append", metavar="K=V", help="override a preset parameter")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_preset)
    p = sub.add_parser("list", help="list experiment presets")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        return ns.func(ns)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
