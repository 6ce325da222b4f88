"""CSV/JSON serialization of trajectories, grid functions and reports.

Floats are written with ``repr`` so every value reads back bit-exactly.
Non-finite numbers in reports become the strings ``"inf"``, ``"-inf"``
and ``"nan"`` so the JSON stays standard.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .evolution import Trajectory
from .grid import Grid, GridFunction


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return obj


def dumps(obj) -> str:
    """Deterministic JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _rows(times: np.ndarray, values: np.ndarray):
    for t, row in zip(times, values):
        yield [repr(float(t))] + [repr(float(v)) for v in row]


def write_trajectory_csv(traj: Trajectory, path, component: int | None = None) -> Path:
    """One row per snapshot, header ``t,x0,...,x{n-1}``.

    System trajectories need ``component`` (0 for ``u``, 1 for ``v``).
    """
    path = Path(path)
    vals = traj.values
    if vals.ndim == 3:
        if component is None:
            raise ValueError("system trajectory: choose component 0 or 1")
        vals = vals[:, component, :]
    n = vals.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"x{i}" for i in range(n)])
        w.writerows(_rows(traj.times, vals))
    return path


def read_trajectory_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """``(times, values)`` from :func:`write_trajectory_csv` output."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if not header or header[0] != "t":
            raise ValueError(f"{path}: header must start with 't'")
        data = np.array([[float(v) for v in row] for row in r], dtype=float)
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ValueError(f"{path}: ragged rows")
    return data[:, 0], data[:, 1:]


def write_gridfunction_csv(u: GridFunction, path) -> Path:
    """Two columns ``x,u``."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "u"])
        for x, v in zip(u.x, u.values):
            w.writerow([repr(float(x)), repr(float(v))])
    return path


def read_gridfunction_csv(path, grid: Grid) -> GridFunction:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        next(r)
        vals = [float(row[1]) for row in r]
    return GridFunction(grid, vals)


def trajectory_to_dict(traj: Trajectory) -> dict:
    return {
        "grid": traj.grid.to_dict(),
        "times": traj.times.tolist(),
        "values": traj.values.tolist(),
        "invariants": traj.invariants.tolist(),
        "metadata": _clean(traj.metadata),
    }


def trajectory_from_dict(d: dict) -> Trajectory:
    return Trajectory(Grid.from_dict(d["grid"]), np.array(d["times"], dtype=float),
                      np.array(d["values"], dtype=float), np.array(d["invariants"], dtype=float),
                      dict(d.get("metadata", {})))


def write_trajectory_json(traj: Trajectory, path) -> Path:
    return write_json(trajectory_to_dict(traj), path)


def read_trajectory_json(path) -> Trajectory:
    return trajectory_from_dict(read_json(path))


def write_drift_csv(traj: Trajectory, path) -> Path:
    """Columns ``t,I1,I2,I3`` of the invariant history."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "I1", "I2", "I3"])
        for t, row in zip(traj.times, traj.invariants):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in row])
    return path
