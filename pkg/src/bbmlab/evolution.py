"""Time integration of BBM, Camassa-Holm and the coupled BBM system.

All right-hand sides are written through the bounded operator ``phi(D)``::

    BBM:    u_t = -phi(D)(u + u^2/2)
    CH:     u_t = -u u_x - phi(D)(u^2 + u_x^2/2)
    system: u_t = -phi(D)(u + A u^2 + B uv + C v^2)
            v_t = -phi(D)(v + D u^2 + E uv + F v^2)

Because ``|phi(xi)| <= 1/2`` the BBM flow is not stiff and explicit RK4 runs at
a resolution-independent step size.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .grid import Grid, GridError, GridFunction
from .operators import _phi_symbol_half, check_line_support, exp_sweeps, phi_circle

PICARD = "picard"
RK4 = "rk4"
EXP_DUHAMEL = "exp_duhamel"
METHODS = (PICARD, RK4, EXP_DUHAMEL)

BLOWUP_THRESHOLD = 1e6


class EvolutionError(RuntimeError):
    """A time integration could not be completed."""


class PicardConvergenceError(EvolutionError):
    def __init__(self, message: str, residuals: list[float]):
        super().__init__(message)
        self.residuals = residuals


@dataclass(frozen=True)
class SolverConfig:
    method: str = RK4
    dt: float = 1e-3
    t_final: float = 1.0
    picard_tol: float = 1e-13
    picard_max_iter: int = 60
    snapshot_stride: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_final >= self.dt:
            raise ValueError("need dt <= t_final")
        if not self.picard_tol > 0:
            raise ValueError("picard_tol must be positive")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_final / self.dt)))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SystemCoefficients:
    A: float = 0.5
    B: float = 0.0
    C: float = 0.0
    D: float = 0.0
    E: float = 0.0
    F: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in asdict(self).values()):
            raise ValueError("system coefficients must be finite")


@dataclass
class Trajectory:
    """Snapshots of an evolution.

    ``values`` has shape ``(n_snapshots, n_points)`` for scalar equations and
    ``(n_snapshots, 2, n_points)`` for the system.  ``invariants`` holds one
    ``(I1, I2, I3)`` row per snapshot for scalar circle runs, else is empty.
    """

    grid: Grid
    times: np.ndarray
    values: np.ndarray
    invariants: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.size == 0 or self.times[0] != 0.0:
            raise ValueError("trajectory must start at t = 0")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must increase")
        if self.values.shape[0] != self.times.size:
            raise ValueError("times and snapshots have different lengths")
        self.invariants = np.asarray(self.invariants, dtype=float).reshape(-1, 3)
        if self.invariants.shape[0] not in (0, self.times.size):
            raise ValueError("invariant history length does not match the snapshots")

    @property
    def states(self) -> list[GridFunction]:
        if self.values.ndim != 2:
            raise ValueError("system trajectory: use component(i)")
        return [GridFunction(self.grid, v) for v in self.values]

    def component(self, i: int) -> list[GridFunction]:
        return [GridFunction(self.grid, v[i]) for v in self.values]

    @property
    def final(self) -> GridFunction:
        return GridFunction(self.grid, self.values[-1])

    def sup_drift(self) -> float:
        """``max_t ||u(t) - u(0)||_inf``."""
        return float(np.max(np.abs(self.values - self.values[0])))


# ----------------------------------------------------------------------------
# right-hand sides on raw arrays


def _phi(values: np.ndarray, grid: Grid, line_order: int) -> np.ndarray:
    if grid.is_circle:
        # phi kills constants; removing one sample first makes constant payloads exactly zero
        return phi_circle(values - values[..., :1])
    # beyond the window the payload is continued by its edge values (zero for decaying data)
    P, R = exp_sweeps(values, grid.spacing, line_order)
    d = grid.spacing * np.arange(grid.n_points)
    P = P + values[..., :1] * np.exp(-d)
    R = R + values[..., -1:] * np.exp(-d[::-1])
    return 0.5 * (R - P)


def _dx(values: np.ndarray, grid: Grid) -> np.ndarray:
    if grid.is_circle:
        n = grid.n_points
        k = np.arange(n // 2 + 1, dtype=float)
        mult = 2j * np.pi * k
        mult[-1] = 0.0
        return np.fft.irfft(np.fft.rfft(values) * mult, n)
    # fourth-order centered interior stencil; second order in the two outer cells
    h = grid.spacing
    out = np.gradient(values, h, edge_order=2)
    out[2:-2] = (values[:-4] - 8.0 * values[1:-3] + 8.0 * values[3:-1] - values[4:]) / (12.0 * h)
    return out


def _bbm(values, grid, line_order=2):
    return -_phi(values + 0.5 * values * values, grid, line_order)


def _ch(values, grid, line_order=2):
    ux = _dx(values, grid)
    return -values * ux - _phi(values * values + 0.5 * ux * ux, grid, line_order)


def _system(uv, grid, coeffs: SystemCoefficients, line_order=2):
    u, v = uv[0], uv[1]
    c = coeffs
    pu = u + c.A * u * u + c.B * u * v + c.C * v * v
    pv = v + c.D * u * u + c.E * u * v + c.F * v * v
    return -np.stack([_phi(pu, grid, line_order), _phi(pv, grid, line_order)])


# ----------------------------------------------------------------------------
# public right-hand sides


def _warn_support(payload: np.ndarray, grid: Grid):
    if grid.is_circle:
        return ()
    return check_line_support(GridFunction(grid, payload))


def bbm_rhs(u: GridFunction, line_order: int = 2) -> GridFunction:
    """``-phi(D)(u + u^2/2)``.

    >>> from bbmlab.grid import Grid
    >>> g = Grid.circle(64)
    >>> float(abs(bbm_rhs(GridFunction(g, np.full(64, 0.3))).values).max())
    0.0
    """
    return GridFunction(u.grid, _bbm(u.values, u.grid, line_order))


def ch_rhs(u: GridFunction, line_order: int = 2) -> GridFunction:
    """``-u u_x - phi(D)(u^2 + u_x^2/2)``; ``u_x`` spectral on the circle, fourth-order centered on the line."""
    return GridFunction(u.grid, _ch(u.values, u.grid, line_order))


def system_rhs(u: GridFunction, v: GridFunction, coeffs: SystemCoefficients, line_order: int = 2):
    if u.grid != v.grid:
        raise GridError("u and v live on different grids")
    out = _system(np.stack([u.values, v.values]), u.grid, coeffs, line_order)
    return GridFunction(u.grid, out[0]), GridFunction(u.grid, out[1])


def time_derivative(u: GridFunction, line_order: int = 2) -> GridFunction:
    """``u_t`` of the BBM flow at the state ``u``."""
    return bbm_rhs(u, line_order)


def time_derivative2(u: GridFunction, line_order: int = 2) -> GridFunction:
    """``u_tt = -phi(D)(u_t + u u_t)`` with ``u_t = -phi(D)(u + u^2/2)``."""
    ut = _bbm(u.values, u.grid, line_order)
    return GridFunction(u.grid, -_phi(ut + u.values * ut, u.grid, line_order))


def peakon(c: float, t: float, grid: Grid, tol: float = 1e-10) -> GridFunction:
    """Samples of the Camassa-Holm peakon ``c exp(-|x - c t|)``."""
    if grid.is_circle:
        raise GridError("peakons are sampled on line grids")
    centre = c * t
    margin = min(centre - grid.left, grid.right - centre)
    if margin <= 0 or math.exp(-margin) >= tol:
        raise GridError(f"peak at {centre} is within {margin:.3g} of the window edge")
    return GridFunction(grid, c * np.exp(-np.abs(grid.x - centre)))


# ----------------------------------------------------------------------------
# integrators


def _invariants_row(values: np.ndarray, grid: Grid) -> np.ndarray:
    from .diagnostics import invariant_values

    return np.array(invariant_values(values, grid))


def contraction_window(u0: GridFunction) -> float:
    """Sufficient Picard window ``1 / (4 (1 + ||u0||_inf))``."""
    return 1.0 / (4.0 * (1.0 + float(np.max(np.abs(u0.values)))))


def picard_solve(u0: GridFunction, cfg: SolverConfig, line_order: int = 2) -> Trajectory:
    """Fixed point of ``v -> u0 - int_0^t phi(D)(v + v^2/2) dt'`` over the whole window.

    The time integral is the composite trapezoid rule on the ``dt`` grid.
    Convergence is declared when two successive iterates differ by less
    than ``picard_tol`` in sup norm over every time level.
    """
    if cfg.method != PICARD:
        raise ValueError("picard_solve expects a config with method='picard'")
    window = contraction_window(u0)
    if cfg.t_final > window:
        raise EvolutionError(
            f"t_final={cfg.t_final} exceeds the contraction window {window:.6g}; use a smaller t_final"
        )
    grid = u0.grid
    n = cfg.n_steps
    times = np.linspace(0.0, cfg.t_final, n + 1)
    v = np.broadcast_to(u0.values, (n + 1, grid.n_points)).copy()
    residuals: list[float] = []
    for it in range(1, cfg.picard_max_iter + 1):
        rhs = np.stack([_bbm(row, grid, line_order) for row in v])
        new = u0.values + cumulative_trapezoid(rhs, times, axis=0, initial=0.0)
        res = float(np.max(np.abs(new - v)))
        residuals.append(res)
        v = new
        if res < cfg.picard_tol:
            break
    else:
        raise PicardConvergenceError(
            f"Picard iteration did not converge in {cfg.picard_max_iter} iterations "
            f"(last residual {residuals[-1]:.3e})",
            residuals,
        )
    keep = np.arange(0, n + 1, cfg.snapshot_stride)
    if keep[-1] != n:
        keep = np.append(keep, n)
    vals = v[keep]
    vals[0] = u0.values
    inv = np.stack([_invariants_row(row, grid) for row in vals]) if grid.is_circle else np.empty((0, 3))
    meta = {"config": cfg.to_dict(), "equation": "bbm", "picard_iterations": it, "picard_residuals": residuals,
            "warnings": []}
    return Trajectory(grid, times[keep], vals, inv, meta)


def _rk4_step(rhs: Callable, y: np.ndarray, dt: float) -> np.ndarray:
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * dt * k1)
    k3 = rhs(y + 0.5 * dt * k2)
    k4 = rhs(y + dt * k3)
    return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _duhamel_stepper(grid: Grid, dt: float):
    # exponential midpoint: u+ = U(dt) u + dt U(dt/2) N(u_mid),
    # u_mid = U(dt/2) (u + dt/2 N(u)),  N(u) = -phi(u^2/2), U(t) = exp(-t phi)
    n = grid.n_points
    sym = _phi_symbol_half(n)
    half = np.exp(-0.5 * dt * sym)
    full = half * half

    def nonlinear_hat(u):
        return -sym * np.fft.rfft(0.5 * u * u)

    def step(u):
        u_hat = np.fft.rfft(u)
        mid = np.fft.irfft(half * (u_hat + 0.5 * dt * nonlinear_hat(u)), n)
        return np.fft.irfft(full * u_hat + dt * half * nonlinear_hat(mid), n)

    return step


def _integrate(y0: np.ndarray, grid: Grid, cfg: SolverConfig, step: Callable, equation: str,
               track_invariants: bool, extra_meta: Optional[dict] = None) -> Trajectory:
    n = cfg.n_steps
    dt = cfg.t_final / n
    times = [0.0]
    snaps = [y0.copy()]
    y = y0.copy()
    for i in range(1, n + 1):
        y = step(y)
        peak = float(np.max(np.abs(y)))
        if not math.isfinite(peak) or peak > BLOWUP_THRESHOLD:
            raise EvolutionError(
                f"blow-up guard: ||u||_inf = {peak:.3e} at t = {i * dt:.6g} exceeds {BLOWUP_THRESHOLD:g}"
            )
        if i % cfg.snapshot_stride == 0 or i == n:
            times.append(i * dt)
            snaps.append(y.copy())
    vals = np.stack(snaps)
    inv = np.stack([_invariants_row(v, grid) for v in vals]) if track_invariants else np.empty((0, 3))
    meta = {"config": cfg.to_dict(), "equation": equation, "warnings": []}
    if extra_meta:
        meta.update(extra_meta)
    return Trajectory(grid, np.array(times), vals, inv, meta)


def evolve(u0: GridFunction, cfg: SolverConfig, equation: str = "bbm", backward: bool = False,
           line_order: int = 2) -> Trajectory:
    """Integrate ``u0`` with RK4 or the exponential Duhamel scheme.

    Parameters
    ----------
    equation:
        ``"bbm"`` or ``"ch"``.
    backward:
        Integrate the time-reversed equation ``u_t = -rhs(u)``.
    line_order:
        Order of the exponential recurrence used on line grids (2 or 4).
    """
    grid = u0.grid
    if cfg.method == PICARD:
        if equation != "bbm" or backward:
            raise ValueError("Picard iteration is implemented for the forward BBM flow only")
        return picard_solve(u0, cfg, line_order)
    rhs_fn = {"bbm": _bbm, "ch": _ch}.get(equation)
    if rhs_fn is None:
        raise ValueError(f"unknown equation {equation!r}")
    sign = -1.0 if backward else 1.0
    dt = cfg.t_final / cfg.n_steps
    if cfg.method == RK4:
        def rhs(y):
            return sign * rhs_fn(y, grid, line_order)

        def step(y):
            return _rk4_step(rhs, y, dt)
    else:
        if not grid.is_circle:
            raise GridError("the exponential Duhamel scheme needs a circle grid")
        if equation != "bbm":
            raise ValueError("the exponential Duhamel scheme is implemented for BBM only")
        step = _duhamel_stepper(grid, sign * dt)
    notes = list(_warn_support(u0.values, grid))
    traj = _integrate(u0.values, grid, cfg, step, equation, grid.is_circle)
    traj.metadata["warnings"] = notes
    traj.metadata["backward"] = backward
    return traj


def evolve_system(u0: GridFunction, v0: GridFunction, coeffs: SystemCoefficients, cfg: SolverConfig,
                  line_order: int = 2) -> Trajectory:
    """RK4 integration of the coupled BBM system."""
    if u0.grid != v0.grid:
        raise GridError("u0 and v0 live on different grids")
    if cfg.method != RK4:
        raise ValueError("the coupled system is integrated with RK4 only")
    grid = u0.grid
    dt = cfg.t_final / cfg.n_steps

    def step(y):
        return _rk4_step(lambda z: _system(z, grid, coeffs, line_order), y, dt)

    return _integrate(np.stack([u0.values, v0.values]), grid, cfg, step, "system", False,
                      {"coefficients": asdict(coeffs)})
