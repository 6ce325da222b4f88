"""Unique continuation: kernel comparisons, the four-term endpoint identity,
the ``Q`` functional and constructive data for the positive results.

Every BBM time slice satisfies, for ``a < b`` and any constant ``c0``,

    dt u(b) - dt u(a) = -int D(y) (f(u(y)) - f(c0)) dy,
    D(y) = dG(b - y) - dG(a - y),

with ``f(y) = y + y^2/2`` and ``dG`` the derivative of the Green's function
of ``1 - d^2/dx^2`` (line or circle).  ``D`` is positive off ``[a, b]`` and
negative inside, which is what forces the sign results below.  Splitting the
integral at ``a`` and ``b`` gives the pieces ``A2`` (left), ``A3`` (inside)
and ``A4`` (right); ``A1`` is the endpoint difference of ``dt u`` and
``A1 + A2 + A3 + A4 = 0``.

Payloads are carried with the ``1/2`` kernel prefactor, so the ``c0 = -1``
payload is ``(u + 1)^2 / 2`` against ``dG``; against the unnormalized kernel
``-sgn(x) e^{-|x|}`` it reads ``(u + 1)^2 / 4``.  Both give the same numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import bump, smooth_step
from .evolution import _ch, _dx, time_derivative
from .grid import Grid, GridError, GridFunction
from .operators import exp_sweeps, line_green_deriv, periodic_green_deriv

FORCED_CONSTANT = "ForcedConstant"
HYPOTHESIS_FAILS = "HypothesisFails"
INCONCLUSIVE = "Inconclusive"

ROOT_TOL = 1e-10
ROOT_MAX_ITER = 200


class ConstructionError(RuntimeError):
    """A constructive procedure could not produce data meeting its targets."""


# ----------------------------------------------------------------------------
# the nonlinearity


def f_map(y):
    """``f(y) = y + y^2/2``; minimum ``-1/2`` at ``y = -1``."""
    y = np.asarray(y, dtype=float) if not np.isscalar(y) else float(y)
    return y + 0.5 * y * y


def conjugate_level(c0: float) -> float:
    """The other root of ``f(y) = f(c0)``: ``-2 - c0`` (``-1`` is a double root)."""
    return -2.0 - float(c0)


@dataclass(frozen=True)
class NonlinearityMap:
    """``f(y) = y + y^2/2`` with its minimizer and level-set conjugation."""

    minimizer: float = -1.0
    minimum: float = -0.5

    def __call__(self, y):
        return f_map(y)

    def conjugate(self, c0: float) -> float:
        return conjugate_level(c0)


def tolerance(u: GridFunction) -> float:
    """Pointwise hypothesis tolerance ``1e-9 (1 + ||u||_inf)``."""
    return 1e-9 * (1.0 + float(np.max(np.abs(u.values))))


# ----------------------------------------------------------------------------
# kernel comparisons


def kernel_difference(y, a: float, b: float, grid_kind: str = "line") -> np.ndarray:
    """``D(y) = dG(b - y) - dG(a - y)``: positive off ``[a, b]``, negative inside.

    At ``y = a`` or ``y = b`` the kernel jumps; the returned value there is
    the left limit and carries no sign guarantee.
    """
    y = np.asarray(y, dtype=float)
    if grid_kind == "line":
        return line_green_deriv(b - y) - line_green_deriv(a - y)
    if grid_kind == "circle":
        return periodic_green_deriv(b - y) - periodic_green_deriv(a - y)
    raise GridError(f"unknown domain kind {grid_kind!r}")


def kernel_comparison_margins(y, a: float, b: float, grid_kind: str = "line") -> dict:
    """Smallest ``D`` off ``[a, b]`` and smallest ``-D`` inside, over the sample points ``y``.

    Both margins are positive when the comparisons hold.  Points equal to
    ``a`` or ``b`` are skipped.  On the circle ``y`` is reduced mod 1 and
    "inside" means ``a < y < b`` with ``0 <= a < b < 1``.
    """
    y = np.asarray(y, dtype=float)
    if grid_kind == "circle":
        y = y % 1.0
    d = kernel_difference(y, a, b, grid_kind)
    inside = (y > a) & (y < b)
    outside = (y < a) | (y > b)
    out = {"outside": float("inf"), "inside": float("inf")}
    if outside.any():
        out["outside"] = float(d[outside].min())
    if inside.any():
        out["inside"] = float((-d[inside]).min())
    return out


# ----------------------------------------------------------------------------
# stationary weak solutions


def _on_interval(grid: Grid, a: float, b: float) -> np.ndarray:
    x = grid.x
    pad = 1e-9 * grid.spacing
    return (x >= a - pad) & (x <= b + pad)


def stationary_step(c0: float, a: float, b: float, grid: Grid) -> GridFunction:
    """Two-level step ``c0`` on ``[a, b]``, ``-2 - c0`` elsewhere.

    ``f`` takes the same value on both levels, so the payload of the
    nonlocal term is constant and the step is an exact fixed point.  On the
    line the outer level must vanish, which forces ``c0 = -2``.
    """
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    if grid.is_circle:
        if not 0.0 < a < b < 1.0:
            raise ValueError("circle steps need 0 < a < b < 1")
    else:
        if c0 != -2.0:
            raise GridError(f"a line step must decay: outer level -2 - c0 = {conjugate_level(c0)} is not 0")
        if not grid.left < a < b < grid.right:
            raise GridError("[a, b] must lie inside the line window")
    vals = np.where(_on_interval(grid, a, b), float(c0), conjugate_level(c0))
    return GridFunction(grid, vals)


# ----------------------------------------------------------------------------
# the four-term identity


@dataclass
class UCReport:
    a: float
    b: float
    A1: float
    A2: float
    A3: float
    A4: float
    dt_at_a: float
    dt_at_b: float
    identity_residual: float
    verdict: str
    which_theorem: str
    margins: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in ("a", "b", "A1", "A2", "A3", "A4", "dt_at_a", "dt_at_b",
                                              "identity_residual", "verdict", "which_theorem")}
        out["margins"] = {k: (v if isinstance(v, str) else float(v)) for k, v in self.margins.items()}
        out["notes"] = list(self.notes)
        return out


def _snap(grid: Grid, a: float, b: float) -> tuple[int, int, float, float]:
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    if grid.is_circle and not 0.0 <= a < b < 1.0:
        raise ValueError(f"circle endpoints need 0 <= a < b < 1, got a={a}, b={b}")
    ia, ib = grid.nearest_index(a), grid.nearest_index(b)
    if grid.is_circle and ib == 0 and b > 0.5:
        ib = grid.n_points
    if ib <= ia:
        raise GridError(f"a={a} and b={b} collapse onto the same grid node")
    x = grid.left + np.array([ia, ib]) * grid.spacing
    return ia, ib, float(x[0]), float(x[1])


def _pieces_circle(payload: np.ndarray, a: float, b: float) -> tuple[float, float, float]:
    # exact integrals of D against the trigonometric interpolant of the payload
    # (Nyquist mode dropped, as in the spectral phi), piece by piece
    n = payload.size
    C = np.fft.rfft(payload) / n
    C[-1] = 0.0
    k = np.arange(C.size)
    z = 2j * np.pi * k
    s2 = 2.0 * math.sinh(0.5)

    def sinh_integral(c, p, q):
        # int_p^q sinh(c - y) e^{z y} dy for every mode
        ep = (np.exp((z - 1.0) * q) - np.exp((z - 1.0) * p)) / (z - 1.0)
        em = (np.exp((z + 1.0) * q) - np.exp((z + 1.0) * p)) / (z + 1.0)
        return 0.5 * (math.exp(c) * ep - math.exp(-c) * em)

    def piece(p, q, shift_b, shift_a):
        J = (sinh_integral(b + shift_b, p, q) - sinh_integral(a + shift_a, p, q)) / s2
        return float(np.real(C[0] * J[0] + 2.0 * np.sum(C[1:] * J[1:])))

    return (piece(0.0, a, -0.5, -0.5), piece(a, b, -0.5, 0.5), piece(b, 1.0, 0.5, 0.5))


def _pieces_line(payload: np.ndarray, grid: Grid, ia: int, ib: int) -> tuple[float, float, float]:
    # exact integrals against the linear interpolant, read off the exponential sweeps;
    # beyond the window the payload is continued by its edge values, as in the line time derivative
    h = grid.spacing
    P, R = exp_sweeps(payload, h, order=2)
    x = grid.x
    P = P + payload[0] * np.exp(-(x - grid.left))
    R = R + payload[-1] * np.exp(-(grid.right - x))
    e = math.exp(-(ib - ia) * h)
    half = 0.5 * (1.0 - e)
    A2 = half * P[ia]
    A4 = half * R[ib]
    A3 = -0.5 * ((P[ib] - e * P[ia]) + (R[ia] - e * R[ib]))
    return float(A2), float(A3), float(A4)


def _decompose(u: GridFunction, payload: np.ndarray, ia: int, ib: int, a: float, b: float,
               ut: np.ndarray) -> tuple:
    grid = u.grid
    n = grid.n_points
    if grid.is_circle:
        A2, A3, A4 = _pieces_circle(payload, a, b)
    else:
        A2, A3, A4 = _pieces_line(payload, grid, ia, ib)
    dta, dtb = float(ut[ia % n]), float(ut[ib % n])
    A1 = dtb - dta
    return A1, A2, A3, A4, dta, dtb, A1 + A2 + A3 + A4


def _interval_mask(grid: Grid, ia: int, ib: int) -> np.ndarray:
    mask = np.zeros(grid.n_points, dtype=bool)
    mask[ia:ib + 1] = True
    if grid.is_circle and ib >= grid.n_points:
        mask[: ib - grid.n_points + 1] = True
    return mask


def a_decomposition(u_slice: GridFunction, a: float, b: float, line_order: int = 2) -> UCReport:
    """The four-term identity with payload ``(u + 1)^2 / 2`` and the verdict on ``u = -1`` data.

    ``a`` and ``b`` are moved to the nearest grid nodes.  ``A1`` comes from
    :func:`~bbmlab.evolution.time_derivative`; ``A2..A4`` are exact integrals
    of the kernel difference against the interpolated payload (trigonometric
    on the circle, piecewise linear on the line).

    Verdict: if ``u = -1`` on ``[a, b]`` fails, the theorem does not apply
    (Inconclusive).  If it holds and ``A1 < -tol`` the endpoint inequality
    ``dt u(b) >= dt u(a)`` fails (HypothesisFails).  If both hold, the
    identity forces ``A2 = A4 = 0``, i.e. ``u = -1`` everywhere
    (ForcedConstant); a large residual instead yields Inconclusive.
    """
    grid = u_slice.grid
    ia, ib, a_s, b_s = _snap(grid, a, b)
    tol = tolerance(u_slice)
    v = u_slice.values
    payload = 0.5 * (v + 1.0) ** 2
    if not grid.is_circle:
        _require_interior(grid, ia, ib)
    ut = time_derivative(u_slice, line_order).values
    A1, A2, A3, A4, dta, dtb, res = _decompose(u_slice, payload, ia, ib, a_s, b_s, ut)
    inside = _interval_mask(grid, ia, ib)
    dev = float(np.max(np.abs(v[inside] + 1.0)))
    margins = {"max_abs_u_plus_1_on_interval": dev, "endpoint_margin": A1, "tol": tol,
               "A2_plus_A4": A2 + A4}
    notes = []
    if (a_s, b_s) != (a, b):
        notes.append(f"endpoints moved to grid nodes a={a_s!r}, b={b_s!r}")
    if dev > tol:
        verdict = INCONCLUSIVE
        notes.append("u = -1 on [a, b] does not hold; the theorem does not apply")
    elif A1 < -tol:
        verdict = HYPOTHESIS_FAILS
        notes.append("endpoint inequality dt u(b) >= dt u(a) fails")
    elif abs(res) <= max(tol, 1e-8) and A2 + A4 <= tol:
        verdict = FORCED_CONSTANT
    else:
        verdict = INCONCLUSIVE
        notes.append("hypotheses hold but the forcing integrals do not vanish; identity residual too large")
    return UCReport(a_s, b_s, A1, A2, A3, A4, dta, dtb, res, verdict, "THA2" if not grid.is_circle else "THAP2",
                    margins, notes)


def _require_interior(grid: Grid, ia: int, ib: int):
    if ia < 1 or ib > grid.n_points - 2:
        raise GridError("[a, b] must lie strictly inside the line window")


# ----------------------------------------------------------------------------
# general level c0


def uc_verdict_tha4(u_slice: GridFunction, a: float, b: float, c0: float, branch: str = "cond1",
                    line_order: int = 2) -> UCReport:
    """Check the sign hypotheses for a general level ``c0`` and decompose with payload ``f(u) - f(c0)``.

    ``cond1``: ``f(u) <= f(c0)`` on ``[a, b]``, ``f(u) >= f(c0)`` off it and
    ``dt u(b) >= dt u(a)``.  ``cond2`` reverses all three.  Both require
    ``u(a) = u(b) = c0``.  The first violated hypothesis is named in the
    notes.  On the circle the same check is applied with the periodic
    kernel; this periodic reading is flagged in the notes.
    """
    if branch not in ("cond1", "cond2"):
        raise ValueError(f"branch must be 'cond1' or 'cond2', got {branch!r}")
    grid = u_slice.grid
    ia, ib, a_s, b_s = _snap(grid, a, b)
    if not grid.is_circle:
        _require_interior(grid, ia, ib)
    v = u_slice.values
    tol = tolerance(u_slice)
    fc = float(f_map(c0))
    g = f_map(v) - fc
    ut = time_derivative(u_slice, line_order).values
    A1, A2, A3, A4, dta, dtb, res = _decompose(u_slice, g, ia, ib, a_s, b_s, ut)
    inside = _interval_mask(grid, ia, ib)
    n = grid.n_points
    sgn = 1.0 if branch == "cond1" else -1.0
    endpoint_dev = max(abs(v[ia % n] - c0), abs(v[ib % n] - c0))
    in_margin = float(np.min(-sgn * g[inside]))
    out_margin = float(np.min(sgn * g[~inside])) if (~inside).any() else float("inf")
    dt_margin = sgn * A1
    margins = {"endpoint_deviation": endpoint_dev, "inside_margin": in_margin, "outside_margin": out_margin,
               "derivative_margin": dt_margin, "tol": tol}
    notes = [f"branch {branch}, c0 = {c0!r}"]
    if grid.is_circle:
        notes.append("periodic reading: circle kernel substituted in the line argument")
    checks = [
        (endpoint_dev <= tol, "u(a) = u(b) = c0"),
        (in_margin >= -tol, "f(u) <= f(c0) on [a, b]" if sgn > 0 else "f(u) >= f(c0) on [a, b]"),
        (out_margin >= -tol, "f(u) >= f(c0) off [a, b]" if sgn > 0 else "f(u) <= f(c0) off [a, b]"),
        (dt_margin >= -tol, "dt u(b) >= dt u(a)" if sgn > 0 else "dt u(a) >= dt u(b)"),
    ]
    failed = [name for ok, name in checks if not ok]
    if failed:
        verdict = HYPOTHESIS_FAILS
        notes.append(f"violated: {failed[0]}")
    elif abs(res) <= max(tol, 1e-8) and float(np.max(np.abs(g))) <= tol:
        verdict = FORCED_CONSTANT
    elif abs(res) <= max(tol, 1e-8) and abs(A2) + abs(A3) + abs(A4) <= tol:
        verdict = FORCED_CONSTANT
        notes.append("forcing integrals vanish; f(u) = f(c0) wherever the kernel difference is nonzero")
    else:
        verdict = INCONCLUSIVE
    theorem = "THA4" if not grid.is_circle else "THAP4"
    return UCReport(a_s, b_s, A1, A2, A3, A4, dta, dtb, res, verdict, theorem, margins, notes)


# ----------------------------------------------------------------------------
# Camassa-Holm


def ch_uc_check(u_slice: GridFunction, a: float, b: float, line_order: int = 2) -> UCReport:
    """Vanishing on ``[a, b]`` plus "dt u not strictly decreasing there" forces ``u = 0``.

    ``dt u = -u u_x - dG * (u^2 + u_x^2/2)``; with ``u = 0`` on ``[a, b]`` the
    transport term drops there and the nonnegative payload makes ``dt u``
    strictly decreasing on ``[a, b]`` unless it vanishes.  The report
    carries the endpoint decomposition with that payload.
    """
    grid = u_slice.grid
    if grid.is_circle:
        raise GridError("ch_uc_check works on line grids")
    ia, ib, a_s, b_s = _snap(grid, a, b)
    _require_interior(grid, ia, ib)
    v = u_slice.values
    tol = tolerance(u_slice)
    ux = _dx(v, grid)
    payload = v * v + 0.5 * ux * ux
    ut = _ch(v, grid, line_order)
    A1, A2, A3, A4, dta, dtb, res = _decompose(u_slice, payload, ia, ib, a_s, b_s, ut)
    inside = _interval_mask(grid, ia, ib)
    dev = float(np.max(np.abs(v[inside])))
    steps = np.diff(ut[ia:ib + 1])
    margins = {"max_abs_u_on_interval": dev, "largest_step_of_dt_u": float(steps.max()), "tol": tol,
               "payload_sup": float(payload.max())}
    notes = []
    if dev > tol:
        verdict = INCONCLUSIVE
        notes.append("u = 0 on [a, b] does not hold; the theorem does not apply")
    elif np.all(steps < 0.0):
        verdict = HYPOTHESIS_FAILS
        notes.append("dt u is strictly decreasing on [a, b]; monotonicity hypothesis fails")
    elif float(payload.max()) <= tol:
        verdict = FORCED_CONSTANT
    else:
        verdict = INCONCLUSIVE
        notes.append("dt u not strictly decreasing yet the payload is nonzero")
    return UCReport(a_s, b_s, A1, A2, A3, A4, dta, dtb, res, verdict, "IVPCH2", margins, notes)


# ----------------------------------------------------------------------------
# root finding


def bisect(fn, lo: float, hi: float, ftol: float = ROOT_TOL, max_iter: int = ROOT_MAX_ITER):
    """Bisection to ``|fn(x)| <= ftol``.  Returns ``(x, fn(x), iterations)``."""
    flo, fhi = fn(lo), fn(hi)
    if abs(flo) <= ftol:
        return lo, flo, 0
    if abs(fhi) <= ftol:
        return hi, fhi, 0
    if flo * fhi > 0:
        raise ConstructionError(f"no sign change on [{lo}, {hi}]: f = ({flo:.3e}, {fhi:.3e})")
    for it in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if abs(fm) <= ftol:
            return mid, fm, it
        if fm * flo < 0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(mid)):
            break
    raise ConstructionError(f"bisection stalled at x={mid!r} with |f| = {abs(fm):.3e} > {ftol:g}")


def _expanding_bracket(fn, centre: float, width: float, limit: float):
    """Grow ``[centre - w, centre + w]`` by doubling until ``fn`` changes sign or ``w`` exceeds ``limit``."""
    scanned = []
    w = width
    while w <= limit:
        lo, hi = centre - w, centre + w
        flo, fhi = fn(lo), fn(hi)
        scanned.append((lo, hi))
        if flo * fhi <= 0:
            return lo, hi
        w *= 2.0
    raise ConstructionError(f"no bracket found; scanned {scanned}")


# ----------------------------------------------------------------------------
# Q functional on the circle


def q_functional(u0: GridFunction, a: float, b: float, c0: float) -> float:
    """``-int (dG(b-y) - dG(a-y)) (f(u0) - f(c0)) dy`` on the circle.

    Periodic trapezoid with ``a``, ``b`` moved to the nearest nodes, the
    mean of the one-sided kernel values at the two jumps and the matching
    Euler-Maclaurin jump correction.  This equals ``dt u(b) - dt u(a)``.
    Dropping the ``f(c0)`` shift must leave the value unchanged; that is
    asserted.
    """
    grid = u0.grid
    if not grid.is_circle:
        raise GridError("q_functional works on circle grids")
    if not 0.0 <= a < b < 1.0:
        raise ValueError(f"need 0 <= a < b < 1, got a={a}, b={b}")
    ia, ib, a_s, b_s = _snap(grid, a, b)
    n = grid.n_points
    h = grid.spacing
    y = grid.x
    D = kernel_difference(y, a_s, b_s, "circle")
    # D jumps by -1 at a and +1 at b; node values are left limits, replace them by the means
    D[ia % n] -= 0.5
    D[ib % n] += 0.5

    def integral(payload):
        dp = (np.roll(payload, -1) - np.roll(payload, 1)) / (2.0 * h)
        corr = h * h / 12.0 * (-dp[ia % n] + dp[ib % n])
        return float(h * np.dot(D, payload) + corr)

    fu = f_map(u0.values)
    q = -integral(fu - float(f_map(c0)))
    q_raw = -integral(fu)
    scale = max(1.0, float(np.max(np.abs(fu))))
    assert abs(q - q_raw) <= 1e-12 * scale, f"Q changed by {abs(q - q_raw):.3e} under the c0 shift"
    return q


def thap3_profiles(c0: float, a: float, b: float, grid: Grid) -> tuple[GridFunction, GridFunction]:
    """``v1 = c0 - (1 + c0) psi_1``, ``v2 = c0 + (1 + c0) psi_2`` with bumps on ``(0, a)`` and ``(b, 1)``.

    ``v1`` dips to ``-1`` where ``f`` is smallest, so ``f(v1) < f(c0)`` on
    the left bump; ``v2`` moves away from ``-1`` so ``f(v2) > f(c0)`` on the
    right bump.
    """
    x = grid.x
    amp = 1.0 + c0
    v1 = c0 - amp * bump(x, 0.0, a)
    v2 = c0 + amp * bump(x, b, 1.0)
    return GridFunction(grid, v1), GridFunction(grid, v2)


@dataclass
class Thap3Result:
    v0: GridFunction
    lambda0: float
    q_value: float
    q_v1: float
    q_v2: float
    c0: float
    a: float
    b: float
    iterations: int

    def to_dict(self) -> dict:
        return {"lambda0": self.lambda0, "Q": self.q_value, "Q_v1": self.q_v1, "Q_v2": self.q_v2, "c0": self.c0,
                "a": self.a, "b": self.b, "iterations": self.iterations, "n_points": self.v0.grid.n_points}


def construct_thap3(c0: float, a: float, b: float, grid: Grid, ftol: float = ROOT_TOL) -> Thap3Result:
    """Periodic data equal to ``c0`` on ``[a, b]`` with ``dt u(b, 0) = dt u(a, 0)``.

    Bisects ``lam -> Q(lam v1 + (1 - lam) v2)`` on ``[0, 1]`` after checking
    ``Q(v1) > 0 > Q(v2)``.
    """
    if c0 == -1.0:
        raise ConstructionError("c0 = -1 is excluded: the construction needs f(c0) above the minimum of f")
    if not grid.is_circle:
        raise GridError("construct_thap3 works on circle grids")
    if not 0.0 < a < b < 1.0:
        raise ValueError(f"need 0 < a < b < 1, got a={a}, b={b}")
    _, _, a_s, b_s = _snap(grid, a, b)
    v1, v2 = thap3_profiles(c0, a_s, b_s, grid)
    q1 = q_functional(v1, a_s, b_s, c0)
    q2 = q_functional(v2, a_s, b_s, c0)
    if not (q1 > 0.0 > q2):
        raise ConstructionError(f"sign bracket failed: Q(v1) = {q1:.3e}, Q(v2) = {q2:.3e}")
    assert q1 * q2 < 0

    def q_of(lam):
        return q_functional(GridFunction(grid, lam * v1.values + (1.0 - lam) * v2.values), a_s, b_s, c0)

    lam, q, it = bisect(q_of, 0.0, 1.0, ftol)
    v0 = GridFunction(grid, lam * v1.values + (1.0 - lam) * v2.values)
    return Thap3Result(v0, float(lam), float(q), float(q1), float(q2), float(c0), a_s, b_s, it)


# ----------------------------------------------------------------------------
# compactly supported line data with dt u = 0 on [0, b]


@dataclass
class Tha3Construction:
    u0: GridFunction
    c0: float
    a: float
    b: float
    alpha_target: float
    beta_target: float
    alpha_achieved: float
    beta_achieved: float
    residual_on_interval: float
    max_dt_on_interval: float
    M: float
    levels: tuple = (0.0, 0.0)

    def to_dict(self) -> dict:
        return {"c0": self.c0, "a": self.a, "b": self.b, "M": self.M,
                "alpha_target": self.alpha_target, "beta_target": self.beta_target,
                "alpha_achieved": self.alpha_achieved, "beta_achieved": self.beta_achieved,
                "residual_on_interval": self.residual_on_interval, "max_dt_on_interval": self.max_dt_on_interval,
                "levels": list(self.levels), "grid": self.u0.grid.to_dict()}


def tha3_grid(b: float, M: float, per_unit: int = 64) -> Grid:
    """Line grid with ``0`` and ``b`` on nodes covering ``[-M - 2, b + M + 2]``."""
    m = max(1, int(math.ceil(b * per_unit)))
    h = b / m
    left_cells = int(math.ceil((M + 2.0) / h))
    right_cells = m + left_cells
    return Grid.line(-left_cells * h, right_cells * h, left_cells + right_cells + 1)


def _tha3_profile(x: np.ndarray, c0: float, level: float, start: float, direction: float, M: float) -> np.ndarray:
    # c0 at ``start``, smooth move to ``level`` within one unit, plateau, smooth cut to 0 at distance M
    d = direction * (x - start)
    rise = smooth_step(d)
    cut = 1.0 - smooth_step(d - (M - 1.0))
    out = (c0 + (level - c0) * rise) * cut
    out[d <= 0] = 0.0
    return out


def construct_tha3(c0: float, b: float = 1.0, M: float = 24.0, grid: Grid | None = None,
                   line_order: int = 2, ftol: float = ROOT_TOL) -> Tha3Construction:
    """Smooth data supported in ``[-M, b + M]``, equal to ``c0`` on ``[0, b]``, with ``dt u = 0`` there.

    On ``[0, b]`` the time derivative is
    ``(e^{-x}(alpha - f(c0)) + e^x(e^{-b} f(c0) - beta)) / 2`` with
    ``alpha = int_{y<0} e^y f(u0)`` and ``beta = int_{y>b} e^{-y} f(u0)``.
    Each side is a plateau profile whose level is found by bisection,
    starting next to the conjugate level ``-2 - c0``, so that ``alpha``
    and ``beta`` hit their targets.  Both are measured with the same
    exponential sweeps the line time derivative uses.
    """
    if c0 == -1.0:
        raise ConstructionError("c0 = -1 is excluded: alpha = -1/2 is the unattained infimum of its range")
    if not b > 0:
        raise ValueError("need b > 0")
    if math.exp(-M) >= ftol:
        raise ValueError(f"M = {M} too small: need exp(-M) < {ftol:g}")
    if grid is None:
        grid = tha3_grid(b, M)
    if grid.is_circle:
        raise GridError("construct_tha3 works on line grids")
    if grid.left > -M or grid.right < b + M:
        raise GridError(f"grid window must cover [-{M}, {b + M}]")
    x = grid.x
    h = grid.spacing
    i0, ib = grid.nearest_index(0.0), grid.nearest_index(b)
    if abs(x[i0]) > 1e-9 * h or abs(x[ib] - b) > 1e-9 * h:
        raise GridError("0 and b must be grid nodes")
    fc = float(f_map(c0))
    alpha_t, beta_t = fc, math.exp(-b) * fc
    x_left = np.where(x < 0.0, x, 0.0)
    x_right = np.where(x > b, x, b)

    def left(level):
        return _tha3_profile(x_left, c0, level, 0.0, -1.0, M)

    def right(level):
        return _tha3_profile(x_right, c0, level, b, 1.0, M)

    def alpha(level):
        # P at 0 only sees nodes <= 0; the nodes from 0 on carry c0 as in u0
        v = left(level)
        v[i0:] = c0
        P, _ = exp_sweeps(f_map(v), h, line_order)
        return float(P[i0])

    def beta(level):
        v = right(level)
        v[: ib + 1] = c0
        _, R = exp_sweeps(f_map(v), h, line_order)
        return float(math.exp(-b) * R[ib])

    centre = conjugate_level(c0)
    gap = abs(centre + 1.0)
    lo, hi = _expanding_bracket(lambda s: alpha(s) - alpha_t, centre, 0.05 * gap, 0.95 * gap)
    s_left, _, _ = bisect(lambda s: alpha(s) - alpha_t, lo, hi, ftol)
    lo, hi = _expanding_bracket(lambda s: beta(s) - beta_t, centre, 0.05 * gap, 0.95 * gap)
    s_right, _, _ = bisect(lambda s: beta(s) - beta_t, lo, hi, ftol)

    vals = left(s_left) + right(s_right)
    inside = (np.arange(grid.n_points) >= i0) & (np.arange(grid.n_points) <= ib)
    vals[inside] = c0
    u0 = GridFunction(grid, vals)
    a_ach, b_ach = alpha(s_left), beta(s_right)
    xi = x[inside]
    predicted = 0.5 * (np.exp(-xi) * (a_ach - alpha_t) + np.exp(xi) * (beta_t - b_ach))
    ut = time_derivative(u0, line_order).values[inside]
    return Tha3Construction(u0, float(c0), 0.0, float(b), alpha_t, beta_t, a_ach, b_ach,
                            float(np.max(np.abs(predicted))), float(np.max(np.abs(ut))), float(M),
                            (float(s_left), float(s_right)))
