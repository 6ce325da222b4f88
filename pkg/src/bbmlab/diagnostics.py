"""Conserved functionals, regularity gain of ``u(t) - u0`` and singularity tracking."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .grid import Grid, GridError, GridFunction, Spectrum, centered_difference, sobolev_norm, transform

BOUNDED_RATIO = 1.1
DIVERGENT_RATIO = 1.5
ENDPOINT_MARGIN = 0.05


class DiagnosticError(ValueError):
    pass


@dataclass(frozen=True)
class InvariantTriple:
    I1: float
    I2: float
    I3: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.I1, self.I2, self.I3)


def invariant_values(values: np.ndarray, grid: Grid) -> tuple[float, float, float]:
    """``(int u, int u_x^2 + u^2, int u^3 + 3u^2)`` by the periodic trapezoid rule."""
    n = grid.n_points
    k = np.arange(n // 2 + 1, dtype=float)
    mult = 2j * np.pi * k
    mult[-1] = 0.0
    ux = np.fft.irfft(np.fft.rfft(values) * mult, n)
    h = grid.spacing
    u2 = values * values
    return (
        float(h * np.sum(values)),
        float(h * np.sum(ux * ux + u2)),
        float(h * np.sum(u2 * values + 3.0 * u2)),
    )


def invariants(u: GridFunction) -> InvariantTriple:
    """The three conserved functionals of the periodic BBM flow."""
    if not u.grid.is_circle:
        raise GridError("the conserved functionals are periodic-only")
    return InvariantTriple(*invariant_values(u.values, u.grid))


@dataclass(frozen=True)
class DriftReport:
    """Max over time of ``|I_j(t) - I_j(0)| / max(1, |I_j(0)|)``."""

    I1: float
    I2: float
    I3: float
    series: np.ndarray = field(repr=False, compare=False, default=None)

    def as_tuple(self):
        return (self.I1, self.I2, self.I3)

    def to_dict(self) -> dict:
        return {"I1": self.I1, "I2": self.I2, "I3": self.I3}


def drift_report(traj) -> DriftReport:
    hist = np.asarray(traj.invariants)
    if hist.shape[0] == 0:
        raise DiagnosticError("trajectory has no invariant history")
    rel = np.abs(hist - hist[0]) / np.maximum(1.0, np.abs(hist[0]))
    worst = rel.max(axis=0)
    return DriftReport(float(worst[0]), float(worst[1]), float(worst[2]), rel)


# ----------------------------------------------------------------------------
# spectral decay


def band_amplitudes(S: Spectrum, k_min: int, k_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Mean of ``|c_k|`` and ``|c_-k|`` for ``k_min <= k <= k_max``."""
    n = S.grid.n_points
    if not 1 <= k_min < k_max <= n // 2 - 1:
        raise DiagnosticError(f"band [{k_min}, {k_max}] must lie in [1, {n // 2 - 1}]")
    k = np.arange(k_min, k_max + 1)
    amp = 0.5 * (np.abs(S.coeffs[k]) + np.abs(S.coeffs[-k]))
    return k, amp


def spectral_slope(S: Spectrum, k_min: int, k_max: int) -> float:
    """Least-squares decay exponent ``sigma`` with ``|c_k| ~ k^-sigma`` over the band.

    Coefficients below ``1e-12`` of the largest coefficient are treated as
    zero; fewer than two surviving modes is a degenerate band.
    """
    k, amp = band_amplitudes(S, k_min, k_max)
    floor = 1e-12 * float(np.max(np.abs(S.coeffs)))
    keep = amp > floor
    if keep.sum() < 2:
        raise DiagnosticError("degenerate band: fewer than two nonzero modes")
    slope, _ = np.polyfit(np.log(k[keep]), np.log(amp[keep]), 1)
    return float(-slope)


def predicted_gain(s: float) -> float:
    """Sobolev gain of ``u(t) - u0``: ``s + 1/2`` up to ``s = 1/2``, then 1."""
    return min(s + 0.5, 1.0)


def gained_index(s: float) -> float:
    """``s'``: ``2s + 1/2`` (endpoint excluded) for ``s <= 1/2``, ``s + 1`` beyond."""
    return 2.0 * s + 0.5 if s <= 0.5 else s + 1.0


def refinement_verdict(norms: Sequence[float], bounded: float = BOUNDED_RATIO,
                       divergent: float = DIVERGENT_RATIO) -> str:
    """Classify norms on successively doubled grids as bounded, divergent or inconclusive."""
    r = np.asarray(norms[1:]) / np.asarray(norms[:-1])
    if np.all(r <= bounded):
        return "bounded"
    if np.all(r >= divergent):
        return "divergent"
    return "inconclusive"


@dataclass
class RegularityReport:
    s_nominal: float
    slope_u0: float
    slope_diff: float
    gain_measured: float
    gain_predicted: float
    refinement_ratios: list = field(default_factory=list)
    refinement_verdict: str = "not run"
    band: tuple = (8, 128)
    degenerate: bool = False
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def refinement_norms(law, t_final: float, s_eval: float, ns: Sequence[int], dt: float = 1e-3) -> list:
    """``(N, ||u(t) - u0||_{H^s_eval})`` for the same spectral law sampled at each ``N``."""
    from .evolution import SolverConfig, evolve

    out = []
    cfg = SolverConfig(dt=dt, t_final=t_final, snapshot_stride=max(1, int(round(t_final / dt))))
    for n in ns:
        u0 = law.sample(Grid.circle(n))
        diff = evolve(u0, cfg).final - u0
        out.append((int(n), sobolev_norm(transform(diff), s_eval)))
    return out


def regularity_gain(u0: GridFunction, traj, s_nominal: float, band: tuple = (8, 128), law=None,
                    ns: Sequence[int] = (256, 512, 1024)) -> RegularityReport:
    """Measure the decay-rate gain of ``u(t) - u0`` at the last snapshot.

    When a spectral ``law`` is given, also runs the grid-refinement test of
    ``||u(t) - u0||`` in ``H^{s' - 0.05}`` across ``ns``.
    """
    if u0.grid != traj.grid:
        raise DiagnosticError("trajectory and initial datum live on different grids")
    if traj.times[-1] <= 0:
        raise DiagnosticError("trajectory has no snapshot with t > 0")
    k_min, k_max = band
    pred = predicted_gain(s_nominal)
    diff = traj.final - u0
    if float(np.max(np.abs(diff.values))) <= 1e-14 * max(1.0, float(np.max(np.abs(u0.values)))):
        return RegularityReport(s_nominal, float("nan"), float("nan"), float("nan"), pred, band=band,
                                degenerate=True, notes=["zero difference: u(t) - u0 vanishes"])
    slope_u0 = spectral_slope(transform(u0), k_min, k_max)
    slope_diff = spectral_slope(transform(diff), k_min, k_max)
    rep = RegularityReport(s_nominal, slope_u0, slope_diff, slope_diff - slope_u0, pred, band=band,
                           notes=["slope tolerances are engineering choices; the gain is a worst-case bound"])
    if law is not None:
        s_eval = gained_index(s_nominal) - ENDPOINT_MARGIN
        norms = refinement_norms(law, float(traj.times[-1]), s_eval, ns)
        rep.refinement_ratios = norms
        rep.refinement_verdict = refinement_verdict([v for _, v in norms])
    return rep


# ----------------------------------------------------------------------------
# singularity sets


@dataclass(frozen=True)
class SingularitySet:
    points: np.ndarray
    detector_scale: tuple
    indices: np.ndarray = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {"points": [float(p) for p in self.points], "detector_scale": list(self.detector_scale)}


def holder_quotient_field(u: GridFunction, j: int, eta: float, max_offset: int = 2) -> np.ndarray:
    """``q_i = max_{0<|m|<=max_offset} |D^j u(x_i + m h) - D^j u(x_i)| / |m h|^eta``.

    ``D^j`` is the j-fold centered difference.  On the line the field is
    padded with zeros where the stencil does not fit.
    """
    grid = u.grid
    h = grid.spacing
    d = centered_difference(u.values, grid, j)
    q = np.zeros_like(d)
    for m in range(1, max_offset + 1):
        scale = (m * h) ** eta
        if grid.is_circle:
            q = np.maximum(q, np.abs(np.roll(d, -m) - d) / scale)
            q = np.maximum(q, np.abs(np.roll(d, m) - d) / scale)
        else:
            fwd = np.zeros_like(d)
            fwd[:-m] = np.abs(d[m:] - d[:-m]) / scale
            bwd = np.zeros_like(d)
            bwd[m:] = np.abs(d[m:] - d[:-m]) / scale
            q = np.maximum(q, np.maximum(fwd, bwd))
    if not grid.is_circle:
        q = np.concatenate([np.zeros(j), q, np.zeros(j)])
    return q


def _clusters(flags: np.ndarray, periodic: bool) -> list[np.ndarray]:
    idx = np.flatnonzero(flags)
    if idx.size == 0:
        return []
    if idx.size == flags.size:
        return [idx]
    groups = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
    if periodic and len(groups) > 1 and groups[0][0] == 0 and groups[-1][-1] == flags.size - 1:
        groups[0] = np.concatenate([groups[-1] - flags.size, groups[0]])
        groups.pop()
    return groups


def singularity_localize(u: GridFunction, j: int, eta: float, threshold: float = 20.0,
                         max_offset: int = 2) -> SingularitySet:
    """Grid locations where ``u`` fails to be locally ``C^{j,eta}``.

    Points whose local Hölder quotient exceeds ``threshold`` times the
    median quotient are flagged; each contiguous run of flagged points is
    reported once, at its midpoint.
    """
    grid = u.grid
    n = grid.n_points
    if n < 8 * (j + 1) + 2 * max_offset:
        raise GridError("grid too coarse for the requested difference order")
    q = holder_quotient_field(u, j, eta, max_offset)
    qmax = float(q.max())
    if qmax == 0.0:
        return SingularitySet(np.array([]), (j, eta), np.array([], dtype=int))
    cutoff = threshold * float(np.median(q))
    if cutoff <= 1e-8 * qmax:
        cutoff = 1e-8 * qmax
    idx = []
    for g in _clusters(q > cutoff, grid.is_circle):
        mid = int(np.floor(0.5 * (g[0] + g[-1]) + 0.5))
        idx.append(mid % n if grid.is_circle else mid)
    idx = np.array(sorted(idx), dtype=int)
    return SingularitySet(grid.x[idx], (j, eta), idx)


def circle_distance(a, b) -> np.ndarray:
    d = np.abs(np.asarray(a) - np.asarray(b)) % 1.0
    return np.minimum(d, 1.0 - d)


# ----------------------------------------------------------------------------
# trajectory probes


def track_peak(u: GridFunction, cells: int = 20) -> float:
    """Crest position of peaked data by a cusp fit.

    ``log u`` is fitted by a straight line on ``cells`` samples either side
    of the grid maximum (excluding it); the crest is where the two lines
    meet.  Falls back to the grid maximum when the data are not positive
    around it.
    """
    v = u.values
    x = u.grid.x
    i = int(np.argmax(v))
    if i - cells < 0 or i + cells >= v.size:
        raise DiagnosticError("peak too close to the window edge for the cusp fit")
    left, right = slice(i - cells, i), slice(i + 1, i + cells + 1)
    if np.any(v[left] <= 0) or np.any(v[right] <= 0):
        return float(x[i])
    pl = np.polyfit(x[left], np.log(v[left]), 1)
    pr = np.polyfit(x[right], np.log(v[right]), 1)
    if pl[0] == pr[0]:
        return float(x[i])
    return float((pr[1] - pl[1]) / (pl[0] - pr[0]))


def initial_rate(traj) -> np.ndarray:
    """``dt u`` at ``t = 0`` from the first five snapshots (one-sided, fourth order).

    The snapshots must be equally spaced.
    """
    t = traj.times
    if t.size < 5:
        raise DiagnosticError("need at least five snapshots")
    dt = t[1] - t[0]
    if not np.allclose(np.diff(t[:5]), dt, rtol=1e-12, atol=0.0):
        raise DiagnosticError("first five snapshots are not equally spaced")
    v = traj.values
    return (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * dt)
