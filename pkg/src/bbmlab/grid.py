"""Uniform 1-D grids, sampled functions and their Fourier coefficients.

Two domains are supported: the unit circle (period 1, ``n`` points at
``x_i = i/n``) and a truncated line ``[left, right]`` sampled including both
endpoints.  Fourier coefficients are the period-1 coefficients

    c_k = (1/n) sum_i f(x_i) exp(-2 pi i k x_i),

so a multiplier ``m(xi)`` written for the continuous transform applies
verbatim at ``xi = k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

CIRCLE = "circle"
LINE = "line"

DomainKind = Literal["circle", "line"]


class GridError(ValueError):
    """Invalid grid construction or an operation unsupported on a grid."""


@dataclass(frozen=True)
class Grid:
    """A uniform grid on the circle of period 1 or on a truncated line."""

    kind: DomainKind
    n_points: int
    left: float = 0.0
    right: float = 1.0

    def __post_init__(self):
        if self.kind not in (CIRCLE, LINE):
            raise GridError(f"unknown domain kind {self.kind!r}")
        if int(self.n_points) != self.n_points or self.n_points < 8:
            raise GridError(f"n_points must be an integer >= 8, got {self.n_points}")
        if self.kind == CIRCLE:
            if self.n_points % 2:
                raise GridError(f"circle grids need an even size, got {self.n_points}")
            if self.left != 0.0 or self.right != 1.0:
                raise GridError("circle period is fixed to [0, 1)")
        elif not self.left < self.right:
            raise GridError(f"line needs left < right, got [{self.left}, {self.right}]")

    @classmethod
    def circle(cls, n_points: int) -> "Grid":
        return cls(CIRCLE, n_points)

    @classmethod
    def line(cls, left: float, right: float, n_points: int) -> "Grid":
        return cls(LINE, n_points, float(left), float(right))

    @property
    def is_circle(self) -> bool:
        return self.kind == CIRCLE

    @property
    def extent(self) -> float:
        return self.right - self.left

    @property
    def spacing(self) -> float:
        if self.is_circle:
            return 1.0 / self.n_points
        return self.extent / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return self.left + np.arange(self.n_points) * self.spacing

    @property
    def wavenumbers(self) -> np.ndarray:
        """Integer frequencies in FFT order: 0, 1, ..., n/2-1, -n/2, ..., -1."""
        self._require_circle("wavenumbers")
        n = self.n_points
        return np.fft.fftfreq(n, d=1.0 / n)

    def nearest_index(self, x: float) -> int:
        """Index of the grid node closest to ``x`` (reduced mod 1 on the circle)."""
        if self.is_circle:
            return int(np.rint((x % 1.0) * self.n_points)) % self.n_points
        i = int(np.rint((x - self.left) / self.spacing))
        if not 0 <= i < self.n_points:
            raise GridError(f"x={x} lies outside [{self.left}, {self.right}]")
        return i

    def _require_circle(self, what: str):
        if not self.is_circle:
            raise GridError(f"{what} is only defined on circle grids; use the line-kernel operations")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n_points": self.n_points, "left": self.left, "right": self.right}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        kind = d["kind"]
        if kind == CIRCLE:
            return cls.circle(int(d["n_points"]))
        return cls.line(d["left"], d["right"], int(d["n_points"]))


def make_grid(domain_kind, n_points: int) -> Grid:
    """Build a grid from ``"circle"`` or a ``("line", left, right)`` tuple.

    Examples
    --------
    >>> make_grid("circle", 256).spacing
    0.00390625
    >>> make_grid(("line", -20, 20), 4096).spacing == 40 / 4095
    True
    """
    if domain_kind == CIRCLE:
        return Grid.circle(n_points)
    if isinstance(domain_kind, (tuple, list)) and len(domain_kind) == 3 and domain_kind[0] == LINE:
        return Grid.line(domain_kind[1], domain_kind[2], n_points)
    raise GridError(f"unrecognised domain {domain_kind!r}")


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GridFunction:
    """Real samples of a function on a grid.  Values are stored read-only."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = _frozen(self.values)
        if vals.shape != (self.grid.n_points,):
            raise GridError(f"expected {self.grid.n_points} samples, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise GridError("grid function contains NaN or Inf")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, grid: Grid, fn) -> "GridFunction":
        return cls(grid, fn(grid.x))

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.grid, values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        if other.grid != self.grid:
            raise GridError("grid mismatch")
        return GridFunction(self.grid, self.values - other.values)


@dataclass(frozen=True)
class Spectrum:
    """Period-1 Fourier coefficients of a circle grid function, in FFT order."""

    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.grid._require_circle("Spectrum")
        c = np.array(self.coeffs, dtype=complex, copy=True)
        if c.shape != (self.grid.n_points,):
            raise GridError(f"expected {self.grid.n_points} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def wavenumbers(self) -> np.ndarray:
        return self.grid.wavenumbers

    def coeff(self, k: int) -> complex:
        """Coefficient at integer frequency ``k`` with ``-n/2 <= k < n/2``."""
        n = self.grid.n_points
        if not -n // 2 <= k < n // 2:
            raise IndexError(f"frequency {k} outside [-{n // 2}, {n // 2})")
        return complex(self.coeffs[k % n])


def transform(f: GridFunction) -> Spectrum:
    f.grid._require_circle("transform")
    return Spectrum(f.grid, np.fft.fft(f.values) / f.grid.n_points)


def inverse(S: Spectrum) -> GridFunction:
    vals = np.fft.ifft(S.coeffs * S.grid.n_points)
    return GridFunction(S.grid, vals.real)


def trapezoid(values: np.ndarray, grid: Grid) -> float:
    """Composite trapezoid rule; the periodic rule on the circle."""
    h = grid.spacing
    if grid.is_circle:
        return float(h * np.sum(values))
    return float(h * (np.sum(values) - 0.5 * (values[0] + values[-1])))


def lp_norm(f: GridFunction, p: float) -> float:
    """Quadrature estimate of the L^p norm; the exact grid maximum for ``p=inf``."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    a = np.abs(f.values)
    if np.isinf(p):
        return float(a.max())
    return trapezoid(a**p, f.grid) ** (1.0 / p)


def bessel_weight(k, s: float) -> np.ndarray:
    return (1.0 + 4.0 * np.pi**2 * np.asarray(k, dtype=float) ** 2) ** s


def sobolev_norm(S: Spectrum, s: float) -> float:
    """``(sum_k (1+4 pi^2 k^2)^s |c_k|^2)^(1/2)``."""
    w = bessel_weight(S.wavenumbers, s)
    return float(np.sqrt(np.sum(w * np.abs(S.coeffs) ** 2)))


def spectral_derivative(f: GridFunction, order: int = 1) -> GridFunction:
    """Spectral derivative on the circle; the Nyquist mode is dropped for odd orders."""
    S = transform(f)
    k = S.wavenumbers
    mult = (2j * np.pi * k) ** order
    if order % 2:
        mult[f.grid.n_points // 2] = 0.0
    return GridFunction(f.grid, np.fft.ifft(S.coeffs * mult * f.grid.n_points).real)


def centered_difference(values: np.ndarray, grid: Grid, order: int = 1) -> np.ndarray:
    """Apply the centered first difference ``order`` times.

    On the circle the result has the full length; on the line each application
    drops one sample at either end.
    """
    h = grid.spacing
    out = np.asarray(values, dtype=float)
    for _ in range(order):
        if grid.is_circle:
            out = (np.roll(out, -1) - np.roll(out, 1)) / (2 * h)
        else:
            out = (out[2:] - out[:-2]) / (2 * h)
    return out


def holder_norm_estimate(f: GridFunction, k: int, theta: float) -> float:
    """Finite-difference lower-bound estimate of the C^{k,theta} norm.

    The sup over offsets ``h`` is restricted to grid multiples
    ``m * spacing`` with ``1 <= m <= n/4``, and derivatives are replaced by
    iterated centered differences.  Only meaningful comparatively.
    """
    if k < 0 or not 0.0 <= theta <= 1.0:
        raise ValueError(f"need k >= 0 and theta in [0, 1], got k={k}, theta={theta}")
    grid = f.grid
    n = grid.n_points
    if n < 8 * (k + 1):
        raise GridError(f"grid of {n} points too coarse for order-{k} differences")

    total = 0.0
    d = f.values
    for j in range(k + 1):
        if j:
            d = centered_difference(d, grid, 1)
        total += float(np.max(np.abs(d)))

    h = grid.spacing
    best = 0.0
    for m in range(1, n // 4 + 1):
        if grid.is_circle:
            diff = np.roll(d, -m) - d
        else:
            if m >= d.size:
                break
            diff = d[m:] - d[:-m]
        best = max(best, float(np.max(np.abs(diff))) / (m * h) ** theta)
    return total + best

