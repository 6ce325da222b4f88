"""Fourier multipliers and convolution kernels of the nonlocal BBM operator.

``phi(D) = d/dx (1 - d^2/dx^2)^{-1}`` is applied three ways:

* spectrally on the circle (:func:`apply_multiplier` with ``MultiplierSpec.phi()``),
* by direct O(N^2) convolution with the periodic Green's function derivative
  (:func:`phi_periodic_direct`),
* on a truncated line by two O(N) exponential recurrences
  (:func:`exp_convolve_line`).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, signal, special

from .grid import GridError, GridFunction, transform

BESSEL = "bessel"
PHI = "phi"
GROUP = "group"
DX_PHI = "dx_phi"

TWO_PI = 2.0 * np.pi


class SupportWarning(UserWarning):
    """Line data does not decay to zero at the window edges."""


@dataclass(frozen=True)
class MultiplierSpec:
    """A Fourier multiplier ``m(xi)`` evaluated at integer frequencies.

    Use the constructors :meth:`bessel`, :meth:`phi`, :meth:`group` and
    :meth:`dx_phi` rather than building instances by hand.
    """

    kind: str
    param: float = 0.0

    @classmethod
    def bessel(cls, s: float) -> "MultiplierSpec":
        return cls(BESSEL, float(s))

    @classmethod
    def phi(cls) -> "MultiplierSpec":
        return cls(PHI)

    @classmethod
    def group(cls, t: float) -> "MultiplierSpec":
        return cls(GROUP, float(t))

    @classmethod
    def dx_phi(cls) -> "MultiplierSpec":
        return cls(DX_PHI)

    def __call__(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        base = 1.0 + 4.0 * np.pi**2 * xi**2
        if self.kind == BESSEL:
            return (base ** (self.param / 2.0)).astype(complex)
        if self.kind == PHI:
            return 1j * TWO_PI * xi / base
        if self.kind == GROUP:
            return np.exp(-1j * TWO_PI * self.param * xi / base)
        if self.kind == DX_PHI:
            return (1.0 / base - 1.0).astype(complex)
        raise ValueError(f"unknown multiplier kind {self.kind!r}")


def apply_multiplier(f: GridFunction, m: MultiplierSpec) -> GridFunction:
    """Multiply the spectrum of ``f`` by ``m(k)`` and return the real result.

    An unpaired Nyquist mode whose multiplier is not real is zeroed, which
    keeps the output real for the odd multipliers (``phi``, ``group``).
    """
    grid = f.grid
    if not grid.is_circle:
        raise GridError("apply_multiplier needs a circle grid; use exp_convolve_line on the line")
    n = grid.n_points
    S = transform(f)
    mult = m(S.wavenumbers)
    if mult[n // 2].imag != 0.0:
        mult[n // 2] = 0.0
    out = np.fft.ifft(S.coeffs * mult * n)
    residue = float(np.max(np.abs(out.imag)))
    # sup norms, not l2: squaring underflows for tiny data
    scale = max(float(np.max(np.abs(f.values))), float(np.max(np.abs(out.real))))
    if residue > 1e-12 * scale:
        raise ArithmeticError(f"multiplier output not real (imaginary residue {residue:.3e})")
    return GridFunction(grid, out.real)


@lru_cache(maxsize=64)
def _phi_symbol_half(n: int) -> np.ndarray:
    # rfft-ordered symbol of phi(D); Nyquist entry zeroed
    k = np.arange(n // 2 + 1, dtype=float)
    sym = 1j * TWO_PI * k / (1.0 + 4.0 * np.pi**2 * k**2)
    sym[-1] = 0.0
    sym.setflags(write=False)
    return sym


def phi_circle(values: np.ndarray) -> np.ndarray:
    """Fast real-FFT application of ``phi(D)`` to circle samples."""
    n = values.shape[-1]
    return np.fft.irfft(np.fft.rfft(values) * _phi_symbol_half(n), n)


def bessel_kernel_line(s: float, x: float) -> float:
    """The Bessel kernel ``G_s(x)`` with ``J^{-s} f = G_s * f``, normalised to unit mass.

    Evaluated from its subordination integral over ``y in (0, inf)`` after
    the substitution ``y = e^u``.  The prefactor is fixed by requiring
    ``int G_s = 1``, which gives ``1 / ((4 pi)^{s/2} Gamma(s/2))``.
    Returns ``inf`` at ``x = 0`` for ``s <= 1`` where the kernel is singular.
    """
    if not s > 0:
        raise ValueError(f"Bessel kernel needs s > 0, got {s}")
    x = abs(float(x))
    a = 0.5 * (s - 1.0)
    log_c = -(s / 2.0) * math.log(4.0 * np.pi) - special.gammaln(s / 2.0)
    if x == 0.0:
        if s <= 1.0:
            return math.inf
        return math.exp(log_c + special.gammaln(a) + a * math.log(4.0 * np.pi))

    def log_integrand(u):
        return -np.pi * x * x * math.exp(-u) - math.exp(u) / (4.0 * np.pi) + a * u

    # peak of the integrand in u: w = e^u solves w^2/(4 pi) - a w - pi x^2 = 0
    w_peak = 2.0 * np.pi * (a + math.sqrt(a * a + x * x))
    u0 = math.log(w_peak)
    ref = log_integrand(u0)

    def g(u):
        return math.exp(log_integrand(u) - ref)

    # both tails decay double-exponentially; walk out until negligible
    lo, hi = u0 - 1.0, u0 + 1.0
    while log_integrand(lo) - ref > -750.0:
        lo -= 1.0
    while log_integrand(hi) - ref > -750.0:
        hi += 1.0
    breaks = np.linspace(lo, hi, 9)
    total = sum(
        integrate.quad(g, b0, b1, epsabs=0.0, epsrel=1e-12, limit=200)[0]
        for b0, b1 in zip(breaks[:-1], breaks[1:])
    )
    return math.exp(log_c + ref) * total


def periodic_green(x):
    """Periodic Green's function of ``1 - d^2/dx^2`` on the unit circle."""
    x = np.asarray(x, dtype=float)
    r = x - np.floor(x) - 0.5
    return np.cosh(r) / (2.0 * np.sinh(0.5))


def periodic_green_deriv(x):
    """Derivative of :func:`periodic_green`; right-continuous at the integers."""
    x = np.asarray(x, dtype=float)
    r = x - np.floor(x) - 0.5
    return np.sinh(r) / (2.0 * np.sinh(0.5))


def line_green_deriv(x):
    """``d/dx (e^{-|x|}/2) = -sgn(x) e^{-|x|}/2``."""
    x = np.asarray(x, dtype=float)
    return -np.sign(x) * np.exp(-np.abs(x)) / 2.0


def phi_periodic_direct(f: GridFunction) -> GridFunction:
    """O(N^2) real-space evaluation of ``phi(D) f`` on the circle.

    Trapezoid convolution with the periodic kernel derivative, taking the
    mean of the one-sided limits (zero) at the kernel jump, plus the
    Euler-Maclaurin correction ``h^2/12 * f'`` for that jump.  Fourth order
    for smooth ``f``; independent of the FFT path.
    """
    grid = f.grid
    if not grid.is_circle:
        raise GridError("phi_periodic_direct needs a circle grid")
    n = grid.n_points
    h = grid.spacing
    idx = np.arange(n)
    kern = periodic_green_deriv((idx[:, None] - idx[None, :]) * h)
    np.fill_diagonal(kern, 0.0)
    v = f.values
    fprime = (np.roll(v, -1) - np.roll(v, 1)) / (2 * h)
    return GridFunction(grid, h * kern @ v + h * h / 12.0 * fprime)


@dataclass(frozen=True)
class LineKernelResult:
    """``G_2 * f`` and ``(d/dx G_2) * f`` sampled on the grid of ``f``."""

    smooth_part: GridFunction
    deriv_part: GridFunction
    warnings: tuple = field(default=())


def _cell_weights(h: float) -> tuple[float, float]:
    # exact integral over one cell of e^{-distance} against the linear hat
    # functions of the far node (w_far) and the near node (w_near)
    e = math.exp(-h)
    one_minus = -math.expm1(-h)
    w_far = one_minus / h - e
    w_near = 1.0 - one_minus / h
    return w_far, w_near


def exp_sweeps(values: np.ndarray, h: float, order: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Left and right exponential sweeps of samples spaced ``h`` apart.

    Returns ``P(x_i) = int_{-inf}^{x_i} e^{-(x_i-y)} f(y) dy`` and
    ``R(x_i) = int_{x_i}^{inf} e^{-(y-x_i)} f(y) dy`` for ``f`` the linear
    interpolant of ``values`` (zero outside the window).  ``order=4`` adds
    the leading interpolation-error correction ``-h^2/12 (+-f' - f + P)``.
    """
    if order not in (2, 4):
        raise ValueError(f"order must be 2 or 4, got {order}")
    f = np.asarray(values, dtype=float)
    w_far, w_near = _cell_weights(h)
    decay = math.exp(-h)
    g = np.empty_like(f)
    g[0] = 0.0
    g[1:] = w_far * f[:-1] + w_near * f[1:]
    P = signal.lfilter([1.0], [1.0, -decay], g)
    g[-1] = 0.0
    g[:-1] = w_far * f[1:] + w_near * f[:-1]
    R = signal.lfilter([1.0], [1.0, -decay], g[::-1])[::-1]
    if order == 4:
        fp = np.gradient(f, h, edge_order=2)
        c = h * h / 12.0
        P = P - c * (fp - f + P)
        R = R - c * (-fp - f + R)
    return P, R


def check_line_support(f: GridFunction, rel_tol: float = 1e-12) -> tuple:
    vals = f.values
    scale = float(np.max(np.abs(vals)))
    edge = max(abs(vals[0]), abs(vals[-1]))
    if scale > 0 and edge > rel_tol * scale:
        return (f"boundary value {edge:.3e} exceeds {rel_tol:g} * sup-norm; data not compactly supported in window",)
    return ()


def exp_convolve_line(f: GridFunction, order: int = 2, rel_tol: float = 1e-12) -> LineKernelResult:
    """Convolve line data with ``e^{-|x|}/2`` and its derivative in O(N).

    Examples
    --------
    >>> from bbmlab.grid import Grid
    >>> g = Grid.line(-5, 5, 101)
    >>> r = exp_convolve_line(GridFunction(g, np.zeros(101)))
    >>> float(abs(r.deriv_part.values).max())
    0.0
    """
    grid = f.grid
    if grid.is_circle:
        raise GridError("exp_convolve_line needs a line grid")
    notes = check_line_support(f, rel_tol)
    for msg in notes:
        warnings.warn(msg, SupportWarning, stacklevel=2)
    P, R = exp_sweeps(f.values, grid.spacing, order)
    return LineKernelResult(GridFunction(grid, 0.5 * (P + R)), GridFunction(grid, 0.5 * (R - P)), notes)


def phi_line(values: np.ndarray, h: float, order: int = 2) -> np.ndarray:
    """``phi(D)`` on line samples: the derivative-kernel part of the sweeps."""
    P, R = exp_sweeps(values, h, order)
    return 0.5 * (R - P)


def apply_phi(f: GridFunction, line_order: int = 2) -> GridFunction:
    """``phi(D) f`` on either domain."""
    if f.grid.is_circle:
        return GridFunction(f.grid, phi_circle(f.values))
    return exp_convolve_line(f, order=line_order).deriv_part


def group_gain_bound(t: float, xi) -> np.ndarray:
    """Upper bound ``|t| 2 pi |xi| / (1 + 4 pi^2 xi^2)`` on ``|U(t)(xi) - 1|``."""
    xi = np.asarray(xi, dtype=float)
    return abs(t) * TWO_PI * np.abs(xi) / (1.0 + 4.0 * np.pi**2 * xi**2)


def unitary_group(f: GridFunction, t: float) -> GridFunction:
    """``U(t) f``; ``U(0)`` is the identity bit for bit."""
    if t == 0:
        return GridFunction(f.grid, f.values)
    return apply_multiplier(f, MultiplierSpec.group(t))


__all__ = [
    "MultiplierSpec",
    "LineKernelResult",
    "SupportWarning",
    "apply_multiplier",
    "apply_phi",
    "bessel_kernel_line",
    "exp_convolve_line",
    "exp_sweeps",
    "group_gain_bound",
    "line_green_deriv",
    "periodic_green",
    "periodic_green_deriv",
    "phi_circle",
    "phi_line",
    "phi_periodic_direct",
    "unitary_group",
]
