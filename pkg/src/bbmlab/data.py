"""Initial data: closed-form presets and seeded random spectral laws."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .grid import Grid, GridError, GridFunction


def philox_uniforms(seed: int, count: int) -> np.ndarray:
    """``count`` uniforms in [0, 1) from Philox4x64-10 keyed by ``seed``.

    The i-th value is ``(w_i >> 11) * 2**-53`` where ``w_i`` is the i-th
    64-bit output word of the generator with key ``seed`` and counter
    starting at zero.  Any Philox4x64-10 implementation reproduces it, and
    a longer draw always extends a shorter one.
    """
    if seed < 0:
        raise ValueError("seed must be non-negative")
    raw = np.random.Philox(key=seed).random_raw(count)
    return (raw >> np.uint64(11)).astype(float) * 2.0**-53


@dataclass(frozen=True)
class SpectralLaw:
    """Random-phase data with ``|c_k| = amplitude * |k|^{-slope}`` for ``1 <= |k| <= k_max``.

    With ``k_max=None`` every mode below Nyquist is filled, so refining the
    grid adds modes while keeping the existing ones fixed.
    """

    slope: float
    seed: int = 0
    amplitude: float = 0.1
    k_max: int | None = None

    def coefficients(self, n_points: int) -> np.ndarray:
        """Positive-frequency coefficients ``c_1 ... c_K`` (complex)."""
        k_top = n_points // 2 - 1 if self.k_max is None else min(self.k_max, n_points // 2 - 1)
        phases = 2.0 * np.pi * philox_uniforms(self.seed, k_top)
        k = np.arange(1, k_top + 1, dtype=float)
        return self.amplitude * k ** (-self.slope) * np.exp(1j * phases)

    def sample(self, grid: Grid) -> GridFunction:
        if not grid.is_circle:
            raise GridError("spectral laws are sampled on circle grids")
        n = grid.n_points
        c = self.coefficients(n)
        half = np.zeros(n // 2 + 1, dtype=complex)
        half[1 : c.size + 1] = c * n
        return GridFunction(grid, np.fft.irfft(half, n))

    def to_dict(self) -> dict:
        return asdict(self)


def smooth_step(t):
    """C-infinity step: 0 for ``t <= 0``, 1 for ``t >= 1``."""
    t = np.asarray(t, dtype=float)

    def g(s):
        out = np.zeros_like(s)
        pos = s > 0
        out[pos] = np.exp(-1.0 / s[pos])
        return out

    a, b = g(t), g(1.0 - t)
    return a / (a + b)


def bump(x, left: float, right: float):
    """``exp(1 - 1/(1 - xi^2))`` on ``(left, right)`` (``xi`` affine to ``(-1, 1)``), zero outside; peak 1."""
    x = np.asarray(x, dtype=float)
    xi = (2.0 * x - (left + right)) / (right - left)
    out = np.zeros_like(xi)
    inside = np.abs(xi) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - xi[inside] ** 2))
    return out


def periodic_bump(x, left: float, right: float):
    """:func:`bump` wrapped onto the unit circle."""
    x = np.asarray(x, dtype=float) % 1.0
    return bump(x, left, right) + bump(x + 1.0, left, right) + bump(x - 1.0, left, right)


def sine(grid: Grid, amplitude: float = 0.1, mode: int = 1) -> GridFunction:
    return GridFunction(grid, amplitude * np.sin(2.0 * np.pi * mode * grid.x))


def abs_sine(grid: Grid, amplitude: float = 1.0) -> GridFunction:
    """``|sin(pi x)|``: Lipschitz with a derivative jump at the integers."""
    return GridFunction(grid, amplitude * np.abs(np.sin(np.pi * grid.x)))


def constant(grid: Grid, value: float = 0.0) -> GridFunction:
    return GridFunction(grid, np.full(grid.n_points, float(value)))


def inline_samples(grid: Grid, samples) -> GridFunction:
    return GridFunction(grid, samples)
