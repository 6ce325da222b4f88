import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bbmlab import diagnostics as dg
from bbmlab.data import SpectralLaw, abs_sine, sine
from bbmlab.evolution import SolverConfig, Trajectory, evolve, peakon
from bbmlab.grid import Grid, GridError, GridFunction, Spectrum, sobolev_norm, transform
from bbmlab.unique_continuation import stationary_step


def spectrum_from(coeffs_pos: np.ndarray, n: int) -> Spectrum:
    """Hermitian spectrum with ``c_k = coeffs_pos[k]`` for ``1 <= k < n/2``."""
    c = np.zeros(n, dtype=complex)
    m = coeffs_pos.size
    c[1:m] = coeffs_pos[1:]
    c[-(m - 1):] = np.conj(coeffs_pos[1:])[::-1]
    return Spectrum(Grid.circle(n), c)


class TestInvariants:
    def test_zero(self):
        assert dg.invariants(GridFunction(Grid.circle(64), np.zeros(64))).as_tuple() == (0.0, 0.0, 0.0)

    def test_sine(self):
        I = dg.invariants(sine(Grid.circle(256), 1.0))
        expect = (0.0, 2 * np.pi**2 + 0.5, 1.5)
        assert np.allclose(I.as_tuple(), expect, rtol=0, atol=1e-10)

    @pytest.mark.parametrize("c", [-2.0, 0.5, 3.0])
    def test_constant(self, c):
        I = dg.invariants(GridFunction(Grid.circle(32), np.full(32, c)))
        assert np.allclose(I.as_tuple(), (c, c * c, c**3 + 3 * c * c), rtol=1e-14, atol=1e-14)

    def test_line_rejected(self):
        with pytest.raises(GridError):
            dg.invariants(GridFunction(Grid.line(0, 1, 16), np.zeros(16)))


class TestDrift:
    def test_constant(self):
        traj = evolve(GridFunction(Grid.circle(64), np.full(64, 0.7)), SolverConfig(dt=0.1, t_final=1.0))
        assert dg.drift_report(traj).as_tuple() == (0.0, 0.0, 0.0)

    def test_stationary_step(self):
        u0 = stationary_step(-2.0, 0.25, 0.75, Grid.circle(512))
        traj = evolve(u0, SolverConfig(dt=1e-2, t_final=2.0))
        assert max(dg.drift_report(traj).as_tuple()) <= 1e-12

    def test_sine_long_run_and_halving(self):
        u0 = sine(Grid.circle(512), 0.1)
        rep = dg.drift_report(evolve(u0, SolverConfig(dt=1e-3, t_final=10.0, snapshot_stride=100)))
        assert rep.I2 <= 1e-8 and rep.I3 <= 1e-8
        # at dt = 1e-3 the drift sits at rounding level, so the order check uses coarser steps
        d1 = dg.drift_report(evolve(u0, SolverConfig(dt=0.2, t_final=10.0, snapshot_stride=5)))
        d2 = dg.drift_report(evolve(u0, SolverConfig(dt=0.1, t_final=10.0, snapshot_stride=10)))
        assert d2.I2 < d1.I2 / 8 and d2.I3 < d1.I3 / 8

    def test_empty_history(self):
        traj = evolve(GridFunction(Grid.line(-20, 20, 401), np.zeros(401)), SolverConfig(dt=0.1, t_final=0.2))
        with pytest.raises(dg.DiagnosticError):
            dg.drift_report(traj)

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 1000), st.floats(0.05, 1.0))
    def test_first_integral_exact(self, seed, amp):
        u0 = SpectralLaw(1.2, seed=seed, amplitude=amp).sample(Grid.circle(128))
        traj = evolve(u0, SolverConfig(dt=1e-2, t_final=0.5))
        assert dg.drift_report(traj).I1 <= 1e-13


class TestSpectralSlope:
    def test_exact_power_law(self):
        k = np.arange(256, dtype=float)
        k[0] = 1.0
        S = spectrum_from(k**-2.0, 512)
        assert abs(dg.spectral_slope(S, 8, 128) - 2.0) <= 1e-6

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_random_phases(self, seed):
        rng = np.random.default_rng(seed)
        k = np.arange(256, dtype=float)
        k[0] = 1.0
        S = spectrum_from(k**-1.5 * np.exp(2j * np.pi * rng.random(256)), 512)
        assert abs(dg.spectral_slope(S, 8, 128) - 1.5) <= 0.05

    def test_single_mode(self):
        S = transform(sine(Grid.circle(512), 1.0, 20))
        with pytest.raises(dg.DiagnosticError):
            dg.spectral_slope(S, 8, 128)

    def test_band_out_of_range(self):
        with pytest.raises(dg.DiagnosticError):
            dg.spectral_slope(transform(sine(Grid.circle(64))), 8, 40)


class TestRegularityGain:
    def run(self, slope, seed=0, n=1024, refine=False):
        law = SpectralLaw(slope, seed, 0.1)
        u0 = law.sample(Grid.circle(n))
        traj = evolve(u0, SolverConfig(dt=1e-3, t_final=0.5, snapshot_stride=500))
        return dg.regularity_gain(u0, traj, slope - 0.5, (8, 128), law if refine else None)

    @pytest.mark.parametrize("seed", [0, 1])
    def test_h1_data(self, seed):
        rep = self.run(1.5, seed)
        assert rep.slope_diff >= 2.3
        assert rep.gain_predicted == 1.0

    @pytest.mark.parametrize("seed", [0, 1])
    def test_rough_data(self, seed):
        rep = self.run(0.9, seed)
        assert rep.gain_measured >= 0.7
        assert rep.gain_predicted == pytest.approx(0.9)

    def test_gain_is_slope_difference(self):
        rep = self.run(1.2)
        assert rep.gain_measured == rep.slope_diff - rep.slope_u0

    def test_constant_is_degenerate(self):
        u0 = GridFunction(Grid.circle(512), np.full(512, 0.4))
        traj = evolve(u0, SolverConfig(dt=1e-2, t_final=0.5))
        rep = dg.regularity_gain(u0, traj, 1.0)
        assert rep.degenerate and "zero difference" in rep.notes[0]

    def test_refinement_bounded(self):
        rep = self.run(0.9, refine=True)
        assert rep.refinement_verdict == "bounded"
        assert [n for n, _ in rep.refinement_ratios] == [256, 512, 1024]

    def test_needs_positive_time(self):
        u0 = sine(Grid.circle(64), 0.1)
        traj = Trajectory(u0.grid, [0.0], u0.values[None, :])
        with pytest.raises(dg.DiagnosticError):
            dg.regularity_gain(u0, traj, 1.0)

    @pytest.mark.parametrize("s,expected", [(0.0, 0.5), (0.25, 1.0), (0.5, 1.5), (1.0, 2.0)])
    def test_gained_index(self, s, expected):
        assert dg.gained_index(s) == expected

    def test_refinement_verdicts(self):
        assert dg.refinement_verdict([1.0, 1.05, 1.1]) == "bounded"
        assert dg.refinement_verdict([1.0, 1.6, 2.6]) == "divergent"
        assert dg.refinement_verdict([1.0, 1.3, 1.7]) == "inconclusive"


def _u0_norms(offset, slope=0.9, ns=(256, 512, 1024, 2048)):
    law = SpectralLaw(slope, 0, 0.1)
    return [sobolev_norm(transform(law.sample(Grid.circle(n))), slope - 0.5 + offset) for n in ns]


@pytest.mark.xfail(strict=True, reason="borderline data: ||u0||_{H^(s+0.3)} grows like N^0.3, i.e. 2^0.3 ~ 1.23 per doubling")
def test_gain_positivity_growth_at_offset_03():
    norms = _u0_norms(0.3)
    assert dg.refinement_verdict(norms) == "divergent"


def test_gain_positivity_growth_at_offset_075():
    # regularity beyond s lives in u0: its norm diverges under refinement while u(t) - u0 stays bounded
    norms = _u0_norms(0.75)
    assert dg.refinement_verdict(norms) == "divergent"
    ratios = np.array(norms[1:]) / np.array(norms[:-1])
    assert np.allclose(ratios, 2**0.75, rtol=0.1)


class TestSingularities:
    def test_abs_sine_kink(self):
        u = abs_sine(Grid.circle(2048))
        s = dg.singularity_localize(u, 1, 0.0)
        assert s.points.size == 1
        assert dg.circle_distance(s.points[0], 0.0) <= 1 / 2048

    def test_smooth_empty(self):
        assert dg.singularity_localize(sine(Grid.circle(1024)), 1, 0.0).points.size == 0
        assert dg.singularity_localize(sine(Grid.circle(1024)), 0, 0.5).points.size == 0

    def test_step_jumps(self):
        g = Grid.circle(1024)
        u = stationary_step(-2.0, 0.25, 0.75, g)
        s = dg.singularity_localize(u, 0, 0.5)
        assert s.points.size == 2
        assert np.all(np.abs(s.points - [0.25, 0.75]) <= g.spacing)
        assert s.to_dict()["detector_scale"] == [0, 0.5]

    def test_points_sorted_on_grid(self):
        g = Grid.circle(512)
        u = GridFunction(g, np.abs(np.sin(3 * np.pi * g.x)))
        s = dg.singularity_localize(u, 1, 0.0)
        assert np.all(np.diff(s.points) > 0)
        assert np.all(np.isin(s.points, g.x))
        assert s.points.size == 3

    def test_persistence(self):
        g = Grid.circle(2048)
        traj = evolve(abs_sine(g), SolverConfig(dt=1e-3, t_final=1.0, snapshot_stride=100))
        ref = dg.singularity_localize(traj.states[0], 1, 0.0).points
        for u in traj.states:
            pts = dg.singularity_localize(u, 1, 0.0).points
            assert pts.size == ref.size
            assert np.all(dg.circle_distance(pts, ref) <= g.spacing)

    def test_too_coarse(self):
        with pytest.raises(GridError):
            dg.singularity_localize(sine(Grid.circle(8)), 2, 0.0)


class TestProbes:
    def test_track_peak_off_grid(self):
        g = Grid.line(-30, 30, 6001)
        u = GridFunction(g, np.exp(-np.abs(g.x - 0.1234)))
        assert abs(dg.track_peak(u) - 0.1234) <= 1e-9

    def test_track_peak_edge(self):
        g = Grid.line(-30, 30, 601)
        with pytest.raises(dg.DiagnosticError):
            dg.track_peak(GridFunction(g, np.exp(-np.abs(g.x - 29.9))))

    def test_peakon_speed(self):
        g = Grid.line(-30, 30, 8192)
        traj = evolve(peakon(1.0, 0.0, g), SolverConfig(dt=1e-3, t_final=0.5, snapshot_stride=250), equation="ch")
        assert abs(dg.track_peak(traj.final) - 0.5) / 0.5 <= 0.02

    def test_initial_rate_polynomial(self):
        # exact for quartics in t
        g = Grid.circle(8)
        t = np.linspace(0, 0.4, 5)
        vals = np.outer(1 + 2 * t - t**2 + 3 * t**3 - t**4, np.ones(8))
        assert np.allclose(dg.initial_rate(Trajectory(g, t, vals)), 2.0, atol=1e-12)

    def test_initial_rate_uneven(self):
        g = Grid.circle(8)
        with pytest.raises(dg.DiagnosticError):
            dg.initial_rate(Trajectory(g, [0, 0.1, 0.2, 0.35, 0.4], np.zeros((5, 8))))

    def test_initial_rate_matches_rhs(self):
        from bbmlab.evolution import time_derivative

        u0 = sine(Grid.circle(256), 0.5)
        traj = evolve(u0, SolverConfig(dt=1e-3, t_final=4e-3))
        assert np.max(np.abs(dg.initial_rate(traj) - time_derivative(u0).values)) <= 1e-10


def test_circle_distance_wraps():
    assert math.isclose(float(dg.circle_distance(0.99, 0.01)), 0.02, abs_tol=1e-15)
