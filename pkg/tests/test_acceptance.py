"""The fifteen acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line (printed in the terminal summary)
before asserting.
"""

import time
import warnings

import numpy as np
import pytest
from scipy import integrate

from bbmlab import diagnostics as dg
from bbmlab import unique_continuation as uc
from bbmlab.data import SpectralLaw, abs_sine, bump, sine
from bbmlab.evolution import SolverConfig, SystemCoefficients, evolve, evolve_system, peakon
from bbmlab.grid import Grid, GridFunction, spectral_derivative
from bbmlab.operators import (
    MultiplierSpec,
    apply_multiplier,
    exp_convolve_line,
    group_gain_bound,
    periodic_green,
    phi_periodic_direct,
    unitary_group,
)

pytestmark = pytest.mark.acceptance


def test_01_operator_identity(record):
    g = Grid.circle(256)
    worst = 0.0
    t0 = time.perf_counter()
    for seed in range(100):
        f = SpectralLaw(1.0, seed=seed, amplitude=1.0, k_max=100).sample(g)
        lhs = spectral_derivative(apply_multiplier(f, MultiplierSpec.phi())).values
        rhs = apply_multiplier(f, MultiplierSpec.bessel(-2.0)).values - f.values
        worst = max(worst, np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    record(1, "dx phi(D) = J^-2 - I", ok, f"max rel l2 {worst:.2e} (<= 1e-12), {elapsed:.3f} s (< 1 s)")
    assert ok


def test_02_periodic_green(record):
    def shifted(x):
        return np.cosh(x - 0.5) / (2 * np.sinh(0.5))

    worst = 0.0
    for k in range(65):
        ck = integrate.quad(shifted, 0, 1, weight="cos", wvar=2 * np.pi * k, epsabs=1e-15)[0]
        worst = max(worst, abs(ck - 1 / (1 + 4 * np.pi**2 * k**2)))
    mean = integrate.quad(periodic_green, 0, 1, epsabs=1e-15)[0]
    ok = worst <= 1e-10 and abs(mean - 1) <= 1e-10
    record(2, "periodic Green's function", ok, f"max coeff error {worst:.2e}, mean error {abs(mean - 1):.2e} (<= 1e-10)")
    assert ok


def test_03_kernel_oracles(record):
    n = 512
    g = Grid.circle(n)
    f = SpectralLaw(2.0, seed=5, amplitude=1.0, k_max=16).sample(g)
    spectral = apply_multiplier(f, MultiplierSpec.phi()).values
    direct = phi_periodic_direct(f).values
    # the line recurrence sees the periodic data tiled over 41 periods; the central period is compared
    periods = 20
    line = Grid.line(-periods, periods + 1, (2 * periods + 1) * n + 1)
    tiled = np.concatenate([np.tile(f.values, 2 * periods + 1), f.values[:1]])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lin = exp_convolve_line(GridFunction(line, tiled), order=4).deriv_part.values
    centre = lin[periods * n:(periods + 1) * n]
    e1 = np.max(np.abs(spectral - direct))
    e2 = np.max(np.abs(spectral - centre))
    e3 = np.max(np.abs(direct - centre))
    ok = max(e1, e2, e3) <= 1e-6
    record(3, "spectral / direct / line-recurrence phi", ok,
           f"pairwise sup {e1:.2e}, {e2:.2e}, {e3:.2e} (<= 1e-6)")
    assert ok


def test_04_group(record):
    g = Grid.circle(256)
    f = SpectralLaw(1.0, seed=9, amplitude=1.0).sample(g)
    identity = np.array_equal(unitary_group(f, 0.0).values, f.values)
    norm0 = np.linalg.norm(f.values)
    drift = max(abs(np.linalg.norm(unitary_group(f, t).values) - norm0) / norm0 for t in (0.1, 1.0, 7.5, -3.0))
    law = max(np.max(np.abs(unitary_group(unitary_group(f, s), t).values - unitary_group(f, t + s).values))
              for t, s in ((0.3, 0.4), (2.0, -5.0), (10.0, 10.0)))
    xi = np.linspace(-1000, 1000, 10_000)
    gain_ok = all(np.all(np.abs(MultiplierSpec.group(t)(xi) - 1) <= group_gain_bound(t, xi) + 1e-15)
                  for t in (-1.0, 0.05, 1.0, 20.0))
    ok = identity and drift <= 1e-12 and law <= 1e-12 and gain_ok
    record(4, "unitary group", ok, f"U(0)=I exact: {identity}; norm drift {drift:.1e}; "
           f"group law {law:.1e}; gain bound on 1e4 xi: {gain_ok}")
    assert ok


def test_05_stationary_solutions(record):
    g = Grid.circle(512)
    cfg = SolverConfig(dt=1e-3, t_final=5.0, snapshot_stride=100)
    cases = {f"constant {c}": GridFunction(g, np.full(512, c)) for c in (0.0, 1.3, -1.0)}
    cases["-2/0 step (circle)"] = uc.stationary_step(-2.0, 0.25, 0.75, g)
    cases["-2/0 step (line)"] = uc.stationary_step(-2.0, -1.0, 1.0, Grid.line(-20, 20, 512))
    for c0 in (0.5, -3.0, 2.0):
        cases[f"two-level step c0={c0}"] = uc.stationary_step(c0, 0.25, 0.75, g)
    drifts = {k: evolve(u, cfg).sup_drift() for k, u in cases.items()}
    worst = max(drifts.values())
    ok = worst <= 1e-10
    record(5, "stationary weak solutions", ok, f"max sup-drift over {len(cases)} cases, t in [0,5]: {worst:.2e} (<= 1e-10)")
    assert ok


def test_06_conservation(record):
    u0 = sine(Grid.circle(512), 0.1)
    d = dg.drift_report(evolve(u0, SolverConfig(dt=1e-3, t_final=10.0, snapshot_stride=100)))
    dh = dg.drift_report(evolve(u0, SolverConfig(dt=5e-4, t_final=10.0, snapshot_stride=200)))
    # at dt = 1e-3 both drifts sit at the rounding floor, so the halving factor is read at the
    # coarsest step pair where the time-stepping error dominates
    c1 = dg.drift_report(evolve(u0, SolverConfig(dt=0.2, t_final=10.0, snapshot_stride=5)))
    c2 = dg.drift_report(evolve(u0, SolverConfig(dt=0.1, t_final=10.0, snapshot_stride=10)))
    r2, r3 = c1.I2 / c2.I2, c1.I3 / c2.I3
    ok = d.I1 <= 1e-13 and d.I2 <= 1e-8 and d.I3 <= 1e-8 and r2 >= 8 and r3 >= 8
    record(6, "conservation", ok,
           f"dt=1e-3 drift I1 {d.I1:.1e}, I2 {d.I2:.1e}, I3 {d.I3:.1e}; dt=5e-4 I2 {dh.I2:.1e}, I3 {dh.I3:.1e}; "
           f"halving 0.2->0.1 reduces I2 {r2:.1f}x, I3 {r3:.1f}x (>= 8)")
    assert ok


def test_07_method_agreement(record):
    worst = 0.0
    for u0 in (sine(Grid.circle(256), 0.1), SpectralLaw(2.0, 4, 0.2, 32).sample(Grid.circle(256))):
        finals = [evolve(u0, SolverConfig(method=m, dt=1e-3, t_final=0.1)).final.values
                  for m in ("picard", "rk4", "exp_duhamel")]
        worst = max(worst, *(np.max(np.abs(finals[i] - finals[j])) for i, j in ((0, 1), (0, 2), (1, 2))))
    ok = worst <= 1e-7
    record(7, "Picard / RK4 / exponential Duhamel", ok, f"max pairwise sup difference {worst:.2e} (<= 1e-7)")
    assert ok


def test_08_decomposition_identity(record):
    rng = np.random.default_rng(8)
    g = Grid.circle(1024)
    worst = 0.0
    for seed in range(100):
        u = SpectralLaw(rng.uniform(0.6, 2.0), seed=seed, amplitude=rng.uniform(0.1, 2.0)).sample(g)
        a = rng.uniform(0.0, 0.8)
        b = rng.uniform(a + 0.02, 0.99)
        worst = max(worst, abs(uc.a_decomposition(u, a, b).identity_residual))
    line_nodes = Grid.line(-20, 20, 1024).x
    circle_nodes = g.x
    positive = True
    for _ in range(100):
        a = rng.uniform(-5, 5)
        b = a + rng.uniform(0.01, 5)
        m = uc.kernel_comparison_margins(line_nodes, a, b, "line")
        positive &= m["outside"] > 0 and m["inside"] > 0
        a = rng.uniform(0, 0.9)
        b = rng.uniform(a + 0.005, 0.999)
        m = uc.kernel_comparison_margins(circle_nodes, a, b, "circle")
        positive &= m["outside"] > 0 and m["inside"] > 0
    ok = worst <= 1e-8 and positive
    record(8, "four-term identity and kernel positivity", ok,
           f"max |A1+A2+A3+A4| {worst:.2e} (<= 1e-8) over 100 slices; kernel comparisons hold on all nodes: {positive}")
    assert ok


def test_09_tha2_falsification(record):
    rng = np.random.default_rng(9)
    g = Grid.line(-20, 20, 2048)
    x = g.x
    h = g.spacing
    worst = -np.inf
    clause_payload = 0
    clause_sup = 0
    for _ in range(100):
        a = rng.uniform(-2.0, 0.0)
        b = a + rng.uniform(0.3, 2.0)
        amp = 10.0 ** rng.uniform(-12, 0)
        pert = np.zeros_like(x)
        for _ in range(3):
            side = rng.choice([-1.0, 1.0])
            centre = (a - rng.uniform(0.3, 2.5)) if side < 0 else (b + rng.uniform(0.3, 2.5))
            w = rng.uniform(0.1, 0.5)
            pert += rng.normal() * bump(x, centre - w, centre + w)
        pert *= amp
        ia, ib = g.nearest_index(a), g.nearest_index(b)
        pert[ia:ib + 1] = 0.0
        rep = uc.a_decomposition(GridFunction(g, -1.0 + pert), a, b)
        worst = max(worst, rep.A1)
        payload_l1 = h * np.sum(0.5 * pert**2)
        if abs(rep.A1) < 1e-10:
            clause_payload += payload_l1 >= 1e-8
            clause_sup += np.max(np.abs(pert)) >= 1e-8
    ok = worst <= 1e-10 and clause_payload == 0
    record(9, "THA2 falsification search", ok,
           f"max dt u(b) - dt u(a) {worst:.2e} (<= 1e-10); near-equality with payload L1 >= 1e-8: {clause_payload} "
           f"(reading ||u+1||_inf instead: {clause_sup})")
    assert ok


def test_10_tha3_constructor(record):
    worst = 0.0
    contract = True
    for c0 in (-3.0, -0.5, 1.0, 2.0):
        con = uc.construct_tha3(c0, 1.0)
        worst = max(worst, con.max_dt_on_interval)
        x = con.u0.grid.x
        v = con.u0.values
        contract &= bool(np.all(v[(x >= -1e-12) & (x <= 1 + 1e-12)] == c0))
        contract &= bool(np.all(v[(x <= -con.M) | (x >= 1 + con.M)] == 0.0))
    try:
        uc.construct_tha3(-1.0, 1.0)
        rejected = False
    except uc.ConstructionError:
        rejected = True
    ok = worst <= 1e-8 and contract and rejected
    record(10, "THA3 constructor", ok, f"max |dt u| on [0,b] {worst:.2e} (<= 1e-8); support and plateau exact: "
           f"{contract}; c0=-1 rejected: {rejected}")
    assert ok


def test_11_thap3_constructor(record):
    g = Grid.circle(1280)
    res = uc.construct_thap3(0.0, 0.3, 0.6, g)
    rate = dg.initial_rate(evolve(res.v0, SolverConfig(dt=1e-3, t_final=4e-3)))
    cross = abs(rate[g.nearest_index(res.b)] - rate[g.nearest_index(res.a)])
    ok = res.q_v1 > 0 > res.q_v2 and abs(res.q_value) <= 1e-10 and 0 < res.lambda0 < 1 and cross <= 1e-8
    record(11, "THAP3 constructor", ok, f"Q(v1)={res.q_v1:.3e} > 0 > Q(v2)={res.q_v2:.3e}; lambda0={res.lambda0:.6f}; "
           f"|Q|={abs(res.q_value):.1e} (<= 1e-10); trajectory rate difference {cross:.1e} (<= 1e-8)")
    assert ok


def test_12_regularity_gain(record):
    cfg = SolverConfig(dt=1e-3, t_final=0.5, snapshot_stride=500)
    out = {}
    for slope in (1.5, 0.9):
        law = SpectralLaw(slope, 0, 0.1)
        u0 = law.sample(Grid.circle(1024))
        out[slope] = dg.regularity_gain(u0, evolve(u0, cfg), slope - 0.5, (8, 128), law)
    ratios = {s: [v2 / v1 for (_, v1), (_, v2) in zip(r.refinement_ratios, r.refinement_ratios[1:])]
              for s, r in out.items()}
    max_ratio = max(max(r) for r in ratios.values())
    ok = out[1.5].slope_diff >= 2.3 and out[0.9].gain_measured >= 0.7 and max_ratio <= 1.1
    record(12, "regularity gain", ok, f"H1 data: slope of u(t)-u0 {out[1.5].slope_diff:.3f} (>= 2.3); "
           f"s=0.4 data: gain {out[0.9].gain_measured:.3f} (>= 0.7, predicted {out[0.9].gain_predicted:.1f}); "
           f"max refinement ratio {max_ratio:.4f} (<= 1.1)")
    assert ok


def test_13_singularity_persistence(record):
    g = Grid.circle(2048)
    traj = evolve(abs_sine(g), SolverConfig(dt=1e-3, t_final=1.0, snapshot_stride=50))
    worst = 0.0
    for u in traj.states:
        pts = dg.singularity_localize(u, 1, 0.0).points
        if pts.size != 1:
            worst = np.inf
            break
        worst = max(worst, float(dg.circle_distance(pts[0], 0.0)) / g.spacing)
    ok = worst <= 1.0
    record(13, "singularity persistence", ok,
           f"kink distance from x=0 over {traj.times.size} snapshots: max {worst:.2f} cells (<= 1)")
    assert ok


def test_14_ch_peakon(record):
    g = Grid.line(-30, 30, 8192)
    traj = evolve(peakon(1.0, 0.0, g), SolverConfig(dt=1e-3, t_final=0.5, snapshot_stride=100), equation="ch")
    errs = [abs(dg.track_peak(u) - t) / t for t, u in zip(traj.times[1:], traj.states[1:])]
    g2 = Grid.line(-30, 30, 6001)
    rep = uc.ch_uc_check(GridFunction(g2, 0.5 * bump(g2.x, 2.0, 4.0)), -1.0, 1.0)
    ok = max(errs) <= 0.02 and rep.verdict == uc.HYPOTHESIS_FAILS
    record(14, "Camassa-Holm peakon and CH check", ok,
           f"max relative crest error {max(errs):.2e} (<= 2e-2); bump counterexample verdict {rep.verdict}")
    assert ok


def test_15_system_reduction(record):
    u0 = sine(Grid.circle(512), 0.1)
    cfg = SolverConfig(dt=1e-3, t_final=1.0, snapshot_stride=100)
    v0 = GridFunction(u0.grid, np.zeros(512))
    sys_traj = evolve_system(u0, v0, SystemCoefficients(A=0.5), cfg)
    diff = float(np.max(np.abs(sys_traj.values[:, 0, :] - evolve(u0, cfg).values)))
    ok = diff <= 1e-10
    record(15, "system reduction to BBM", ok, f"max |u_sys - u_bbm| {diff:.2e} (<= 1e-10)")
    assert ok
