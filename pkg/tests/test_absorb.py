import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import skew

from conftest import GBAR, KBAR0
from spinmem.absorb import (
    KAPPA_MAX,
    ModulationProfile,
    ab_tracks,
    critical_speed_abs,
    eta_abs_slow_analytic,
    eta_abs_upper_bound,
    eta_absorption,
    input_energy_floor,
    optimal_kappa_a,
    reconstruct_input,
    solve_absorption,
)
from spinmem.core import DimensionlessParams, ParameterError, ReconstructionError, Signal, TimeGrid, energy
from spinmem.integrate import integrate
from spinmem.pulses import Family, default_grid, make_waveform, sample

REF = DimensionlessParams(GBAR, KBAR0)


def sech_closed_form(tau, alpha, p):
    """Optimal absorption coupling for a sech target, written out by hand (Gamma = 1)."""
    x = alpha * tau
    sech2 = 1 / np.cosh(x) ** 2
    num = 1 + 4 * alpha**2 * (2 * sech2 - 1) - p.kbar_s
    return np.abs(p.kbar0 + 1 + num / (2 * alpha * np.tanh(x) - 1))


def critical_speed_oracle(p, tol=1e-7):
    """Smallest alpha at which A or B (sech target) changes sign, from the roots in u = tanh.

    A/(S/g) = 2 a^2 u^2 - (1+k0) a u / 2 + (g^2 + k0/4 - a^2) and B/(S/2g) = 1/2 - a u.
    """
    c = p.gbar**2 + p.kbar0 / 4

    def crosses(a):
        if a >= 0.5:
            return True
        roots = np.roots([2 * a * a, -(1 + p.kbar0) * a / 2, c - a * a])
        real = roots[np.abs(roots.imag) < 1e-12].real
        return bool(np.any(np.abs(real) < 1))

    lo, hi = 1e-9, 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if crosses(mid) else (mid, hi)
    return 0.5 * (lo + hi)


def test_tracks_at_pulse_centre():
    w = make_waveform("sech", 0.3)
    g = TimeGrid.symmetric(10.0, 16)
    point = [Signal(g, np.full(g.n, float(f(0.0)))) for f in (w.value, w.d1, w.d2)]
    A, B = ab_tracks(*point, REF)
    assert B.values[0] == pytest.approx(w.value(0.0) / (4 * GBAR), rel=1e-15)
    # A/B at the centre reproduces the closed-form coupling
    assert A.values[0] / B.values[0] == pytest.approx(KBAR0 + 1 - 4 * 0.3**2, rel=1e-13)


def test_tracks_of_zero_waveform():
    g = TimeGrid.symmetric(10.0, 64)
    z = Signal.zeros(g)
    A, B = ab_tracks(z, z, z, REF)
    assert not A.values.any() and not B.values.any()


def test_tracks_need_spins():
    z = Signal.zeros(TimeGrid.symmetric(10.0, 64))
    with pytest.raises(ParameterError):
        ab_tracks(z, z, z, DimensionlessParams(0.0, 0.1))


@given(st.floats(0.1, 1.5), st.floats(0.0, 0.5), st.floats(0.05, 0.45))
@settings(max_examples=20)
def test_kappa_matches_sech_closed_form(g, k0, alpha):
    p = DimensionlessParams(g, k0)
    w = make_waveform("sech", alpha)
    prof = optimal_kappa_a(w, p, kappa_max=1e300)
    t = prof.grid.tau
    ref = sech_closed_form(t, alpha, p)
    far = np.abs(2 * alpha * np.tanh(alpha * t) - 1) > 1e-6
    rel = np.abs(prof.kappa[far] - ref[far]) / ref[far]
    assert rel.max() < 1e-8


def test_kappa_at_centre_example():
    alpha = 0.12
    assert abs(sech_closed_form(0.0, alpha, REF) - (KBAR0 + 1 - 4 * alpha**2)) < 1e-15
    prof = optimal_kappa_a(make_waveform("sech", alpha), REF)
    centre = np.interp(0.0, prof.grid.tau, prof.kappa)
    assert abs(centre - 0.97573) < 1e-5


def test_slow_limit_approaches_adiabatic_coupling():
    devs = []
    for alpha in (0.02, 0.01):
        prof = optimal_kappa_a(make_waveform("sech", alpha), REF)
        devs.append(np.max(np.abs(prof.kappa - (KBAR0 + 1))))
    assert devs[1] < 1e-3
    assert devs[0] / devs[1] == pytest.approx(4, rel=0.1)  # deviation shrinks like alpha^2


def test_fast_pulse_has_singularity():
    prof = optimal_kappa_a(make_waveform("sech", 0.69), REF)
    assert prof.flags.has_singularity and prof.flags.pathological
    assert len(prof.flags.singular_times) >= 1
    # B vanishes where tanh(alpha tau) = 1/(2 alpha)
    expected = np.arctanh(1 / (2 * 0.69)) / 0.69
    assert min(abs(t - expected) for t in prof.flags.singular_times) < 0.02


def test_slow_pulse_profile_is_clean():
    prof = optimal_kappa_a(make_waveform("sech", 0.12), REF)
    assert not prof.flags.pathological and not prof.flags.clipped
    assert np.all(prof.kappa >= 0)


def test_profiles_reject_negative_values():
    g = TimeGrid.symmetric(10.0, 64)
    with pytest.raises(ValueError):
        ModulationProfile(g, -np.ones(64))


@pytest.mark.parametrize("alpha", [0.12, 0.25])
def test_forward_integration_reproduces_target(alpha):
    sol = solve_absorption(make_waveform("sech", alpha), REF)
    rms = np.sqrt(np.mean((sol.s_achieved.values - sol.s_target.values) ** 2))
    assert rms < 1e-5


def test_reconstruction_of_zero_waveform():
    g = TimeGrid.symmetric(60.0, 16384)
    w = make_waveform("sampled", None, Signal.zeros(g))
    e_in, e_cav = reconstruct_input(w, REF, ModulationProfile.constant(g, 1.0))
    assert not e_in.values.any() and not e_cav.values.any()


def test_reconstruction_needs_coupling():
    w = make_waveform("sech", 0.2)
    g = default_grid(w)
    with pytest.raises(ReconstructionError):
        reconstruct_input(w, REF, ModulationProfile.constant(g, 0.0))


def test_fast_pulse_input_is_exponential_like():
    sol = solve_absorption(make_waveform("sech", 0.69), REF)
    t = sol.e_in.grid.tau
    weights = sol.e_in.values**2
    # skewness of the time distribution |e_in|^2
    mean = np.sum(t * weights) / weights.sum()
    var = np.sum((t - mean) ** 2 * weights) / weights.sum()
    skewness = np.sum((t - mean) ** 3 * weights) / weights.sum() / var**1.5
    # a rising exponential: long leading tail, cut off before the spin field peaks
    assert skewness < -0.5
    assert abs(skew(t)) < 1e-9


def test_efficiency_examples():
    sol = solve_absorption(make_waveform("sech", 0.12), REF)
    assert eta_absorption(sol) == sol.eta_abs == pytest.approx(1 / sol.e_in_energy, rel=1e-12)
    assert abs(sol.eta_abs - 0.96714) < 5e-6
    fast = solve_absorption(make_waveform("sech", 0.69), REF)
    assert abs(fast.eta_abs - 0.749) < 0.005


@pytest.mark.parametrize("alpha", [0.05, 0.12, 0.25])
def test_lossless_absorption_is_complete(alpha):
    sol = solve_absorption(make_waveform("sech", alpha), DimensionlessParams(GBAR, 0.0))
    assert abs(sol.eta_abs - 1) < 1e-4


def test_slow_analytic_examples():
    assert abs(eta_abs_slow_analytic(REF, 0.25) - 1 / (1 + (1 / 30) * (1 + 1 / 12))) < 1e-15
    assert abs(eta_abs_slow_analytic(REF, 0.25) - 0.96515) < 5e-6
    assert eta_abs_slow_analytic(REF, 1e-9) == pytest.approx(30 / 31, abs=1e-15)
    assert abs(eta_abs_slow_analytic(REF, 0.46) - 0.95901) < 5e-6
    assert round(100 * eta_abs_slow_analytic(REF, 0.46) ** 2, 1) == 92.0


def test_upper_bound_examples():
    assert eta_abs_upper_bound(DimensionlessParams(GBAR, 0.0)) == 1.0
    assert eta_abs_upper_bound(REF) == pytest.approx(30 / 31, abs=1e-15)


def test_critical_speed_reference_point():
    num, approx = critical_speed_abs(REF)
    assert abs(num - 0.474) < 0.01
    assert approx == 0.5
    assert abs(num - critical_speed_oracle(REF)) < 1e-4


def test_critical_speed_weak_coupling_approximation():
    _, approx = critical_speed_abs(DimensionlessParams(0.05, 0.0))
    assert approx == pytest.approx(0.005, rel=1e-12)


@given(st.floats(0.03, 2.0), st.floats(0.0, 1.0))
@settings(max_examples=30)
def test_critical_speed_matches_root_oracle(g, k0):
    p = DimensionlessParams(g, k0)
    num, approx = critical_speed_abs(p)
    assert num <= 0.5
    assert abs(num - critical_speed_oracle(p)) < 2e-4


def test_lorentzian_critical_speed_is_lower():
    lor, _ = critical_speed_abs(REF, Family.LORENTZIAN)
    sech, _ = critical_speed_abs(REF, Family.SECH)
    assert lor < sech


@given(st.floats(0.1, 1.5), st.floats(0.0, 1.0), st.floats(0.05, 1.0))
@settings(max_examples=20)
def test_input_energy_floor_identity(g, k0, alpha):
    p = DimensionlessParams(g, k0)
    w = make_waveform("sech", alpha)
    S, dS, ddS = sample(w)
    A, B = ab_tracks(S, dS, ddS, p)
    dt = S.grid.dtau
    four_ab = float(np.sum(4 * A.values * B.values) * dt)
    floor = input_energy_floor(S, dS, p)
    assert abs(four_ab - floor) < 1e-6 * abs(floor)
    assert float(np.sum(2 * np.abs(A.values * B.values) + 2 * A.values * B.values) * dt) >= four_ab * (1 - 1e-12)
    # closed form of the floor for a unit-energy sech
    assert floor == pytest.approx((p.kbar0 + p.kbar_s + 4 * p.kbar0 * alpha**2 / 3) / p.kbar_s, rel=1e-6)


@given(st.floats(0.05, 2.0), st.floats(0.0, 1.0), st.floats(0.2, 0.95))
@settings(max_examples=20)
def test_absorption_below_critical_speed(g, k0, fraction):
    p = DimensionlessParams(g, k0)
    alpha = fraction * critical_speed_abs(p)[0]
    sol = solve_absorption(make_waveform("sech", alpha), p)
    bound = eta_abs_upper_bound(p)
    assert 0 <= sol.eta_abs <= eta_abs_slow_analytic(p, alpha) + 1e-6
    assert eta_abs_slow_analytic(p, alpha) <= bound + 1e-6
    if not sol.kappa_a.flags.clipped:
        rms = np.sqrt(np.mean((sol.s_achieved.values - sol.s_target.values) ** 2))
        assert rms < 1e-5
        assert energy(sol.s_achieved) == pytest.approx(sol.eta_abs * sol.e_in_energy, rel=1e-5)


@given(st.floats(0.05, 1.4), st.floats(0.0, 1.0), st.floats(0.05, 0.25))
@settings(max_examples=20)
def test_slow_regime_matches_analytic(g, k0, alpha):
    p = DimensionlessParams(g, k0)
    if alpha >= critical_speed_abs(p)[0]:
        return
    sol = solve_absorption(make_waveform("sech", alpha), p)
    assert sol.eta_abs == pytest.approx(eta_abs_slow_analytic(p, alpha), rel=1e-3)


def test_clipped_profile_reports_achieved_efficiency():
    p = DimensionlessParams(2.0, 0.1)
    sol = solve_absorption(make_waveform("sech", 0.2), p)
    assert sol.kappa_a.flags.clipped and np.max(sol.kappa_a.kappa) == KAPPA_MAX
    assert sol.eta_abs == pytest.approx(energy(sol.s_achieved) / sol.e_in_energy, rel=1e-12)
    assert sol.eta_abs <= eta_abs_slow_analytic(p, 0.2) + 1e-6


def test_integrator_is_fourth_order():
    w = make_waveform("sech", 0.25)
    results = []
    for n in (256, 512, 1024, 2048, 4096):
        g = TimeGrid.symmetric(60.0, n)
        S, _, _ = sample(w, g, strict=False)
        k = ModulationProfile.constant(g, 1.0)
        _, s = integrate(g, k.kappa, GBAR, KBAR0, cavity_in=S.values)
        results.append(np.sum(s**2) * g.dtau)
    diffs = np.abs(np.diff(results))
    ratios = diffs[:-1] / diffs[1:]
    assert np.all((ratios > 8) & (ratios < 32))
