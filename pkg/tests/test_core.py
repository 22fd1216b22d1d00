import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinmem.core import (
    DimensionlessParams,
    GridMismatchError,
    MemoryParams,
    ParameterError,
    Signal,
    SizingError,
    TimeGrid,
    check_same_grid,
    energy,
    forward_transform,
    inverse_transform,
    next_pow2,
    spectral_derivative,
)


def sech_signal(alpha, grid):
    return Signal(grid, np.sqrt(alpha / 2) / np.cosh(alpha * grid.tau))


def test_next_pow2():
    assert [next_pow2(n) for n in (1, 2, 3, 16, 17, 1000)] == [1, 2, 4, 16, 32, 1024]


@pytest.mark.parametrize("n", [8, 100, 1000])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(SizingError):
        TimeGrid.symmetric(10.0, n)


def test_grid_rejects_asymmetric_unless_allowed():
    with pytest.raises(SizingError):
        TimeGrid(-5.0, 10.0, 64)
    g = TimeGrid(-5.0, 10.0, 64, allow_asymmetric=True)
    assert not g.is_symmetric
    with pytest.raises(SizingError):
        TimeGrid(1.0, 10.0, 64, allow_asymmetric=True)


def test_grid_samples_are_antisymmetric():
    g = TimeGrid.symmetric(37.3, 1024)
    assert np.array_equal(g.tau, -g.tau[::-1])
    assert g.tau[0] == g.tau_min and g.tau[-1] == g.tau_max
    assert np.isclose(g.dtau, 2 * 37.3 / 1023)


def test_covering_grid_respects_step():
    g = TimeGrid.covering(100.0, 0.01)
    assert g.dtau <= 0.01 and g.n == 32768


def test_parameter_validation():
    with pytest.raises(ParameterError):
        MemoryParams(g_ens=-1.0, gamma=1.0)
    with pytest.raises(ParameterError):
        MemoryParams(g_ens=1.0, gamma=0.0)
    with pytest.raises(ParameterError):
        MemoryParams(g_ens=1.0, gamma=1.0, kappa0=-0.1)
    with pytest.raises(ParameterError):
        DimensionlessParams(0.5, alpha=0.0)


def test_kappa_s_definitions():
    mp = MemoryParams(g_ens=3.0, gamma=2.0)
    assert mp.kappa_s == 18.0
    dp = mp.dimensionless()
    assert dp.kbar_s == 4 * dp.gbar**2


@given(st.integers(0, 2**20), st.integers(1, 2**20), st.integers(0, 2**20), st.integers(-40, 40))
def test_dimensionless_round_trip_is_exact(g, kappa0, delta, exponent):
    gamma = 2.0**exponent
    mp = MemoryParams(g_ens=g * gamma, gamma=gamma, kappa0=kappa0 * gamma, delta_cs=delta * gamma)
    assert mp.dimensionless().to_physical(gamma) == mp


def test_zero_signal_has_zero_spectrum():
    g = TimeGrid.symmetric(10.0, 64)
    spec = forward_transform(Signal.zeros(g))
    assert np.all(spec.values == 0)
    assert energy(Signal.zeros(g)) == 0


def test_impulse_has_flat_spectrum():
    g = TimeGrid.symmetric(10.0, 128)
    v = np.zeros(g.n)
    v[40] = 1.0
    mag = np.abs(forward_transform(Signal(g, v)).values)
    assert np.allclose(mag, g.dtau, rtol=0, atol=1e-15)


def test_sech_energy_is_one():
    alpha = 0.12
    g = TimeGrid.covering(200.0, 0.01)
    assert abs(energy(sech_signal(alpha, g)) - 1) < 1e-6


def test_sech_parseval():
    alpha = 0.25
    g = TimeGrid.covering(120.0, 0.01)
    s = sech_signal(alpha, g)
    e_freq = forward_transform(s).energy()
    assert abs(e_freq - energy(s)) < 1e-9 * energy(s)


def test_transform_phase_convention():
    # shifted Gaussian: f[delta] = sqrt(2 pi) exp(-delta^2/2) exp(-i delta t0)
    g = TimeGrid.symmetric(40.0, 4096)
    t0 = 3.0
    s = Signal(g, np.exp(-0.5 * (g.tau - t0) ** 2))
    spec = forward_transform(s)
    d = spec.deltas
    expected = np.sqrt(2 * np.pi) * np.exp(-0.5 * d**2 - 1j * d * t0)
    assert np.max(np.abs(spec.values - expected)) < 1e-10


@given(st.lists(st.floats(-1e3, 1e3), min_size=64, max_size=64), st.sampled_from([5.0, 17.5, 300.0]))
def test_transform_round_trip_and_parseval(values, half_width):
    g = TimeGrid.symmetric(half_width, 64)
    s = Signal(g, np.array(values))
    spec = forward_transform(s)
    back = inverse_transform(spec, real=True)
    assert np.max(np.abs(back.values - s.values)) < 1e-10
    e = energy(s)
    assert abs(spec.energy() - e) <= 1e-9 * max(e, 1e-300)


@given(st.floats(0.05, 0.6), st.integers(-3000, 3000))
def test_energy_is_shift_invariant(alpha, shift):
    g = TimeGrid.covering(max(25.0 / alpha, 60.0), 0.02)
    s = sech_signal(alpha, g)
    rolled = Signal(g, np.roll(s.values, shift))
    assert abs(energy(rolled) - energy(s)) < 1e-8 * energy(s)


@given(st.floats(-10, 10))
def test_energy_is_homogeneous(c):
    g = TimeGrid.symmetric(30.0, 256)
    s = sech_signal(0.3, g)
    assert np.isclose(energy(s.scaled(c)), c * c * energy(s), rtol=1e-12, atol=1e-300)


def test_spectral_derivative_of_sech():
    alpha = 0.3
    g = TimeGrid.covering(80.0, 0.01)
    s = sech_signal(alpha, g)
    d1 = spectral_derivative(s).values
    exact = -alpha * np.tanh(alpha * g.tau) * s.values
    assert np.max(np.abs(d1 - exact)) < 1e-9


def test_grid_mismatch_and_frozen_values():
    a = Signal.zeros(TimeGrid.symmetric(10.0, 64))
    b = Signal.zeros(TimeGrid.symmetric(10.0, 128))
    with pytest.raises(GridMismatchError):
        check_same_grid(a, b)
    with pytest.raises(ValueError):
        a.values[0] = 1.0
    with pytest.raises(ValueError):
        Signal(a.grid, np.zeros(10))
