"""Optimal emission: spectral optimum, the modulation that realises it, and the mirrored fallback."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .absorb import (
    KAPPA_MAX,
    AbsorptionSolution,
    ModulationProfile,
    ProfileFlags,
    zero_crossings,
)
from .core import (
    DimensionlessParams,
    Signal,
    Spectrum,
    check_same_grid,
    energy,
    forward_transform,
    inverse_transform,
    spectral_derivative,
)
from .integrate import integrate
from .pulses import Family, default_grid, make_waveform, sample

FIELD_MASK = 1e-4  # ratio evaluated only where |E_e| exceeds this fraction of its peak


class EmissionMode(str, Enum):
    OPTIMAL_SPECTRAL = "optimal_spectral"
    MIRROR_FALLBACK = "mirror_fallback"


@dataclass(frozen=True, eq=False)
class EmissionSolution:
    s_in: Signal
    s_e: Signal
    e_e: Signal
    kappa_e: ModulationProfile
    eta_em: float
    mode: EmissionMode
    bound: float
    spectral_kappa_e: ModulationProfile | None = None  # the unconstrained candidate, kept for reporting

    @property
    def e_out(self) -> Signal:
        return Signal(self.e_e.grid, np.sqrt(self.kappa_e.kappa) * self.e_e.values)


def refocusing_filter(deltas: np.ndarray) -> np.ndarray:
    """Unit-modulus filter applied by the two refocusing pulses, echo delay removed."""
    return (0.5 + 1j * deltas) / (0.5 - 1j * deltas)


def spin_drive(absorption: AbsorptionSolution | Signal, p: DimensionlessParams | None = None) -> Signal:
    """Spin-mode drive seen during emission, in a frame centred on the echo.

    For an AbsorptionSolution the designed spin field is used; its tails are
    consistent with the grid, which matters when the optimal filters amplify
    high frequencies (lossless cavity).
    """
    s_a = absorption.s_target if isinstance(absorption, AbsorptionSolution) else absorption
    spec = forward_transform(s_a)
    return inverse_transform(Spectrum(spec.grid, refocusing_filter(spec.deltas) * spec.values), real=True)


def _lossy_denominator(d, p):
    return (1 + 4 * d * d) * p.kbar0 + p.kbar_s


def optimal_spin_field(s_in: Spectrum, p: DimensionlessParams) -> Spectrum:
    d = s_in.deltas
    factor = (2 * (1 - 2j * d) * p.kbar0 + p.kbar_s) / _lossy_denominator(d, p)
    return Spectrum(s_in.grid, factor * s_in.values)


def optimal_cavity_field(s_in: Spectrum, p: DimensionlessParams) -> Spectrum:
    d = s_in.deltas
    factor = np.sqrt(p.kbar_s) * (2j * d - 1) / _lossy_denominator(d, p)
    return Spectrum(s_in.grid, factor * s_in.values)


def eta_em_upper_bound(s_in: Spectrum, p: DimensionlessParams) -> float:
    """Best achievable output energy per unit drive energy."""
    w = np.abs(s_in.values) ** 2
    total = w.sum()
    if total == 0:
        return 0.0
    return float(np.sum(w * p.kbar_s / _lossy_denominator(s_in.deltas, p)) / total)


def _sign_change_times(tau, x, mask):
    return zero_crossings(tau, x, mask)


def optimal_kappa_e(s_e: Signal, e_e: Signal, p: DimensionlessParams,
                    kappa_max: float = KAPPA_MAX, mask: float = FIELD_MASK) -> ModulationProfile:
    """Modulation that makes the emission dynamics follow (s_e, e_e).

    Negative values are clamped to zero and flagged; the ratio is held constant
    where the cavity field is too weak to define it.
    """
    grid = check_same_grid(s_e, e_e)
    e = np.asarray(e_e.values, dtype=float)
    peak = np.abs(e).max()
    if peak == 0:
        return ModulationProfile.constant(grid, min(p.kbar0 + p.kbar_s, kappa_max))
    num = spectral_derivative(e_e).values + p.gbar * np.asarray(s_e.values, dtype=float)
    valid = np.abs(e) > mask * peak
    raw = np.zeros_like(e)
    raw[valid] = -p.kbar0 - 2 * num[valid] / e[valid]
    idx = np.where(valid, np.arange(e.size), 0)
    np.maximum.accumulate(idx, out=idx)
    idx[: np.argmax(valid)] = np.argmax(valid)
    k = raw[idx]
    crossings = _sign_change_times(grid.tau, e, valid)
    negative = bool(np.any(k < 0))
    clipped = bool(np.any(k > kappa_max))
    k = np.clip(k, 0.0, kappa_max)
    flags = ProfileFlags(
        has_singularity=bool(crossings.size),
        has_negativity_clamp=negative,
        singular_times=tuple(float(t) for t in crossings),
        clipped=clipped,
    )
    return ModulationProfile(grid, k, flags)


def spectral_optimum(s_in: Signal, p: DimensionlessParams, kappa_max: float = KAPPA_MAX):
    """(S_e*, E_e*, kappa_e*) for a given spin drive."""
    spec = forward_transform(s_in)
    s_e = inverse_transform(optimal_spin_field(spec, p), real=True)
    e_e = inverse_transform(optimal_cavity_field(spec, p), real=True)
    return s_e, e_e, optimal_kappa_e(s_e, e_e, p, kappa_max)


def run_emission_fields(s_in: Signal, kappa_e: ModulationProfile, p: DimensionlessParams) -> tuple[Signal, Signal, float]:
    grid = check_same_grid(s_in, kappa_e)
    e, s = integrate(grid, kappa_e.kappa, p.gbar, p.kbar0, spin_in=s_in.values)
    drive = energy(s_in)
    out = float(np.sum(kappa_e.kappa * e * e) * grid.dtau)
    return Signal(grid, s), Signal(grid, e), (out / drive if drive > 0 else 0.0)


def mirror_fallback(absorption: AbsorptionSolution, p: DimensionlessParams,
                    s_in: Signal | None = None) -> EmissionSolution:
    """Emit with the absorption modulation played backwards, kappa_e(tau) = kappa_a(-tau)."""
    if s_in is None:
        s_in = spin_drive(absorption, p)
    kappa_e = absorption.kappa_a.mirrored()
    s_e, e_e, eta = run_emission_fields(s_in, kappa_e, p)
    bound = eta_em_upper_bound(forward_transform(s_in), p)
    return EmissionSolution(s_in, s_e, e_e, kappa_e, eta, EmissionMode.MIRROR_FALLBACK, bound)


def solve_emission(absorption: AbsorptionSolution, p: DimensionlessParams, kappa_max: float = KAPPA_MAX,
                   mode: EmissionMode | str | None = None, s_in: Signal | None = None) -> EmissionSolution:
    """Spectral optimum when its modulation is physical, mirrored absorption profile otherwise.

    ``mode`` forces one branch; ``s_in`` overrides the drive computed from ``absorption``.
    """
    if s_in is None:
        s_in = spin_drive(absorption, p)
    _, _, k_opt = spectral_optimum(s_in, p, kappa_max)
    if mode is None:
        mode = EmissionMode.MIRROR_FALLBACK if k_opt.flags.pathological else EmissionMode.OPTIMAL_SPECTRAL
    mode = EmissionMode(mode)
    if mode is EmissionMode.MIRROR_FALLBACK:
        sol = mirror_fallback(absorption, p, s_in)
        return EmissionSolution(sol.s_in, sol.s_e, sol.e_e, sol.kappa_e, sol.eta_em, sol.mode, sol.bound, k_opt)
    s_e, e_e, eta = run_emission_fields(s_in, k_opt, p)
    bound = eta_em_upper_bound(forward_transform(s_in), p)
    return EmissionSolution(s_in, s_e, e_e, k_opt, eta, mode, bound, k_opt)


def output_energy_identity(s_e: Signal, s_in: Signal, p: DimensionlessParams) -> float:
    """Output energy expressed through the spin fields alone."""
    check_same_grid(s_e, s_in)
    se, u = np.asarray(s_e.values), np.asarray(s_in.values)
    dse = spectral_derivative(s_e).values
    integrand = u * u - (se - u) ** 2 - (p.kbar0 / p.kbar_s) * (se + 2 * dse - 2 * u) ** 2
    return float(np.sum(integrand) * s_e.grid.dtau)


def emission_is_physical(p: DimensionlessParams, alpha: float, family=Family.SECH,
                         kappa_max: float = KAPPA_MAX) -> bool:
    """True when the spectral optimum's modulation is non-negative and finite everywhere."""
    w = make_waveform(family, alpha)
    grid = default_grid(w)
    S, _, _ = sample(w, grid)
    s_in = spin_drive(S, p)
    _, _, k = spectral_optimum(s_in, p, kappa_max)
    return not k.flags.pathological


def critical_speed_em(p: DimensionlessParams, family=Family.SECH, tol: float = 1e-3,
                      alpha_lo: float | None = None, alpha_hi: float = 1.0) -> float:
    """Largest speed below the first loss of positivity of the optimal emission modulation."""
    from .absorb import critical_speed_abs

    if alpha_lo is None:
        alpha_lo = 0.25 * critical_speed_abs(p, family)[0]
    lo = alpha_lo
    if not emission_is_physical(p, lo, family):
        raise ValueError(f"optimal emission already unphysical at alpha={lo:.4g}")
    hi = None
    a = lo
    while a < alpha_hi:
        a = min(a * 1.15, alpha_hi)
        if not emission_is_physical(p, a, family):
            hi = a
            break
        lo = a
    if hi is None:
        return alpha_hi
    while hi - lo > tol / 2:
        mid = 0.5 * (lo + hi)
        if emission_is_physical(p, mid, family):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
