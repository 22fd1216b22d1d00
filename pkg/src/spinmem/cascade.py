"""Time-domain simulation of the full store-and-retrieve protocol with energy bookkeeping."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .absorb import KAPPA_MAX, ModulationProfile, solve_absorption
from .core import DimensionlessParams, Signal, check_same_grid, energy, forward_transform
from .emit import EmissionMode, eta_em_upper_bound, spectral_optimum, spin_drive
from .integrate import integrate
from .pulses import Waveform, default_grid

RESIDUAL_TOL = 1e-8

# simplifications shared by every run, recorded in run manifests
APPROXIMATIONS = (
    "perfect refocusing: unit-modulus spin filter, echo delay removed",
    "feedback cut-off after the absorption window neglected",
    "emission starts from empty cavity and spin mode",
    "cavity and spins on resonance",
)


@dataclass(frozen=True, eq=False)
class AbsorptionRun:
    e_in: Signal
    kappa_a: ModulationProfile
    e_a: Signal
    s_a: Signal
    e_a_out: Signal  # reflected back into the driveline
    s_a_out: Signal  # transferred into the spin channel
    energies: dict
    eta_a: float
    residual: float  # energy left in cavity + spin mode at the grid end


@dataclass(frozen=True, eq=False)
class EmissionRun:
    s_in: Signal
    kappa_e: ModulationProfile
    e_e: Signal
    s_e: Signal
    e_e_out: Signal
    s_e_out: Signal
    energies: dict
    eta_e: float
    residual: float


@dataclass(frozen=True, eq=False)
class ProtocolResult:
    absorption: AbsorptionRun
    emission: EmissionRun
    mode: EmissionMode | None
    params: DimensionlessParams
    bound_em: float
    spectral_kappa_e: ModulationProfile | None = None
    warnings: tuple[str, ...] = field(default_factory=tuple)

    @property
    def eta_a(self) -> float:
        return self.absorption.eta_a

    @property
    def eta_e(self) -> float:
        return self.emission.eta_e

    @property
    def eta_total(self) -> float:
        return self.eta_a * self.eta_e

    @property
    def flagged(self) -> bool:
        """True when some modulation needed a clamp or crossed a singularity."""
        ka = self.absorption.kappa_a.flags
        ke = self.spectral_kappa_e.flags if self.spectral_kappa_e is not None else self.emission.kappa_e.flags
        return ka.pathological or ke.pathological


def _residual_check(name, residual, scale, notes):
    if scale > 0 and residual > RESIDUAL_TOL * scale:
        msg = f"{name}: {residual / scale:.2e} of the energy still in the cavity/spin mode at the grid end"
        warnings.warn(msg, RuntimeWarning, stacklevel=3)
        notes.append(msg)


def run_absorption(e_in: Signal, kappa_a: ModulationProfile, p: DimensionlessParams,
                   _notes: list | None = None) -> AbsorptionRun:
    grid = check_same_grid(e_in, kappa_a)
    k = kappa_a.kappa
    e, s = integrate(grid, k, p.gbar, p.kbar0, cavity_in=e_in.values)
    e_out = np.sqrt(k) * e - e_in.values
    en = {
        "input": energy(e_in),
        "reflected": float(np.sum(e_out**2) * grid.dtau),
        "spin_channel": float(np.sum(s**2) * grid.dtau),
        "dissipated": float(p.kbar0 * np.sum(e**2) * grid.dtau),
    }
    residual = float(e[-1] ** 2 + s[-1] ** 2)
    en["residual"] = residual
    _residual_check("absorption", residual, en["input"], _notes if _notes is not None else [])
    eta = en["spin_channel"] / en["input"] if en["input"] > 0 else 0.0
    return AbsorptionRun(e_in, kappa_a, Signal(grid, e), Signal(grid, s), Signal(grid, e_out),
                         Signal(grid, s), en, eta, residual)


def run_emission(s_in: Signal, kappa_e: ModulationProfile, p: DimensionlessParams,
                 _notes: list | None = None) -> EmissionRun:
    grid = check_same_grid(s_in, kappa_e)
    k = kappa_e.kappa
    e, s = integrate(grid, k, p.gbar, p.kbar0, spin_in=s_in.values)
    e_out = np.sqrt(k) * e
    s_out = s - s_in.values
    en = {
        "input": energy(s_in),
        "output": float(np.sum(e_out**2) * grid.dtau),
        "spin_channel": float(np.sum(s_out**2) * grid.dtau),
        "dissipated": float(p.kbar0 * np.sum(e**2) * grid.dtau),
    }
    residual = float(e[-1] ** 2 + s[-1] ** 2)
    en["residual"] = residual
    _residual_check("emission", residual, en["input"], _notes if _notes is not None else [])
    eta = en["output"] / en["input"] if en["input"] > 0 else 0.0
    return EmissionRun(s_in, kappa_e, Signal(grid, e), Signal(grid, s), Signal(grid, e_out),
                       Signal(grid, s_out), en, eta, residual)


def run_protocol(source: Waveform | Signal, p: DimensionlessParams,
                 profiles: tuple[ModulationProfile, ModulationProfile | None] | None = None,
                 mode: EmissionMode | str | None = None, grid=None,
                 kappa_max: float = KAPPA_MAX) -> ProtocolResult:
    """Absorb, refocus and re-emit.

    With a Waveform and no profiles the optimal absorption modulation is used,
    followed by the spectral emission optimum when it is physical and the
    mirrored absorption modulation otherwise.  With a driveline Signal the
    profiles must be given; a missing emission profile means "mirror".
    """
    notes: list[str] = []
    spectral = None
    design = None  # spin field the emission modulation is designed for
    if isinstance(source, Waveform):
        if profiles is None:
            sol = solve_absorption(source, p, grid if grid is not None else default_grid(source), kappa_max)
            kappa_a, e_in = sol.kappa_a, sol.e_in
            kappa_e = None
            design = sol.s_target
        else:
            from .absorb import reconstruct_input

            kappa_a, kappa_e = profiles
            e_in, _ = reconstruct_input(source, p, kappa_a)
    else:
        if profiles is None:
            raise ValueError("a raw input field needs explicit modulation profiles")
        e_in = source
        kappa_a, kappa_e = profiles

    ab = run_absorption(e_in, kappa_a, p, notes)
    s_in = spin_drive(ab.s_a, p)
    bound = eta_em_upper_bound(forward_transform(s_in), p)
    chosen = None
    if kappa_e is None:
        # the simulated field starts from rest, so its tail does not match the grid edge;
        # harmless for the dynamics but amplified by the lossless-cavity filter
        u_design = s_in if design is None else spin_drive(design, p)
        _, _, spectral = spectral_optimum(u_design, p, kappa_max)
        if mode is None:
            mode = EmissionMode.MIRROR_FALLBACK if spectral.flags.pathological else EmissionMode.OPTIMAL_SPECTRAL
        chosen = EmissionMode(mode)
        kappa_e = spectral if chosen is EmissionMode.OPTIMAL_SPECTRAL else kappa_a.mirrored()
    em = run_emission(s_in, kappa_e, p, notes)
    return ProtocolResult(ab, em, chosen, p, bound, spectral, tuple(notes))
