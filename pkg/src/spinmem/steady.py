"""Constant-coupling transfer coefficients between driveline, cavity and spins."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import MemoryParams, ParameterError


class Stage(str, Enum):
    ABSORPTION = "absorption"
    EMISSION = "emission"


@dataclass(frozen=True)
class SteadyPoint:
    params: MemoryParams
    kappa: float
    delta: float = 0.0

    def __post_init__(self):
        if not self.kappa >= 0:
            raise ParameterError("kappa must be >= 0")


def _denominator(p: MemoryParams, kappa, delta):
    """d = kappa0 + kappa + dressed kappa_s + 2i(dressed delta + detuning)."""
    kappa = np.asarray(kappa, dtype=float)
    delta = np.asarray(delta, dtype=float)
    # kappa_s * (1 - delta (delta + D) / g^2) written without dividing by g
    ks_dressed = p.kappa_s - 4 * delta * (delta + p.delta_cs) / p.gamma
    delta_dressed = delta * (1 + (p.kappa0 + kappa) / p.gamma)
    return p.kappa0 + kappa + ks_dressed + 2j * (delta_dressed + p.delta_cs)


def transmission_coeff(p: MemoryParams, kappa, delta=0.0, stage=Stage.ABSORPTION):
    """Vectorised transmission; emission differs from absorption by a sign."""
    d = _denominator(p, kappa, delta)
    t = 2 * np.sqrt(p.kappa_s * np.asarray(kappa, dtype=float)) / d
    return -t if Stage(stage) is Stage.EMISSION else t


def reflection_coeff(p: MemoryParams, kappa, delta=0.0, stage=Stage.ABSORPTION):
    d = _denominator(p, kappa, delta)
    kappa = np.asarray(kappa, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if Stage(stage) is Stage.ABSORPTION:
        return 2 * kappa * (1 + 2j * delta / p.gamma) / d - 1
    return 2 * (2j * (delta + p.delta_cs) + p.kappa0 + kappa) / d - 1


def transmission(pt: SteadyPoint, stage=Stage.ABSORPTION) -> complex:
    if pt.params.g_ens == 0:
        return 0j
    return complex(transmission_coeff(pt.params, pt.kappa, pt.delta, stage))


def reflection(pt: SteadyPoint, stage=Stage.ABSORPTION) -> complex:
    return complex(reflection_coeff(pt.params, pt.kappa, pt.delta, stage))


def sweet_spot(p: MemoryParams, delta: float = 0.0) -> tuple[float, float, float]:
    """(optimal detuning, optimal coupling, transmissivity there) for probe frequency delta."""
    x = delta / p.gamma
    lorentz = 1 + 4 * x * x
    delta_cs = (p.kappa_s / p.gamma / lorentz - 1) * delta
    kappa = p.kappa0 + p.kappa_s / lorentz
    denom = p.kappa_s + p.kappa0 * lorentz
    t2 = p.kappa_s / denom if denom > 0 else 0.0
    return delta_cs, kappa, t2


def adiabatic_efficiency(p: MemoryParams) -> tuple[float, float]:
    """Continuous-drive storage efficiency and the cooperativity at the optimal coupling."""
    ks, k0 = p.kappa_s, p.kappa0
    if ks + k0 == 0:
        return 0.0, 0.0
    eta = (ks / (k0 + ks)) ** 2
    coop = ks / (2 * k0 + ks)
    return eta, coop


def efficiency_from_cooperativity(coop: float) -> float:
    return (2 * coop / (coop + 1)) ** 2


def kappa_scan(gammas_g: list[float], kbar0: float, kappas: np.ndarray) -> dict[float, np.ndarray]:
    """On-resonance absorption transmissivity versus kappa (units of Gamma) for each g/Gamma."""
    out = {}
    for g in gammas_g:
        p = MemoryParams(g_ens=g, gamma=1.0, kappa0=kbar0)
        out[g] = np.abs(transmission_coeff(p, kappas)) ** 2
    return out


def loss_scan(gammas_g: list[float], kbar0s: np.ndarray) -> dict[float, np.ndarray]:
    """Transmissivity at the optimal coupling versus intrinsic loss."""
    out = {}
    for g in gammas_g:
        vals = []
        for k0 in kbar0s:
            p = MemoryParams(g_ens=g, gamma=1.0, kappa0=float(k0))
            vals.append(abs(transmission_coeff(p, p.kappa0 + p.kappa_s)) ** 2)
        out[g] = np.array(vals)
    return out
