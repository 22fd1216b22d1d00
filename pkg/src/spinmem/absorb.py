"""Optimal coupling modulation for absorbing a prescribed spin-field waveform."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    DimensionlessParams,
    ParameterError,
    ReconstructionError,
    Signal,
    TimeGrid,
    check_same_grid,
    energy,
)
from .integrate import integrate
from .pulses import Family, Waveform, default_grid, sample

KAPPA_MAX = 10.0  # modulation ceiling in units of Gamma
_TINY = 1e-13


@dataclass(frozen=True)
class ProfileFlags:
    has_singularity: bool = False
    has_negativity_clamp: bool = False
    singular_times: tuple[float, ...] = ()
    clipped: bool = False  # some samples hit the modulation ceiling

    @property
    def pathological(self) -> bool:
        return self.has_singularity or self.has_negativity_clamp

    def as_dict(self) -> dict:
        return {
            "has_singularity": self.has_singularity,
            "has_negativity_clamp": self.has_negativity_clamp,
            "singular_times": list(self.singular_times),
            "clipped": self.clipped,
        }


@dataclass(frozen=True, eq=False)
class ModulationProfile:
    """Sampled coupling rate kappa(tau) >= 0 in units of Gamma."""

    grid: TimeGrid
    kappa: np.ndarray
    flags: ProfileFlags = field(default_factory=ProfileFlags)

    def __post_init__(self):
        k = np.array(self.kappa, dtype=float, copy=True)
        if k.shape != (self.grid.n,):
            raise ValueError("kappa samples do not match the grid")
        if not np.all(np.isfinite(k)) or np.any(k < 0):
            raise ValueError("kappa must be finite and non-negative")
        k.flags.writeable = False
        object.__setattr__(self, "kappa", k)

    @classmethod
    def constant(cls, grid: TimeGrid, value: float) -> "ModulationProfile":
        return cls(grid, np.full(grid.n, float(value)))

    def mirrored(self) -> "ModulationProfile":
        """kappa(-tau) on the same symmetric grid."""
        if not self.grid.is_symmetric:
            raise ValueError("mirroring needs a symmetric grid")
        return ModulationProfile(self.grid, self.kappa[::-1], self.flags)


@dataclass(frozen=True, eq=False)
class AbsorptionSolution:
    kappa_a: ModulationProfile
    e_in: Signal
    e_cavity: Signal
    eta_abs: float
    e_in_energy: float
    a_track: Signal
    b_track: Signal
    s_target: Signal
    ds_target: Signal
    s_achieved: Signal  # spin field from forward integration with (kappa_a, e_in)
    params: DimensionlessParams


def ab_tracks(S: Signal, dS: Signal, ddS: Signal, p: DimensionlessParams) -> tuple[Signal, Signal]:
    """A and B such that e_in = A/sqrt(kappa) + sqrt(kappa) B."""
    if p.gbar <= 0:
        raise ParameterError("gbar must be > 0: the spin channel is absent")
    grid = check_same_grid(S, dS, ddS)
    s, ds, dds = S.values, dS.values, ddS.values
    g, k0 = p.gbar, p.kbar0
    a = (dds + 0.5 * (1 + k0) * ds + 0.25 * (4 * g * g + k0) * s) / g
    b = (ds + 0.5 * s) / (2 * g)
    return Signal(grid, a), Signal(grid, b)


def _fill_invalid(k: np.ndarray, valid: np.ndarray, fallback: float) -> np.ndarray:
    """Hold the last valid value across invalid samples (leading ones take the first valid)."""
    if not valid.any():
        return np.full_like(k, fallback)
    idx = np.where(valid, np.arange(k.size), 0)
    np.maximum.accumulate(idx, out=idx)
    first = np.argmax(valid)
    idx[:first] = first
    return k[idx]


def zero_crossings(tau: np.ndarray, x: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Sign changes of x between consecutive unmasked samples, located by linear interpolation."""
    j = np.nonzero(mask)[0]
    xs, ts = x[j], tau[j]
    i = np.nonzero(np.sign(xs[:-1]) * np.sign(xs[1:]) < 0)[0]
    return ts[i] - xs[i] * (ts[i + 1] - ts[i]) / (xs[i + 1] - xs[i])


def kappa_from_tracks(A: Signal, B: Signal, p: DimensionlessParams, kappa_max: float = KAPPA_MAX) -> ModulationProfile:
    grid = check_same_grid(A, B)
    a, b = A.values, B.values
    scale = max(np.abs(a).max(), np.abs(b).max())
    if scale == 0:
        return ModulationProfile.constant(grid, min(p.kbar0 + p.kbar_s, kappa_max))
    valid = np.abs(b) > _TINY * scale
    ratio = np.zeros_like(b)
    ratio[valid] = np.abs(a[valid] / b[valid])
    k = _fill_invalid(ratio, valid, p.kbar0 + p.kbar_s)
    crossings = zero_crossings(grid.tau, b, valid)
    clipped = bool(np.any(k > kappa_max))
    k = np.minimum(k, kappa_max)
    flags = ProfileFlags(
        has_singularity=bool(crossings.size),
        singular_times=tuple(float(t) for t in crossings),
        clipped=clipped,
    )
    return ModulationProfile(grid, k, flags)


def optimal_kappa_a(w: Waveform, p: DimensionlessParams, grid: TimeGrid | None = None,
                    kappa_max: float = KAPPA_MAX) -> ModulationProfile:
    """Pointwise |A/B|, capped at ``kappa_max``; B changing sign is flagged as a singularity."""
    S, dS, ddS = sample(w, grid)
    A, B = ab_tracks(S, dS, ddS, p)
    return kappa_from_tracks(A, B, p, kappa_max)


def reconstruct_input(w: Waveform, p: DimensionlessParams, kappa_a: ModulationProfile) -> tuple[Signal, Signal]:
    """Driveline input and cavity field that make the spin mode follow ``w`` under ``kappa_a``."""
    S, dS, ddS = sample(w, kappa_a.grid)
    return _reconstruct(S, dS, ddS, p, kappa_a)


def _reconstruct(S, dS, ddS, p, kappa_a):
    A, B = ab_tracks(S, dS, ddS, p)
    a, b, k = A.values, B.values, kappa_a.kappa
    scale = max(np.abs(a).max(), np.abs(b).max(), 1e-300)
    off = k <= 0
    if np.any(off & (np.abs(a) > _TINY * scale)):
        raise ReconstructionError("kappa_a vanishes where the drive is needed")
    e_in = np.zeros_like(a)
    on = ~off
    sk = np.sqrt(k[on])
    e_in[on] = a[on] / sk + sk * b[on]
    e_cav = (dS.values + 0.5 * S.values) / p.gbar
    return Signal(S.grid, e_in), Signal(S.grid, e_cav)


def solve_absorption(w: Waveform, p: DimensionlessParams, grid: TimeGrid | None = None,
                     kappa_max: float = KAPPA_MAX) -> AbsorptionSolution:
    if grid is None:
        grid = default_grid(w)
    S, dS, ddS = sample(w, grid)
    A, B = ab_tracks(S, dS, ddS, p)
    prof = kappa_from_tracks(A, B, p, kappa_max)
    e_in, e_cav = _reconstruct(S, dS, ddS, p, prof)
    _, s_sim = integrate(grid, prof.kappa, p.gbar, p.kbar0, cavity_in=e_in.values)
    e_energy = energy(e_in)
    if e_energy == 0:
        eta = 0.0
    elif prof.flags.has_singularity or prof.flags.clipped:
        # profile is no longer the unconstrained optimum; report what the dynamics deliver
        eta = float(np.sum(s_sim**2) * grid.dtau) / e_energy
    else:
        eta = energy(S) / e_energy
    return AbsorptionSolution(
        kappa_a=prof, e_in=e_in, e_cavity=e_cav, eta_abs=eta, e_in_energy=e_energy,
        a_track=A, b_track=B, s_target=S, ds_target=dS, s_achieved=Signal(grid, s_sim), params=p,
    )


def eta_absorption(sol: AbsorptionSolution) -> float:
    return sol.eta_abs


def eta_abs_slow_analytic(p: DimensionlessParams, alpha: float) -> float:
    """Absorption efficiency of a sech pulse below the critical speed."""
    ks, k0 = p.kbar_s, p.kbar0
    return ks / (ks + k0 * (1 + 4 * alpha * alpha / 3))


def eta_abs_upper_bound(p: DimensionlessParams) -> float:
    ks = p.kbar_s
    return ks / (p.kbar0 + ks) if ks > 0 else 0.0


def input_energy_floor(S: Signal, dS: Signal, p: DimensionlessParams) -> float:
    """Integral of 4AB, rewritten after integrating the cross terms by parts."""
    ks, k0 = p.kbar_s, p.kbar0
    return float(np.sum(4 * k0 * dS.values**2 + (k0 + ks) * S.values**2) * S.grid.dtau / ks)


def _shape(family: Family, x: np.ndarray):
    """Unit-speed shape f(x) with f', f'' (normalisation irrelevant for sign tests)."""
    if family is Family.SECH:
        e = np.exp(-np.abs(x))
        f = 2 * e / (1 + e * e)
        return f, -np.tanh(x) * f, f * (np.tanh(x) ** 2 - f * f)
    if family is Family.LORENTZIAN:
        q = 1 + x * x
        return 1 / q, -2 * x / q**2, (6 * x * x - 2) / q**3
    raise ValueError("critical speed is defined for analytic families only")


def _ab_sign_change(p: DimensionlessParams, alpha: float, family: Family, x: np.ndarray) -> bool:
    f, f1, f2 = _shape(family, x)
    g, k0 = p.gbar, p.kbar0
    a = alpha * alpha * f2 + 0.5 * (1 + k0) * alpha * f1 + (g * g + 0.25 * k0) * f
    b = alpha * f1 + 0.5 * f
    ab = a * b
    ab = ab[np.abs(ab) > 1e-300]
    return bool(np.any(np.sign(ab[:-1]) != np.sign(ab[1:])))


def critical_speed_abs(p: DimensionlessParams, family=Family.SECH, tol: float = 1e-4) -> tuple[float, float]:
    """(numeric, approximate) largest speed keeping A and B free of sign changes.

    The numeric value bisects on the first sign change of A*B.  B alone turns
    over at alpha = 1/2, so the result never exceeds 1/2.
    """
    family = Family(family)
    ks, k0 = p.kbar_s, p.kbar0
    approx = 0.5 * min((ks + k0) / (1 + k0), 1.0)
    u = np.linspace(-np.arcsinh(2000.0), np.arcsinh(2000.0), 40001)
    x = np.sinh(u)
    lo, hi = 0.0, 0.5
    if not _ab_sign_change(p, hi * (1 + 1e-6), family, x):
        return hi, approx
    while hi - lo > tol / 4:
        mid = 0.5 * (lo + hi)
        if mid > 0 and _ab_sign_change(p, mid, family, x):
            hi = mid
        else:
            lo = mid
    return min(0.5 * (lo + hi), 0.5), approx
