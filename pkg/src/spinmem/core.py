"""Parameters, time grids, sampled signals and the Fourier convention.

Time is measured in units of 1/Gamma (tau = Gamma*t) and every rate in units
of Gamma.  The transform pair used everywhere is

    f[delta] = int f(tau) exp(-i delta tau) dtau
    f(tau)   = (1/2pi) int f[delta] exp(+i delta tau) ddelta
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


class ParameterError(ValueError):
    """Invalid physical or dimensionless parameter."""


class SizingError(ValueError):
    """A grid is too small, too coarse, or not a power of two."""


class GridMismatchError(ValueError):
    """Two signals that must share a grid do not."""


class ReconstructionError(ValueError):
    """A drive cannot be reconstructed from the requested profile."""


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def next_pow2(n: int) -> int:
    return 1 << max(int(np.ceil(np.log2(max(n, 1)))), 0)


@dataclass(frozen=True)
class MemoryParams:
    """Physical rates in rad/s."""

    g_ens: float
    gamma: float
    kappa0: float = 0.0
    delta_cs: float = 0.0

    def __post_init__(self):
        for name in ("g_ens", "gamma", "kappa0", "delta_cs"):
            if not np.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        if self.g_ens < 0:
            raise ParameterError("g_ens must be >= 0")
        if self.gamma <= 0:
            raise ParameterError("gamma must be > 0")
        if self.kappa0 < 0:
            raise ParameterError("kappa0 must be >= 0")

    @property
    def kappa_s(self) -> float:
        """Cavity loss rate induced by the spins, 4 g^2 / Gamma."""
        return 4.0 * self.g_ens**2 / self.gamma

    def dimensionless(self, alpha: float | None = None) -> "DimensionlessParams":
        return DimensionlessParams(
            gbar=self.g_ens / self.gamma,
            kbar0=self.kappa0 / self.gamma,
            alpha=alpha,
            dbar_cs=self.delta_cs / self.gamma,
        )


@dataclass(frozen=True)
class DimensionlessParams:
    """Rates divided by Gamma.  ``alpha`` is the pulse speed, optional here."""

    gbar: float
    kbar0: float = 0.0
    alpha: float | None = None
    dbar_cs: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.gbar) and np.isfinite(self.kbar0)):
            raise ParameterError("parameters must be finite")
        if self.gbar < 0:
            raise ParameterError("gbar must be >= 0")
        if self.kbar0 < 0:
            raise ParameterError("kbar0 must be >= 0")
        if self.alpha is not None and not self.alpha > 0:
            raise ParameterError("alpha must be > 0")

    @property
    def kbar_s(self) -> float:
        return 4.0 * self.gbar * self.gbar

    def with_alpha(self, alpha: float) -> "DimensionlessParams":
        return DimensionlessParams(self.gbar, self.kbar0, alpha, self.dbar_cs)

    def to_physical(self, gamma: float) -> MemoryParams:
        return MemoryParams(
            g_ens=self.gbar * gamma,
            gamma=gamma,
            kappa0=self.kbar0 * gamma,
            delta_cs=self.dbar_cs * gamma,
        )


@dataclass(frozen=True)
class TimeGrid:
    tau_min: float
    tau_max: float
    n: int
    allow_asymmetric: bool = False

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or not _is_pow2(int(self.n)) or self.n < 16:
            raise SizingError(f"grid size must be a power of two >= 16, got {self.n}")
        if not self.tau_min < 0 < self.tau_max:
            raise SizingError("grid must satisfy tau_min < 0 < tau_max")
        if not self.allow_asymmetric and not np.isclose(-self.tau_min, self.tau_max, rtol=1e-12, atol=0):
            raise SizingError("grid must be symmetric about 0 unless allow_asymmetric is set")

    @classmethod
    def symmetric(cls, tau_max: float, n: int) -> "TimeGrid":
        return cls(-float(tau_max), float(tau_max), int(n))

    @classmethod
    def covering(cls, tau_max: float, dtau_max: float, n_min: int = 16) -> "TimeGrid":
        """Smallest power-of-two symmetric grid on [-tau_max, tau_max] with step <= dtau_max."""
        n = next_pow2(max(int(np.ceil(2 * tau_max / dtau_max)) + 1, n_min))
        return cls.symmetric(tau_max, n)

    @property
    def dtau(self) -> float:
        return (self.tau_max - self.tau_min) / (self.n - 1)

    @property
    def is_symmetric(self) -> bool:
        return np.isclose(-self.tau_min, self.tau_max, rtol=1e-12, atol=0)

    @cached_property
    def tau(self) -> np.ndarray:
        if self.is_symmetric:
            # exactly antisymmetric samples, so parity checks are clean
            t = (2 * np.arange(self.n) - (self.n - 1)) * (self.tau_max / (self.n - 1))
        else:
            t = np.linspace(self.tau_min, self.tau_max, self.n)
        t.flags.writeable = False
        return t

    @cached_property
    def deltas(self) -> np.ndarray:
        """Angular frequencies conjugate to tau, in numpy FFT order."""
        d = 2 * np.pi * np.fft.fftfreq(self.n, self.dtau)
        d.flags.writeable = False
        return d

    def refined(self, factor: int = 2) -> "TimeGrid":
        """Same span with ``factor`` times as many samples (step roughly divided by factor)."""
        return TimeGrid(self.tau_min, self.tau_max, self.n * factor, self.allow_asymmetric)


def _frozen(a) -> np.ndarray:
    a = np.array(a, copy=True)
    if not np.iscomplexobj(a):
        a = a.astype(float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Signal:
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != (self.grid.n,):
            raise SizingError(f"expected {self.grid.n} samples, got {v.shape}")
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, grid: TimeGrid) -> "Signal":
        return cls(grid, np.zeros(grid.n))

    @property
    def tau(self) -> np.ndarray:
        return self.grid.tau

    def scaled(self, c: float) -> "Signal":
        return Signal(self.grid, c * self.values)

    def reversed(self) -> "Signal":
        """f(-tau); requires a symmetric grid."""
        if not self.grid.is_symmetric:
            raise GridMismatchError("time reversal needs a symmetric grid")
        return Signal(self.grid, self.values[::-1])


@dataclass(frozen=True, eq=False)
class Spectrum:
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex, copy=True)
        if v.shape != (self.grid.n,):
            raise SizingError(f"expected {self.grid.n} samples, got {v.shape}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def deltas(self) -> np.ndarray:
        return self.grid.deltas

    def energy(self) -> float:
        """(1/2pi) int |f[delta]|^2 ddelta."""
        ddelta = 2 * np.pi / (self.grid.n * self.grid.dtau)
        return float(np.sum(np.abs(self.values) ** 2) * ddelta / (2 * np.pi))


def check_same_grid(*signals) -> TimeGrid:
    g = signals[0].grid
    for s in signals[1:]:
        if s.grid != g:
            raise GridMismatchError("signals live on different grids")
    return g


def forward_transform(s: Signal) -> Spectrum:
    g = s.grid
    if not _is_pow2(g.n):
        raise SizingError("FFT grid must be a power of two")
    v = np.asarray(s.values)
    if not np.all(np.isfinite(v)):
        raise ValueError("signal contains non-finite samples")
    phase = np.exp(-1j * g.deltas * g.tau_min)
    return Spectrum(g, np.fft.fft(v) * g.dtau * phase)


def inverse_transform(spec: Spectrum, real: bool | None = None) -> Signal:
    """Back to the time domain.  ``real=None`` drops the imaginary part when it is round-off."""
    g = spec.grid
    v = np.fft.ifft(spec.values * np.exp(1j * g.deltas * g.tau_min)) / g.dtau
    if real is None:
        scale = np.max(np.abs(v)) if v.size else 0.0
        real = bool(np.max(np.abs(v.imag)) <= 1e-9 * max(scale, 1e-300))
    return Signal(g, v.real if real else v)


def spectral_derivative(s: Signal, order: int = 1) -> Signal:
    """d^k/dtau^k via multiplication by (i delta)^k; the Nyquist bin is zeroed for odd k."""
    g = s.grid
    factor = (1j * g.deltas) ** order
    if order % 2:
        factor = factor.copy()
        factor[g.n // 2] = 0.0
    out = np.fft.ifft(np.fft.fft(np.asarray(s.values)) * factor)
    return Signal(g, out if np.iscomplexobj(s.values) else out.real)


def energy(s: Signal) -> float:
    return float(np.sum(np.abs(np.asarray(s.values)) ** 2) * s.grid.dtau)
