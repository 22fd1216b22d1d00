"""Target spin-field waveforms with analytic derivatives."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .core import (
    ParameterError,
    Signal,
    SizingError,
    TimeGrid,
    energy,
    next_pow2,
    spectral_derivative,
)

TAIL_TOL = 1e-8  # energy allowed outside the grid
EDGE_TOL = 1e-6  # amplitude at the grid edge relative to the peak
MIN_HALF_WIDTH = 60.0  # leaves room for the 1/Gamma relaxation after the pulse


class Family(str, Enum):
    SECH = "sech"
    LORENTZIAN = "lorentzian"
    SAMPLED = "sampled"


@dataclass(frozen=True, eq=False)
class Waveform:
    family: Family
    alpha: float | None
    samples: Signal | None = None

    def value(self, tau):
        x = self.alpha * np.asarray(tau, dtype=float)
        if self.family is Family.SECH:
            return np.sqrt(self.alpha / 2) / np.cosh(x)
        if self.family is Family.LORENTZIAN:
            return np.sqrt(2 * self.alpha / np.pi) / (1 + x * x)
        raise TypeError("sampled waveforms are only available through sample()")

    def d1(self, tau):
        a = self.alpha
        x = a * np.asarray(tau, dtype=float)
        if self.family is Family.SECH:
            return -a * np.tanh(x) * self.value(tau)
        if self.family is Family.LORENTZIAN:
            return -2 * np.sqrt(2 * a / np.pi) * a * x / (1 + x * x) ** 2
        raise TypeError("sampled waveforms are only available through sample()")

    def d2(self, tau):
        a = self.alpha
        x = a * np.asarray(tau, dtype=float)
        if self.family is Family.SECH:
            sech = 1 / np.cosh(x)
            return a * a * self.value(tau) * (np.tanh(x) ** 2 - sech * sech)
        if self.family is Family.LORENTZIAN:
            return np.sqrt(2 * a / np.pi) * a * a * (6 * x * x - 2) / (1 + x * x) ** 3
        raise TypeError("sampled waveforms are only available through sample()")

    def tail_energy(self, tau_max: float) -> float:
        """Energy outside [-tau_max, tau_max] for a unit-energy pulse."""
        x = self.alpha * tau_max
        if self.family is Family.SECH:
            return float(1 - np.tanh(x))
        if self.family is Family.LORENTZIAN:
            one_side = 0.5 * (np.pi / 2 - np.arctan(x) - x / (1 + x * x))
            return float(2 * one_side / (np.pi / 2))
        raise TypeError("tail energy is only defined for analytic families")

    def required_tau_max(self, tol: float = TAIL_TOL) -> float:
        if self.family is Family.SAMPLED:
            return self.samples.grid.tau_max
        hi = 1.0 / self.alpha
        while self.tail_energy(hi) >= tol:
            hi *= 2
        return brentq(lambda t: self.tail_energy(t) - tol, 0.0, hi, xtol=1e-10 * hi)

    def edge_tau(self, tol: float = EDGE_TOL) -> float:
        """Time beyond which |S| stays below tol times its peak."""
        if self.family is Family.SECH:
            return float(np.arccosh(1 / tol)) / self.alpha
        if self.family is Family.LORENTZIAN:
            return float(np.sqrt(1 / tol - 1)) / self.alpha
        return self.samples.grid.tau_max


def make_waveform(family, alpha: float | None = None, samples: Signal | None = None) -> Waveform:
    family = Family(family)
    if family is Family.SAMPLED:
        if samples is None:
            raise ParameterError("a sampled waveform needs samples")
        if alpha is not None and not alpha > 0:
            raise ParameterError("alpha must be > 0")
        return Waveform(family, alpha, samples)
    if alpha is None or not np.isfinite(alpha) or not alpha > 0:
        raise ParameterError(f"alpha must be > 0, got {alpha}")
    return Waveform(family, float(alpha))


def max_step(alpha: float | None) -> float:
    if alpha is None:
        return 0.01
    return min(0.01, 0.05 / alpha)


def default_grid(w: Waveform, n: int | None = None) -> TimeGrid:
    """Symmetric grid wide enough for the pulse and the relaxation that follows it.

    ``n`` overrides the sample count; the span is kept.
    """
    if w.family is Family.SAMPLED:
        return w.samples.grid
    half = max(w.required_tau_max(), w.edge_tau(), MIN_HALF_WIDTH)
    if n is not None:
        return TimeGrid.symmetric(half, int(n))
    return TimeGrid.covering(half, max_step(w.alpha))


def _check_grid(w: Waveform, grid: TimeGrid):
    need = w.required_tau_max()
    if min(-grid.tau_min, grid.tau_max) < need * (1 - 1e-9):
        raise SizingError(f"grid too short for alpha={w.alpha}: need tau_max >= {need:.6g}")
    if grid.dtau > max_step(w.alpha) * (1 + 1e-9):
        raise SizingError(f"grid too coarse for alpha={w.alpha}: need dtau <= {max_step(w.alpha):.6g}")


def _resample(s: Signal, grid: TimeGrid) -> np.ndarray:
    if s.grid == grid:
        return np.asarray(s.values, dtype=float)
    spline = CubicSpline(s.grid.tau, s.values)
    out = spline(grid.tau)
    out[(grid.tau < s.grid.tau_min) | (grid.tau > s.grid.tau_max)] = 0.0
    return out


def sample(w: Waveform, grid: TimeGrid | None = None, strict: bool = True) -> tuple[Signal, Signal, Signal]:
    """Value, first and second derivative on ``grid``, scaled to unit energy.

    ``strict=False`` skips the sizing check (used for deliberate coarse-grid studies).
    """
    if grid is None:
        grid = default_grid(w)
    if w.family is Family.SAMPLED:
        s = Signal(grid, _resample(w.samples, grid))
        ds = spectral_derivative(s, 1)
        dds = spectral_derivative(s, 2)
        vals = [s.values, ds.values, dds.values]
    else:
        if strict:
            _check_grid(w, grid)
        t = grid.tau
        vals = [w.value(t), w.d1(t), w.d2(t)]
    e = float(np.sum(vals[0] ** 2) * grid.dtau)
    norm = 1 / np.sqrt(e) if e > 0 else 0.0
    return tuple(Signal(grid, v * norm) for v in vals)


def load_table(path: str | Path, alpha: float | None = None) -> Waveform:
    """Two-column (tau, S) text table, uniformly spaced, resampled onto a symmetric power-of-two grid."""
    data = np.loadtxt(path, comments="#", delimiter=None, ndmin=2)
    if data.shape[1] != 2 or data.shape[0] < 4:
        raise ValueError(f"{path}: expected two columns and at least four rows")
    tau, s = data[:, 0], data[:, 1]
    steps = np.diff(tau)
    if np.any(steps <= 0) or np.ptp(steps) > 1e-6 * steps.mean():
        raise ValueError(f"{path}: tau must be strictly increasing and uniformly spaced")
    half = max(abs(tau[0]), abs(tau[-1]))
    n = next_pow2(max(int(np.ceil(2 * half / steps.mean())) + 1, 16))
    grid = TimeGrid.symmetric(half, n)
    spline = CubicSpline(tau, s)
    v = spline(grid.tau)
    v[(grid.tau < tau[0]) | (grid.tau > tau[-1])] = 0.0
    sig = Signal(grid, v)
    e = energy(sig)
    if e > 0:
        sig = sig.scaled(1 / np.sqrt(e))
    return make_waveform(Family.SAMPLED, alpha, sig)
