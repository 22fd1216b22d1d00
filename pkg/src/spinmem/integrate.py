"""Fixed-step RK4 for the driven cavity/spin-mode pair.

    dE/dtau = -(kbar0 + kappa(tau))/2 E - gbar S + sqrt(kappa) e_in
    dS/dtau = -S/2 + gbar E + u

Node values come from the grid; half-step values of kappa and of the drives
are interpolated with a four-point cubic, which keeps the scheme fourth order.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .core import GridMismatchError, TimeGrid

MAX_DECAY_STEP = 0.5  # largest (decay rate * substep) before the step is subdivided


def midpoints(x: np.ndarray) -> np.ndarray:
    """Values halfway between consecutive samples (cubic inside, quadratic at the ends)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 3:
        return 0.5 * (x[:-1] + x[1:])
    m = np.empty(n - 1)
    m[1:-1] = (-x[:-3] + 9 * x[1:-2] + 9 * x[2:-1] - x[3:]) / 16
    m[0] = (3 * x[0] + 6 * x[1] - x[2]) / 8
    m[-1] = (-x[-3] + 6 * x[-2] + 3 * x[-1]) / 8
    return m


@njit(cache=True)
def _quad(a, b, c, x):
    # Lagrange through (0, a), (0.5, b), (1, c)
    return 2 * (x - 0.5) * (x - 1) * a - 4 * x * (x - 1) * b + 2 * x * (x - 0.5) * c


@njit(cache=True)
def _rk4(h, g, k0, kap, kap_mid, cav, cav_mid, spin, spin_mid, nsub):
    n = kap.size
    E = np.zeros(n)
    S = np.zeros(n)
    e = 0.0
    s = 0.0
    hs = h / nsub
    for i in range(n - 1):
        for j in range(nsub):
            x0 = j / nsub
            xm = (j + 0.5) / nsub
            x1 = (j + 1.0) / nsub
            if nsub == 1:
                k_a, k_m, k_b = kap[i], kap_mid[i], kap[i + 1]
                c_a, c_m, c_b = cav[i], cav_mid[i], cav[i + 1]
                u_a, u_m, u_b = spin[i], spin_mid[i], spin[i + 1]
            else:
                k_a = _quad(kap[i], kap_mid[i], kap[i + 1], x0)
                k_m = _quad(kap[i], kap_mid[i], kap[i + 1], xm)
                k_b = _quad(kap[i], kap_mid[i], kap[i + 1], x1)
                c_a = _quad(cav[i], cav_mid[i], cav[i + 1], x0)
                c_m = _quad(cav[i], cav_mid[i], cav[i + 1], xm)
                c_b = _quad(cav[i], cav_mid[i], cav[i + 1], x1)
                u_a = _quad(spin[i], spin_mid[i], spin[i + 1], x0)
                u_m = _quad(spin[i], spin_mid[i], spin[i + 1], xm)
                u_b = _quad(spin[i], spin_mid[i], spin[i + 1], x1)
            d_a = 0.5 * (k0 + k_a)
            d_m = 0.5 * (k0 + k_m)
            d_b = 0.5 * (k0 + k_b)
            f1e = -d_a * e - g * s + c_a
            f1s = -0.5 * s + g * e + u_a
            e2 = e + 0.5 * hs * f1e
            s2 = s + 0.5 * hs * f1s
            f2e = -d_m * e2 - g * s2 + c_m
            f2s = -0.5 * s2 + g * e2 + u_m
            e3 = e + 0.5 * hs * f2e
            s3 = s + 0.5 * hs * f2s
            f3e = -d_m * e3 - g * s3 + c_m
            f3s = -0.5 * s3 + g * e3 + u_m
            e4 = e + hs * f3e
            s4 = s + hs * f3s
            f4e = -d_b * e4 - g * s4 + c_b
            f4s = -0.5 * s4 + g * e4 + u_b
            e = e + hs / 6 * (f1e + 2 * f2e + 2 * f3e + f4e)
            s = s + hs / 6 * (f1s + 2 * f2s + 2 * f3s + f4s)
        E[i + 1] = e
        S[i + 1] = s
    return E, S


def integrate(
    grid: TimeGrid,
    kappa: np.ndarray,
    gbar: float,
    kbar0: float,
    cavity_in: np.ndarray | None = None,
    spin_in: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Cavity and spin-mode fields on the grid nodes, starting from rest at tau_min.

    ``cavity_in`` is the driveline field (enters as sqrt(kappa) * e_in);
    ``spin_in`` drives the spin mode directly.
    """
    n = grid.n
    kappa = np.asarray(kappa, dtype=float)
    if kappa.shape != (n,):
        raise GridMismatchError("kappa samples do not match the grid")
    zeros = np.zeros(n)
    e_in = zeros if cavity_in is None else np.asarray(cavity_in, dtype=float)
    u = zeros if spin_in is None else np.asarray(spin_in, dtype=float)
    for name, arr in (("kappa", kappa), ("cavity drive", e_in), ("spin drive", u)):
        if arr.shape != (n,):
            raise GridMismatchError(f"{name} does not match the grid")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{name} contains non-finite samples")
    k_mid = np.maximum(midpoints(kappa), 0.0)
    cav = np.sqrt(kappa) * e_in
    cav_mid = np.sqrt(k_mid) * midpoints(e_in)
    rate = 0.5 * (kbar0 + max(kappa.max(), k_mid.max()))
    nsub = max(1, math.ceil(rate * grid.dtau / MAX_DECAY_STEP))
    return _rk4(grid.dtau, float(gbar), float(kbar0), kappa, k_mid, cav, cav_mid, u, midpoints(u), nsub)
