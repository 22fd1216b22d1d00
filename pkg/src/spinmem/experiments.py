"""Figure-level computations shared by the command line and the scripts.

Each experiment returns an Outcome: named tables (header plus columns), scalar
results, the grids used, per-run validity flags, and how many runs were flagged.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .absorb import critical_speed_abs, eta_abs_slow_analytic, eta_abs_upper_bound, solve_absorption
from .cascade import APPROXIMATIONS, ProtocolResult, run_absorption, run_protocol
from .config import PRESETS, PhysicalBlock, RunConfig
from .core import DimensionlessParams, MemoryParams
from .emit import EmissionMode, critical_speed_em
from .ensemble import SpinEnsemble, echo_protocol, simulate_raw
from .pulses import Family, Waveform, default_grid, load_table, make_waveform, sample
from .steady import kappa_scan, loss_scan, sweet_spot

MAX_ROWS = 8192  # field tables are decimated to at most about this many rows


@dataclass
class Outcome:
    tables: dict = field(default_factory=dict)  # name -> (header, columns)
    results: dict = field(default_factory=dict)
    grids: list = field(default_factory=list)
    flags: dict = field(default_factory=dict)
    n_flagged: int = 0
    approximations: list = field(default_factory=list)


def parallel_map(fn, items, workers: int = 1):
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def grid_record(grid) -> dict:
    return {"tau_min": grid.tau_min, "tau_max": grid.tau_max, "n": grid.n, "dtau": grid.dtau}


def _tag(x: float) -> str:
    return f"{x:g}"


def make_pulse(cfg: RunConfig, alpha: float) -> Waveform:
    if cfg.pulse.family == "file":
        return load_table(cfg.pulse.file, alpha)
    return make_waveform(cfg.pulse.family, alpha)


def _emission_mode(cfg: RunConfig):
    return {"auto": None, "optimal": EmissionMode.OPTIMAL_SPECTRAL, "mirror": EmissionMode.MIRROR_FALLBACK}[cfg.emission]


# --- continuous drive -------------------------------------------------------


def steady_experiment(cfg: RunConfig) -> Outcome:
    s = cfg.steady
    out = Outcome()
    kappas = np.logspace(np.log10(s.kappa_lo), np.log10(s.kappa_hi), s.points)
    curves = kappa_scan(s.gbars, s.kbar0, kappas)
    out.tables["steady_kappa"] = (
        ["kappa_bar"] + [f"transmissivity_gbar_{_tag(g)}" for g in s.gbars],
        [kappas] + [curves[g] for g in s.gbars],
    )
    k0s = np.concatenate([[0.0], np.logspace(np.log10(s.kbar0_lo), np.log10(s.kbar0_hi), s.points // 2)])
    loss = loss_scan(s.gbars, k0s)
    out.tables["steady_loss"] = (
        ["kbar0"] + [f"transmissivity_gbar_{_tag(g)}" for g in s.gbars],
        [k0s] + [loss[g] for g in s.gbars],
    )
    rows = []
    per_g = {}
    log_k = np.log(kappas)
    for g in s.gbars:
        p = MemoryParams(g_ens=g, gamma=1.0, kappa0=s.kbar0)
        _, k_star, t_star = sweet_spot(p)
        i_max = int(np.argmax(curves[g]))
        i_star = int(np.argmin(np.abs(log_k - np.log(k_star))))
        ok = abs(i_max - i_star) <= 1
        rows.append((g, k_star, t_star, kappas[i_max], float(ok)))
        per_g[_tag(g)] = {"kappa_star": k_star, "transmissivity_star": t_star,
                          "kappa_argmax": kappas[i_max], "argmax_within_one_step": ok}
    cols = list(map(np.array, zip(*rows)))
    out.tables["steady_sweet_spots"] = (
        ["gbar", "kappa_star", "transmissivity_star", "kappa_argmax", "argmax_within_one_step"], cols)
    out.results = {"kbar0": s.kbar0, "sweet_spots": per_g}
    order = sorted(s.gbars)
    out.results["stronger_coupling_dominates"] = all(
        bool(np.all(loss[hi] >= loss[lo] - 1e-15)) for lo, hi in zip(order[:-1], order[1:]))
    return out


# --- optimal protocol ---------------------------------------------------------


def protocol_record(r: ProtocolResult) -> dict:
    ka = r.absorption.kappa_a.flags
    ke = r.spectral_kappa_e.flags if r.spectral_kappa_e is not None else r.emission.kappa_e.flags
    return {
        "eta_abs": r.eta_a,
        "eta_em": r.eta_e,
        "eta_total": r.eta_total,
        "bound_em": r.bound_em,
        "bound_total": eta_abs_upper_bound(r.params) ** 2,
        "emission_mode": r.mode.value if r.mode is not None else "given",
        "kappa_a_flags": ka.as_dict(),
        "kappa_e_spectral_flags": ke.as_dict(),
        "absorption_energies": r.absorption.energies,
        "emission_energies": r.emission.energies,
        "warnings": list(r.warnings),
    }


def field_table(r: ProtocolResult):
    grid = r.absorption.e_in.grid
    stride = max(1, math.ceil(grid.n / MAX_ROWS))
    sl = slice(None, None, stride)
    spectral = r.spectral_kappa_e.kappa if r.spectral_kappa_e is not None else r.emission.kappa_e.kappa
    header = ["tau", "kappa_a", "kappa_e", "kappa_e_spectral", "e_in", "e_out", "s_a", "s_in", "s_e"]
    cols = [grid.tau, r.absorption.kappa_a.kappa, r.emission.kappa_e.kappa, spectral, r.absorption.e_in.values,
            r.emission.e_e_out.values, r.absorption.s_a.values, r.emission.s_in.values, r.emission.s_e.values]
    return header, [np.asarray(c)[sl] for c in cols], stride


def optimize_experiment(cfg: RunConfig, alphas=None, prefix: str = "optimize") -> Outcome:
    p = cfg.params()
    alphas = list(cfg.pulse.alphas if alphas is None else alphas)
    out = Outcome(approximations=list(APPROXIMATIONS))
    rows = []
    for a in alphas:
        w = make_pulse(cfg, a)
        grid = default_grid(w, cfg.grid.n)
        r = run_protocol(w, p.with_alpha(a), mode=_emission_mode(cfg), grid=grid, kappa_max=cfg.grid.kappa_max)
        header, cols, stride = field_table(r)
        name = f"{prefix}_{cfg.pulse.family}_alpha_{_tag(a)}"
        out.tables[name] = (header, cols)
        rec = protocol_record(r)
        rec["field_stride"] = stride
        out.results[_tag(a)] = rec
        out.grids.append({"alpha": a, **grid_record(grid)})
        out.flags[_tag(a)] = {"flagged": r.flagged, "emission_mode": rec["emission_mode"]}
        out.n_flagged += int(r.flagged)
        rows.append((a, r.eta_a, r.eta_e, r.eta_total, r.bound_em,
                     float(r.mode is EmissionMode.MIRROR_FALLBACK), float(r.flagged)))
    cols = list(map(np.array, zip(*rows)))
    out.tables[f"{prefix}_{cfg.pulse.family}_efficiencies"] = (
        ["alpha", "eta_abs", "eta_em", "eta_total", "bound_em", "mirror_fallback", "flagged"], cols)
    out.results["params"] = {"gbar": p.gbar, "kbar0": p.kbar0, "family": cfg.pulse.family}
    return out


def protocol_experiment(cfg: RunConfig) -> Outcome:
    return optimize_experiment(cfg, [cfg.pulse.alpha], prefix="protocol")


# --- parameter sweeps ---------------------------------------------------------


def _eta_abs_point(args):
    g, k0, a, kappa_max = args
    sol = solve_absorption(make_waveform(Family.SECH, a), DimensionlessParams(g, k0, a), kappa_max=kappa_max)
    return sol.eta_abs, sol.kappa_a.flags.pathological


def _critical_point(args):
    g, k0 = args
    p = DimensionlessParams(g, k0)
    num, approx = critical_speed_abs(p)
    return num, approx, critical_speed_em(p)


def _duration_point(args):
    g, k0 = args
    return 1.0 / critical_speed_abs(DimensionlessParams(g, k0))[0]


def _protocol_point(args):
    g, k0, a, kappa_max = args
    r = run_protocol(make_waveform(Family.SECH, a), DimensionlessParams(g, k0, a), kappa_max=kappa_max)
    return r.eta_a, r.eta_e, r.eta_total, r.bound_em, float(r.mode is EmissionMode.MIRROR_FALLBACK), r.flagged


def sweep_experiment(cfg: RunConfig) -> Outcome:
    s = cfg.sweep
    p = cfg.params()
    km = cfg.grid.kappa_max
    out = Outcome(approximations=list(APPROXIMATIONS))
    nw = cfg.workers

    alphas = np.logspace(np.log10(s.alpha_lo), np.log10(s.alpha_hi), s.alpha_points)
    for k0 in s.kbar0s:
        jobs = [(g, k0, float(a), km) for g in s.gbars for a in alphas]
        res = parallel_map(_eta_abs_point, jobs, nw)
        etas = np.array([r[0] for r in res]).reshape(len(s.gbars), len(alphas))
        out.n_flagged += sum(int(r[1]) for r in res)
        out.tables[f"sweep_eta_abs_kbar0_{_tag(k0)}"] = (
            ["alpha"] + [f"eta_abs_gbar_{_tag(g)}" for g in s.gbars], [alphas] + list(etas))

    pairs = [(g, k0) for k0 in s.kbar0s for g in s.gbars]
    crit = parallel_map(_critical_point, pairs, nw)
    cols = list(map(np.array, zip(*[(g, k0, *c) for (g, k0), c in zip(pairs, crit)])))
    out.tables["sweep_critical_speeds"] = (
        ["gbar", "kbar0", "alpha_abs_numeric", "alpha_abs_approx", "alpha_em"], cols)
    out.results["critical_speeds"] = [
        {"gbar": g, "kbar0": k0, "alpha_abs_numeric": c[0], "alpha_abs_approx": c[1], "alpha_em": c[2]}
        for (g, k0), c in zip(pairs, crit)]

    gs = np.linspace(0.02, 1.0, s.duration_gbars)
    dur_cols = []
    for k0 in s.duration_kbar0s:
        dur_cols.append(np.array(parallel_map(_duration_point, [(float(g), k0) for g in gs], nw)))
    out.tables["sweep_min_duration"] = (
        ["gbar"] + [f"duration_kbar0_{_tag(k)}" for k in s.duration_kbar0s], [gs] + dur_cols)
    out.results["min_duration_floor"] = float(min(c.min() for c in dur_cols))

    k0s = np.concatenate([[0.0], np.logspace(-3, 0, s.loss_points - 1)])
    loss_cols = []
    for a in cfg.pulse.alphas:
        res = parallel_map(_protocol_point, [(p.gbar, float(k), a, km) for k in k0s], nw)
        loss_cols.append(np.array([r[2] for r in res]))
        out.n_flagged += sum(int(r[5]) for r in res)
    bound = (p.kbar_s / (p.kbar_s + k0s)) ** 2
    out.tables["sweep_eta_vs_kbar0"] = (
        ["kbar0"] + [f"eta_alpha_{_tag(a)}" for a in cfg.pulse.alphas] + ["bound"], [k0s] + loss_cols + [bound])

    em_alphas = np.linspace(0.05, 1.0, s.em_alpha_points)
    res = parallel_map(_protocol_point, [(p.gbar, p.kbar0, float(a), km) for a in em_alphas], nw)
    out.n_flagged += sum(int(r[5]) for r in res)
    out.tables["sweep_eta_em_vs_alpha"] = (
        ["alpha", "eta_em", "bound_em", "mirror_fallback"],
        [em_alphas, np.array([r[1] for r in res]), np.array([r[3] for r in res]), np.array([r[4] for r in res])])

    num, approx = critical_speed_abs(p)
    out.results["params"] = {"gbar": p.gbar, "kbar0": p.kbar0}
    out.results["alpha_abs"] = {"numeric": num, "approx": approx}
    out.results["alpha_em"] = critical_speed_em(p)
    out.results["slow_analytic_at_alpha_abs"] = eta_abs_slow_analytic(p, num)
    out.results["modular_preset"] = modular_feasibility()
    out.flags = {"flagged_runs": out.n_flagged}
    return out


def modular_feasibility(preset: str = "modular") -> dict:
    """Shortest pulse the preset hardware can absorb optimally, in seconds."""
    phys = PhysicalBlock(**PRESETS[preset])
    mp = phys.to_params()
    p = mp.dimensionless()
    num, approx = critical_speed_abs(p)
    return {
        "gbar": p.gbar, "kbar0": p.kbar0, "alpha_abs_numeric": num, "alpha_abs_approx": approx,
        "min_duration_s": 1.0 / (num * mp.gamma),
    }


# --- ensemble cross-check -----------------------------------------------------


def oracle_experiment(cfg: RunConfig) -> Outcome:
    o = cfg.oracle
    p = cfg.params()
    out = Outcome(approximations=list(APPROXIMATIONS) + [
        f"Lorentzian detuning distribution truncated at |detuning| <= {o.truncation:g} Gamma",
        f"detunings sampled by {o.sampling}, couplings {o.coupling}",
    ])
    w = make_waveform(Family.SECH, o.alpha)
    grid = default_grid(w, cfg.grid.n)
    S, _, _ = sample(w, grid)
    from .absorb import ModulationProfile

    k_const = ModulationProfile.constant(grid, p.kbar0 + p.kbar_s)
    ref = run_absorption(S, k_const, p)
    target = 1j * ref.s_a.values
    peak = np.abs(target).max()
    rows = []
    overlays = {}
    for n in o.n_spins:
        ens = SpinEnsemble.lorentzian(n, p.gbar, o.truncation, o.sampling, cfg.seed, o.coupling)
        eps, coll = simulate_raw(S, k_const, ens, p)
        dev = coll.values - target
        rms = float(np.sqrt(np.mean(np.abs(dev) ** 2)) / peak)
        rows.append((n, rms, float(np.abs(dev).max() / peak)))
        overlays[n] = coll.values
    cols = list(map(np.array, zip(*rows)))
    out.tables["oracle_rms"] = (["n_spins", "rms_rel", "max_rel"], cols)

    r = run_protocol(w, p.with_alpha(o.alpha), grid=grid, kappa_max=cfg.grid.kappa_max)
    ens = SpinEnsemble.lorentzian(o.echo_spins, p.gbar, o.truncation, o.sampling, cfg.seed, o.coupling)
    half = grid.tau_max
    echo = echo_protocol(ens, p, half, half, r.absorption.e_in, (r.absorption.kappa_a, r.emission.kappa_e))
    casc = 1j * r.emission.s_e.values
    corr = float(np.abs(np.vdot(echo.collective_em.values, casc))
                 / (np.linalg.norm(casc) * np.linalg.norm(echo.collective_em.values)))

    stride = max(1, math.ceil(grid.n / MAX_ROWS))
    sl = slice(None, None, stride)
    n_show = o.echo_spins if o.echo_spins in overlays else o.n_spins[-1]
    out.tables["oracle_fields"] = (
        ["tau", "cascade_s_a", "oracle_collective_abs_re", "oracle_collective_abs_im", "cascade_s_e",
         "oracle_collective_em_re", "oracle_collective_em_im", "cascade_e_out", "oracle_e_out"],
        [grid.tau[sl], ref.s_a.values[sl], overlays[n_show].real[sl], overlays[n_show].imag[sl],
         r.emission.s_e.values[sl], echo.collective_em.values.real[sl], echo.collective_em.values.imag[sl],
         r.emission.e_e_out.values[sl], np.abs(echo.e_out.values)[sl]],
    )
    out.results = {
        "alpha": o.alpha,
        "rms_by_n": {str(n): rms for n, rms, _ in rows},
        "echo": {"n_spins": o.echo_spins, "eta_oracle": echo.eta_total, "eta_cascade": r.eta_total,
                 "difference": echo.eta_total - r.eta_total, "correlation": corr, "echo_time": echo.echo_time},
        "overlay_spins": n_show,
    }
    out.grids.append(grid_record(grid))
    out.n_flagged = int(r.flagged)
    return out
