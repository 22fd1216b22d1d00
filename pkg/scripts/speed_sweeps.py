"""Efficiency versus pulse speed and loss, critical speeds, and minimal pulse durations."""

import time

from _common import parse, save

from spinmem.experiments import sweep_experiment

if __name__ == "__main__":
    cfg, out = parse(__doc__, "results/sweep")
    t0 = time.perf_counter()
    outcome = sweep_experiment(cfg)
    res = outcome.results
    print(f"alpha*_abs = {res['alpha_abs']['numeric']:.4f} (approximation {res['alpha_abs']['approx']:.4f})")
    print(f"alpha*_em  = {res['alpha_em']:.4f}")
    print(f"shortest pulse duration over the coupling scan: {res['min_duration_floor']:.4f} / Gamma")
    m = res["modular_preset"]
    print(f"modular preset: g/Gamma={m['gbar']:.3f}, alpha*={m['alpha_abs_numeric']:.4f}, "
          f"shortest pulse {1e6 * m['min_duration_s']:.2f} us")
    save("sweep", cfg, outcome, out, t0)
