"""Optimal storage and retrieval of sech and Lorentzian pulses at the four reference speeds."""

import copy
import time

from _common import parse, save

from spinmem.experiments import optimize_experiment

if __name__ == "__main__":
    cfg, out = parse(__doc__, "results/pulses")
    for family in ("sech", "lorentzian"):
        t0 = time.perf_counter()
        run_cfg = copy.deepcopy(cfg)
        run_cfg.pulse.family = family
        outcome = optimize_experiment(run_cfg)
        print(f"{family}:")
        for a in run_cfg.pulse.alphas:
            r = outcome.results[f"{a:g}"]
            print(f"  alpha={a:<5} eta_abs={r['eta_abs']:.4f} eta_em={r['eta_em']:.4f} "
                  f"eta={r['eta_total']:.4f} ({r['emission_mode']})")
        save(f"optimize_{family}", run_cfg, outcome, out, t0)
