"""Continuous-drive transmissivity versus coupling rate and versus intrinsic loss."""

import time

from _common import parse, save

from spinmem.experiments import steady_experiment

if __name__ == "__main__":
    cfg, out = parse(__doc__, "results/steady")
    t0 = time.perf_counter()
    outcome = steady_experiment(cfg)
    for g, spot in outcome.results["sweet_spots"].items():
        print(f"g/Gamma={g:>4}: kappa*={spot['kappa_star']:.4f}  |t|^2={spot['transmissivity_star']:.4f}  "
              f"argmax within one step: {spot['argmax_within_one_step']}")
    save("steady", cfg, outcome, out, t0)
