"""Command-line entry point: ``spinmem {steady,optimize,sweep,oracle,protocol}``."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import experiments
from .config import ConfigError, RunConfig, apply_env, load_file, set_value
from .output import write_csv, write_manifest, write_timing

EXIT_FLAGGED = 3

COMMANDS = {
    "steady": experiments.steady_experiment,
    "optimize": experiments.optimize_experiment,
    "sweep": experiments.sweep_experiment,
    "oracle": experiments.oracle_experiment,
    "protocol": experiments.protocol_experiment,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spinmem", description="Spin-ensemble memory efficiency toolkit")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", type=Path, help="TOML config, or a manifest JSON from an earlier run")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--alpha", type=float, help="pulse speed (single run) or the only speed for optimize")
    ap.add_argument("--gbar", type=float, help="g_ens / Gamma")
    ap.add_argument("--kbar0", type=float, help="kappa0 / Gamma")
    ap.add_argument("--pulse", choices=["sech", "lorentzian", "file"])
    ap.add_argument("--pulse-file", help="two-column (tau, S) table used with --pulse file")
    ap.add_argument("--emission", choices=["auto", "optimal", "mirror"])
    ap.add_argument("--grid-n", type=int, help="sample count (power of two)")
    ap.add_argument("--workers", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--allow-flags", action="store_true", default=None,
                    help="exit 0 even when some run needed a clamp or hit a singularity")
    return ap


def resolve_config(args: argparse.Namespace, environ=None) -> RunConfig:
    """Defaults, then file, then SPINMEM_* environment, then flags."""
    cfg = load_file(args.config) if args.config else RunConfig()
    apply_env(cfg, environ)
    overrides = [
        ("dimensionless", "gbar", args.gbar), ("dimensionless", "kbar0", args.kbar0),
        ("pulse", "family", args.pulse), ("pulse", "file", args.pulse_file),
        ("grid", "n", args.grid_n), (None, "out", args.out), (None, "workers", args.workers),
        (None, "seed", args.seed), (None, "allow_flags", args.allow_flags), (None, "emission", args.emission),
    ]
    for block, key, value in overrides:
        if value is not None:
            set_value(cfg, block, key, value)
    if args.alpha is not None:
        cfg.pulse.alpha = args.alpha
        if args.command == "optimize":
            cfg.pulse.alphas = [args.alpha]
    return cfg.validate()


def run(argv=None, environ=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args, environ)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"spinmem: configuration error: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    outcome = COMMANDS[args.command](cfg)
    digests = {}
    for name, (header, cols) in outcome.tables.items():
        fname = f"{name}.csv"
        digests[fname] = write_csv(out_dir / fname, header, cols)
    resolved = cfg.to_dict()
    resolved.pop("out")  # where files go does not change what they contain
    manifest = write_manifest(out_dir, args.command, resolved, digests, outcome.results, outcome.grids,
                              {**outcome.flags, "flagged_runs": outcome.n_flagged}, outcome.approximations)
    write_timing(out_dir, args.command, time.perf_counter() - t0)
    print(f"spinmem {args.command}: wrote {len(digests)} tables and {manifest}")
    if outcome.n_flagged and not cfg.allow_flags:
        print(f"spinmem: {outcome.n_flagged} run(s) flagged (clamp or singularity); "
              "rerun with --allow-flags to accept", file=sys.stderr)
        return EXIT_FLAGGED
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
