"""Shared plumbing for the experiment scripts: run an experiment, write its tables and manifest."""

import argparse
import time
from pathlib import Path

from spinmem.config import RunConfig, load_file
from spinmem.output import write_csv, write_manifest, write_timing


def parse(description: str, default_out: str) -> tuple[RunConfig, Path]:
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--config", type=Path, help="optional TOML config")
    ap.add_argument("--out", type=Path, default=Path(default_out))
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    cfg = load_file(args.config) if args.config else RunConfig()
    cfg.workers = args.workers
    cfg.out = str(args.out)
    return cfg.validate(), args.out


def save(name: str, cfg: RunConfig, outcome, out_dir: Path, started: float) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    digests = {f"{t}.csv": write_csv(out_dir / f"{t}.csv", h, c) for t, (h, c) in outcome.tables.items()}
    resolved = cfg.to_dict()
    resolved.pop("out")
    write_manifest(out_dir, name, resolved, digests, outcome.results, outcome.grids,
                   {**outcome.flags, "flagged_runs": outcome.n_flagged}, outcome.approximations)
    write_timing(out_dir, name, time.perf_counter() - started)
    print(f"wrote {len(digests)} tables to {out_dir}")
