"""CSV tables and JSON run manifests."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__


def write_csv(path: Path, header: list[str], columns: list) -> str:
    """Write columns with a header row, 15 significant digits; returns the SHA-256 of the file."""
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    lines = [",".join(header)]
    lines += [",".join(f"{v:.15g}" for v in row) for row in data]
    payload = ("\n".join(lines) + "\n").encode("utf-8")
    path.write_bytes(payload)
    return hashlib.sha256(payload).hexdigest()


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    return header, np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    return x


def write_manifest(out_dir: Path, command: str, config: dict, tables: dict[str, str], results: dict,
                   grids: list, flags: dict, approximations: list[str]) -> Path:
    """Everything needed to rerun and verify a command.  Timing lives in a separate text file
    so that the manifest itself is reproducible byte for byte."""
    doc = {
        "tool": "spinmem",
        "version": __version__,
        "command": command,
        "config": _plain(config),
        "grids": _plain(grids),
        "approximations": list(approximations),
        "flags": _plain(flags),
        "results": _plain(results),
        "files": {name: {"sha256": digest} for name, digest in sorted(tables.items())},
    }
    path = out_dir / f"{command}_manifest.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_timing(out_dir: Path, command: str, seconds: float) -> Path:
    path = out_dir / f"{command}_timing.txt"
    path.write_text(f"wall_time_s {seconds:.3f}\n", encoding="utf-8")
    return path
