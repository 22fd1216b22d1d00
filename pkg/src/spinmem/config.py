"""Run configuration: defaults, TOML files, SPINMEM_* environment variables, flag overrides."""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import tomli

from .core import DimensionlessParams, MemoryParams, ParameterError

ENV_PREFIX = "SPINMEM_"

# physical scenario of a modular architecture, rates given as frequencies (Hz)
PRESETS = {
    "modular": {"gamma": 300e3, "g_ens": 120e3, "kappa0": 20e3, "unit": "hz"},
}


class ConfigError(ValueError):
    pass


@dataclass
class DimensionlessBlock:
    gbar: float = 0.5
    kbar0: float = 1 / 30


@dataclass
class PhysicalBlock:
    gamma: float = 0.0
    g_ens: float = 0.0
    kappa0: float = 0.0
    unit: str = "rad/s"  # or "hz": values are divided by 2 pi

    def to_params(self) -> MemoryParams:
        scale = 2 * math.pi if self.unit.lower() == "hz" else 1.0
        if self.unit.lower() not in ("hz", "rad/s"):
            raise ConfigError(f"unknown unit {self.unit!r}")
        return MemoryParams(g_ens=self.g_ens * scale, gamma=self.gamma * scale, kappa0=self.kappa0 * scale)


@dataclass
class PulseBlock:
    family: str = "sech"
    alpha: float = 0.12
    alphas: list = field(default_factory=lambda: [0.12, 0.25, 0.46, 0.69])
    file: str | None = None


@dataclass
class GridBlock:
    n: int | None = None  # overrides the sample count, the span stays automatic
    kappa_max: float = 10.0


@dataclass
class SteadyBlock:
    gbars: list = field(default_factory=lambda: [0.2, 1.0, 2.0])
    kbar0: float = 1 / 30
    kappa_lo: float = 1e-3
    kappa_hi: float = 1e2
    points: int = 400
    kbar0_lo: float = 1e-3
    kbar0_hi: float = 1.0


@dataclass
class SweepBlock:
    gbars: list = field(default_factory=lambda: [0.05, 0.1, 0.2, 0.3, 0.4, 0.5])
    kbar0s: list = field(default_factory=lambda: [0.0, 1 / 30])
    alpha_lo: float = 0.005
    alpha_hi: float = 1.0
    alpha_points: int = 40
    duration_gbars: int = 40
    duration_kbar0s: list = field(default_factory=lambda: [0.0, 1 / 30, 0.1, 0.3])
    loss_points: int = 24
    em_alpha_points: int = 30


@dataclass
class OracleBlock:
    alpha: float = 0.12
    n_spins: list = field(default_factory=lambda: [250, 1000, 2000, 4000])
    echo_spins: int = 2000
    truncation: float = 50.0
    sampling: str = "quantile"
    coupling: str = "uniform"


@dataclass
class RunConfig:
    dimensionless: DimensionlessBlock | None = field(default_factory=DimensionlessBlock)
    physical: PhysicalBlock | None = None
    pulse: PulseBlock = field(default_factory=PulseBlock)
    grid: GridBlock = field(default_factory=GridBlock)
    steady: SteadyBlock = field(default_factory=SteadyBlock)
    sweep: SweepBlock = field(default_factory=SweepBlock)
    oracle: OracleBlock = field(default_factory=OracleBlock)
    emission: str = "auto"  # auto | optimal | mirror
    out: str = "out"
    seed: int = 0
    workers: int = 1
    allow_flags: bool = False

    def params(self) -> DimensionlessParams:
        if self.physical is not None:
            return self.physical.to_params().dimensionless()
        return DimensionlessParams(self.dimensionless.gbar, self.dimensionless.kbar0)

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.physical is None:
            d.pop("physical")
        else:
            d.pop("dimensionless")
        return d

    def validate(self) -> "RunConfig":
        if (self.physical is None) == (self.dimensionless is None):
            raise ConfigError("exactly one of [physical] and [dimensionless] must be given")
        try:
            p = self.params()
        except ParameterError as exc:
            raise ConfigError(str(exc)) from exc
        if p.gbar <= 0:
            raise ConfigError("the spin coupling must be positive")
        if self.pulse.family not in ("sech", "lorentzian", "file"):
            raise ConfigError(f"unknown pulse family {self.pulse.family!r}")
        if self.pulse.family == "file" and not self.pulse.file:
            raise ConfigError("pulse family 'file' needs pulse.file")
        for a in [self.pulse.alpha, *self.pulse.alphas]:
            if not a > 0:
                raise ConfigError("pulse speeds must be positive")
        if self.grid.n is not None and (self.grid.n < 16 or self.grid.n & (self.grid.n - 1)):
            raise ConfigError("grid.n must be a power of two >= 16")
        if self.emission not in ("auto", "optimal", "mirror"):
            raise ConfigError(f"unknown emission mode {self.emission!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        for k0 in [*self.sweep.kbar0s, self.steady.kbar0, *self.sweep.duration_kbar0s]:
            if k0 < 0:
                raise ConfigError("rates must be non-negative")
        return self


_BLOCKS = {
    "dimensionless": DimensionlessBlock, "physical": PhysicalBlock, "pulse": PulseBlock, "grid": GridBlock,
    "steady": SteadyBlock, "sweep": SweepBlock, "oracle": OracleBlock,
}


def _apply(block, values: dict, where: str):
    known = {f.name for f in fields(block)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown keys in [{where}]: {sorted(unknown)}")
    return replace(block, **values)


def from_mapping(data: dict) -> RunConfig:
    data = dict(data)
    cfg = RunConfig()
    if "physical" in data:
        phys = dict(data.pop("physical"))
        preset = phys.pop("preset", None)
        if preset and preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}")
        base = PhysicalBlock(**PRESETS[preset]) if preset else PhysicalBlock()
        cfg.physical = _apply(base, phys, "physical")
        cfg.dimensionless = None
        if "dimensionless" in data:
            raise ConfigError("exactly one of [physical] and [dimensionless] must be given")
    for name, cls in _BLOCKS.items():
        if name == "physical" or name not in data:
            continue
        current = getattr(cfg, name) or cls()
        setattr(cfg, name, _apply(current, data.pop(name), name))
    for key in ("emission", "out", "seed", "workers", "allow_flags"):
        if key in data:
            setattr(cfg, key, data.pop(key))
    if data:
        raise ConfigError(f"unknown top-level keys: {sorted(data)}")
    return cfg


def load_file(path: str | Path) -> RunConfig:
    """TOML config, or a JSON run manifest whose resolved config is reused."""
    path = Path(path)
    if path.suffix == ".json":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        return from_mapping(doc["config"] if "config" in doc else doc)
    with open(path, "rb") as fh:
        return from_mapping(tomli.load(fh))


# environment variable -> (block, key, type)
_ENV_KEYS = {
    "GBAR": ("dimensionless", "gbar", float),
    "KBAR0": ("dimensionless", "kbar0", float),
    "ALPHA": ("pulse", "alpha", float),
    "PULSE": ("pulse", "family", str),
    "PULSE_FILE": ("pulse", "file", str),
    "GRID_N": ("grid", "n", int),
    "KAPPA_MAX": ("grid", "kappa_max", float),
    "OUT": (None, "out", str),
    "SEED": (None, "seed", int),
    "WORKERS": (None, "workers", int),
    "EMISSION": (None, "emission", str),
    "ALLOW_FLAGS": (None, "allow_flags", lambda s: s.strip().lower() in ("1", "true", "yes", "on")),
}


def set_value(cfg: RunConfig, block: str | None, key: str, value):
    if block is None:
        setattr(cfg, key, value)
        return
    if block == "dimensionless" and cfg.dimensionless is None:
        raise ConfigError(f"cannot set {key} on a configuration given in physical units")
    setattr(getattr(cfg, block), key, value)


def apply_env(cfg: RunConfig, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    for suffix, (block, key, conv) in _ENV_KEYS.items():
        raw = environ.get(ENV_PREFIX + suffix)
        if raw is None or raw == "":
            continue
        try:
            value = conv(raw)
        except ValueError as exc:
            raise ConfigError(f"{ENV_PREFIX}{suffix}: {exc}") from exc
        set_value(cfg, block, key, value)
    return cfg
