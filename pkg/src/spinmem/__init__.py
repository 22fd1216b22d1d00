"""Optimal storage and retrieval in a spin-ensemble quantum memory with a tunable cavity."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    DimensionlessParams,
    MemoryParams,
    Signal,
    Spectrum,
    TimeGrid,
    energy,
    forward_transform,
    inverse_transform,
)
from .pulses import Family, Waveform, make_waveform, sample  # noqa: E402

__all__ = [
    "DimensionlessParams", "MemoryParams", "Signal", "Spectrum", "TimeGrid", "energy",
    "forward_transform", "inverse_transform", "Family", "Waveform", "make_waveform", "sample",
    "__version__",
]
