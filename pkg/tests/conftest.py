import functools

import pytest
from hypothesis import HealthCheck, settings

from spinmem.cascade import run_protocol
from spinmem.core import DimensionlessParams
from spinmem.pulses import make_waveform

settings.register_profile("spinmem", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("spinmem")

# the operating point used throughout: g/Gamma = 0.5, kappa0/Gamma = 1/30
GBAR = 0.5
KBAR0 = 1 / 30


@functools.lru_cache(maxsize=None)
def protocol(family: str, alpha: float, gbar: float = GBAR, kbar0: float = KBAR0):
    """Cached optimal-protocol runs shared between test modules."""
    return run_protocol(make_waveform(family, alpha), DimensionlessParams(gbar, kbar0, alpha))


@pytest.fixture
def params():
    return DimensionlessParams(GBAR, KBAR0)
