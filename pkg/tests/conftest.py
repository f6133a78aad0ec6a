import numpy as np
import pytest

from relaysel.channel import SystemConfig
from relaysel.specfn import SeriesControl

# roomy cap so tests near rho_f -> 1 converge; tolerance is the default
CTRL = SeriesControl(abs_tol=1e-12, k_max=65536)


@pytest.fixture
def ctrl():
    return CTRL


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def sym_config(M=2, power=10.0, rho_e=1.0, rho_f=0.9, rate=1.0, **kw) -> SystemConfig:
    return SystemConfig.symmetric(M=M, power=power, rho_e=rho_e, rho_f=rho_f, rate=rate, **kw)
