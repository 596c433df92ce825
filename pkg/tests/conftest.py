"""Shared fixtures: paper-typical parameters and session-scoped optimizations."""

import numpy as np
import pytest

from dephasing_leakage import gates

# Laboratory parameter set used throughout (angular units, ns).
G_CZ = 2 * np.pi * 0.05          # 50 MHz coupling
DELTA0 = 2 * np.pi * 1.0         # 1 GHz initial detuning
OMEGA01 = 2 * np.pi * 6.0        # 6 GHz qubit
ETA = 2 * np.pi * 0.26           # 260 MHz anharmonicity
TPHI1 = 1e5                      # 100 us
TPHI2 = 1e3                      # 1 us


@pytest.fixture(scope="session")
def adiabatic_spec_t20():
    return gates.optimize_adiabatic(G_CZ, DELTA0, 20.0)


@pytest.fixture(scope="session")
def drag_spec_t20():
    return gates.optimize_drag(OMEGA01, ETA, 20.0)
