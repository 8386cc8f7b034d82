import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from core.entities import SystemSpec  # noqa: E402


@pytest.fixture
def comb_spec() -> SystemSpec:
    """100 kHz oscillator at 10 K, coupling 0.001 omega0, no qubit decay."""

    return SystemSpec(f0=1.0e5, f_lambda=100.0, temperature=10.0, mass=2.3e-16)


@pytest.fixture
def sensing_spec() -> SystemSpec:
    return SystemSpec(
        f0=1.0e5,
        f_lambda=100.0,
        quality_factor=1.0e9,
        qubit_t1=7.0e-3,
        qubit_t2=1.0e-4,
        mass=2.3e-16,
        temperature=300.0,
    )
