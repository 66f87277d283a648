import pytest
import numpy as np
import tempfile
from pathlib import Path

from src.utils.working_medium import CycleParams

FIXTURES = Path(__file__).parent / "fixtures"

REFERENCE_FRACTIONS = (0.48277, 0.0340, 0.48277, 0.000466)

# Cycle times a..l of the published family, longest first.
REFERENCE_TAUS = {
    "a": 1.013534,
    "b": 0.96527,
    "c": 0.912180,
    "d": 0.868743,
    "e": 0.81683,
    "f": 0.772216,
    "g": 0.735444,
    "h": 0.700423,
    "i": 0.482635,
    "j": 0.36197625,
    "k": 0.2413175,
    "l": 0.12065875,
}

REFERENCE_COOLING = {
    "a": 1.57e-4,
    "b": 1.445e-4,
    "c": 1.133e-4,
    "d": 4.142e-5,
    "e": -5.43e-4,
    "f": -8.2e-3,
    "g": -1.93e-3,
    "h": -3.47e-4,
    "i": 1.29e-4,
    "j": 1.45e-4,
    "k": 1.513e-4,
    "l": 1.541e-4,
}


def make_params(tau_cycle=0.96527, **changes):
    total = sum(REFERENCE_FRACTIONS)
    values = dict(
        j_coupling=1.25,
        t_hot=4.0,
        t_cold=3.6,
        omega_hot=11.0,
        omega_cold=6.5,
        k_down_hot=0.36,
        k_down_cold=0.0656,
        tau_cycle=tau_cycle,
        fractions=tuple(f / total for f in REFERENCE_FRACTIONS),
    )
    values.update(changes)
    return CycleParams(**values)


@pytest.fixture
def reference_params():
    """Published coupled-spin family at cycle time b."""
    return make_params()


@pytest.fixture
def reference_taus():
    return dict(REFERENCE_TAUS)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def temp_working_dir():
    """Create a temporary working directory for tests."""
    with tempfile.TemporaryDirectory() as temp_dir:
        yield temp_dir


@pytest.fixture
def config_fixture():
    """Path of a YAML config under tests/fixtures/configs."""

    def resolve(name: str) -> str:
        return str(FIXTURES / "configs" / name)

    return resolve
