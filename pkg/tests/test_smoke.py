"""Smoke tests: fixtures, bundled files and a first solved cycle."""

from pathlib import Path

import numpy as np
import yaml

from tests.conftest import REFERENCE_FRACTIONS


def test_fixtures_available(reference_params, reference_taus, rng):
    """The reference family fixtures describe cycle b."""
    assert reference_params.tau_cycle == reference_taus["b"]
    assert len(reference_taus) == 12
    assert isinstance(rng, np.random.Generator)


def test_bundled_preset_matches_fixture(reference_params):
    """The shipped preset carries the same family as the test fixtures."""
    project_root = Path(__file__).parent.parent
    preset = yaml.safe_load((project_root / "src" / "presets" / "coupled_spin.yaml").read_text(encoding="utf-8"))
    params = preset["params"]
    assert tuple(params["fractions"][k] for k in ("hc", "c", "ch", "h")) == REFERENCE_FRACTIONS
    assert params["omega_cold"] == reference_params.omega_cold
    assert params["k_down_hot"] == reference_params.k_down_hot
    assert params["tau_cycle"] == reference_params.tau_cycle


def test_project_structure():
    """Test that the project structure is as expected."""
    project_root = Path(__file__).parent.parent

    assert (project_root / "src" / "main.py").exists()
    assert (project_root / "src" / "flow.py").exists()
    assert (project_root / "requirements.txt").exists()
    assert (project_root / "src" / "utils").is_dir()
    assert (project_root / "tests" / "fixtures" / "configs").is_dir()
    assert (project_root / "pytest.ini").exists()


def test_first_cycle(reference_params):
    """The preset cycle solves and refrigerates."""
    from src.utils.limit_cycle import assemble_global, solve_limit_cycle
    from src.utils.thermo import REFRIGERATOR, report_cycle

    lc = solve_limit_cycle(assemble_global(reference_params), samples_per_segment=None)
    assert report_cycle(lc).classification == REFRIGERATOR


def test_package_imports():
    """Every module imports without side effects."""
    from src import __version__
    from src.flow import create_main_flow
    from src.utils import atlas, config, export, limit_cycle, ode_oracle, propagators, thermo, validate

    assert __version__
    assert create_main_flow() is not None
    assert all(m is not None for m in (atlas, config, export, limit_cycle, ode_oracle, propagators, thermo, validate))
