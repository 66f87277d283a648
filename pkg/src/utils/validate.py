"""
Self-checks run by validate mode.

Each check takes the run configuration and returns a CheckResult whose status
is "pass", "fail" or "n/a". Checks never raise on a physics mismatch; the
flow's fallback turns unexpected exceptions into failures.
"""

import math
import logging
from dataclasses import dataclass, replace
from typing import Callable, Dict

import numpy as np

from .config import RunConfig
from .limit_cycle import assemble_global, solve_limit_cycle
from .ode_oracle import ode_oracle
from .propagators import (
    adiabat_propagator,
    adiabat_spec_for,
    find_quantization_duration,
    isochore_propagator,
    isochore_spec_for,
    isochore_stationary_state,
    quantization_time,
)
from .thermo import entropy_production, heats
from .working_medium import StateVector, gibbs_expectations

logger = logging.getLogger("otto.validate")

PASS = "pass"
FAIL = "fail"
NOT_APPLICABLE = "n/a"

ORACLE_TOLERANCE = 1e-8
GIBBS_TOLERANCE = 1e-9
QUANTIZATION_TOLERANCE = 1e-6
SECOND_LAW_SLACK = 1e-9


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status != FAIL


def _probe_state(config: RunConfig, omega: float) -> StateVector:
    """Gibbs state at the hot bath temperature with L and C switched on."""
    base = gibbs_expectations(omega, config.params.j_coupling, config.params.t_hot)
    return replace(base, l_val=0.3 * abs(base.e_val), c_val=-0.2 * abs(base.e_val))


def _compare(name: str, expected: np.ndarray, actual: np.ndarray, tolerance: float) -> CheckResult:
    error = float(np.max(np.abs(expected - actual)))
    status = PASS if error < tolerance else FAIL
    return CheckResult(name, status, f"max deviation {error:.3e} (tolerance {tolerance:.0e})")


def check_isochore_oracle(config: RunConfig, segment: str) -> CheckResult:
    spec = isochore_spec_for(config.params, segment)
    start = _probe_state(config, spec.omega)
    closed = isochore_propagator(spec, config.flip_eeq_sign).apply(start)
    integrated = ode_oracle(spec, start)
    return _compare(f"oracle_isochore_{segment}", integrated.as_array(), closed.as_array(), ORACLE_TOLERANCE)


def check_adiabat_oracle(config: RunConfig, segment: str) -> CheckResult:
    spec = adiabat_spec_for(config.params, segment)
    start = _probe_state(config, spec.omega_start)
    closed = adiabat_propagator(spec).apply(start)
    integrated = ode_oracle(spec, start)
    return _compare(f"oracle_adiabat_{segment}", integrated.as_array(), closed.as_array(), ORACLE_TOLERANCE)


def check_gibbs_fixed_point(config: RunConfig, segment: str) -> CheckResult:
    """The isochore's stationary state must be the Gibbs state of its bath."""
    name = f"gibbs_fixed_point_{segment}"
    spec = isochore_spec_for(config.params, segment)
    if spec.gamma == 0:
        return CheckResult(name, NOT_APPLICABLE, "isochore is decoupled from its bath")
    stationary = isochore_stationary_state(spec, config.flip_eeq_sign)
    gibbs = gibbs_expectations(spec.omega, spec.j_coupling, spec.bath_temp)
    scale = max(1.0, abs(gibbs.e_val))
    return _compare(name, gibbs.as_array(), stationary.as_array(), GIBBS_TOLERANCE * scale)


def check_quantization(config: RunConfig) -> CheckResult:
    closed = quantization_time(config.params, 0.5)
    found = find_quantization_duration(config.params, 0.5)
    return _compare("quantization_half", np.array([closed]), np.array([found]), QUANTIZATION_TOLERANCE)


def check_laws(config: RunConfig) -> CheckResult:
    """First-law closure is enforced inside heats(); the second law is checked here."""
    g = assemble_global(config.params, config.dephase, config.flip_eeq_sign)
    lc = solve_limit_cycle(g, samples_per_segment=None)
    h = heats(lc)
    produced = entropy_production(h.q_cold, h.q_hot, config.params)
    detail = f"residual {h.residual:.3e}, entropy production {produced:.6e}"
    status = PASS if produced >= -SECOND_LAW_SLACK and math.isfinite(produced) else FAIL
    return CheckResult("thermodynamic_laws", status, detail)


VALIDATION_CHECKS: Dict[str, Callable[[RunConfig], CheckResult]] = {
    "oracle_isochore_c": lambda config: check_isochore_oracle(config, "c"),
    "oracle_isochore_h": lambda config: check_isochore_oracle(config, "h"),
    "oracle_adiabat_ch": lambda config: check_adiabat_oracle(config, "ch"),
    "oracle_adiabat_hc": lambda config: check_adiabat_oracle(config, "hc"),
    "gibbs_fixed_point_c": lambda config: check_gibbs_fixed_point(config, "c"),
    "gibbs_fixed_point_h": lambda config: check_gibbs_fixed_point(config, "h"),
    "quantization_half": check_quantization,
    "thermodynamic_laws": check_laws,
}


def run_check(name: str, config: RunConfig) -> CheckResult:
    result = VALIDATION_CHECKS[name](config)
    logger.info(f"{result.name}: {result.status} {result.detail}")
    return result
