"""
Direct integration of the segment equations of motion.

Ground truth for the closed-form propagators: isochores integrate the constant
generator, adiabats integrate the time-dependent system along the explicit
constant-mu field schedule omega(t).
"""

import math
import logging
from typing import Union

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, IntegratorError
from .propagators import AdiabatSpec, IsochoreSpec, isochore_generator
from .working_medium import StateVector

logger = logging.getLogger("otto.ode_oracle")

DEFAULT_RTOL = 1e-12
DEFAULT_ATOL = 1e-12


def _adiabat_rhs(spec: AdiabatSpec):
    j = spec.j_coupling
    u_start = spec.u_start
    u_rate = (spec.u_end - spec.u_start) / spec.duration
    mu = spec.mu

    def rhs(t, y):
        u = u_start + u_rate * t
        omega_inst = j / math.sqrt(1.0 - u * u)
        log_rate = u * u_rate / (1.0 - u * u)
        e, l_, c, d = y
        return [
            log_rate * e - mu * omega_inst * l_,
            mu * omega_inst * e + log_rate * l_ - omega_inst * c,
            omega_inst * l_ + log_rate * c,
            log_rate * d,
        ]

    return rhs


def _quench_rhs(spec: AdiabatSpec):
    """Field-parametrised form, finite for a sudden quench (kappa = 0)."""
    j = spec.j_coupling
    kappa = spec.kappa

    def rhs(u, y):
        omega_ratio = 1.0 / math.sqrt(1.0 - u * u)
        log_rate = u / (1.0 - u * u)
        e, l_, c, d = y
        return [
            log_rate * e - omega_ratio * l_,
            omega_ratio * e + log_rate * l_ - kappa * omega_ratio * c,
            kappa * omega_ratio * l_ + log_rate * c,
            log_rate * d,
        ]

    return rhs


def _integrate(rhs, span, y0, rtol, atol) -> np.ndarray:
    sol = solve_ivp(rhs, span, y0, method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise IntegratorError(f"integration over {span} failed: {sol.message}")
    result = sol.y[:, -1]
    if not np.all(np.isfinite(result)):
        raise IntegratorError(f"integration over {span} produced non-finite values")
    return result


def ode_oracle(
    segment: Union[IsochoreSpec, AdiabatSpec],
    initial: StateVector,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> StateVector:
    """
    Integrate (E, L, C, D) across one segment with an adaptive 8th-order method.

    Zero-duration isochores return `initial` unchanged. A zero-duration adiabat
    between distinct fields is a sudden quench and is integrated in omega/Omega
    instead of time.
    """
    y0 = initial.as_array()[:4]
    if isinstance(segment, IsochoreSpec):
        if segment.duration == 0:
            return initial
        g = isochore_generator(segment)
        block, drive = g[:4, :4], g[:4, 4]
        result = _integrate(lambda t, y: block @ y + drive, (0.0, segment.duration), y0, rtol, atol)
    elif isinstance(segment, AdiabatSpec):
        if segment.duration == 0:
            span = (segment.u_start, segment.u_end)
            result = _integrate(_quench_rhs(segment), span, y0, rtol, atol)
        else:
            result = _integrate(_adiabat_rhs(segment), (0.0, segment.duration), y0, rtol, atol)
    else:
        raise DomainError(f"unsupported segment type {type(segment).__name__}")
    logger.debug(f"oracle integrated {type(segment).__name__} of duration {segment.duration}")
    return StateVector(*map(float, result))
