"""
Thermodynamic observables of a solved limit cycle.

Heats carry the working-medium sign: positive means energy flowed into the
medium. Entropy production uses the bath side, -q_hot/T_hot - q_cold/T_cold.
"""

import math
import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import DomainError, ResolutionError, StaleCycleError
from .limit_cycle import LimitCycle
from .propagators import isochore_generator, isochore_spec_for
from .working_medium import CycleParams

logger = logging.getLogger("otto.thermo")

REFRIGERATOR = "refrigerator"
SHORT_CIRCUIT = "short_circuit"
ENGINE = "engine"
OTHER = "other"

CONCAVE = "concave"
CONVEX = "convex"
INDETERMINATE = "indeterminate"

HEAT_ZERO_TOLERANCE = 1e-14
SINGULAR_RATE = 1e-9
MIN_PROFILE_POINTS = 5
FLAT_CURVATURE = 1e-10
FLAT_SLOPE = 1e-14

_SEGMENT_ALIASES = {"cold": "c", "hot": "h", "c": "c", "h": "h"}


@dataclass(frozen=True)
class Heats:
    q_cold: float
    q_hot: float
    work: float

    @property
    def residual(self) -> float:
        return self.q_cold + self.q_hot + self.work


@dataclass(frozen=True)
class CycleReport:
    tau_cycle: float
    q_cold: float
    q_hot: float
    work_per_cycle: float
    cooling_power: float
    entropy_production: float
    classification: str
    energy_coherence_ratio_at_A: float
    geometry: str
    lambda2: float


@dataclass(frozen=True)
class DynamicalTemperaturePoint:
    time: float
    t_dyn: float
    dt_dyn_dt: float
    singular: bool


def heats(lc: LimitCycle) -> Heats:
    """
    Heat from each bath over one cycle and the adiabat work, each from its own
    segment endpoints so that their sum is a real closure check.
    """
    e_a = lc.point("A").e_val
    e_b = lc.point("B").e_val
    e_c = lc.point("C").e_val
    e_d = lc.point("D").e_val
    e_a_next = lc.global_propagator.segments["hc"].apply(lc.point("D")).e_val

    result = Heats(q_cold=e_b - e_a, q_hot=e_d - e_c, work=(e_c - e_b) + (e_a_next - e_d))
    tolerance = 1e-9 * max(abs(result.q_cold), abs(result.q_hot)) + 1e-12 * max(1.0, abs(e_a))
    if abs(result.residual) > tolerance:
        raise StaleCycleError(f"first-law residual {result.residual:.3e} exceeds {tolerance:.3e}")
    return result


def entropy_production(q_cold: float, q_hot: float, params: CycleParams) -> float:
    """Delta S_u = (-q_hot)/T_hot + (-q_cold)/T_cold."""
    return -q_hot / params.t_hot - q_cold / params.t_cold


def classify_heats(q_cold: float, q_hot: float) -> str:
    cold_in, cold_out = q_cold > HEAT_ZERO_TOLERANCE, q_cold < -HEAT_ZERO_TOLERANCE
    hot_in, hot_out = q_hot > HEAT_ZERO_TOLERANCE, q_hot < -HEAT_ZERO_TOLERANCE
    if cold_in and hot_out:
        return REFRIGERATOR
    if cold_out and hot_out:
        return SHORT_CIRCUIT
    if hot_in and cold_out:
        return ENGINE
    return OTHER


def energy_coherence_ratio(lc: LimitCycle, at: str = "A") -> float:
    """Signed E / sqrt(L^2 + C^2); +-inf when the state carries no coherence."""
    state = lc.point(at)
    magnitude = math.hypot(state.l_val, state.c_val)
    if magnitude == 0.0:
        logger.debug(f"no coherence at point {at}: ratio is infinite")
        return math.copysign(math.inf, state.e_val)
    return state.e_val / magnitude


def dynamical_temperature_profile(lc: LimitCycle, segment: str) -> List[DynamicalTemperaturePoint]:
    """
    T_dyn = (dE/dt) / (dS_E/dt) along an isochore.

    dE/dt is the generator acting on the sampled state; dS_E/dt comes from
    second-order differences of the sampled energy entropy. Points where
    dS_E/dt is below 1e-9, changes sign against a neighbour, or gives a negative
    ratio are flagged singular and carry NaN.

    The populations relax with detailed balance, so dS_E/dt >= (dE/dt)/T_bath:
    heat flowing in gives 0 < T_dyn <= T_bath, heat flowing out gives
    T_dyn >= T_bath or a singular point. Near a cooling-power sign change dE/dt
    vanishes while dS_E/dt stays positive, which is where the flags appear.
    """
    name = _SEGMENT_ALIASES.get(segment)
    if name is None:
        raise DomainError(f"dynamical temperature needs an isochore, got {segment!r}")
    points = lc.segment_points(name)
    if len(points) < MIN_PROFILE_POINTS:
        raise ResolutionError(f"segment {name!r} has {len(points)} samples, need {MIN_PROFILE_POINTS}")

    g = isochore_generator(isochore_spec_for(lc.params, name), lc.global_propagator.flip_eeq_sign)
    times = np.array([p.time for p in points])
    energy_rate = np.array([(g @ p.state.as_array())[0] for p in points])
    entropy_rate = np.gradient(np.array([p.s_e for p in points]), times)

    signs = np.sign(entropy_rate)
    flips = np.zeros(len(points), dtype=bool)
    flips[1:] |= signs[1:] != signs[:-1]
    flips[:-1] |= signs[1:] != signs[:-1]
    singular = (np.abs(entropy_rate) < SINGULAR_RATE) | flips

    t_dyn = np.full(len(points), np.nan)
    t_dyn[~singular] = energy_rate[~singular] / entropy_rate[~singular]
    singular |= t_dyn < 0
    t_dyn[singular] = np.nan
    slope = np.gradient(t_dyn, times)

    return [
        DynamicalTemperaturePoint(float(t), float(v), float(s), bool(flag))
        for t, v, s, flag in zip(times, t_dyn, slope, singular)
    ]


def _curvature_vote(lc: LimitCycle, adiabat: str) -> Optional[str]:
    points = lc.segment_points(adiabat)
    if len(points) < 3:
        return None
    omega_inst = np.array([p.omega_inst for p in points])
    s_e = np.array([p.s_e for p in points])
    quadratic = np.polyfit(omega_inst, s_e, 2)[0]
    span = omega_inst.max() - omega_inst.min()
    if abs(quadratic) * span**2 < FLAT_CURVATURE:
        return None
    return CONCAVE if quadratic < 0 else CONVEX


def _coherence_vote(lc: LimitCycle, adiabat: str) -> Optional[str]:
    coherence = [p.coherence for p in lc.segment_points(adiabat)]
    if len(coherence) < 3:
        return None
    leaving = coherence[1] - coherence[0]
    arriving = coherence[-1] - coherence[-2]
    if abs(leaving) < FLAT_SLOPE or abs(arriving) < FLAT_SLOPE:
        return None
    if leaving > 0 and arriving < 0:
        return CONCAVE
    if leaving < 0 and arriving > 0:
        return CONVEX
    return None


def coherence_variation(lc: LimitCycle, adiabat: str = "ch") -> float:
    """Relative spread std/mean of the coherence measure along one adiabat; inf without coherence."""
    coherence = np.array([p.coherence for p in lc.segment_points(adiabat)])
    if len(coherence) < 3:
        raise ResolutionError(f"segment {adiabat!r} has {len(coherence)} samples, need 3")
    mean = coherence.mean()
    if mean == 0.0:
        return math.inf
    return float(coherence.std() / mean)


def classify_geometry(lc: LimitCycle, adiabat: str = "ch") -> str:
    """
    Shape of the cycle in the (Omega, S_E) plane, read off one adiabat.

    Two votes must agree: the sign of the fitted S_E(Omega) curvature and the
    coherence slopes leaving and approaching the isochores (rising then falling
    is concave, falling then rising is convex).
    """
    curvature = _curvature_vote(lc, adiabat)
    coherence = _coherence_vote(lc, adiabat)
    if curvature is not None and curvature == coherence:
        return curvature
    return INDETERMINATE


def report_cycle(lc: LimitCycle) -> CycleReport:
    h = heats(lc)
    params = lc.params
    classification = classify_heats(h.q_cold, h.q_hot)
    geometry = classify_geometry(lc) if lc.trajectory else INDETERMINATE
    logger.debug(f"tau={params.tau_cycle}: q_c={h.q_cold:.6e} q_h={h.q_hot:.6e} -> {classification}")
    return CycleReport(
        tau_cycle=params.tau_cycle,
        q_cold=h.q_cold,
        q_hot=h.q_hot,
        work_per_cycle=h.work,
        cooling_power=h.q_cold / params.tau_cycle,
        entropy_production=entropy_production(h.q_cold, h.q_hot, params),
        classification=classification,
        energy_coherence_ratio_at_A=energy_coherence_ratio(lc, "A"),
        geometry=geometry,
        lambda2=lc.lambda2,
    )
