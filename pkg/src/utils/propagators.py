"""
Exact 5x5 segment propagators on the operator basis (H, L, C, D, I).

Isochores are exponentials of a constant generator. Adiabats at constant
adiabatic parameter mu = J omega_dot / Omega^3 are rotations of the scaled
vector (E, L, C) / Omega through the angle q theta, followed by the overall
Omega_end / Omega_start rescaling.
"""

import math
import logging
from dataclasses import dataclass, replace
from typing import Dict

import numpy as np
import scipy.linalg
from scipy.optimize import brentq

from .errors import DomainError, NumericError
from .working_medium import CycleParams, StateVector, equilibrium_energy, instantaneous_scale

logger = logging.getLogger("otto.propagators")

EIG_CONDITION_LIMIT = 1e8
ISOCHORE = "isochore"
ADIABAT = "adiabat"


def matrix_exponential(generator: np.ndarray, t: float = 1.0) -> np.ndarray:
    """
    exp(t * generator) for a real square matrix.

    Uses the eigendecomposition when the eigenvector matrix has condition number
    below 1e8, otherwise scipy's scaling-and-squaring Pade approximant.
    """
    a = np.asarray(generator, dtype=float) * t
    if not np.all(np.isfinite(a)):
        raise NumericError("generator has non-finite entries")
    try:
        w, v = np.linalg.eig(a)
        if np.linalg.cond(v) < EIG_CONDITION_LIMIT:
            result = (v * np.exp(w)) @ np.linalg.inv(v)
            if np.all(np.isfinite(result)):
                return result.real
    except np.linalg.LinAlgError:
        logger.debug("eigendecomposition failed, falling back to Pade")
    result = scipy.linalg.expm(a)
    if not np.all(np.isfinite(result)):
        raise NumericError("matrix exponential did not converge")
    return result


@dataclass(frozen=True)
class IsochoreSpec:
    omega: float
    bath_temp: float
    k_down: float
    duration: float
    j_coupling: float

    def __post_init__(self):
        if not (self.omega > 0 and self.bath_temp > 0 and self.j_coupling > 0):
            raise DomainError("isochore needs positive omega, bath temperature and coupling")
        if self.k_down < 0 or self.duration < 0 or not math.isfinite(self.duration):
            raise DomainError("isochore needs non-negative rate and finite non-negative duration")

    @property
    def omega_inst(self) -> float:
        return instantaneous_scale(self.omega, self.j_coupling)

    @property
    def k_up(self) -> float:
        return self.k_down * math.exp(-self.omega_inst / self.bath_temp)

    @property
    def gamma(self) -> float:
        return self.k_down + self.k_up

    @property
    def e_eq(self) -> float:
        return equilibrium_energy(self.omega_inst, self.bath_temp)

    @property
    def d_eq(self) -> float:
        return self.e_eq**2 / self.omega_inst


@dataclass(frozen=True)
class AdiabatSpec:
    omega_start: float
    omega_end: float
    duration: float
    j_coupling: float

    def __post_init__(self):
        if not (self.omega_start > 0 and self.omega_end > 0 and self.j_coupling > 0):
            raise DomainError("adiabat needs positive fields and coupling")
        if self.duration < 0 or not math.isfinite(self.duration):
            raise DomainError("adiabat duration must be finite and non-negative")
        if self.omega_start == self.omega_end:
            raise DomainError("zero-length adiabat: request identity_propagator explicitly")

    @property
    def omega_inst_start(self) -> float:
        return instantaneous_scale(self.omega_start, self.j_coupling)

    @property
    def omega_inst_end(self) -> float:
        return instantaneous_scale(self.omega_end, self.j_coupling)

    @property
    def u_start(self) -> float:
        return self.omega_start / self.omega_inst_start

    @property
    def u_end(self) -> float:
        return self.omega_end / self.omega_inst_end

    @property
    def k_bar(self) -> float:
        """Signed (1/J)(omega_end/Omega_end - omega_start/Omega_start)."""
        return (self.u_end - self.u_start) / self.j_coupling

    @property
    def phi(self) -> float:
        return math.asin(self.u_end) - math.asin(self.u_start)

    @property
    def kappa(self) -> float:
        """1/mu = duration / K_bar; zero for a sudden quench."""
        return self.duration / self.k_bar

    @property
    def mu(self) -> float:
        return math.inf if self.duration == 0 else self.k_bar / self.duration

    @property
    def theta(self) -> float:
        return self.phi * self.kappa

    @property
    def q(self) -> float:
        return math.inf if self.duration == 0 else math.sqrt(1.0 + self.mu**2)

    @property
    def rotation_angle(self) -> float:
        """q theta, the angle swept by the scaled (E, L, C) vector."""
        return abs(self.phi) * math.sqrt(1.0 + self.kappa**2)

    @property
    def rotation_axis(self) -> np.ndarray:
        axis = np.array([self.kappa, 0.0, 1.0]) * math.copysign(1.0, self.phi)
        return axis / np.linalg.norm(axis)

    def omega_at(self, t: float) -> float:
        """Field at time t of the constant-mu schedule (omega/Omega is linear in t)."""
        if self.duration == 0:
            return self.omega_end
        u = self.u_start + (self.u_end - self.u_start) * (t / self.duration)
        return self.j_coupling * u / math.sqrt(1.0 - u * u)

    def partial(self, t: float) -> "AdiabatSpec":
        """The first t time units of this adiabat (same mu)."""
        return replace(self, omega_end=self.omega_at(t), duration=t)


@dataclass(frozen=True)
class SegmentPropagator:
    matrix: np.ndarray
    kind: str
    duration: float

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        if matrix.shape != (5, 5):
            raise DomainError(f"propagator must be 5x5, got {matrix.shape}")
        # Identity row is structural; pin it against round-off.
        matrix[4, :] = (0.0, 0.0, 0.0, 0.0, 1.0)
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    def apply(self, state: StateVector) -> StateVector:
        return StateVector.from_array(self.matrix @ state.as_array())

    def then(self, other: "SegmentPropagator") -> "SegmentPropagator":
        """This segment followed by `other`."""
        return SegmentPropagator(other.matrix @ self.matrix, "composite", self.duration + other.duration)


def identity_propagator(kind: str = ISOCHORE, duration: float = 0.0) -> SegmentPropagator:
    return SegmentPropagator(np.eye(5), kind, duration)


def isochore_generator(spec: IsochoreSpec, flip_eeq_sign: bool = False) -> np.ndarray:
    """
    Heisenberg generator on an isochore.

    The D row carries the factor Gamma so that D relaxes to E_eq^2/Omega,
    the Gibbs value. `flip_eeq_sign` corrupts E_eq for harness self-tests.
    """
    gamma, omega_inst = spec.gamma, spec.omega_inst
    e_eq = -spec.e_eq if flip_eeq_sign else spec.e_eq
    g = np.zeros((5, 5))
    g[0, 0] = -gamma
    g[0, 4] = gamma * e_eq
    g[1, 1] = -gamma
    g[1, 2] = -omega_inst
    g[2, 1] = omega_inst
    g[2, 2] = -gamma
    g[3, 0] = 2.0 * gamma * e_eq / omega_inst
    g[3, 3] = -2.0 * gamma
    return g


def isochore_stationary_state(spec: IsochoreSpec, flip_eeq_sign: bool = False) -> StateVector:
    """Null vector of the isochore generator with unit identity coefficient."""
    if spec.gamma == 0:
        raise DomainError("uncoupled isochore has no unique stationary state")
    g = isochore_generator(spec, flip_eeq_sign)
    x = np.linalg.solve(g[:4, :4], -g[:4, 4])
    return StateVector(*map(float, x))


def isochore_propagator(spec: IsochoreSpec, flip_eeq_sign: bool = False) -> SegmentPropagator:
    if spec.duration == 0:
        return identity_propagator(ISOCHORE)
    matrix = matrix_exponential(isochore_generator(spec, flip_eeq_sign), spec.duration)
    return SegmentPropagator(matrix, ISOCHORE, spec.duration)


def adiabat_rotation_generator(spec: AdiabatSpec) -> np.ndarray:
    """theta * G(mu) written as Phi * [[0,-1,0],[1,0,-1/mu],[0,1/mu,0]]."""
    k = spec.kappa
    return spec.phi * np.array([[0.0, -1.0, 0.0], [1.0, 0.0, -k], [0.0, k, 0.0]])


def adiabat_propagator(spec: AdiabatSpec) -> SegmentPropagator:
    rotation = scipy.linalg.expm(adiabat_rotation_generator(spec))
    scale = spec.omega_inst_end / spec.omega_inst_start
    matrix = np.eye(5)
    matrix[:3, :3] = scale * rotation
    matrix[3, 3] = scale
    return SegmentPropagator(matrix, ADIABAT, spec.duration)


def rotation_angle(propagator: SegmentPropagator, axis: np.ndarray) -> float:
    """
    Signed rotation angle in (-pi, pi] of an adiabat propagator about `axis`,
    read off the matrix after removing the Omega rescaling.
    """
    m = propagator.matrix
    rotation = m[:3, :3] / m[3, 3]
    cos_angle = 0.5 * (np.trace(rotation) - 1.0)
    vee = 0.5 * np.array(
        [
            rotation[2, 1] - rotation[1, 2],
            rotation[0, 2] - rotation[2, 0],
            rotation[1, 0] - rotation[0, 1],
        ]
    )
    return math.atan2(float(vee @ axis), float(cos_angle))


#############################################
# Cycle segments
#############################################
def isochore_spec_for(params: CycleParams, segment: str) -> IsochoreSpec:
    durations = params.durations()
    if segment == "c":
        return IsochoreSpec(params.omega_cold, params.t_cold, params.k_down_cold, durations["c"], params.j_coupling)
    if segment == "h":
        return IsochoreSpec(params.omega_hot, params.t_hot, params.k_down_hot, durations["h"], params.j_coupling)
    raise DomainError(f"unknown isochore segment {segment!r}")


def adiabat_spec_for(params: CycleParams, segment: str) -> AdiabatSpec:
    durations = params.durations()
    if segment == "ch":
        return AdiabatSpec(params.omega_cold, params.omega_hot, durations["ch"], params.j_coupling)
    if segment == "hc":
        return AdiabatSpec(params.omega_hot, params.omega_cold, durations["hc"], params.j_coupling)
    raise DomainError(f"unknown adiabat segment {segment!r}")


def segment_propagators(params: CycleParams, flip_eeq_sign: bool = False) -> Dict[str, SegmentPropagator]:
    return {
        "c": isochore_propagator(isochore_spec_for(params, "c"), flip_eeq_sign),
        "ch": adiabat_propagator(adiabat_spec_for(params, "ch")),
        "h": isochore_propagator(isochore_spec_for(params, "h"), flip_eeq_sign),
        "hc": adiabat_propagator(adiabat_spec_for(params, "hc")),
    }


#############################################
# Quantization condition
#############################################
def _quantization_constants(params: CycleParams):
    u_c = params.omega_cold / params.omega_inst_cold
    u_h = params.omega_hot / params.omega_inst_hot
    k_bar = abs(u_c - u_h) / params.j_coupling
    phi = abs(math.asin(u_c) - math.asin(u_h))
    return k_bar, phi


def quantization_time(params: CycleParams, l: float) -> float:
    """Adiabat duration at which q theta = 2 pi l."""
    k_bar, phi = _quantization_constants(params)
    if 2.0 * math.pi * l <= phi:
        raise DomainError(f"2*pi*l = {2 * math.pi * l:.6f} must exceed Phi = {phi:.6f}")
    return k_bar * math.sqrt((2.0 * math.pi * l / phi) ** 2 - 1.0)


def find_quantization_duration(params: CycleParams, l: float, tau_max: float = None, grid: int = 400) -> float:
    """
    Root-find the adiabat duration where the compression propagator's own
    rotation angle reaches 2 pi l, scanning for a bracket first.
    """
    target = 2.0 * math.pi * l
    if tau_max is None:
        tau_max = 2.0 * quantization_time(params, l) + 1.0

    def spec_at(tau: float) -> AdiabatSpec:
        return AdiabatSpec(params.omega_cold, params.omega_hot, tau, params.j_coupling)

    def angle(tau: float) -> float:
        spec = spec_at(tau)
        return rotation_angle(adiabat_propagator(spec), spec.rotation_axis)

    taus = np.linspace(0.0, tau_max, grid + 1)
    unwrapped = np.unwrap([angle(t) for t in taus])
    crossings = np.nonzero(np.diff(np.sign(unwrapped - target)))[0]
    if len(crossings) == 0:
        raise DomainError(f"no duration in [0, {tau_max}] reaches rotation angle {target:.6f}")
    i = int(crossings[0])

    def offset(tau: float) -> float:
        return math.remainder(angle(tau) - target, 2.0 * math.pi)

    return brentq(offset, taus[i], taus[i + 1], xtol=1e-14, rtol=1e-14)


if __name__ == "__main__":
    reference = CycleParams(1.25, 4.0, 3.6, 11.0, 6.5, 0.36, 0.0656, 0.96527, (0.482767, 0.034001, 0.482767, 0.000465))
    for l in (0.5, 1.0, 1.5):
        print(f"l={l}: closed form {quantization_time(reference, l):.9f}, root-find {find_quantization_duration(reference, l):.9f}")
