"""
Global cycle propagator, limit cycle and sampled trajectory.

The cycle is anchored at point A, the start of the cold isochore:

    A --c--> B --ch--> C --h--> D --hc--> A'

so the one-cycle map is U_hc U_h U_ch U_c.
"""

import math
import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import DomainError, NumericError, SlowConvergenceError, StaleCycleError
from .propagators import (
    SegmentPropagator,
    adiabat_propagator,
    adiabat_spec_for,
    isochore_propagator,
    isochore_spec_for,
    segment_propagators,
)
from .working_medium import (
    CycleParams,
    StateVector,
    coherence_measure,
    energy_entropy,
    instantaneous_scale,
    reconstruct_density,
    von_neumann_entropy,
)

logger = logging.getLogger("otto.limit_cycle")

CYCLE_ORDER = ("c", "ch", "h", "hc")
POINT_LABELS = ("A", "B", "C", "D")
DEFAULT_SAMPLES_PER_SEGMENT = 200
MAX_DOUBLINGS = 40
ITERATION_TOLERANCE = 1e-12
AGREEMENT_TOLERANCE = 1e-6
CLOSURE_TOLERANCE = 1e-10
COMMUTATOR_TOLERANCE = 1e-12

# Zeroes L and C, the coherence coordinates.
DEPHASING = np.diag([1.0, 0.0, 0.0, 1.0, 1.0])


@dataclass(frozen=True)
class GlobalPropagator:
    matrix: np.ndarray
    segments: Dict[str, SegmentPropagator]
    params: CycleParams
    degenerate: bool = False
    dephase: bool = False
    flip_eeq_sign: bool = False
    anchor: str = "A"


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.eigenvalues)

    @property
    def phases(self) -> np.ndarray:
        return np.angle(self.eigenvalues)

    @property
    def lambda2(self) -> complex:
        return complex(self.eigenvalues[1])


@dataclass(frozen=True)
class CyclePoint:
    time: float
    segment: str
    omega: float
    omega_inst: float
    state: StateVector
    s_vn: float
    s_e: float
    coherence: float

    @property
    def entropy_gap(self) -> float:
        return self.s_e - self.s_vn


@dataclass(frozen=True)
class LimitCycle:
    params: CycleParams
    global_propagator: GlobalPropagator
    anchor: StateVector
    lambda2: float
    lambda2_phase: float
    cycles_iterated: int
    trajectory: Tuple[CyclePoint, ...]

    @property
    def gamma(self) -> float:
        """Approach rate -ln|lambda2| / tau_cycle."""
        if self.lambda2 == 0.0:
            return math.inf
        return -math.log(self.lambda2) / self.params.tau_cycle

    def point(self, label: str) -> StateVector:
        """State at corner A, B, C or D."""
        if label not in POINT_LABELS:
            raise DomainError(f"unknown cycle point {label!r}, expected one of {POINT_LABELS}")
        state = self.anchor
        for name, corner in zip(CYCLE_ORDER, POINT_LABELS):
            if corner == label:
                return state
            state = self.global_propagator.segments[name].apply(state)
        return state

    def segment_points(self, segment: str) -> List[CyclePoint]:
        return [p for p in self.trajectory if p.segment == segment]


def _commutes(a: SegmentPropagator, b: SegmentPropagator) -> bool:
    commutator = a.matrix @ b.matrix - b.matrix @ a.matrix
    scale = max(1.0, np.linalg.norm(a.matrix) * np.linalg.norm(b.matrix))
    return np.linalg.norm(commutator) < COMMUTATOR_TOLERANCE * scale


def assemble_global(params: CycleParams, dephase: bool = False, flip_eeq_sign: bool = False) -> GlobalPropagator:
    """
    Multiply the four segment propagators in cycle order.

    With `dephase` every segment is followed by the projector removing L and C.
    """
    segments = segment_propagators(params, flip_eeq_sign)
    if dephase:
        segments = {
            name: SegmentPropagator(DEPHASING @ seg.matrix, seg.kind, seg.duration) for name, seg in segments.items()
        }
    matrix = np.eye(5)
    for name in CYCLE_ORDER:
        matrix = segments[name].matrix @ matrix
    matrix[4, :] = (0.0, 0.0, 0.0, 0.0, 1.0)

    pairs = zip(CYCLE_ORDER, CYCLE_ORDER[1:] + CYCLE_ORDER[:1])
    degenerate = all(_commutes(segments[a], segments[b]) for a, b in pairs)
    if degenerate:
        logger.warning(f"all consecutive segments commute at tau={params.tau_cycle}: zero-power cycle")
    return GlobalPropagator(matrix, segments, params, degenerate, dephase, flip_eeq_sign)


def spectrum(g: GlobalPropagator) -> Spectrum:
    """Eigenvalues sorted by descending modulus."""
    try:
        values = np.linalg.eigvals(g.matrix)
    except np.linalg.LinAlgError as e:
        raise NumericError(f"eigensolver failed: {e}") from e
    # The unit eigenvalue leads even when other moduli tie with it (uncoupled baths).
    unit = int(np.argmin(np.abs(values - 1.0)))
    if abs(values[unit] - 1.0) > 1e-10:
        raise NumericError(f"no unit eigenvalue, closest is {values[unit]}")
    rest = np.delete(values, unit)
    rest = rest[np.argsort(-np.abs(rest), kind="stable")]
    if np.abs(rest[0]) > 1.0 + 1e-10:
        raise NumericError(f"eigenvalue {rest[0]} lies outside the unit circle")
    return Spectrum(np.concatenate(([values[unit]], rest)))


def invariant_vector(matrix: np.ndarray) -> StateVector:
    """Solve (I - M) v = m on the 4x4 block, with the identity coefficient fixed to 1."""
    block = np.eye(4) - matrix[:4, :4]
    drive = matrix[:4, 4]
    solution, *_ = np.linalg.lstsq(block, drive, rcond=None)
    return StateVector(*map(float, solution))


def iterate_to_fixed_point(
    matrix: np.ndarray, lambda2: float = float("nan"), start: Optional[StateVector] = None
) -> Tuple[StateVector, int]:
    """
    Propagate `start` (the maximally mixed state by default) for 1, 2, 4, ...
    cycles by repeated squaring until successive anchors agree.
    """
    initial = (start or StateVector.maximally_mixed()).as_array()
    power = np.array(matrix, dtype=float)
    previous = initial
    cycles = 1
    for _ in range(MAX_DOUBLINGS + 1):
        current = power @ initial
        current[4] = 1.0
        if np.max(np.abs(current - previous)) < ITERATION_TOLERANCE * max(1.0, np.max(np.abs(previous))):
            return StateVector.from_array(current), cycles
        previous = current
        power = power @ power
        power[4, :] = (0.0, 0.0, 0.0, 0.0, 1.0)
        cycles *= 2
    raise SlowConvergenceError(f"no fixed point after {cycles // 2} cycles", lambda2)


def _sample_segment(
    name: str, params: CycleParams, start: StateVector, t0: float, samples: int, flip_eeq_sign: bool
) -> List[CyclePoint]:
    j = params.j_coupling
    points = []
    if name in ("c", "h"):
        spec = isochore_spec_for(params, name)
        step = isochore_propagator(replace(spec, duration=spec.duration / samples), flip_eeq_sign)
        state = start
        for k in range(samples + 1):
            if k > 0:
                state = step.apply(state)
            points.append((t0 + spec.duration * k / samples, spec.omega, state))
    else:
        spec = adiabat_spec_for(params, name)
        for k in range(samples + 1):
            t = spec.duration * k / samples
            if k == 0:
                omega, state = spec.omega_start, start
            else:
                sub = spec.partial(t) if k < samples else spec
                omega, state = sub.omega_end, adiabat_propagator(sub).apply(start)
            points.append((t0 + t, omega, state))

    result = []
    for time, omega, state in points:
        omega_inst = instantaneous_scale(omega, j)
        rho = reconstruct_density(state, omega_inst)
        result.append(
            CyclePoint(
                time=time,
                segment=name,
                omega=omega,
                omega_inst=omega_inst,
                state=state,
                s_vn=von_neumann_entropy(rho),
                s_e=energy_entropy(rho),
                coherence=coherence_measure(state, omega_inst),
            )
        )
    return result


def trajectory(
    g: GlobalPropagator, anchor: StateVector, samples_per_segment: int = DEFAULT_SAMPLES_PER_SEGMENT
) -> Tuple[CyclePoint, ...]:
    """
    Sample one period from the anchor, samples_per_segment + 1 points per segment
    including both ends. Zero-duration segments contribute no samples.
    """
    if samples_per_segment < 1:
        raise DomainError("samples_per_segment must be at least 1")
    params = g.params
    durations = params.durations()
    points: List[CyclePoint] = []
    state, time = anchor, 0.0
    for name in CYCLE_ORDER:
        if durations[name] > 0:
            points.extend(_sample_segment(name, params, state, time, samples_per_segment, g.flip_eeq_sign))
        state = g.segments[name].apply(state)
        time += durations[name]

    drift = np.max(np.abs(state.as_array() - anchor.as_array()))
    if drift > CLOSURE_TOLERANCE * max(1.0, np.max(np.abs(anchor.as_array()))):
        raise StaleCycleError(f"trajectory misses its anchor by {drift:.3e}")
    return tuple(points)


def solve_limit_cycle(
    g: GlobalPropagator, samples_per_segment: Optional[int] = DEFAULT_SAMPLES_PER_SEGMENT
) -> LimitCycle:
    """
    Limit cycle as the unit-coefficient invariant vector of the global propagator,
    cross-checked against iteration from the maximally mixed state.
    Pass samples_per_segment=None to skip the trajectory.
    """
    spec = spectrum(g)
    lambda2 = float(abs(spec.lambda2))
    anchor = invariant_vector(g.matrix)
    iterated, cycles = iterate_to_fixed_point(g.matrix, lambda2)

    gap = np.max(np.abs(anchor.as_array() - iterated.as_array()))
    if gap > AGREEMENT_TOLERANCE * max(1.0, np.max(np.abs(anchor.as_array()))):
        raise NumericError(f"invariant vector and iteration disagree by {gap:.3e}")

    residual = np.max(np.abs(g.matrix @ anchor.as_array() - anchor.as_array()))
    if residual > CLOSURE_TOLERANCE * max(1.0, np.max(np.abs(anchor.as_array()))):
        raise StaleCycleError(f"anchor is not invariant, residual {residual:.3e}")

    logger.debug(f"tau={g.params.tau_cycle}: |lambda2|={lambda2:.12f}, converged after {cycles} cycles")
    points = () if samples_per_segment is None else trajectory(g, anchor, samples_per_segment)
    return LimitCycle(
        params=g.params,
        global_propagator=g,
        anchor=anchor,
        lambda2=lambda2,
        lambda2_phase=float(spec.phases[1]),
        cycles_iterated=cycles,
        trajectory=points,
    )
