"""
Cycle-time sweeps at fixed time allocation.

Every grid point is solved independently. Transitions are sign changes of
the cooling power, refined by bisection on freshly solved cycles.
"""

import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import bisect

from .errors import DomainError, OttoError
from .limit_cycle import DEFAULT_SAMPLES_PER_SEGMENT, assemble_global, solve_limit_cycle
from .propagators import quantization_time
from .thermo import CONCAVE, CONVEX, SHORT_CIRCUIT, heats, report_cycle
from .working_medium import CycleParams, StateVector

logger = logging.getLogger("otto.atlas")

DEFAULT_LANDMARKS = (0.5, 1.0, 1.5)
DEFAULT_GRID = (1e-3, 1.2, 200, "log")
REFINE_RTOL = 1e-4
ERROR_CLASS = "error"


@dataclass(frozen=True)
class SweepSpec:
    base: CycleParams
    taus: Tuple[float, ...]
    landmarks: Tuple[float, ...] = DEFAULT_LANDMARKS
    samples_per_segment: int = DEFAULT_SAMPLES_PER_SEGMENT
    dephase: bool = False
    flip_eeq_sign: bool = False

    def __post_init__(self):
        taus = tuple(float(t) for t in self.taus)
        object.__setattr__(self, "taus", taus)
        if any(not (math.isfinite(t) and t > 0) for t in taus):
            raise DomainError("every cycle time in the grid must be finite and positive")
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise DomainError("cycle-time grid must be strictly increasing")

    @classmethod
    def from_range(
        cls, base: CycleParams, tau_min: float, tau_max: float, count: int, spacing: str = "log", **kwargs
    ) -> "SweepSpec":
        if count < 1:
            raise DomainError("grid needs at least one point")
        if not 0 < tau_min <= tau_max:
            raise DomainError(f"need 0 < tau_min <= tau_max, got ({tau_min}, {tau_max})")
        if spacing == "log":
            grid = np.geomspace(tau_min, tau_max, count)
        elif spacing == "linear":
            grid = np.linspace(tau_min, tau_max, count)
        else:
            raise DomainError(f"unknown grid spacing {spacing!r}")
        return cls(base, tuple(float(t) for t in grid), **kwargs)


@dataclass(frozen=True)
class SweepRecord:
    tau_cycle: float
    cooling_power: float
    entropy_production: float
    lambda2_modulus: float
    classification: str
    geometry: str
    energy_coherence_ratio_at_A: float
    q_cold: float = math.nan
    q_hot: float = math.nan
    work_per_cycle: float = math.nan
    anchor: Optional[StateVector] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class Transition:
    tau_lo: float
    tau_hi: float
    tau_star: float
    from_class: str
    to_class: str


@dataclass(frozen=True)
class Landmark:
    l: float
    tau_adiabat: float
    tau_cycle: float
    in_short_circuit_window: Optional[bool] = None


@dataclass(frozen=True)
class TransitionReport:
    transitions: Tuple[Transition, ...] = ()
    short_circuit_windows: Tuple[Tuple[float, float], ...] = ()
    entropy_max_tau: Optional[float] = None
    cooling_min_tau: Optional[float] = None
    ratio_min_tau: Optional[float] = None
    entropy_max_in_window: Optional[bool] = None
    geometry_flip_tau: Optional[float] = None
    flip_to_half_landmark: Optional[float] = None
    landmarks: Tuple[Landmark, ...] = field(default_factory=tuple)


def solve_point(
    params: CycleParams,
    samples_per_segment: Optional[int] = DEFAULT_SAMPLES_PER_SEGMENT,
    dephase: bool = False,
    flip_eeq_sign: bool = False,
) -> SweepRecord:
    """Assemble, solve and report one cycle; solver failures land in the record."""
    try:
        lc = solve_limit_cycle(assemble_global(params, dephase, flip_eeq_sign), samples_per_segment)
        report = report_cycle(lc)
    except OttoError as e:
        logger.warning(f"tau={params.tau_cycle}: {type(e).__name__}: {e}")
        nan = math.nan
        return SweepRecord(params.tau_cycle, nan, nan, nan, ERROR_CLASS, ERROR_CLASS, nan, error=str(e))
    return SweepRecord(
        tau_cycle=params.tau_cycle,
        cooling_power=report.cooling_power,
        entropy_production=report.entropy_production,
        lambda2_modulus=report.lambda2,
        classification=report.classification,
        geometry=report.geometry,
        energy_coherence_ratio_at_A=report.energy_coherence_ratio_at_A,
        q_cold=report.q_cold,
        q_hot=report.q_hot,
        work_per_cycle=report.work_per_cycle,
        anchor=lc.anchor,
    )


def run_sweep(spec: SweepSpec, workers: int = 1) -> List[SweepRecord]:
    """Solve every grid point; output order follows the grid whatever the worker count."""

    def solve(tau: float) -> SweepRecord:
        return solve_point(spec.base.with_tau(tau), spec.samples_per_segment, spec.dephase, spec.flip_eeq_sign)

    logger.info(f"sweeping {len(spec.taus)} cycle times with {max(1, workers)} worker(s)")
    if workers <= 1:
        return [solve(tau) for tau in spec.taus]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(solve, spec.taus))


def cooling_power_at(spec: SweepSpec, tau: float) -> float:
    """Cooling power of a freshly solved cycle, no trajectory sampling."""
    params = spec.base.with_tau(tau)
    lc = solve_limit_cycle(assemble_global(params, spec.dephase, spec.flip_eeq_sign), None)
    return heats(lc).q_cold / tau


def find_brackets(records: Sequence[SweepRecord]) -> List[Tuple[SweepRecord, SweepRecord]]:
    valid = [r for r in records if r.ok]
    return [
        (a, b)
        for a, b in zip(valid, valid[1:])
        if a.cooling_power != 0 and b.cooling_power != 0 and np.sign(a.cooling_power) != np.sign(b.cooling_power)
    ]


def refine_transition(spec: SweepSpec, lower: SweepRecord, upper: SweepRecord, rtol: float = REFINE_RTOL) -> Transition:
    tau_star = bisect(lambda tau: cooling_power_at(spec, tau), lower.tau_cycle, upper.tau_cycle, rtol=rtol)
    logger.info(f"transition {lower.classification} -> {upper.classification} at tau* = {tau_star:.6f}")
    return Transition(lower.tau_cycle, upper.tau_cycle, float(tau_star), lower.classification, upper.classification)


def landmark_times(
    params: CycleParams, ls: Sequence[float], windows: Sequence[Tuple[float, float]] = ()
) -> List[Landmark]:
    """Adiabat duration of each quantization landmark and the cycle time giving the expansion that duration."""
    f_hc = params.fractions[0]
    landmarks = []
    for l in ls:
        tau_a = quantization_time(params, l)
        tau_cycle = tau_a / f_hc
        inside = any(lo <= tau_cycle <= hi for lo, hi in windows) if windows else None
        landmarks.append(Landmark(float(l), tau_a, tau_cycle, inside))
    return landmarks


def _short_circuit_windows(records: Sequence[SweepRecord], transitions: Sequence[Transition]):
    valid = [r for r in records if r.ok]
    crossing = {(t.tau_lo, t.tau_hi): t.tau_star for t in transitions}
    windows = []
    i = 0
    while i < len(valid):
        if valid[i].classification != SHORT_CIRCUIT:
            i += 1
            continue
        j = i
        while j + 1 < len(valid) and valid[j + 1].classification == SHORT_CIRCUIT:
            j += 1
        lo = crossing.get((valid[i - 1].tau_cycle, valid[i].tau_cycle), valid[i].tau_cycle) if i > 0 else valid[i].tau_cycle
        hi = (
            crossing.get((valid[j].tau_cycle, valid[j + 1].tau_cycle), valid[j].tau_cycle)
            if j + 1 < len(valid)
            else valid[j].tau_cycle
        )
        windows.append((lo, hi))
        i = j + 1
    return windows


def _geometry_flip(records: Sequence[SweepRecord]) -> Optional[float]:
    shaped = [r for r in records if r.ok and r.geometry in (CONCAVE, CONVEX)]
    for a, b in zip(shaped, shaped[1:]):
        if a.geometry != b.geometry:
            return 0.5 * (a.tau_cycle + b.tau_cycle)
    return None


def summarize_transitions(
    spec: SweepSpec, records: Sequence[SweepRecord], transitions: Sequence[Transition]
) -> TransitionReport:
    """Windows, extrema and landmarks around already refined transitions."""
    valid = [r for r in records if r.ok]
    windows = _short_circuit_windows(records, transitions)
    entropy_max_tau = cooling_min_tau = ratio_min_tau = None
    if valid:
        entropy_max_tau = max(valid, key=lambda r: r.entropy_production).tau_cycle
        cooling_min_tau = min(valid, key=lambda r: r.cooling_power).tau_cycle
        finite = [r for r in valid if math.isfinite(r.energy_coherence_ratio_at_A)]
        if finite:
            ratio_min_tau = min(finite, key=lambda r: abs(r.energy_coherence_ratio_at_A)).tau_cycle
    entropy_in_window = None
    if windows and entropy_max_tau is not None:
        entropy_in_window = any(lo <= entropy_max_tau <= hi for lo, hi in windows)

    try:
        landmarks = landmark_times(spec.base, spec.landmarks, windows)
    except DomainError as e:
        logger.warning(f"landmarks skipped: {e}")
        landmarks = []
    flip = _geometry_flip(records)
    half = next((m for m in landmarks if m.l == 0.5), None)
    return TransitionReport(
        transitions=tuple(transitions),
        short_circuit_windows=tuple(windows),
        entropy_max_tau=entropy_max_tau,
        cooling_min_tau=cooling_min_tau,
        ratio_min_tau=ratio_min_tau,
        entropy_max_in_window=entropy_in_window,
        geometry_flip_tau=flip,
        flip_to_half_landmark=None if flip is None or half is None else flip - half.tau_cycle,
        landmarks=tuple(landmarks),
    )


def find_transitions(spec: SweepSpec, records: Sequence[SweepRecord]) -> TransitionReport:
    """Bracket and refine every cooling-power sign change of a finished sweep."""
    if len(records) < 3:
        raise DomainError(f"transition search needs at least 3 grid points, got {len(records)}")
    transitions = [refine_transition(spec, lower, upper) for lower, upper in find_brackets(records)]
    return summarize_transitions(spec, records, transitions)
