"""
Published coupled-spin family: cooling power along the cycle-time axis.

These runs compare against digitized reference values and are slower than the
unit suite; select them with `pytest -m reference`.
"""

import numpy as np
import pytest

from src.utils.atlas import SweepSpec, find_brackets, find_transitions, refine_transition, run_sweep, solve_point
from src.utils.limit_cycle import assemble_global, solve_limit_cycle
from src.utils.thermo import (
    CONCAVE,
    CONVEX,
    REFRIGERATOR,
    SHORT_CIRCUIT,
    classify_heats,
    coherence_variation,
    dynamical_temperature_profile,
    heats,
)
from tests.conftest import REFERENCE_COOLING, REFERENCE_TAUS, make_params

pytestmark = pytest.mark.reference

SHORT_CIRCUIT_CYCLES = ("e", "f", "g", "h")
LONG_REFRIGERATORS = ("a", "b", "c", "d")


@pytest.fixture(scope="module")
def family():
    return {name: solve_point(make_params(tau_cycle=tau), samples_per_segment=100) for name, tau in REFERENCE_TAUS.items()}


@pytest.fixture(scope="module")
def sweep():
    spec = SweepSpec.from_range(make_params(), 0.1, 1.1, 200, spacing="linear", samples_per_segment=20)
    records = run_sweep(spec)
    return spec, records, find_transitions(spec, records)


def solve(tau, samples=200):
    return solve_limit_cycle(assemble_global(make_params(tau_cycle=tau)), samples_per_segment=samples)


class TestCoolingPower:
    """Signs and magnitudes of the twelve reference cycles."""

    def test_sign_pattern(self, family):
        """Cycles e to h short-circuit heat; the rest refrigerate."""
        for name, row in family.items():
            expected = SHORT_CIRCUIT if name in SHORT_CIRCUIT_CYCLES else REFRIGERATOR
            assert row.classification == expected, name

    def test_magnitudes(self, family):
        """The four long refrigerators are within 25% of the reference values."""
        for name in LONG_REFRIGERATORS:
            assert family[name].cooling_power == pytest.approx(REFERENCE_COOLING[name], rel=0.25), name

    def test_long_refrigerators_ordered(self, family):
        """Cooling power falls strictly from a to d as the cycle shortens."""
        powers = [family[name].cooling_power for name in LONG_REFRIGERATORS]
        assert all(a > b for a, b in zip(powers, powers[1:]))

    def test_long_cycle_asymptote(self):
        """Cooling power stays positive as the cycle time grows."""
        for tau in (1.2, 2.0, 4.0):
            assert solve_point(make_params(tau_cycle=tau), samples_per_segment=None).cooling_power > 0

    def test_short_cycle_asymptote(self):
        """Cooling power reaches a positive plateau as the cycle time goes to zero."""
        fast = solve_point(make_params(tau_cycle=1e-3), samples_per_segment=None).cooling_power
        slower = solve_point(make_params(tau_cycle=1e-2), samples_per_segment=None).cooling_power
        assert fast > 0 and slower > 0
        assert fast == pytest.approx(slower, rel=0.05)


class TestGeometry:
    """Concave long cycles, convex short ones, a flat-coherence cycle in between."""

    def test_long_cycle_concave(self, family):
        assert family["a"].geometry == CONCAVE

    def test_short_cycle_convex(self, family):
        assert family["l"].geometry == CONVEX

    def test_transition_cycle_keeps_coherence(self):
        """Coherence along the compression adiabat of cycle g is nearly constant."""
        assert coherence_variation(solve(REFERENCE_TAUS["g"], samples=100)) < 0.1


class TestShortCircuitWindow:
    """Transitions bracketing the window and the features inside it."""

    def test_two_transitions(self, sweep):
        """Refrigeration stops between i and h and resumes between e and d."""
        _, _, report = sweep
        assert len(report.transitions) == 2
        lower, upper = sorted(t.tau_star for t in report.transitions)
        assert REFERENCE_TAUS["i"] < lower < REFERENCE_TAUS["h"]
        assert REFERENCE_TAUS["e"] < upper < REFERENCE_TAUS["d"]

    def test_half_landmark_inside_window(self, sweep):
        """The half-turn adiabat falls inside the short-circuit window."""
        _, _, report = sweep
        half = next(m for m in report.landmarks if m.l == 0.5)
        assert half.in_short_circuit_window is True

    def test_extrema_inside_window(self, sweep):
        """Entropy production peaks and cooling power bottoms out inside the window."""
        _, _, report = sweep
        assert report.entropy_max_in_window is True
        ((lo, hi),) = report.short_circuit_windows
        assert lo <= report.cooling_min_tau <= hi

    def test_energy_coherence_ratio_minimum_inside_window(self, sweep):
        """|E|/|coherence| at A is smallest on a short-circuit cycle."""
        _, _, report = sweep
        ((lo, hi),) = report.short_circuit_windows
        assert lo <= report.ratio_min_tau <= hi


class TestDynamicalTemperature:
    """T_dyn against the bath temperatures on both sides of the transitions."""

    def test_refrigerators_bracketed_by_baths(self):
        """Refrigerators run colder than the cold bath and hotter than the hot bath."""
        for name, tau in REFERENCE_TAUS.items():
            if name in SHORT_CIRCUIT_CYCLES:
                continue
            lc = solve(tau, samples=50)
            cold = [p.t_dyn for p in dynamical_temperature_profile(lc, "cold") if not p.singular]
            hot = [p.t_dyn for p in dynamical_temperature_profile(lc, "hot") if not p.singular]
            assert cold and max(cold) < 3.6, name
            assert not hot or min(hot) > 4.0, name

    def test_short_circuits_never_below_cold_bath(self):
        """Inside the window no finite cold-isochore T_dyn drops below T_c."""
        for name in SHORT_CIRCUIT_CYCLES:
            profile = dynamical_temperature_profile(solve(REFERENCE_TAUS[name]), "cold")
            finite = np.array([p.t_dyn for p in profile if not p.singular])
            assert np.all(finite >= 3.6 * (1 - 1e-6)), name

    def test_singular_at_window_edges(self, sweep):
        """Just inside each transition the cold-isochore T_dyn turns negative and is flagged."""
        spec, records, _ = sweep
        for lower, upper in find_brackets(records):
            t = refine_transition(spec, lower, upper, rtol=1e-12)
            step = 1e-7 if t.to_class == SHORT_CIRCUIT else -1e-7
            lc = solve(t.tau_star * (1.0 + step))
            h = heats(lc)
            assert classify_heats(h.q_cold, h.q_hot) == SHORT_CIRCUIT
            profile = dynamical_temperature_profile(lc, "cold")
            assert any(p.singular for p in profile), t.tau_star
