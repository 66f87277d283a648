"""
Working medium of the coupled-spin Otto refrigerator.

The medium is a pair of spins with H = omega(t) B1 + J B2. Its state on the
limit cycle is fully carried by four expectation values (E, L, C, D) plus the
identity coefficient. This module holds the cycle parameter set, the state
vector, and the reconstruction of the 4x4 density matrix in the instantaneous
energy basis with its entropies and coherence. Units: hbar = k_B = 1.
"""

import math
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, Tuple

import numpy as np
from scipy.linalg import expm

from .errors import DomainError, PositivityError

logger = logging.getLogger("otto.working_medium")

POSITIVITY_TOLERANCE = 1e-10
FRACTION_TOLERANCE = 1e-9
# C~ = (L^2 + C^2)/Omega^2 is twice tr{(rho - rho_ed)^2} in the stationary basis
COHERENCE_TRACE_FACTOR = 2.0

SEGMENT_ORDER = ("hc", "c", "ch", "h")


def instantaneous_scale(omega: float, j_coupling: float) -> float:
    """Omega = sqrt(omega^2 + J^2), the energy scale of the spectrum {-Omega, 0, 0, Omega}."""
    return math.hypot(omega, j_coupling)


def equilibrium_energy(omega_inst: float, temperature: float) -> float:
    """
    Gibbs energy of the spectrum {-Omega, 0, 0, Omega}.

    Equal to -Omega (k_down - k_up) / Gamma with k_up / k_down = exp(-Omega/T),
    written without the rates so it stays defined for vanishing coupling.
    """
    return -omega_inst * math.tanh(omega_inst / (2.0 * temperature))


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise DomainError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class CycleParams:
    j_coupling: float
    t_hot: float
    t_cold: float
    omega_hot: float
    omega_cold: float
    k_down_hot: float
    k_down_cold: float
    tau_cycle: float
    # (f_hc, f_c, f_ch, f_h)
    fractions: Tuple[float, float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "fractions", tuple(float(f) for f in self.fractions))
        if len(self.fractions) != 4:
            raise DomainError("fractions must hold four entries (f_hc, f_c, f_ch, f_h)")
        _require_finite(
            j_coupling=self.j_coupling,
            omega_hot=self.omega_hot,
            omega_cold=self.omega_cold,
            k_down_hot=self.k_down_hot,
            k_down_cold=self.k_down_cold,
            tau_cycle=self.tau_cycle,
        )
        if self.j_coupling <= 0:
            raise DomainError("j_coupling must be positive")
        if self.t_hot <= 0 or self.t_cold <= 0 or math.isnan(self.t_hot) or math.isnan(self.t_cold):
            raise DomainError("temperatures must be positive")
        if self.k_down_hot < 0 or self.k_down_cold < 0:
            raise DomainError("rates must be non-negative")
        if self.tau_cycle <= 0:
            raise DomainError("tau_cycle must be positive")
        if not self.omega_hot > self.omega_cold > 0:
            raise DomainError("fields must satisfy omega_hot > omega_cold > 0")
        if any(not 0.0 < f < 1.0 for f in self.fractions):
            raise DomainError(f"each fraction must lie in (0, 1), got {self.fractions}")
        if abs(sum(self.fractions) - 1.0) > FRACTION_TOLERANCE:
            raise DomainError(f"fractions must sum to 1, got {sum(self.fractions):.12f}")

    @property
    def omega_inst_hot(self) -> float:
        return instantaneous_scale(self.omega_hot, self.j_coupling)

    @property
    def omega_inst_cold(self) -> float:
        return instantaneous_scale(self.omega_cold, self.j_coupling)

    def durations(self) -> Dict[str, float]:
        """Segment durations keyed by 'hc', 'c', 'ch', 'h'."""
        return {name: self.tau_cycle * f for name, f in zip(SEGMENT_ORDER, self.fractions)}

    def with_tau(self, tau_cycle: float) -> "CycleParams":
        return replace(self, tau_cycle=tau_cycle)

    def refrigerator_condition(self) -> bool:
        """
        Population-only Otto refrigeration is possible iff Omega_c/Omega_h < T_c/T_h,
        i.e. the medium leaves the expansion colder than the cold bath.
        """
        return self.omega_inst_cold / self.omega_inst_hot < self.t_cold / self.t_hot

    def to_dict(self) -> Dict[str, object]:
        return {
            "j_coupling": self.j_coupling,
            "t_hot": self.t_hot,
            "t_cold": self.t_cold,
            "omega_hot": self.omega_hot,
            "omega_cold": self.omega_cold,
            "k_down_hot": self.k_down_hot,
            "k_down_cold": self.k_down_cold,
            "tau_cycle": self.tau_cycle,
            "fractions": dict(zip(SEGMENT_ORDER, self.fractions)),
        }


@dataclass(frozen=True)
class StateVector:
    """Expectations (E, L, C, D) and the identity coefficient, in the operator basis (H, L, C, D, I)."""

    e_val: float
    l_val: float
    c_val: float
    d_val: float
    unit: float = field(default=1.0)

    def __post_init__(self):
        if self.unit != 1.0:
            raise DomainError(f"identity coefficient must be exactly 1, got {self.unit!r}")
        _require_finite(e_val=self.e_val, l_val=self.l_val, c_val=self.c_val, d_val=self.d_val)

    def as_array(self) -> np.ndarray:
        return np.array([self.e_val, self.l_val, self.c_val, self.d_val, 1.0])

    @classmethod
    def from_array(cls, vector: np.ndarray) -> "StateVector":
        vector = np.asarray(vector, dtype=float)
        if vector.shape != (5,):
            raise DomainError(f"state vector needs 5 entries, got shape {vector.shape}")
        if abs(vector[4] - 1.0) > 1e-9:
            raise DomainError(f"identity coefficient drifted to {vector[4]!r}")
        return cls(float(vector[0]), float(vector[1]), float(vector[2]), float(vector[3]))

    @classmethod
    def maximally_mixed(cls) -> "StateVector":
        return cls(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class DensityMatrix:
    """4x4 Hermitian density matrix in the instantaneous energy basis (ground, 0, 0, excited)."""

    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=complex)
        if matrix.shape != (4, 4):
            raise DomainError(f"density matrix must be 4x4, got {matrix.shape}")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def diagonal_part(self) -> "DensityMatrix":
        return DensityMatrix(np.diag(np.diag(self.matrix)))


def reconstruct_density(s: StateVector, omega_inst: float) -> DensityMatrix:
    """Build rho_e in the stationary basis from (E, L, C, D) at energy scale Omega."""
    _require_finite(omega_inst=omega_inst)
    if omega_inst <= 0:
        raise DomainError(f"omega_inst must be positive, got {omega_inst}")
    e, l_, c, d = s.e_val, s.l_val, s.c_val, s.d_val
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1.0 + (d - 2.0 * e) / omega_inst
    rho[1, 1] = 1.0 - d / omega_inst
    rho[2, 2] = 1.0 - d / omega_inst
    rho[3, 3] = 1.0 + (d + 2.0 * e) / omega_inst
    rho[0, 3] = 2.0 / omega_inst * complex(l_, c)
    rho[3, 0] = 2.0 / omega_inst * complex(l_, -c)
    return DensityMatrix(rho / 4.0)


def extract_state(rho: DensityMatrix, omega_inst: float) -> StateVector:
    """Inverse of reconstruct_density."""
    m = rho.matrix
    e = omega_inst * (m[3, 3] - m[0, 0]).real
    d = omega_inst * (m[0, 0] + m[3, 3] - m[1, 1] - m[2, 2]).real
    corner = 2.0 * omega_inst * m[0, 3]
    return StateVector(float(e), float(corner.real), float(corner.imag), float(d))


def closed_form_eigenvalues(s: StateVector, omega_inst: float) -> np.ndarray:
    """Eigenvalues of the reconstructed matrix: the two middle populations and the 2x2 corner block."""
    d = s.d_val / omega_inst
    r = math.sqrt(s.e_val**2 + s.l_val**2 + s.c_val**2) / omega_inst
    middle = 0.25 * (1.0 - d)
    return np.array([0.25 * (1.0 + d - 2.0 * r), middle, middle, 0.25 * (1.0 + d + 2.0 * r)])


def _entropy(eigenvalues: np.ndarray) -> float:
    eigenvalues = np.real(np.asarray(eigenvalues))
    lowest = float(eigenvalues.min())
    if lowest < -POSITIVITY_TOLERANCE:
        raise PositivityError(f"density matrix eigenvalue {lowest:.3e} below -{POSITIVITY_TOLERANCE}")
    p = np.clip(eigenvalues, 0.0, 1.0)
    p = p[p > 0.0]
    return float(-np.sum(p * np.log(p)))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    return _entropy(np.linalg.eigvalsh(rho.matrix))


def energy_entropy(rho: DensityMatrix) -> float:
    return _entropy(np.diag(rho.matrix).real)


def entropy_gap(rho: DensityMatrix) -> float:
    """S_E - S_VN, the relative entropy D(rho || rho_ed)."""
    return energy_entropy(rho) - von_neumann_entropy(rho)


def coherence_measure(s: StateVector, omega_inst: float) -> float:
    """C~ = (L^2 + C^2) / Omega^2."""
    _require_finite(omega_inst=omega_inst)
    if omega_inst <= 0:
        raise DomainError(f"omega_inst must be positive, got {omega_inst}")
    return (s.l_val**2 + s.c_val**2) / omega_inst**2


def coherence_trace_distance(rho: DensityMatrix) -> float:
    """tr{(rho - rho_ed)^2}, the matrix-side coherence."""
    off = rho.matrix - np.diag(np.diag(rho.matrix))
    return float(np.real(np.trace(off @ off)))


#############################################
# Spin-pair operators in the product basis
#############################################
_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)
_I2 = np.eye(2, dtype=complex)


def stationary_basis() -> Dict[str, np.ndarray]:
    """B1..B5 on |uu>, |ud>, |du>, |dd>."""
    return {
        "B1": 0.5 * (np.kron(_SZ, _I2) + np.kron(_I2, _SZ)),
        "B2": 0.5 * (np.kron(_SX, _SX) - np.kron(_SY, _SY)),
        "B3": 0.5 * (np.kron(_SY, _SX) + np.kron(_SX, _SY)),
        "B4": 0.5 * (np.kron(_I2, _SZ) - np.kron(_SZ, _I2)),
        "B5": np.kron(_SZ, _SZ),
    }


def spin_operators(omega: float, j_coupling: float) -> Dict[str, np.ndarray]:
    """H, L, C, V, D of the time-dependent operator set at field omega."""
    b = stationary_basis()
    omega_inst = instantaneous_scale(omega, j_coupling)
    return {
        "H": omega * b["B1"] + j_coupling * b["B2"],
        "L": j_coupling * b["B1"] - omega * b["B2"],
        "C": omega_inst * b["B3"],
        "V": omega_inst * b["B4"],
        "D": omega_inst * b["B5"],
    }


def gibbs_expectations(omega: float, j_coupling: float, temperature: float) -> StateVector:
    """(E, L, C, D) of exp(-H/T)/Z computed in the product basis."""
    ops = spin_operators(omega, j_coupling)
    weight = expm(-ops["H"] / temperature)
    rho = weight / np.trace(weight)
    return StateVector(
        float(np.trace(rho @ ops["H"]).real),
        float(np.trace(rho @ ops["L"]).real),
        float(np.trace(rho @ ops["C"]).real),
        float(np.trace(rho @ ops["D"]).real),
    )


def gibbs_state(omega_inst: float, temperature: float) -> DensityMatrix:
    """Gibbs density matrix of the spectrum {-Omega, 0, 0, Omega} in the energy basis."""
    weights = np.exp(-np.array([-omega_inst, 0.0, 0.0, omega_inst]) / temperature)
    return DensityMatrix(np.diag(weights / weights.sum()))


if __name__ == "__main__":
    omega_inst = instantaneous_scale(6.5, 1.25)
    state = gibbs_expectations(6.5, 1.25, 3.6)
    rho = reconstruct_density(state, omega_inst)
    print(f"Omega_c = {omega_inst:.6f}")
    print(f"Gibbs state at T_c: {state}")
    print(f"S_VN = {von_neumann_entropy(rho):.9f}, S_E = {energy_entropy(rho):.9f}")
