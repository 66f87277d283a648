from typing import Optional


class OttoError(Exception):
    """Base class for every failure raised by the simulator."""


class DomainError(OttoError, ValueError):
    """Input outside the domain of an operation (non-finite values, bad ranges)."""


class PositivityError(OttoError):
    """A reconstructed density matrix has an eigenvalue below -1e-10."""


class NumericError(OttoError):
    """Matrix exponential or eigensolver failure."""


class IntegratorError(OttoError):
    """The ODE oracle did not reach the requested tolerance."""


class SlowConvergenceError(OttoError):
    def __init__(self, message: str, lambda2: float):
        super().__init__(f"{message} (|lambda2|={lambda2:.12f})")
        self.lambda2 = lambda2


class StaleCycleError(OttoError):
    """A limit-cycle trajectory does not close on its anchor."""


class ResolutionError(OttoError):
    """Too few samples on a segment to differentiate."""


class ConfigError(OttoError):
    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field_path = field_path
