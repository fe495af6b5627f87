# ==== twrn_sim/core/errors.py ====
"""Exception hierarchy shared by the simulator modules."""

from typing import Optional


class TwrnError(Exception):
    """Base class for every error raised by the simulator."""


class ShapeError(TwrnError):
    """Operand dimensions do not agree."""


class DomainError(TwrnError, ValueError):
    """An argument lies outside the domain of an operation."""


class TrialError(TwrnError):
    """A single Monte Carlo trial could not be completed; the sweep goes on."""


class DecompositionError(TrialError):
    """Hermitian factorization failed even after diagonal jitter."""


class DegenerateError(TrialError):
    """A quantity needed by an estimator vanished (zero norm or zero variance)."""


class AllocationError(TrialError):
    """Random power allocation found no feasible draw."""


class ConfigError(TwrnError):
    """An experiment document is malformed or violates an invariant."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}" if line is not None else message)


class IoError(TwrnError, OSError):
    """Reading or writing an output file failed."""
