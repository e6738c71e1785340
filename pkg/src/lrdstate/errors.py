"""Exception hierarchy.

Parameter rejection, computational-cap, and data-sufficiency failures are kept
in separate branches so the CLI can map them onto distinct exit codes.
"""

from __future__ import annotations

__all__ = [
    "LrdstateError",
    "ParameterError",
    "RangeViolation",
    "SimplexViolation",
    "AssumptionViolation",
    "ComputeError",
    "CapExceeded",
    "HorizonExceeded",
    "FrontierOverflow",
    "ZeroDenominator",
    "SizeExceeded",
    "PreconditionUnmet",
    "DataError",
    "InsufficientData",
    "DegenerateSeries",
]


class LrdstateError(Exception):
    """Base class for all package errors."""


class ParameterError(LrdstateError, ValueError):
    """A candidate parameter set was rejected; ``condition`` names the test."""

    condition = "parameter"


class RangeViolation(ParameterError):
    """Some H_k, p_k or c_k lies outside the open interval (0, 1)."""

    condition = "range"


class SimplexViolation(ParameterError):
    """The state probabilities p_1..p_m sum to 1 or more, leaving p0 <= 0."""

    condition = "simplex"


class AssumptionViolation(ParameterError):
    """The adjacent-integer admissibility sum is >= 1.

    Carries the offending sum in ``value``.
    """

    condition = "admissibility"

    def __init__(self, message: str, value: float):
        super().__init__(message)
        self.value = value


class ComputeError(LrdstateError):
    """An evaluation hit a configured resource cap or numeric guard."""


class CapExceeded(ComputeError):
    """Recursive evaluation would exceed the conditioning-set cap."""


class HorizonExceeded(ComputeError):
    """A pattern references a time index beyond the configured horizon."""


class FrontierOverflow(ComputeError):
    """The dynamic-program frontier grew past its entry cap."""


class ZeroDenominator(ComputeError):
    """A conditioning event has numerically vanished probability.

    Raised when a history's joint probability falls below the underflow
    threshold in plain-float mode; the remedy is the rescaled frontier mode.
    """


class SizeExceeded(ComputeError):
    """A brute-force enumeration request is over the hard size cap."""


class PreconditionUnmet(LrdstateError, ValueError):
    """A verification request does not satisfy the hypotheses it needs."""


class DataError(LrdstateError, ValueError):
    """An estimator received unusable input."""


class InsufficientData(DataError):
    """Too few observations for the requested estimate."""


class DegenerateSeries(DataError):
    """A constant input series carries no variance information."""
