"""Exception hierarchy shared by every module."""

from __future__ import annotations

from typing import Any


class RobustImpError(Exception):
    """Base class for all library errors."""


class DimensionError(RobustImpError, ValueError):
    """Payoff vectors, beliefs or matrices have incompatible shapes."""


class DomainError(RobustImpError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class AssumptionError(RobustImpError):
    """A structural precondition of a characterization does not hold.

    ``report`` carries whatever diagnostic object explains the failure
    (for example an :class:`~robustimp.multi.AssumptionReport`).
    """

    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report


class DegeneracyError(RobustImpError):
    """A geometric object is lower dimensional than required."""


class RelationHoldsError(RobustImpError):
    """A witness was requested for a relation that actually holds."""


class NumericalFailure(RobustImpError):
    """An iterative construction or solver did not reach its target."""


class ResourceError(RobustImpError):
    """Problem size exceeds what the dense routines accept."""


class DataError(RobustImpError):
    """Fixed input data turned out to be inconsistent."""


class ParseError(RobustImpError):
    """A problem file could not be read into a valid problem."""
