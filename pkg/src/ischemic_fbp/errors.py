"""Exception hierarchy for the simulator.

Configuration and input problems derive from ValueError, failures of a
running simulation from RuntimeError, so callers can catch either family.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from ischemic_fbp.schema import StepReport


class FbpError(Exception):
    """Base class for all simulator errors."""


class ConfigError(FbpError, ValueError):
    """Configuration file missing, unreadable or invalid."""


class NonFiniteInput(FbpError, ValueError):
    """NaN or infinity handed to a pure operator."""


class DegenerateDomain(FbpError, ValueError):
    """The annulus L - R has collapsed below the machine-scale floor."""


class InvalidGeometry(FbpError, ValueError):
    """Grid requested with R <= 0 or R >= L."""


class NonDiffusingField(FbpError, ValueError):
    """Diffusion requested for the matrix density."""


class NoBracket(FbpError, ValueError):
    """Both ends of a gamma bracket classify the same way."""


class NonFiniteState(FbpError, RuntimeError):
    """NaN or infinity detected in the simulation state."""


class StepFailure(FbpError, RuntimeError):
    """Step size fell below dt_min while the invariant audit still failed.

    Attributes:
        reports: Series of reports accepted before the failure.
        state: Last accepted state.
    """

    def __init__(
        self,
        message: str,
        reports: list["StepReport"] | None = None,
        state: Any = None,
    ) -> None:
        super().__init__(message)
        self.reports = reports or []
        self.state = state
