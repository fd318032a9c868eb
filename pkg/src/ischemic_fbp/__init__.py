"""Ischemic wound-healing free-boundary simulator.

Simulates eight coupled chemical, cellular and matrix fields on a shrinking
annulus around a radially symmetric wound, classifies heal/no-heal across
the ischemia level gamma and checks the analytic invariants at runtime.
"""

__version__ = "0.1.0"
__author__ = "Wound Modeling Group"

from ischemic_fbp.schema import FieldId, Parameters, StepReport

__all__ = ["FieldId", "Parameters", "StepReport", "__version__"]
