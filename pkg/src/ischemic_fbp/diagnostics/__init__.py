"""Check registry and diagnostic utilities.

This module provides a single entry point that runs every theorem-derived
check applicable to a run, and re-exports the individual checkers.
"""

import logging

import pandas as pd

from ischemic_fbp.diagnostics.integrals import IntegralSeries, integral_I, observed_order
from ischemic_fbp.diagnostics.oracle import compare_runs, oracle_solve
from ischemic_fbp.diagnostics.theorems import (
    check_asymptotics_nonhealing,
    check_decay_gamma1,
    check_gamma0_closure,
    check_matrix_decay_gamma1,
    check_monotone_radius,
    check_q_integral_identity,
    check_sandwich,
)
from ischemic_fbp.schema import CheckResult, Parameters

logger = logging.getLogger(__name__)

__all__ = [
    "IntegralSeries",
    "integral_I",
    "observed_order",
    "oracle_solve",
    "compare_runs",
    "check_asymptotics_nonhealing",
    "check_decay_gamma1",
    "check_gamma0_closure",
    "check_matrix_decay_gamma1",
    "check_monotone_radius",
    "check_q_integral_identity",
    "check_sandwich",
    "run_all_checks",
]


def run_all_checks(frame: pd.DataFrame, params: Parameters, outcome_kind: str) -> list[CheckResult]:
    """Run every check that applies to a run's gamma and outcome.

    Args:
        frame: Run frame with the run.csv columns.
        params: Parameters the run used.
        outcome_kind: "healed", "stalled" or "undecided".

    Returns:
        Verdicts in a fixed order.
    """
    results: list[CheckResult] = []

    # Checks valid for every run
    results.append(check_monotone_radius(frame, params))
    results.append(check_sandwich(frame, params))
    results.append(check_q_integral_identity(frame, params))

    # Extreme ischemia
    if params.gamma == 1.0:
        results.append(
            check_decay_gamma1(IntegralSeries.from_frame(frame), params.lambda_wm, params.theorem_tol)
        )

    # Healthy tissue
    if params.gamma == 0.0 and params.initial_profile == "wound":
        results.append(check_gamma0_closure(frame, params))

    if outcome_kind == "stalled":
        results.extend(check_asymptotics_nonhealing(frame, params))
        if params.gamma == 1.0:
            results.append(check_matrix_decay_gamma1(frame))

    for result in results:
        if not result.passed:
            logger.warning(f"Check {result.name}: {result.verdict} ({result.detail})")
    return results
