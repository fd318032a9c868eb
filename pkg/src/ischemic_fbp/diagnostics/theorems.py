"""Post-hoc checks of the analytic a-priori properties over a run frame.

All checks read a pandas frame with the run.csv columns and return
CheckResult verdicts; none of them feeds back into the dynamics. The
long-time statements are checked over the final quartile of the run,
which is a finite-horizon surrogate for the t -> infinity limits.
"""

import logging
import math

import numpy as np
import pandas as pd

from ischemic_fbp.diagnostics.integrals import IntegralSeries
from ischemic_fbp.mechanics import sandwich_bounds
from ischemic_fbp.schema import CheckResult, Parameters

logger = logging.getLogger(__name__)

MONOTONE_SLACK = 1e-12


def _verdict(ok: bool, fail: str = "fail") -> str:
    return "pass" if ok else fail


def final_quartile(frame: pd.DataFrame) -> pd.DataFrame:
    """Rows in the last quarter of the run's time span."""
    t = frame["t"]
    start = t.iloc[0] + 0.75 * (t.iloc[-1] - t.iloc[0])
    return frame[t >= start]


def check_monotone_radius(frame: pd.DataFrame, params: Parameters) -> CheckResult:
    """R never increases, and Rdot < 0 wherever Q exceeds the noise floor."""
    R = frame["R"].to_numpy()
    rises = np.diff(R)
    worst = float(np.max(rises)) if len(rises) else 0.0
    closing = frame["Q"].to_numpy() > params.q_noise_floor
    strict = bool(np.all(frame["Rdot"].to_numpy()[closing] < 0.0))
    ok = worst <= MONOTONE_SLACK and strict
    return CheckResult(
        name="monotone_radius",
        verdict=_verdict(ok),
        value=worst,
        detail=f"largest increase {worst:.3e}; Rdot<0 where Q>floor: {strict}",
    )


def check_sandwich(frame: pd.DataFrame, params: Parameters, slack: float = 0.02) -> CheckResult:
    """R(t) inside the exponential band of the Q history, with relative slack."""
    lower, upper = sandwich_bounds(frame["t"], frame["Q"], params.R0, params.L)
    R = frame["R"].to_numpy()
    below = float(np.max((lower - R) / lower))
    above = float(np.max((R - upper) / upper))
    worst = max(below, above, 0.0)
    return CheckResult(
        name="sandwich",
        verdict=_verdict(worst <= slack),
        value=worst,
        detail=f"worst relative excursion {worst:.3e} (slack {slack})",
    )


def check_decay_gamma1(
    series: IntegralSeries,
    lambda_wm: float,
    tol: float = 0.05,
    t_max: float | None = None,
) -> CheckResult:
    """Oxygen content decays at least like exp(-lambda_wm t).

    Args:
        series: Integral series of a gamma = 1 run.
        lambda_wm: Decay constant.
        tol: Relative slack on the bound.
        t_max: Only check times up to this value.

    Returns:
        CheckResult whose value is the worst ratio I_w(t) / (I_w(0) e^{-lambda t}).
    """
    t = series.times
    I_w = series.integrals["w"]
    if t_max is not None:
        keep = t <= t_max
        t, I_w = t[keep], I_w[keep]
    if len(I_w) == 0 or I_w[0] == 0.0:
        return CheckResult(name="oxygen_decay", verdict="pass", value=0.0, detail="vacuous: I_w(0) = 0")
    envelope = I_w[0] * np.exp(-lambda_wm * (t - t[0]))
    positive = envelope > 0.0
    ratio = float(np.max(I_w[positive] / envelope[positive]))
    return CheckResult(
        name="oxygen_decay",
        verdict=_verdict(ratio <= 1.0 + tol),
        value=ratio,
        detail=f"max I_w / (I_w(0) exp(-{lambda_wm} t)) = {ratio:.6f}",
    )


def check_asymptotics_nonhealing(frame: pd.DataFrame, params: Parameters) -> list[CheckResult]:
    """Final-quartile bounds on f, w, rho and Q for a stalled run."""
    tail = final_quartile(frame)
    tol = params.theorem_tol
    w_cap = max(1.0, (1.0 - params.gamma) * params.w_b)
    bounds = {
        "f": params.f_m,
        "w": w_cap,
        "rho": 1.0,
    }
    results = []
    for label, cap in bounds.items():
        peak = float(tail[f"max_{label}"].max())
        results.append(
            CheckResult(
                name=f"asymptotic_{label}",
                verdict=_verdict(peak <= cap * (1.0 + tol)),
                value=peak / cap,
                detail=f"final-quartile max {label} = {peak:.6g}, bound {cap:.6g}",
            )
        )
    q_end = float(tail["Q"].iloc[-1])
    results.append(
        CheckResult(
            name="asymptotic_Q",
            verdict=_verdict(q_end <= params.q_tol),
            value=q_end,
            detail=f"final Q = {q_end:.3e}, tolerance {params.q_tol:.1e}",
        )
    )
    return results


def check_gamma0_closure(frame: pd.DataFrame, params: Parameters, t_max: float | None = None) -> CheckResult:
    """Healthy tissue keeps closing: Q > 0, Rdot < 0 and rho(L) > 1 for t > 0."""
    rows = frame[frame["t"] > 0.0]
    if t_max is not None:
        rows = rows[rows["t"] <= t_max]
    closing = (
        (rows["Q"] > params.q_noise_floor) & (rows["Rdot"] < 0.0) & (rows["rho_L"] > 1.0)
    )
    violations = int((~closing).sum())
    return CheckResult(
        name="gamma0_closure",
        verdict=_verdict(violations == 0),
        value=float(violations),
        detail=f"{violations} of {len(rows)} reports not closing",
    )


def check_matrix_decay_gamma1(frame: pd.DataFrame) -> CheckResult:
    """Fibroblast and matrix content are nonincreasing over the final quartile."""
    tail = final_quartile(frame)
    worst = 0.0
    for label in ("f", "rho"):
        values = tail[f"I_{label}"].to_numpy()
        if len(values) > 1:
            rel = np.diff(values) / np.maximum(np.abs(values[:-1]), 1e-300)
            worst = max(worst, float(np.max(rel)))
    return CheckResult(
        name="matrix_decay",
        verdict=_verdict(worst <= MONOTONE_SLACK),
        value=worst,
        detail=f"largest relative increase of I_f or I_rho {worst:.3e}",
    )


def check_q_integral_identity(frame: pd.DataFrame, params: Parameters) -> CheckResult:
    """Integral of Q matches the closed form in R0 and the final radius.

    Uses the left-endpoint sum, which is how the boundary update consumes Q.
    """
    t = frame["t"].to_numpy()
    q = frame["Q"].to_numpy()
    R_end = float(frame["R"].iloc[-1])
    observed = float(np.sum(q[:-1] * np.diff(t)))
    L, R0 = params.L, params.R0
    expected = 0.5 * L * L * math.log(R0 / R_end) + 0.25 * (R0 * R0 - R_end * R_end)
    scale = max(abs(expected), abs(observed))
    rel = abs(observed - expected) / scale if scale > 0.0 else 0.0
    return CheckResult(
        name="q_integral_identity",
        verdict=_verdict(rel <= params.theorem_tol),
        value=rel,
        detail=f"integral of Q {observed:.6g} vs closed form {expected:.6g}",
    )
