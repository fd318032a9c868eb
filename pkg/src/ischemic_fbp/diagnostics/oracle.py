"""Brute-force reference solver and run comparison.

The oracle integrates the same spatial operators with forward Euler at a
fixed, a-priori safe step on a finer grid. Its stepping loop, step-size
rule and initial data are independent of the production integrator.
"""

import logging
import math

import numpy as np
import pandas as pd

from ischemic_fbp.constitutive import (
    initial_b_profile,
    initial_p_profile,
    kinetics,
    lemma_tip_bound,
    resolve_parameters,
)
from ischemic_fbp.diagnostics.integrals import summarize_fields
from ischemic_fbp.errors import StepFailure
from ischemic_fbp.fixedgrid import (
    advection_taxis_operator,
    boundary_fluxes,
    build_grid,
    diffusion_operator,
    outer_robin_residual,
    rho_transport_rate,
    transform_coeffs,
)
from ischemic_fbp.mechanics import compute_velocity
from ischemic_fbp.schema import DIFFUSING_FIELDS, FieldId, Parameters

logger = logging.getLogger(__name__)

REFINEMENT = 4
DT_FRACTION = 0.25
MAX_ROWS = 400


def _initial_fields(params: Parameters, n_cells: int) -> np.ndarray:
    grid = build_grid(n_cells, params.R0, params.L)
    fields = np.zeros((len(FieldId), n_cells))
    fields[[FieldId.W, FieldId.F, FieldId.RHO]] = 1.0
    if params.initial_profile == "homeostatic":
        fields[FieldId.B] = 1.0
    else:
        fields[FieldId.B] = initial_b_profile(grid.r_centers, params)
        fields[FieldId.P] = initial_p_profile(grid.r_centers, params)
    return fields


def stable_dt(params: Parameters, n_cells: int, fields: np.ndarray) -> float:
    """A-priori explicit step bound valid while R <= R0 and rho <= rho_m.

    Args:
        params: Resolved parameters.
        n_cells: Oracle resolution.
        fields: Initial fields, used for the reaction time scale.

    Returns:
        The bound itself; callers take a fraction of it.
    """
    dxi = 1.0 / n_cells
    width = params.L - params.R0
    d_max = max(params.diffusivity(f) for f in DIFFUSING_FIELDS) / width**2
    dt_diff = dxi * dxi / (4.0 * d_max)

    excess = params.beta * (params.rho_m - 1.0)
    speed = 2.0 * excess * params.L
    if params.k_sg > 0.0:
        cap = 1.0 / math.sqrt(params.k_sg)
        tips = lemma_tip_bound(params)
        speed += cap * params.rho_m * (params.chi_m + params.chi_f + params.chi_n)
        speed += cap * params.A * (params.D_n + params.chi_n * params.rho_m * tips)
    dt_adv = dxi * width / speed if speed > 0.0 else math.inf

    base = kinetics(fields, params.gamma, params)
    rate = 0.0
    for fid in FieldId:
        bumped = fields.copy()
        bumped[fid] += 1e-7
        rate = max(rate, float(np.max(np.abs(kinetics(bumped, params.gamma, params)[fid] - base[fid]))) / 1e-7)
    dt_rxn = 1.0 / rate if rate > 0.0 else math.inf
    return min(dt_diff, dt_adv, dt_rxn, params.dt_max)


def _row(
    t: float,
    dt: float,
    R: float,
    fields: np.ndarray,
    Q: float,
    Rdot: float,
    params: Parameters,
    taxis: dict[FieldId, float] | None = None,
) -> dict:
    grid = build_grid(fields.shape[1], R, params.L)
    mins, maxs, integrals = summarize_fields(fields, grid)
    row = {"t": t, "R": R, "Q": Q, "Rdot": Rdot, "dt": dt}
    for f in FieldId:
        row[f"min_{f.label}"] = mins[f.label]
        row[f"max_{f.label}"] = maxs[f.label]
        row[f"I_{f.label}"] = integrals[f.label]
    row["rho_L"] = float(fields[FieldId.RHO, -1])
    row["bc_residual"] = outer_robin_residual(fields, grid, params.gamma, params, taxis)
    return row


def oracle_solve(
    params: Parameters,
    horizon: float,
    n_oracle: int | None = None,
    dt: float | None = None,
) -> pd.DataFrame:
    """Forward-Euler reference run on a fine grid.

    Args:
        params: Parameters; N is the production resolution.
        horizon: End time.
        n_oracle: Oracle resolution, default 4 * N.
        dt: Fixed step, default a quarter of the a-priori bound.

    Returns:
        Frame with the run.csv columns, at most a few hundred rows.

    Raises:
        StepFailure: If the explicit iteration leaves the admissible set.
    """
    params = resolve_parameters(params)
    n_cells = n_oracle or REFINEMENT * params.N
    fields = _initial_fields(params, n_cells)
    if dt is None:
        dt = DT_FRACTION * stable_dt(params, n_cells, fields)
    n_steps = max(1, math.ceil(horizon / dt - 1e-9))
    dt = horizon / n_steps
    record_every = max(1, n_steps // MAX_ROWS)
    logger.info(f"Oracle: N={n_cells}, dt={dt:.3e}, {n_steps} steps to t={horizon}")

    R = params.R0
    t = 0.0
    velocity = compute_velocity(fields[FieldId.RHO], R, params)
    rows = [_row(t, 0.0, R, fields, velocity.Q, velocity.Rdot, params)]
    for k in range(1, n_steps + 1):
        grid = build_grid(n_cells, R, params.L)
        coeffs = transform_coeffs(grid, velocity, params)
        closures = boundary_fluxes(fields, R, grid, coeffs, params)
        reaction = kinetics(fields, params.gamma, params)
        rates = advection_taxis_operator(fields, coeffs, grid, closures) + reaction
        for fid in DIFFUSING_FIELDS:
            rates[fid] += diffusion_operator(
                fields[fid], fid, coeffs, grid, closures.inner[fid], closures.outer[fid]
            )
        rates[FieldId.RHO] = rho_transport_rate(fields[FieldId.RHO], coeffs, grid, reaction[FieldId.RHO])

        fields = fields + dt * rates
        R = R + dt * velocity.Rdot
        t = k * dt
        if not np.all(np.isfinite(fields)) or np.min(fields) < -1e-12 or R <= 0.0:
            raise StepFailure(f"oracle left the admissible set at t={t:.6g}")
        velocity = compute_velocity(fields[FieldId.RHO], R, params)
        if k % record_every == 0 or k == n_steps:
            rows.append(_row(t, dt, R, fields, velocity.Q, velocity.Rdot, params, closures.outer_taxis))
    return pd.DataFrame(rows)


def compare_runs(
    a: pd.DataFrame, b: pd.DataFrame, fields: list[str] | None = None
) -> dict[str, float]:
    """Sup-norm relative discrepancy of b against a.

    b is interpolated linearly onto the times of a that fall inside b's
    time range. Fields are compared through their weighted integrals I_u,
    normalised by the largest |I_u| of a.

    Args:
        a: Reference frame.
        b: Frame to compare.
        fields: Field labels to compare; all eight by default.

    Returns:
        Mapping with key "R" and one key per field label.
    """
    labels = fields if fields is not None else [f.label for f in FieldId]
    tb = b["t"].to_numpy()
    mask = (a["t"] >= tb[0]) & (a["t"] <= tb[-1])
    ta = a.loc[mask, "t"].to_numpy()

    def interp(column: str) -> np.ndarray:
        return np.interp(ta, tb, b[column].to_numpy())

    ra = a.loc[mask, "R"].to_numpy()
    result = {"R": float(np.max(np.abs(interp("R") - ra) / np.abs(ra))) if len(ta) else 0.0}
    for label in labels:
        ia = a.loc[mask, f"I_{label}"].to_numpy()
        scale = float(np.max(np.abs(ia))) if len(ia) else 0.0
        diff = float(np.max(np.abs(interp(f"I_{label}") - ia))) if len(ia) else 0.0
        result[label] = diff / scale if scale > 0.0 else diff
    return result
