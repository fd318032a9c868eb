"""Time integration of the free-boundary system.

Each step freezes the mechanics of the current matrix density, advances
rho explicitly, advances the seven diffusing fields with implicit diffusion
and explicit transport/reaction, moves the wound edge, and audits the new
state. A failing audit halves dt and retries the step.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import solve_banded

from ischemic_fbp.constitutive import (
    DEFAULT_KINETICS,
    KineticsModel,
    initial_b_profile,
    initial_p_profile,
    kinetics,
    lemma_tip_bound,
    resolve_parameters,
)
from ischemic_fbp.diagnostics.integrals import summarize_fields
from ischemic_fbp.errors import NonFiniteState, StepFailure
from ischemic_fbp.fixedgrid import (
    Closures,
    Grid,
    TransformCoeffs,
    advection_taxis_operator,
    boundary_fluxes,
    build_grid,
    diffusion_system,
    outer_robin_residual,
    rho_transport_rate,
    transform_coeffs,
)
from ischemic_fbp.mechanics import VelocityProfile, compute_velocity
from ischemic_fbp.schema import (
    DIFFUSING_FIELDS,
    FieldId,
    Healed,
    Outcome,
    Parameters,
    Stalled,
    StepReport,
    Undecided,
)

logger = logging.getLogger(__name__)

AUDIT_SLACK = 1e-12
VELOCITY_SLACK = 1e-10
SANDWICH_SLACK = 0.02
LOG_EVERY = 500


@dataclass(frozen=True)
class WoundState:
    """Immutable snapshot of the simulation.

    Attributes:
        t: Time.
        R: Wound radius.
        fields: Array of shape (8, N), rows ordered as FieldId.
        velocity: Velocity profile of this state's rho.
        q_integral: Trapezoidal integral of Q from 0 to t.
    """

    t: float
    R: float
    fields: NDArray[np.float64]
    velocity: VelocityProfile
    q_integral: float = 0.0

    @property
    def N(self) -> int:
        return self.fields.shape[1]

    def grid(self, L: float) -> Grid:
        return build_grid(self.N, self.R, L)

    def __getitem__(self, fid: FieldId) -> NDArray[np.float64]:
        return self.fields[fid]


@dataclass
class RunResult:
    """Outcome of a run and the full report series."""

    outcome: Outcome
    reports: list[StepReport] = field(default_factory=list)
    final_state: WoundState | None = None
    params: Parameters | None = None


def init_state(params: Parameters) -> WoundState:
    """Initial wound: R = R0, v = 0, rho = f = w = 1, e = m = n = 0.

    Sprouts b and PDGF p follow the initial transition profiles, or are
    uniformly healthy (b = 1, p = 0) for the homeostatic scenario.

    Args:
        params: Validated parameters.

    Returns:
        WoundState at t = 0.
    """
    grid = build_grid(params.N, params.R0, params.L)
    fields = np.zeros((len(FieldId), params.N))
    for fid in (FieldId.W, FieldId.F, FieldId.RHO):
        fields[fid] = 1.0
    if params.initial_profile == "homeostatic":
        fields[FieldId.B] = 1.0
    else:
        fields[FieldId.B] = initial_b_profile(grid.r_centers, params)
        fields[FieldId.P] = initial_p_profile(grid.r_centers, params)
    velocity = compute_velocity(fields[FieldId.RHO], params.R0, params)
    return WoundState(t=0.0, R=params.R0, fields=fields, velocity=velocity)


def _jacobian_diagonal(
    fields: NDArray[np.float64], base: NDArray[np.float64], params: Parameters, model: KineticsModel
) -> NDArray[np.float64]:
    """Forward-difference estimate of dR_u/du for every field and cell."""
    diag = np.empty_like(fields)
    for fid in FieldId:
        delta = 1e-7 * np.maximum(1.0, np.abs(fields[fid]))
        bumped = fields.copy()
        bumped[fid] += delta
        diag[fid] = (kinetics(bumped, params.gamma, params, model)[fid] - base[fid]) / delta
    return diag


def choose_dt(
    state: WoundState,
    coeffs: TransformCoeffs,
    params: Parameters,
    closures: Closures | None = None,
    reaction: NDArray[np.float64] | None = None,
    model: KineticsModel = DEFAULT_KINETICS,
) -> float:
    """Step size from the advective CFL bound and the reaction time scale.

    Args:
        state: Current state.
        coeffs: Frozen transform coefficients of the state.
        params: Parameters (cfl_safety and the dt cap).
        closures: Boundary closures carrying the taxis speeds.
        reaction: Kinetics already evaluated on the state.
        model: Kinetic forms.

    Returns:
        Positive dt, at most params.dt_cap.
    """
    speed = np.abs(coeffs.M_faces)
    if closures is not None and closures.taxis_speed is not None:
        speed = speed + closures.taxis_speed / coeffs.width
    max_speed = float(np.max(speed))
    dxi = 1.0 / state.N
    dt_adv = dxi / max_speed if max_speed > 0.0 else math.inf

    if reaction is None:
        reaction = kinetics(state.fields, params.gamma, params, model)
    rates = np.abs(_jacobian_diagonal(state.fields, reaction, params, model))
    rates = rates + np.abs(coeffs.K_centers)
    max_rate = max(float(np.max(rates)), abs(state.velocity.Rdot) / state.R)
    dt_rxn = 1.0 / max_rate if max_rate > 0.0 else math.inf

    return min(params.cfl_safety * dt_adv, params.cfl_safety * dt_rxn, params.dt_cap)


def _audit(fields: NDArray[np.float64], R: float, params: Parameters) -> dict[str, bool]:
    finite = bool(np.all(np.isfinite(fields))) and math.isfinite(R)
    if not finite:
        return {"finite": False}
    return {
        "finite": True,
        "nonnegative": bool(np.min(fields) >= -AUDIT_SLACK),
        "rho_cap": bool(np.max(fields[FieldId.RHO]) <= params.rho_m + AUDIT_SLACK),
        "tip_bound": bool(np.max(fields[FieldId.N]) <= lemma_tip_bound(params) + AUDIT_SLACK),
        "radius": 0.0 < R <= params.R0 and R < params.L,
    }


def _velocity_audit(velocity: VelocityProfile, grid: Grid, params: Parameters) -> dict[str, bool]:
    bound = params.beta * (params.rho_m - 1.0) * (1.0 + VELOCITY_SLACK)
    v_over_r = np.abs(velocity.v_faces / grid.r_faces)
    return {
        "v_over_r": bool(np.max(v_over_r) <= bound),
        "v_r": bool(np.max(np.abs(velocity.vr_centers)) <= 2.0 * bound),
    }


def _sandwich_audit(state: WoundState, params: Parameters) -> dict[str, bool]:
    """R inside R0 exp(-2 I / L^2) .. R0 exp(-I / L^2), I the running Q integral."""
    scale = state.q_integral / (params.L * params.L)
    lower = params.R0 * math.exp(-2.0 * scale)
    upper = params.R0 * math.exp(-scale)
    return {"sandwich": lower * (1.0 - SANDWICH_SLACK) <= state.R <= upper * (1.0 + SANDWICH_SLACK)}


def make_report(
    state: WoundState,
    params: Parameters,
    dt: float = 0.0,
    retries: int = 0,
    audits: dict[str, bool] | None = None,
    outer_taxis: dict[FieldId, float] | None = None,
) -> StepReport:
    """Summarise a state as a StepReport.

    The velocity and sandwich audits are recorded here; they never force a
    retry. bc_residual uses the outer taxis fluxes of the closures that
    produced the state.
    """
    grid = state.grid(params.L)
    mins, maxs, integrals = summarize_fields(state.fields, grid)
    verdicts = dict(audits or {})
    verdicts.update(_velocity_audit(state.velocity, grid, params))
    verdicts.update(_sandwich_audit(state, params))
    return StepReport(
        t=state.t,
        dt=dt,
        R=state.R,
        Q=state.velocity.Q,
        Rdot=state.velocity.Rdot,
        rho_L=float(state.fields[FieldId.RHO, -1]),
        field_min=mins,
        field_max=maxs,
        field_integral=integrals,
        bc_residual=outer_robin_residual(state.fields, grid, params.gamma, params, outer_taxis),
        audits=verdicts,
        retries=retries,
    )


def _advance(
    state: WoundState,
    dt: float,
    transport: NDArray[np.float64],
    reaction: NDArray[np.float64],
    rho_rate: NDArray[np.float64],
    systems: dict[FieldId, tuple[NDArray[np.float64], NDArray[np.float64]]],
) -> tuple[NDArray[np.float64], float]:
    new = np.empty_like(state.fields)
    new[FieldId.RHO] = state.fields[FieldId.RHO] + dt * rho_rate
    for fid in DIFFUSING_FIELDS:
        ab, s = systems[fid]
        lhs = -dt * ab
        lhs[1] += 1.0
        rhs = state.fields[fid] + dt * (transport[fid] + reaction[fid] + s)
        new[fid] = solve_banded((1, 1), lhs, rhs)
    return new, state.R + dt * state.velocity.Rdot


def step(
    state: WoundState,
    params: Parameters,
    dt: float | None = None,
    model: KineticsModel = DEFAULT_KINETICS,
    t_end: float | None = None,
) -> tuple[WoundState, StepReport]:
    """Advance the state by one accepted step.

    Args:
        state: Current state; its cached velocity must match its rho.
        params: Resolved parameters.
        dt: Requested step size; chosen by choose_dt when omitted.
        model: Kinetic forms.
        t_end: Time the step must not overshoot.

    Returns:
        (new state, report of the new state).

    Raises:
        NonFiniteState: If the state is not finite, or the step only
            produces non-finite values.
        StepFailure: If dt falls below dt_min with the audit still failing.
    """
    if not (np.all(np.isfinite(state.fields)) and math.isfinite(state.R)):
        raise NonFiniteState(f"non-finite state at t={state.t}")

    grid = state.grid(params.L)
    coeffs = transform_coeffs(grid, state.velocity, params)
    closures = boundary_fluxes(state.fields, state.R, grid, coeffs, params)
    reaction = kinetics(state.fields, params.gamma, params, model)

    if dt is None:
        dt = choose_dt(state, coeffs, params, closures, reaction, model)
        if t_end is not None:
            dt = min(dt, max(t_end - state.t, 0.0))
    if dt == 0.0:
        return state, make_report(state, params, 0.0, outer_taxis=closures.outer_taxis)

    transport = advection_taxis_operator(state.fields, coeffs, grid, closures)
    rho_rate = rho_transport_rate(state.fields[FieldId.RHO], coeffs, grid, reaction[FieldId.RHO])
    systems = {
        fid: diffusion_system(fid, coeffs, grid, closures.inner[fid], closures.outer[fid])
        for fid in DIFFUSING_FIELDS
    }

    audits: dict[str, bool] = {}
    for retries in range(params.max_retries + 1):
        fields, R = _advance(state, dt, transport, reaction, rho_rate, systems)
        audits = _audit(fields, R, params)
        if all(audits.values()):
            velocity = compute_velocity(fields[FieldId.RHO], R, params)
            new_state = WoundState(
                t=state.t + dt,
                R=R,
                fields=fields,
                velocity=velocity,
                q_integral=state.q_integral + 0.5 * dt * (state.velocity.Q + velocity.Q),
            )
            report = make_report(new_state, params, dt, retries, audits, closures.outer_taxis)
            return new_state, report

        failed = [name for name, ok in audits.items() if not ok]
        logger.warning(f"Audit failed at t={state.t:.6g} with dt={dt:.3e}: {failed}; halving dt")
        dt *= 0.5
        if dt < params.dt_min:
            break

    if not audits.get("finite", True):
        raise NonFiniteState(f"step from t={state.t} produced non-finite values")
    raise StepFailure(f"dt fell below dt_min={params.dt_min:g} at t={state.t:.6g}", state=state)


class _StallTracker:
    """Tracks how long the stall thresholds have held."""

    def __init__(self, params: Parameters) -> None:
        self.rdot_tol = params.stall_tol * params.R0
        self.q_tol = params.q_tol
        self.window = params.stall_window
        self.since: float | None = None

    def update(self, report: StepReport) -> bool:
        if abs(report.Rdot) < self.rdot_tol and report.Q < self.q_tol:
            if self.since is None:
                self.since = report.t
            return report.t - self.since >= self.window
        self.since = None
        return False


def classify(report: StepReport, params: Parameters, stall: _StallTracker) -> Outcome | None:
    """Terminal outcome implied by the latest report, if any."""
    if report.R <= params.closure_fraction * params.R0:
        return Healed(t_heal=report.t)
    if stall.update(report):
        return Stalled(R_inf=report.R, t_stall=stall.since)
    return None


def run(
    params: Parameters,
    T_max: float | None = None,
    model: KineticsModel = DEFAULT_KINETICS,
) -> RunResult:
    """Simulate until healed, stalled or the horizon is reached.

    Args:
        params: Validated parameters; enforce_homeostasis is applied here.
        T_max: Horizon, defaults to params.T_max.
        model: Kinetic forms.

    Returns:
        RunResult with the outcome and one report per accepted step,
        starting with the initial state at t = 0.

    Raises:
        StepFailure: With the partial series attached as ``reports``.
    """
    params = resolve_parameters(params)
    horizon = params.T_max if T_max is None else T_max
    if model.reconstructed:
        logger.debug(f"Reconstructed kinetics in use for: {', '.join(model.reconstructed)}")
    logger.info(f"Run start: gamma={params.gamma}, N={params.N}, T_max={horizon}")

    state = init_state(params)
    report = make_report(state, params)
    reports = [report]
    stall = _StallTracker(params)
    outcome = classify(report, params, stall)

    while outcome is None and state.t < horizon:
        try:
            state, report = step(state, params, model=model, t_end=horizon)
        except StepFailure as exc:
            exc.reports = reports
            raise
        reports.append(report)
        if len(reports) % LOG_EVERY == 0:
            logger.debug(f"t={state.t:.4f} R={state.R:.6f} Q={report.Q:.4e} dt={report.dt:.3e}")
        outcome = classify(report, params, stall)

    if outcome is None:
        outcome = Undecided(T_max=horizon, R_end=state.R)
    logger.info(f"Run finished: {outcome.kind} at t={state.t:.4f} after {len(reports) - 1} steps")
    return RunResult(outcome=outcome, reports=reports, final_state=state, params=params)
