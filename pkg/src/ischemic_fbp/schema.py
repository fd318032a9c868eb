"""Pydantic models for parameters, step reports, outcomes and sweeps.

This module defines the core data structures shared by the simulation
pipeline, the diagnostics and the command-line interface.
"""

from enum import Enum, IntEnum
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator


class FieldId(IntEnum):
    """The eight model fields, in storage order.

    The integer value is the row of the field in the state array.
    """

    W = 0
    P = 1
    E = 2
    M = 3
    F = 4
    N = 5
    B = 6
    RHO = 7

    @property
    def label(self) -> str:
        """Lower-case name used in CSV headers and config files."""
        return self.name.lower()

    @property
    def diffuses(self) -> bool:
        return self is not FieldId.RHO


DIFFUSING_FIELDS: tuple[FieldId, ...] = tuple(f for f in FieldId if f.diffuses)


class KineticsOrigin(str, Enum):
    """Provenance marker of a reaction term."""

    ATTESTED = "attested"
    RECONSTRUCTED = "reconstructed_default"


# Parameters whose defaults are placeholders rather than published values.
RECONSTRUCTED_PARAMETERS: tuple[str, ...] = (
    "k_p",
    "lambda_p",
    "k_e",
    "lambda_e",
    "k_m",
    "lambda_m",
    "lambda_ww",
    "k_pb",
    "eps0",
)


class Parameters(BaseModel):
    """Model constants and numerics knobs.

    Every default is the published nondimensional reference value, except
    the names in RECONSTRUCTED_PARAMETERS.

    Attributes:
        L: Outer radius of the tissue annulus.
        R0: Initial wound radius.
        eps0: Width of the initial sprout/PDGF transition layer.
        gamma: Ischemia level, 0 healthy and 1 extreme.
        beta: Pressure stiffness in P = beta * (rho - 1)+.
        rho_m: Maximal matrix density.
        initial_profile: "wound" for the standard wound data, "homeostatic"
            for uniform healthy tissue (b = 1, p = 0 everywhere).
        enforce_homeostasis: Recompute lambda_rho, k_w and k_f from the
            homeostasis constraints before simulating.
        N: Number of finite-volume cells on the fixed grid.
        dt_max: Upper bound on the time step at dt_ref_cells cells.
        dt_scaling: How the dt cap follows grid refinement: "none" keeps
            dt_max, "linear" and "quadratic" scale it by (dt_ref_cells / N)
            to the first or second power.
        dt_ref_cells: Resolution at which the cap equals dt_max.
        dt_min: Step size below which a failing step aborts the run.
        cfl_safety: Safety factor applied to every step-size bound.
        T_max: Time horizon of a run.
        max_retries: Maximal number of dt halvings within one step.
        closure_fraction: Healed once R <= closure_fraction * R0.
        stall_tol: Stall threshold on |Rdot|, relative to R0.
        q_tol: Stall threshold on Q.
        stall_window: Time the stall thresholds must hold.
        q_noise_floor: Q below this counts as zero in monotonicity checks.
        homeostasis_tol: Relative residual accepted by validate_homeostasis.
        theorem_tol: Relative slack of the theorem-derived checks.
        oracle_r_tol: Accepted relative R discrepancy against the oracle.
        oracle_field_tol: Accepted relative field discrepancy against the oracle.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    # Geometry and mechanics
    L: float = Field(5.0, gt=0)
    R0: float = Field(8.0 / 3.0, gt=0)
    eps0: float = Field(0.5, gt=0)
    gamma: float = Field(0.0, ge=0.0, le=1.0)
    beta: float = Field(10.0, ge=0)
    rho_m: float = Field(2.0, gt=1.0)

    # Diffusivities
    D_w: float = Field(0.5, gt=0)
    D_p: float = Field(1.0, gt=0)
    D_e: float = Field(1.0, gt=0)
    D_m: float = Field(0.05, gt=0)
    D_f: float = Field(0.05, gt=0)
    D_n: float = Field(1e-3, gt=0)
    D_b: float = Field(7e-4, gt=0)

    # Chemotaxis and saturation caps
    chi_m: float = Field(0.1, ge=0)
    chi_f: float = Field(0.1, ge=0)
    chi_n: float = Field(1.0, ge=0)
    m_m: float = Field(10.0, gt=0)
    f_m: float = Field(10.0, gt=1.0)
    n_m: float = Field(10.0, gt=0)
    A: float = Field(0.1, ge=0)
    k_sg: float = Field(6.25e-2, ge=0)

    # Rates
    w_b: float = Field(2.0, gt=1.0)
    k_w: float = Field(4.39, ge=0)
    k_rho: float = Field(5.0 / 16.0, ge=0)
    lambda_rho: float = Field(0.1, ge=0)
    K_wrho: float = Field(0.25, gt=0)
    K_wf: float = Field(0.25, gt=0)
    lambda_wf: float = Field(0.227, ge=0)
    lambda_wm: float = Field(4.16, ge=0)
    lambda_ww: float = Field(1.0, ge=0)
    lambda_d: float = Field(2.0, ge=0)
    k_f: float = Field(5.78e-3, ge=0)
    lambda_f: float = Field(5.2e-3, ge=0)
    k_nb: float = Field(2.16e-2, ge=0)
    k_n: float = Field(2.16e-2, ge=0)
    k_b: float = Field(0.216, ge=0)
    lambda_nn: float = Field(2.25, gt=0)
    lambda_nb: float = Field(0.0225, gt=0)
    k_pb: float = Field(1.0, ge=0)
    k_p: float = Field(1.0, ge=0)
    lambda_p: float = Field(1.0, ge=0)
    k_e: float = Field(1.0, ge=0)
    lambda_e: float = Field(1.0, ge=0)
    k_m: float = Field(1.0, ge=0)
    lambda_m: float = Field(1.0, ge=0)

    # Scenario switches
    initial_profile: Literal["wound", "homeostatic"] = "wound"
    enforce_homeostasis: bool = False

    # Numerics
    N: int = Field(200, ge=8)
    dt_max: float = Field(0.05, gt=0)
    dt_scaling: Literal["none", "linear", "quadratic"] = "none"
    dt_ref_cells: int = Field(100, ge=8)
    dt_min: float = Field(1e-10, gt=0)
    cfl_safety: float = Field(0.5, gt=0, le=1.0)
    T_max: float = Field(50.0, ge=0)
    max_retries: int = Field(30, ge=0)
    closure_fraction: float = Field(0.02, ge=0, le=1.0)
    stall_tol: float = Field(1e-6, gt=0)
    q_tol: float = Field(1e-8, gt=0)
    stall_window: float = Field(5.0, ge=0)
    q_noise_floor: float = Field(1e-12, ge=0)
    homeostasis_tol: float = Field(0.01, gt=0)
    theorem_tol: float = Field(0.05, ge=0)
    oracle_r_tol: float = Field(0.005, gt=0)
    oracle_field_tol: float = Field(0.02, gt=0)

    @model_validator(mode="after")
    def _check_geometry(self) -> "Parameters":
        if not self.R0 < self.L:
            raise ValueError(f"R0 ({self.R0}) must be smaller than L ({self.L})")
        if not self.eps0 < self.L - self.R0:
            raise ValueError(
                f"eps0 ({self.eps0}) must be smaller than L - R0 ({self.L - self.R0})"
            )
        if self.dt_min >= self.dt_cap:
            raise ValueError(f"dt_min must be smaller than the step cap {self.dt_cap:g}")
        return self

    @property
    def dt_cap(self) -> float:
        """Upper bound on the time step at resolution N."""
        power = {"none": 0, "linear": 1, "quadratic": 2}[self.dt_scaling]
        return self.dt_max * (self.dt_ref_cells / self.N) ** power

    def diffusivity(self, field: FieldId) -> float:
        """Physical diffusivity of a diffusing field."""
        return {
            FieldId.W: self.D_w,
            FieldId.P: self.D_p,
            FieldId.E: self.D_e,
            FieldId.M: self.D_m,
            FieldId.F: self.D_f,
            FieldId.N: self.D_n,
            FieldId.B: self.D_b,
        }[field]

    def rest_value(self, field: FieldId) -> float:
        """Healthy-tissue value u* used by the outer boundary condition."""
        return 1.0 if field in (FieldId.W, FieldId.F, FieldId.B, FieldId.RHO) else 0.0


class StepReport(BaseModel):
    """Diagnostics of the state at the end of one accepted step.

    Attributes:
        t: Time at the end of the step.
        dt: Step size used (0 for the initial report).
        R: Wound radius.
        Q: Pressure integral of the post-step matrix density.
        Rdot: Boundary speed implied by Q.
        rho_L: Matrix density in the outermost cell.
        field_min: Minimum per field label.
        field_max: Maximum per field label.
        field_integral: Integral of r*u over the annulus per field label.
        bc_residual: Largest outer Robin residual over the diffusing fields,
            measured on the two outermost cells.
        audits: Invariant verdicts by audit name.
        retries: Number of dt halvings before acceptance.
    """

    t: float
    dt: float
    R: float
    Q: float
    Rdot: float
    rho_L: float
    field_min: dict[str, float]
    field_max: dict[str, float]
    field_integral: dict[str, float]
    bc_residual: float = 0.0
    audits: dict[str, bool] = Field(default_factory=dict)
    retries: int = 0


class Healed(BaseModel):
    """Wound reached the closure threshold."""

    kind: Literal["healed"] = "healed"
    t_heal: float


class Stalled(BaseModel):
    """Boundary froze at a positive radius."""

    kind: Literal["stalled"] = "stalled"
    R_inf: float
    t_stall: float


class Undecided(BaseModel):
    """Horizon reached before healing or stalling."""

    kind: Literal["undecided"] = "undecided"
    T_max: float
    R_end: float


Outcome = Annotated[Union[Healed, Stalled, Undecided], Field(discriminator="kind")]


class HomeostasisCheck(BaseModel):
    """One homeostasis constraint evaluated on a parameter set."""

    constraint: str
    parameter: str
    listed: float
    implied: float
    residual: float
    verdict: Literal["pass", "warn"]


class CheckResult(BaseModel):
    """Verdict of a post-hoc diagnostic check.

    Attributes:
        name: Check identifier.
        verdict: pass, warn or fail.
        value: Worst observed ratio or discrepancy.
        detail: Human-readable explanation.
    """

    name: str
    verdict: Literal["pass", "warn", "fail"]
    value: float = 0.0
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


class SweepEntry(BaseModel):
    """Outcome of one gamma in a sweep."""

    gamma: float = Field(ge=0.0, le=1.0)
    outcome: Outcome
    t_end: float
    n_steps: int


class SweepResult(BaseModel):
    """Per-gamma outcomes sorted by gamma.

    Attributes:
        entries: One entry per gamma, ascending.
        bracket: (gamma_lo healed, gamma_hi not healed) adjacent pair, if any.
        verdicts: Monotonicity checks over the sweep.
    """

    entries: list[SweepEntry] = Field(default_factory=list)
    bracket: tuple[float, float] | None = None
    verdicts: list[CheckResult] = Field(default_factory=list)

    @property
    def gammas(self) -> list[float]:
        return [e.gamma for e in self.entries]


class BisectionStep(BaseModel):
    """One midpoint evaluation of the gamma-star bisection."""

    iteration: int
    gamma: float
    outcome: str
    lo: float
    hi: float


class GammaStarEstimate(BaseModel):
    """Bisection estimate of the critical ischemia level."""

    estimate: float
    half_width: float
    lo: float
    hi: float
    trace: list[BisectionStep] = Field(default_factory=list)
