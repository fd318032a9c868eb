"""Front-fixing transform and finite-volume spatial operators.

The moving annulus [R(t), L] is mapped onto xi in [0, 1] by
r = (1 - xi) R + xi L. Fields live at the centers of N uniform cells; all
fluxes are evaluated at the N + 1 faces and enter the cell update in the
conservative form

    du_i/dt = -(r F|_{i+1/2} - r F|_{i-1/2}) / (r_i dxi) - K_i u_i + reaction

where F is the xi-flux: advective u M, diffusive -D/(L-R)^2 du/dxi and
taxis J/(L-R).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from numpy.typing import NDArray

from ischemic_fbp.constitutive import bounded_taxis, heaviside_smooth
from ischemic_fbp.errors import InvalidGeometry, NonDiffusingField, NonFiniteInput
from ischemic_fbp.schema import DIFFUSING_FIELDS, FieldId, Parameters

if TYPE_CHECKING:
    from ischemic_fbp.mechanics import VelocityProfile

MIN_CELLS = 8


@dataclass(frozen=True)
class Grid:
    """Uniform partition of xi in [0, 1] mapped onto [R, L].

    Attributes:
        N: Number of cells.
        R: Wound radius.
        L: Outer radius.
        xi_centers: Cell centers (i + 1/2) / N.
        xi_faces: Cell faces i / N, N + 1 values.
        r_centers: Physical radius at the centers.
        r_faces: Physical radius at the faces.
    """

    N: int
    R: float
    L: float
    xi_centers: NDArray[np.float64]
    xi_faces: NDArray[np.float64]
    r_centers: NDArray[np.float64]
    r_faces: NDArray[np.float64]

    @property
    def dxi(self) -> float:
        return 1.0 / self.N

    @property
    def width(self) -> float:
        """L - R."""
        return self.L - self.R

    def to_r(self, xi: NDArray[np.float64] | float) -> NDArray[np.float64]:
        return (1.0 - np.asarray(xi)) * self.R + np.asarray(xi) * self.L


def build_grid(N: int, R: float, L: float, check_cells: bool = True) -> Grid:
    """Build the fixed xi grid for the current wound radius.

    Args:
        N: Number of cells.
        R: Wound radius, 0 < R < L.
        L: Outer radius.
        check_cells: Enforce the minimal resolution N >= 8.

    Returns:
        Grid with r(0) = R and r(1) = L exactly.

    Raises:
        InvalidGeometry: If R <= 0 or R >= L.
        ValueError: If N is below the minimal resolution.
    """
    if not (math.isfinite(R) and 0.0 < R < L):
        raise InvalidGeometry(f"Need 0 < R < L, got R={R}, L={L}")
    if N < (MIN_CELLS if check_cells else 1):
        raise ValueError(f"Grid needs at least {MIN_CELLS} cells, got {N}")

    xi_faces = np.linspace(0.0, 1.0, N + 1)
    xi_centers = (np.arange(N) + 0.5) / N
    r_faces = (1.0 - xi_faces) * R + xi_faces * L
    r_faces[0] = R
    r_faces[-1] = L
    r_centers = (1.0 - xi_centers) * R + xi_centers * L
    return Grid(
        N=N,
        R=R,
        L=L,
        xi_centers=xi_centers,
        xi_faces=xi_faces,
        r_centers=r_centers,
        r_faces=r_faces,
    )


@dataclass(frozen=True)
class TransformCoeffs:
    """Coefficients of the transformed system frozen for one step.

    Attributes:
        K_centers: Dilation coefficient K at cell centers.
        M_faces: Comoving advection speed M at faces; zero at both ends.
        D_tilde: D_u / (L - R)^2 per diffusing field.
        Rdot: Boundary speed.
        width: L - R.
    """

    K_centers: NDArray[np.float64]
    M_faces: NDArray[np.float64]
    D_tilde: dict[FieldId, float]
    Rdot: float
    width: float


def _dilation(xi: NDArray[np.float64], r: NDArray[np.float64], Rdot: float, width: float) -> NDArray[np.float64]:
    return Rdot / width * ((1.0 - xi) * width / r - 1.0)


def transform_coeffs(grid: Grid, velocity: "VelocityProfile", params: Parameters) -> TransformCoeffs:
    """Freeze K, M and the scaled transport coefficients.

    Args:
        grid: Grid for the current R.
        velocity: Velocity profile computed on the same grid.
        params: Model parameters.

    Returns:
        TransformCoeffs for the current step.
    """
    width = grid.width
    Rdot = velocity.Rdot
    scale = width * width
    return TransformCoeffs(
        K_centers=_dilation(grid.xi_centers, grid.r_centers, Rdot, width),
        M_faces=(Rdot * (grid.xi_faces - 1.0) + velocity.v_faces) / width,
        D_tilde={f: params.diffusivity(f) / scale for f in DIFFUSING_FIELDS},
        Rdot=Rdot,
        width=width,
    )


@dataclass(frozen=True)
class BoundaryFlux:
    """Diffusive xi-flux through one end face, linear in the adjacent cell.

    The flux is coeff * u_adjacent + offset. For the outer face, value is
    the eliminated ghost value.
    """

    coeff: float = 0.0
    offset: float = 0.0
    value: float = 0.0
    taxis: float = 0.0

    def flux(self, u_adjacent: float) -> float:
        return self.coeff * u_adjacent + self.offset


def boundary_closure_outer(
    u_last: float,
    field_id: FieldId,
    gamma: float,
    grid: Grid,
    coeffs: TransformCoeffs,
    params: Parameters,
    taxis_flux: float = 0.0,
) -> BoundaryFlux:
    """Eliminate the ghost value of the ischemic Robin condition at r = L.

    The condition (1 - gamma)(u - u*) + gamma L (du/dr - J/D_u) = 0 is
    discretised with the face value u_L and the half-cell gradient
    (u_L - u_last) / h, h = (L - R) dxi / 2. It is solved for u_L, which is
    affine in u_last, so the diffusive flux stays linear for the implicit
    solve.

    Args:
        u_last: Field value in the outermost cell.
        field_id: Field whose closure is built.
        gamma: Ischemia level in [0, 1].
        grid: Current grid.
        coeffs: Frozen transform coefficients.
        params: Model parameters.
        taxis_flux: Physical taxis flux J through r = L.

    Returns:
        BoundaryFlux with the eliminated face value.
    """
    if field_id is FieldId.RHO:
        raise NonDiffusingField("rho has no outer diffusive closure")
    h = 0.5 * grid.width * grid.dxi
    L = grid.L
    u_star = params.rest_value(field_id)
    target = taxis_flux / params.diffusivity(field_id)

    den = (1.0 - gamma) + gamma * L / h
    a = gamma * L / (h * den)
    c = ((1.0 - gamma) * u_star + gamma * L * target) / den
    value = a * u_last + c

    d = coeffs.D_tilde[field_id] * 2.0 / grid.dxi
    return BoundaryFlux(
        coeff=d * (1.0 - a),
        offset=-d * c,
        value=value,
        taxis=taxis_flux,
    )


def outer_robin_residual(
    fields: NDArray[np.float64],
    grid: Grid,
    gamma: float,
    params: Parameters,
    taxis: dict[FieldId, float] | None = None,
) -> float:
    """Largest outer Robin residual measured on cell data.

    The boundary value is taken from the outermost cell and the gradient
    from the last two cells, so the residual shows how far the resolved
    fields are from satisfying the condition at r = L.

    Args:
        fields: State array of shape (8, N).
        grid: Grid of the state.
        gamma: Ischemia level.
        params: Model parameters.
        taxis: Physical taxis flux J through r = L per field.

    Returns:
        Max over the diffusing fields of |(1 - gamma)(u - u*) + gamma L (du/dr - J/D_u)|.
    """
    taxis = taxis or {}
    dr = grid.width * grid.dxi
    worst = 0.0
    for fid in DIFFUSING_FIELDS:
        u = fields[fid]
        target = taxis.get(fid, 0.0) / params.diffusivity(fid)
        gradient = (u[-1] - u[-2]) / dr
        residual = (1.0 - gamma) * (u[-1] - params.rest_value(fid)) + gamma * grid.L * (gradient - target)
        worst = max(worst, abs(float(residual)))
    return worst


def wound_gradient(field_id: FieldId, R: float, params: Parameters) -> float:
    """Prescribed du/dr at the wound edge for the attractant fields."""
    if field_id is FieldId.P:
        return -params.k_pb * R / (params.D_p * params.R0)
    return 0.0


def boundary_closure_wound(
    field_id: FieldId,
    R: float,
    grid: Grid,
    params: Parameters,
    taxis_flux: float = 0.0,
) -> BoundaryFlux:
    """Flux conditions at the wound edge xi = 0.

    w, e, n, b carry no flux; p receives the platelet secretion
    k_pb R / R0; m and f have zero total flux so their diffusive flux
    cancels the taxis flux.

    Args:
        field_id: Field whose closure is built.
        R: Wound radius.
        grid: Current grid.
        params: Model parameters.
        taxis_flux: Physical taxis flux J through r = R.

    Returns:
        BoundaryFlux with a constant diffusive xi-flux.
    """
    if field_id is FieldId.RHO:
        raise NonDiffusingField("rho has no wound diffusive closure")
    if R <= 0.0:
        raise InvalidGeometry(f"Wound radius must be positive, got {R}")
    width = grid.width
    if field_id is FieldId.P:
        # -D_p dp/dr scaled to xi
        offset = -params.D_p * wound_gradient(FieldId.P, R, params) / width
    elif field_id in (FieldId.M, FieldId.F):
        offset = -taxis_flux / width
    else:
        offset = 0.0
    return BoundaryFlux(offset=offset, taxis=taxis_flux)


@dataclass(frozen=True)
class Closures:
    """Boundary closures and taxis fluxes of one state.

    Attributes:
        inner: Wound-edge closure per diffusing field.
        outer: Outer closure per diffusing field.
        taxis: Physical taxis flux J at every face per field.
        taxis_speed: Largest transport speed at every face over all taxis terms.
    """

    inner: dict[FieldId, BoundaryFlux]
    outer: dict[FieldId, BoundaryFlux]
    taxis: dict[FieldId, NDArray[np.float64]] = field(default_factory=dict)
    taxis_speed: NDArray[np.float64] | None = None

    @property
    def outer_taxis(self) -> dict[FieldId, float]:
        """Taxis flux through r = L per diffusing field."""
        return {fid: b.taxis for fid, b in self.outer.items()}


def _face_gradient(
    u: NDArray[np.float64], grid: Grid, inner: float, outer_value: float
) -> NDArray[np.float64]:
    """Physical du/dr at every face."""
    grad = np.empty(grid.N + 1)
    grad[1:-1] = np.diff(u) / (grid.dxi * grid.width)
    grad[0] = inner
    grad[-1] = (outer_value - u[-1]) / (0.5 * grid.dxi * grid.width)
    return grad


def _upwind(c: NDArray[np.float64], q: NDArray[np.float64]) -> NDArray[np.float64]:
    """Face flux c * q with q taken from the upwind cell, edge cells at the ends."""
    left = np.concatenate(([q[0]], q))
    right = np.concatenate((q, [q[-1]]))
    return np.maximum(c, 0.0) * left + np.minimum(c, 0.0) * right


def _saturation(u: NDArray[np.float64], cap: float) -> NDArray[np.float64]:
    return heaviside_smooth(1.0 - u / cap)


def boundary_fluxes(
    fields: NDArray[np.float64],
    R: float,
    grid: Grid,
    coeffs: TransformCoeffs,
    params: Parameters,
) -> Closures:
    """Build every boundary closure and the taxis fluxes they depend on.

    Attractants are closed first (p, e, then n) so that their face values
    give the gradients driving the taxis of m, f, n and b.

    Args:
        fields: State array of shape (8, N).
        R: Wound radius.
        grid: Current grid.
        coeffs: Frozen transform coefficients.
        params: Model parameters.

    Returns:
        Closures for the seven diffusing fields.
    """
    gamma = params.gamma
    k_sg = params.k_sg
    rho = fields[FieldId.RHO]
    inner: dict[FieldId, BoundaryFlux] = {}
    outer: dict[FieldId, BoundaryFlux] = {}
    taxis: dict[FieldId, NDArray[np.float64]] = {}
    zero_faces = np.zeros(grid.N + 1)

    def close(fid: FieldId, flux: NDArray[np.float64]) -> None:
        taxis[fid] = flux
        inner[fid] = boundary_closure_wound(fid, R, grid, params, taxis_flux=float(flux[0]))
        outer[fid] = boundary_closure_outer(
            float(fields[fid, -1]), fid, gamma, grid, coeffs, params, taxis_flux=float(flux[-1])
        )

    for fid in (FieldId.W, FieldId.P, FieldId.E):
        close(fid, zero_faces)

    grad_p = _face_gradient(
        fields[FieldId.P], grid, wound_gradient(FieldId.P, R, params), outer[FieldId.P].value
    )
    grad_e = _face_gradient(fields[FieldId.E], grid, 0.0, outer[FieldId.E].value)
    rho_max = float(np.max(rho))

    n = fields[FieldId.N]
    q_tips = rho * n * _saturation(n, params.n_m)
    c_tips = params.chi_n * bounded_taxis(grad_e, k_sg)
    close(FieldId.N, _upwind(c_tips, q_tips))
    grad_n = _face_gradient(n, grid, 0.0, outer[FieldId.N].value)

    c_p = bounded_taxis(grad_p, k_sg)
    speed = np.abs(c_tips) * rho_max
    for fid, chi, cap in ((FieldId.M, params.chi_m, params.m_m), (FieldId.F, params.chi_f, params.f_m)):
        u = fields[fid]
        close(fid, _upwind(chi * c_p, rho * u * _saturation(u, cap)))
        speed = np.maximum(speed, chi * np.abs(c_p) * rho_max)

    b = fields[FieldId.B]
    c_drag = -params.A * params.D_n * bounded_taxis(grad_n, k_sg)
    c_follow = params.A * params.chi_n * bounded_taxis(grad_e, k_sg)
    close(FieldId.B, _upwind(c_drag, b) + _upwind(c_follow, b * q_tips))
    speed = np.maximum(speed, np.abs(c_drag) + np.abs(c_follow) * float(np.max(q_tips)))

    return Closures(inner=inner, outer=outer, taxis=taxis, taxis_speed=speed)


def _divergence(flux: NDArray[np.float64], grid: Grid) -> NDArray[np.float64]:
    """-(r F) differenced over each cell, divided by r_i dxi."""
    rf = grid.r_faces * flux
    return -(rf[1:] - rf[:-1]) / (grid.r_centers * grid.dxi)


def advection_flux(u: NDArray[np.float64], coeffs: TransformCoeffs) -> NDArray[np.float64]:
    """Upwind xi-flux u M at every face; zero through both ends."""
    flux = _upwind(coeffs.M_faces, u)
    flux[0] = 0.0
    flux[-1] = 0.0
    return flux


def diffusion_system(
    field_id: FieldId,
    coeffs: TransformCoeffs,
    grid: Grid,
    inner: BoundaryFlux,
    outer: BoundaryFlux,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Tridiagonal form of the diffusion operator, rate = A u + s.

    Args:
        field_id: Diffusing field.
        coeffs: Frozen transform coefficients.
        grid: Current grid.
        inner: Wound-edge closure.
        outer: Outer closure.

    Returns:
        (ab, s) with ab in scipy.linalg.solve_banded (1, 1) layout.

    Raises:
        NonDiffusingField: If field_id is RHO.
    """
    if field_id is FieldId.RHO:
        raise NonDiffusingField("rho does not diffuse")
    d = coeffs.D_tilde[field_id]
    scale = 1.0 / (grid.r_centers * grid.dxi)
    link = d * grid.r_faces[1:-1] / grid.dxi

    upper = np.zeros(grid.N)
    lower = np.zeros(grid.N)
    upper[:-1] = link * scale[:-1]
    lower[1:] = link * scale[1:]
    diag = -(upper + lower)
    s = np.zeros(grid.N)

    diag[0] += grid.r_faces[0] * inner.coeff * scale[0]
    s[0] += grid.r_faces[0] * inner.offset * scale[0]
    diag[-1] -= grid.r_faces[-1] * outer.coeff * scale[-1]
    s[-1] -= grid.r_faces[-1] * outer.offset * scale[-1]

    ab = np.zeros((3, grid.N))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    return ab, s


def banded_matvec(ab: NDArray[np.float64], u: NDArray[np.float64]) -> NDArray[np.float64]:
    """Multiply a (1, 1)-banded matrix by a vector."""
    out = ab[1] * u
    out[:-1] += ab[0, 1:] * u[1:]
    out[1:] += ab[2, :-1] * u[:-1]
    return out


def diffusion_operator(
    u: NDArray[np.float64],
    field_id: FieldId,
    coeffs: TransformCoeffs,
    grid: Grid,
    inner: BoundaryFlux | None = None,
    outer: BoundaryFlux | None = None,
) -> NDArray[np.float64]:
    """Diffusion rate of one field in conservative flux-difference form.

    Missing closures mean zero flux through that end.

    Raises:
        NonDiffusingField: If field_id is RHO.
    """
    ab, s = diffusion_system(field_id, coeffs, grid, inner or BoundaryFlux(), outer or BoundaryFlux())
    return banded_matvec(ab, np.asarray(u, dtype=float)) + s


def _check_finite(arr: NDArray[np.float64], what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput(f"{what} contains non-finite values")


def advection_taxis_operator(
    fields: NDArray[np.float64],
    coeffs: TransformCoeffs,
    grid: Grid,
    closures: Closures,
) -> NDArray[np.float64]:
    """Explicit transport rates of all eight fields.

    Includes the upwind M-advection, the -K u dilation term and, for m, f,
    n and b, the bounded taxis fluxes. Diffusion is excluded.

    Args:
        fields: State array of shape (8, N).
        coeffs: Frozen transform coefficients.
        grid: Current grid.
        closures: Boundary closures holding the taxis face fluxes.

    Returns:
        Array of shape (8, N).

    Raises:
        NonFiniteInput: If fields contain NaN or infinity.
    """
    _check_finite(fields, "fields")
    rates = np.empty_like(fields, dtype=float)
    for fid in FieldId:
        u = fields[fid]
        flux = advection_flux(u, coeffs)
        if fid in closures.taxis:
            flux = flux + closures.taxis[fid] / coeffs.width
        rates[fid] = _divergence(flux, grid) - coeffs.K_centers * u
    return rates


def rho_transport_rate(
    rho: NDArray[np.float64],
    coeffs: TransformCoeffs,
    grid: Grid,
    reaction: NDArray[np.float64] | float = 0.0,
) -> NDArray[np.float64]:
    """Rate of the matrix density: upwind M-advection, dilation and kinetics.

    Raises:
        NonFiniteInput: If rho contains NaN or infinity.
    """
    rho = np.asarray(rho, dtype=float)
    _check_finite(rho, "rho")
    return _divergence(advection_flux(rho, coeffs), grid) - coeffs.K_centers * rho + reaction
