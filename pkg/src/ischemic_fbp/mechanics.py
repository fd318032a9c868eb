"""Matrix mechanics: pressure integral, closed-form velocity, boundary speed.

The momentum problem is never solved; the velocity comes from the
closed-form integral representation evaluated by cumulative midpoint sums
over the finite-volume cells.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ischemic_fbp.constitutive import pressure
from ischemic_fbp.errors import DegenerateDomain, NonFiniteInput
from ischemic_fbp.fixedgrid import Grid, build_grid
from ischemic_fbp.schema import Parameters

DEGENERATE_WIDTH = 1e-12


@dataclass(frozen=True)
class VelocityProfile:
    """Matrix velocity sampled on a grid.

    Attributes:
        v_faces: v at the N + 1 cell faces; v_faces[0] is Rdot, v_faces[-1] is 0.
        v_centers: v at the N cell centers.
        vr_centers: dv/dr at the cell centers.
        Q: Pressure integral over the annulus.
        Rdot: Wound-edge speed.
    """

    v_faces: NDArray[np.float64]
    v_centers: NDArray[np.float64]
    vr_centers: NDArray[np.float64]
    Q: float
    Rdot: float

    @classmethod
    def at_rest(cls, n_cells: int) -> "VelocityProfile":
        return cls(
            v_faces=np.zeros(n_cells + 1),
            v_centers=np.zeros(n_cells),
            vr_centers=np.zeros(n_cells),
            Q=0.0,
            Rdot=0.0,
        )


def _check_inputs(rho: NDArray[np.float64], R: float, L: float) -> None:
    if not np.all(np.isfinite(rho)) or not math.isfinite(R):
        raise NonFiniteInput("matrix density or radius is not finite")
    if L - R < DEGENERATE_WIDTH * L:
        raise DegenerateDomain(f"annulus width {L - R:.3e} is degenerate (R={R}, L={L})")


def _cumulative_integral(pres: NDArray[np.float64], grid: Grid) -> NDArray[np.float64]:
    """Midpoint sums of r P dr from R to every face; the last entry is Q."""
    cell = grid.r_centers * pres * grid.width * grid.dxi
    return np.concatenate(([0.0], np.cumsum(cell)))


def boundary_speed(Q: float, R: float, L: float) -> float:
    """Rdot = -2 R Q / (L^2 + R^2)."""
    return -2.0 * R * Q / (L * L + R * R)


def compute_Q(rho: ArrayLike, R: float, L: float, beta: float) -> float:
    """Pressure integral of y * P(rho(y)) over [R, L].

    Args:
        rho: Matrix density at the cell centers of a uniform xi grid.
        R: Wound radius.
        L: Outer radius.
        beta: Pressure stiffness.

    Returns:
        Q >= 0.

    Raises:
        DegenerateDomain: If L - R is below the machine-scale floor.
    """
    rho = np.asarray(rho, dtype=float)
    _check_inputs(rho, R, L)
    grid = build_grid(len(rho), R, L, check_cells=False)
    return float(_cumulative_integral(pressure(rho, beta), grid)[-1])


def compute_velocity(rho: ArrayLike, R: float, params: Parameters) -> VelocityProfile:
    """Closed-form matrix velocity for the current density.

    Both partial integrals I(R -> r) and I(r -> L) come from one cumulative
    pass; center values add the exact half-cell contribution of the
    cell-constant pressure.

    Args:
        rho: Matrix density at cell centers.
        R: Wound radius.
        params: Model parameters (L, beta).

    Returns:
        VelocityProfile on the grid implied by len(rho).

    Raises:
        DegenerateDomain: If L - R is below the machine-scale floor.
    """
    rho = np.asarray(rho, dtype=float)
    L = params.L
    _check_inputs(rho, R, L)
    grid = build_grid(len(rho), R, L, check_cells=False)
    pres = pressure(rho, params.beta)

    inner = _cumulative_integral(pres, grid)
    Q = float(inner[-1])
    Rdot = boundary_speed(Q, R, L)
    denom = L * L + R * R

    def velocity(r: NDArray[np.float64], below: NDArray[np.float64]) -> NDArray[np.float64]:
        above = Q - below
        return ((L * L - r * r) * below - (r * r + R * R) * above) / (denom * r)

    v_faces = velocity(grid.r_faces, inner)
    v_faces[0] = Rdot
    v_faces[-1] = 0.0

    half = pres * (grid.r_centers**2 - grid.r_faces[:-1] ** 2) / 2.0
    v_centers = velocity(grid.r_centers, inner[:-1] + half)
    vr_centers = pres - 2.0 * Q / denom - v_centers / grid.r_centers

    return VelocityProfile(
        v_faces=v_faces,
        v_centers=v_centers,
        vr_centers=vr_centers,
        Q=Q,
        Rdot=Rdot,
    )


def sandwich_bounds(
    times: ArrayLike, q_history: ArrayLike, R0: float, L: float
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Admissible band for R(t) from the pressure-integral history.

    Args:
        times: Accepted step times, ascending, starting at 0.
        q_history: Q at those times.
        R0: Initial radius.
        L: Outer radius.

    Returns:
        (lower, upper) arrays R0 exp(-2 I / L^2) and R0 exp(-I / L^2), with
        I the trapezoidal integral of Q up to each time.
    """
    t = np.asarray(times, dtype=float)
    q = np.asarray(q_history, dtype=float)
    integral = np.concatenate(([0.0], np.cumsum(0.5 * (q[1:] + q[:-1]) * np.diff(t))))
    lower = R0 * np.exp(-2.0 * integral / (L * L))
    upper = R0 * np.exp(-integral / (L * L))
    return lower, upper
