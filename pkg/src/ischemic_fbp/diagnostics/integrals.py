"""Weighted field integrals and refinement-order estimates."""

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray

from ischemic_fbp.fixedgrid import Grid
from ischemic_fbp.schema import FieldId


def integral_I(u: ArrayLike, grid: Grid) -> float:
    """Integral of r * u over [R, L] by the midpoint rule in xi.

    Args:
        u: Field values at the cell centers.
        grid: Grid the field lives on.

    Returns:
        Sum of r_i u_i (L - R) dxi.
    """
    u = np.asarray(u, dtype=float)
    return float(np.sum(grid.r_centers * u) * grid.width * grid.dxi)


def summarize_fields(
    fields: NDArray[np.float64], grid: Grid
) -> tuple[dict[str, float], dict[str, float], dict[str, float]]:
    """Per-field minimum, maximum and weighted integral keyed by field label."""
    mins = {f.label: float(np.min(fields[f])) for f in FieldId}
    maxs = {f.label: float(np.max(fields[f])) for f in FieldId}
    integrals = {f.label: integral_I(fields[f], grid) for f in FieldId}
    return mins, maxs, integrals


@dataclass(frozen=True)
class IntegralSeries:
    """Time series of field integrals and of the pressure integral.

    Attributes:
        times: Report times, ascending.
        integrals: I_u(t) per field label.
        Q: Pressure integral at the same times.
    """

    times: NDArray[np.float64]
    integrals: dict[str, NDArray[np.float64]]
    Q: NDArray[np.float64]

    def __post_init__(self) -> None:
        n = len(self.times)
        if len(self.Q) != n or any(len(v) != n for v in self.integrals.values()):
            raise ValueError("IntegralSeries arrays must have matching lengths")

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "IntegralSeries":
        """Build from a run frame with t, Q and I_<label> columns."""
        integrals = {
            col[2:]: frame[col].to_numpy(dtype=float)
            for col in frame.columns
            if col.startswith("I_")
        }
        return cls(
            times=frame["t"].to_numpy(dtype=float),
            integrals=integrals,
            Q=frame["Q"].to_numpy(dtype=float),
        )


def observed_order(coarse: float, medium: float, fine: float) -> float:
    """Observed convergence order from three successive halvings of the mesh.

    Returns:
        log2(|coarse - medium| / |medium - fine|); infinity when the two
        finest values coincide.
    """
    num = abs(coarse - medium)
    den = abs(medium - fine)
    if den == 0.0:
        return math.inf
    if num == 0.0:
        return 0.0
    return math.log2(num / den)
