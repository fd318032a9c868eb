"""Constitutive functions, reaction kinetics and initial profiles.

Every function here is pure and vectorised over numpy arrays: scalars go
in and numpy scalars come out, arrays keep their shape.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ischemic_fbp.errors import NonFiniteInput
from ischemic_fbp.schema import FieldId, HomeostasisCheck, KineticsOrigin, Parameters

logger = logging.getLogger(__name__)

H_EPS = 1e-6


def heaviside_smooth(u: ArrayLike) -> NDArray[np.float64]:
    """Smoothed Heaviside u^6 / (1e-6 + u^6) for u >= 0, zero below.

    Args:
        u: Scalar or array argument.

    Returns:
        Values in [0, 1), same shape as u.
    """
    u = np.asarray(u, dtype=float)
    u6 = u**6
    return np.where(u >= 0.0, u6 / (H_EPS + u6), 0.0)[()]


def pressure(rho: ArrayLike, beta: float) -> NDArray[np.float64]:
    """Matrix pressure beta * (rho - 1)+."""
    rho = np.asarray(rho, dtype=float)
    return (beta * np.maximum(rho - 1.0, 0.0))[()]


def oxygen_response(w: ArrayLike, params: Parameters) -> tuple[NDArray[np.float64], ...]:
    """Oxygen-dependent production factors.

    Args:
        w: Oxygen concentration (nonnegative).
        params: Model parameters (K_wf, K_wrho).

    Returns:
        Tuple (G_p, G_e, G_f, G_b, D) where D is the hypoxic death factor.
    """
    w = np.asarray(w, dtype=float)
    below_half = w < 0.5
    below_one = w < 1.0
    below_four = w < 4.0

    g_p = np.select(
        [below_half, below_one, below_four],
        [3.0 * w, 2.0 - w, w / 3.0 + 2.0 / 3.0],
        default=2.0,
    )
    g_e = np.select(
        [below_half, below_one, below_four],
        [2.0 * w, 2.0 - 2.0 * w, w / 3.0 - 1.0 / 3.0],
        default=1.0,
    )
    g_f = (params.K_wf + 1.0) * w / (params.K_wf + w)
    g_b = (params.K_wrho + 1.0) * w / (params.K_wrho + w)
    death = 1.0 - heaviside_smooth(5.0 * w - 1.0) * heaviside_smooth(1.0 - w / 3.0)
    return g_p[()], g_e[()], g_f[()], g_b[()], np.asarray(death)[()]


def bounded_taxis(slope: ArrayLike, k_sg: float) -> NDArray[np.float64]:
    """Attenuated gradient s / sqrt(1 + k_sg s^2).

    Odd in s and bounded by 1/sqrt(k_sg) for k_sg > 0.
    """
    s = np.asarray(slope, dtype=float)
    return (s / np.sqrt(1.0 + k_sg * s * s))[()]


def lemma_tip_bound(params: Parameters) -> float:
    """Upper bound N on the tip density n preserved by the dynamics."""
    return max(
        params.k_nb / params.lambda_nb,
        (params.k_n + params.beta * (params.rho_m - 1.0)) / params.lambda_nn,
        params.n_m,
    )


@dataclass(frozen=True)
class KineticsModel:
    """Reaction right-hand sides of the eight fields.

    Subclass and override ``rates`` to swap in different kinetic forms;
    ``origins`` records which terms are reconstructed placeholders.
    """

    origins: dict[FieldId, KineticsOrigin] = field(
        default_factory=lambda: {
            FieldId.W: KineticsOrigin.ATTESTED,
            FieldId.P: KineticsOrigin.RECONSTRUCTED,
            FieldId.E: KineticsOrigin.RECONSTRUCTED,
            FieldId.M: KineticsOrigin.RECONSTRUCTED,
            FieldId.F: KineticsOrigin.ATTESTED,
            FieldId.N: KineticsOrigin.ATTESTED,
            FieldId.B: KineticsOrigin.RECONSTRUCTED,
            FieldId.RHO: KineticsOrigin.ATTESTED,
        }
    )

    @property
    def reconstructed(self) -> list[str]:
        return [f.label for f, o in self.origins.items() if o is KineticsOrigin.RECONSTRUCTED]

    def rates(self, fields: NDArray[np.float64], gamma: float, params: Parameters) -> NDArray[np.float64]:
        """Evaluate the reaction rates.

        Args:
            fields: Array whose leading axis holds (w, p, e, m, f, n, b, rho).
            gamma: Ischemia level.
            params: Model parameters.

        Returns:
            Array of the same shape with the eight rates.
        """
        w, p, e, m, f, n, b, rho = fields
        g_p, g_e, g_f, g_b, death = oxygen_response(w, params)
        pdgf = p / (1.0 + p)
        vegf = e / (1.0 + e)

        out = np.empty_like(fields, dtype=float)
        out[FieldId.W] = params.k_w * b * ((1.0 - gamma) * params.w_b - w) - (
            (params.lambda_wf * f + params.lambda_wm * m) * (1.0 + params.lambda_ww * pdgf)
            + params.lambda_wm
        ) * w
        out[FieldId.P] = params.k_p * g_p * m - params.lambda_p * p
        out[FieldId.E] = params.k_e * g_e * m - params.lambda_e * e
        out[FieldId.M] = params.k_m * b * pdgf - params.lambda_m * m
        out[FieldId.F] = params.k_f * g_f * f * (1.0 - f / params.f_m) - params.lambda_f * f * (
            1.0 + params.lambda_d * death
        )
        out[FieldId.N] = (
            params.k_nb * b * vegf
            - params.lambda_nb * b * n
            + params.k_n * n * vegf
            - params.lambda_nn * n * n
        )
        out[FieldId.B] = params.k_b * g_b * b * (1.0 - b)
        out[FieldId.RHO] = (
            params.k_rho * w / (w + params.K_wrho) * f * (1.0 - rho / params.rho_m)
            - params.lambda_rho * rho
        )
        return out


DEFAULT_KINETICS = KineticsModel()


def kinetics(
    fields: ArrayLike,
    gamma: float,
    params: Parameters,
    model: KineticsModel = DEFAULT_KINETICS,
) -> NDArray[np.float64]:
    """Reaction rates of all eight fields at one point or on a grid.

    Args:
        fields: Values (w, p, e, m, f, n, b, rho) along the leading axis.
        gamma: Ischemia level.
        params: Model parameters.
        model: Kinetic forms to evaluate.

    Returns:
        The eight rates, same shape as fields.

    Raises:
        NonFiniteInput: If any value is NaN or infinite.
    """
    arr = np.asarray(fields, dtype=float)
    if arr.shape[0] != len(FieldId):
        raise ValueError(f"Expected {len(FieldId)} fields, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)) or not math.isfinite(gamma):
        raise NonFiniteInput("kinetics received a non-finite value")
    return model.rates(arr, gamma, params)


def _implied_values(params: Parameters) -> dict[str, float]:
    return {
        "lambda_rho": params.k_rho * (1.0 - 1.0 / params.rho_m) / (1.0 + params.K_wrho),
        "k_w": (params.lambda_wf + params.lambda_wm) / (params.w_b - 1.0),
        "k_f": params.lambda_f / (1.0 - 1.0 / params.f_m),
    }


_CONSTRAINTS = {
    "lambda_rho": "lambda_rho = k_rho (1 - 1/rho_m) / (1 + K_wrho)",
    "k_w": "k_w = (lambda_wf + lambda_wm) / (w_b - 1)",
    "k_f": "k_f = lambda_f / (1 - 1/f_m)",
}


def validate_homeostasis(params: Parameters) -> list[HomeostasisCheck]:
    """Check that the healthy state is a kinetic equilibrium.

    Listed values are never changed; a mismatch only yields a warn verdict.

    Args:
        params: Parameter set to check.

    Returns:
        One HomeostasisCheck per constraint.
    """
    checks: list[HomeostasisCheck] = []
    for name, implied in _implied_values(params).items():
        listed = getattr(params, name)
        residual = listed - implied
        scale = abs(implied) if implied != 0 else 1.0
        verdict = "pass" if abs(residual) / scale <= params.homeostasis_tol else "warn"
        if verdict == "warn":
            logger.warning(
                f"Homeostasis constraint off for {name}: listed {listed:.6g}, implied {implied:.6g}"
            )
        checks.append(
            HomeostasisCheck(
                constraint=_CONSTRAINTS[name],
                parameter=name,
                listed=listed,
                implied=implied,
                residual=residual,
                verdict=verdict,
            )
        )
    return checks


def resolve_parameters(params: Parameters) -> Parameters:
    """Apply enforce_homeostasis, returning the parameters a run uses."""
    if not params.enforce_homeostasis:
        return params
    implied = _implied_values(params)
    logger.info(
        "Enforcing homeostasis: "
        + ", ".join(f"{k}={v:.6g}" for k, v in implied.items())
    )
    return params.model_copy(update=implied)


def _g(z: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.select(
        [z <= 0.0, z <= 0.25, z <= 0.75, z <= 1.0],
        [
            np.zeros_like(z),
            (8.0 / 3.0) * z * z,
            (4.0 / 3.0) * z - 1.0 / 6.0,
            1.0 - (8.0 / 3.0) * (1.0 - z) ** 2,
        ],
        default=1.0,
    )


def initial_b_profile(r: ArrayLike, params: Parameters) -> NDArray[np.float64]:
    """Initial sprout density g((r - R0) / eps0)."""
    z = (np.asarray(r, dtype=float) - params.R0) / params.eps0
    return _g(z)[()]


def initial_p_profile(r: ArrayLike, params: Parameters) -> NDArray[np.float64]:
    """Initial PDGF: quartic bump with slope -k_pb/D_p at the wound edge."""
    z = (np.asarray(r, dtype=float) - params.R0) / params.eps0
    amplitude = params.k_pb * params.eps0 / (4.0 * params.D_p)
    inside = (z >= 0.0) & (z <= 1.0)
    return np.where(inside, amplitude * np.clip(1.0 - z, 0.0, None) ** 4, 0.0)[()]
