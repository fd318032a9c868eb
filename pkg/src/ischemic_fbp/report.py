"""Output generation for runs and sweeps.

This module writes the canonical CSV series, the JSON run metadata and a
minimal SVG curve of the wound radius, and parses run.csv back into a
frame.
"""

import json
import logging
from datetime import datetime, timezone
from pathlib import Path

import pandas as pd

from ischemic_fbp import __version__
from ischemic_fbp.schema import (
    RECONSTRUCTED_PARAMETERS,
    CheckResult,
    FieldId,
    HomeostasisCheck,
    Parameters,
    StepReport,
    SweepResult,
)

logger = logging.getLogger(__name__)

BASE_COLUMNS = ["t", "R", "Q", "Rdot", "dt"]
RUN_COLUMNS = (
    BASE_COLUMNS
    + [f"{stat}_{f.label}" for f in FieldId for stat in ("min", "max", "I")]
    + ["rho_L", "bc_residual"]
)
SWEEP_COLUMNS = ["gamma", "outcome", "t_heal", "R_inf", "t_end", "n_steps"]

SCHEME = {
    "space": "finite volume on uniform front-fixed cells; upwind advection and taxis, central diffusion",
    "time": "IMEX Euler: implicit diffusion (tridiagonal), explicit transport and kinetics",
    "dt_policy": "cfl_safety * min(dxi / max speed, 1 / max reaction rate), capped by dt_max (dt_ref_cells / N)^k per dt_scaling; halve on audit failure",
    "long_time_checks": "final-quartile window as finite-horizon surrogate",
}


def reports_to_frame(reports: list[StepReport]) -> pd.DataFrame:
    """Flatten step reports into the run.csv column layout."""
    rows = []
    for rep in reports:
        row = {"t": rep.t, "R": rep.R, "Q": rep.Q, "Rdot": rep.Rdot, "dt": rep.dt}
        for f in FieldId:
            row[f"min_{f.label}"] = rep.field_min[f.label]
            row[f"max_{f.label}"] = rep.field_max[f.label]
            row[f"I_{f.label}"] = rep.field_integral[f.label]
        row["rho_L"] = rep.rho_L
        row["bc_residual"] = rep.bc_residual
        rows.append(row)
    return pd.DataFrame(rows, columns=RUN_COLUMNS).astype(float)


def write_run_csv(frame: pd.DataFrame, path: Path) -> None:
    """Write a run frame as run.csv.

    Args:
        frame: Frame with the run.csv columns.
        path: Output file path.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, columns=RUN_COLUMNS)
    logger.info(f"Wrote {len(frame)} rows to {path}")


def read_run_csv(path: Path) -> pd.DataFrame:
    """Parse a run.csv without losing float precision.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValueError: If the header is not the run.csv header.
    """
    if not path.exists():
        raise FileNotFoundError(f"Run file not found: {path}")
    frame = pd.read_csv(path, float_precision="round_trip")
    if list(frame.columns) != RUN_COLUMNS:
        raise ValueError(f"{path} does not carry the run.csv header")
    return frame.astype(float)


def _check_to_dict(check: CheckResult | HomeostasisCheck) -> dict:
    return check.model_dump()


def build_meta(
    params: Parameters,
    outcome: dict,
    reconstructed_kinetics: list[str],
    checks: list[CheckResult] | None = None,
    homeostasis: list[HomeostasisCheck] | None = None,
    n_steps: int = 0,
) -> dict:
    """Assemble the run metadata dictionary."""
    return {
        "generated": datetime.now(timezone.utc).strftime("%Y-%m-%d %H:%M:%S"),
        "version": __version__,
        "parameters": params.model_dump(),
        "reconstructed": {
            "parameters": list(RECONSTRUCTED_PARAMETERS),
            "kinetics": reconstructed_kinetics,
        },
        "outcome": outcome,
        "n_steps": n_steps,
        "scheme": {**SCHEME, "N": params.N, "dt_scaling": params.dt_scaling, "dt_cap": params.dt_cap},
        "tolerances": {
            "theorem_tol": params.theorem_tol,
            "oracle_r_tol": params.oracle_r_tol,
            "oracle_field_tol": params.oracle_field_tol,
            "homeostasis_tol": params.homeostasis_tol,
            "sandwich_slack": 0.02,
        },
        "checks": [_check_to_dict(c) for c in checks or []],
        "homeostasis": [_check_to_dict(h) for h in homeostasis or []],
    }


def write_meta_json(meta: dict, path: Path) -> None:
    """Write run metadata as JSON."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(meta, indent=2, default=str), encoding="utf-8")
    logger.info(f"Wrote metadata to {path}")


def sweep_to_frame(result: SweepResult) -> pd.DataFrame:
    """One row per gamma; t_heal or R_inf left empty when not applicable."""
    rows = []
    for entry in result.entries:
        outcome = entry.outcome
        rows.append(
            {
                "gamma": entry.gamma,
                "outcome": outcome.kind,
                "t_heal": getattr(outcome, "t_heal", None),
                "R_inf": getattr(outcome, "R_inf", getattr(outcome, "R_end", None)),
                "t_end": entry.t_end,
                "n_steps": entry.n_steps,
            }
        )
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def write_sweep_csv(result: SweepResult, path: Path) -> None:
    """Write sweep.csv."""
    path.parent.mkdir(parents=True, exist_ok=True)
    sweep_to_frame(result).to_csv(path, index=False)
    logger.info(f"Wrote {len(result.entries)} sweep entries to {path}")


def write_curve_svg(
    curves: dict[str, pd.DataFrame],
    path: Path,
    width: int = 640,
    height: int = 400,
    margin: int = 40,
) -> None:
    """Plot R(t) of one or more runs as SVG polylines.

    Args:
        curves: Label to frame with t and R columns.
        path: Output file path.
        width: Canvas width in pixels.
        height: Canvas height in pixels.
        margin: Blank border in pixels.
    """
    t_max = max((float(f["t"].max()) for f in curves.values()), default=1.0) or 1.0
    r_max = max((float(f["R"].max()) for f in curves.values()), default=1.0) or 1.0
    sx = (width - 2 * margin) / t_max
    sy = (height - 2 * margin) / r_max

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle" font-size="12">t (nondimensional)</text>',
        f'<text x="12" y="{height / 2}" font-size="12">R</text>',
    ]
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    for i, (label, frame) in enumerate(curves.items()):
        color = palette[i % len(palette)]
        points = " ".join(
            f"{margin + t * sx:.2f},{height - margin - r * sy:.2f}"
            for t, r in zip(frame["t"], frame["R"])
        )
        lines.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>')
        lines.append(
            f'<text x="{width - margin - 100}" y="{margin + 14 * (i + 1)}" font-size="11" fill="{color}">{label}</text>'
        )
    lines.append("</svg>")

    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"Wrote curve plot to {path}")


def format_homeostasis_table(checks: list[HomeostasisCheck]) -> str:
    """Markdown table of the homeostasis constraints."""
    lines = [
        "| Parameter | Listed | Implied | Residual | Verdict |",
        "|-----------|--------|---------|----------|---------|",
    ]
    for c in checks:
        lines.append(
            f"| {c.parameter} | {c.listed:.6g} | {c.implied:.6g} | {c.residual:+.3e} | {c.verdict.upper()} |"
        )
    return "\n".join(lines)


def format_checks_table(checks: list[CheckResult]) -> str:
    """Markdown table of diagnostic verdicts."""
    lines = [
        "| Check | Verdict | Value | Detail |",
        "|-------|---------|-------|--------|",
    ]
    for c in checks:
        lines.append(f"| {c.name} | {c.verdict.upper()} | {c.value:.4g} | {c.detail} |")
    return "\n".join(lines)
