"""Command-line interface for the ischemic wound simulator.

This module provides Typer commands for single runs, gamma sweeps, the
critical-gamma bisection, parameter validation and the oracle comparison.

Exit codes: 0 on success, 1 on configuration or input errors, 2 when a
simulation step fails.
"""

import json
import logging
from pathlib import Path
from typing import Optional

import typer

from ischemic_fbp import __version__
from ischemic_fbp.config import load_parameters, override
from ischemic_fbp.constitutive import DEFAULT_KINETICS, resolve_parameters, validate_homeostasis
from ischemic_fbp.diagnostics import compare_runs, oracle_solve, run_all_checks
from ischemic_fbp.errors import ConfigError, FbpError, NoBracket, StepFailure
from ischemic_fbp.integrator import run
from ischemic_fbp.report import (
    build_meta,
    format_checks_table,
    format_homeostasis_table,
    read_run_csv,
    reports_to_frame,
    write_curve_svg,
    write_meta_json,
    write_run_csv,
    write_sweep_csv,
)
from ischemic_fbp.schema import RECONSTRUCTED_PARAMETERS, CheckResult, Parameters
from ischemic_fbp.sweep import DEFAULT_GAMMAS, find_gamma_star, gamma_dir, run_sweep

app = typer.Typer(
    name="ischemic-fbp",
    help="Ischemic wound-healing free-boundary simulator",
    add_completion=False,
)

logger = logging.getLogger(__name__)


def setup_logging(debug: bool = False) -> None:
    """Configure logging.

    Args:
        debug: Enable debug level logging.
    """
    level = logging.DEBUG if debug else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s | %(levelname)-8s | %(name)s | %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )


def _load(
    config: Optional[Path],
    gamma: Optional[float] = None,
    cells: Optional[int] = None,
    horizon: Optional[float] = None,
) -> Parameters:
    """Load the config and apply flag overrides, exiting 1 on any error."""
    try:
        params = load_parameters(config) if config is not None else Parameters()
        return override(params, gamma=gamma, N=cells, T_max=horizon)
    except ConfigError as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(1)


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        return [float(tok) for tok in text.replace(";", ",").split(",") if tok.strip()]
    except ValueError:
        typer.echo(f"Error: cannot parse {what} {text!r}", err=True)
        raise typer.Exit(1)


def _banner(title: str) -> None:
    typer.echo("")
    typer.echo("=" * 60)
    typer.echo(f"  {title}")
    typer.echo("=" * 60)


ConfigOpt = typer.Option(None, "--config", "-c", help="Path to JSON parameter file")
OutOpt = typer.Option(Path("out"), "--out", "-o", help="Output directory")
CellsOpt = typer.Option(None, "--cells", "-n", help="Override the number of grid cells N")
HorizonOpt = typer.Option(None, "--horizon", "-T", help="Override the time horizon T_max")
DebugOpt = typer.Option(False, "--debug", help="Enable debug logging")


@app.command("run")
def cmd_run(
    config: Optional[Path] = ConfigOpt,
    out: Path = OutOpt,
    gamma: Optional[float] = typer.Option(None, "--gamma", "-g", help="Override the ischemia level"),
    cells: Optional[int] = CellsOpt,
    horizon: Optional[float] = HorizonOpt,
    svg: bool = typer.Option(False, "--svg", help="Also write curve.svg of R(t)"),
    debug: bool = DebugOpt,
) -> None:
    """Run one simulation and write run.csv and meta.json."""
    setup_logging(debug)
    params = _load(config, gamma, cells, horizon)
    logger.info(f"ischemic-fbp v{__version__}")

    try:
        result = run(params)
    except StepFailure as e:
        typer.echo(f"Error: {e}", err=True)
        if e.reports:
            write_run_csv(reports_to_frame(e.reports), out / "run.csv")
        raise typer.Exit(2)
    except FbpError as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(2)

    resolved = result.params
    frame = reports_to_frame(result.reports)
    checks = run_all_checks(frame, resolved, result.outcome.kind)
    meta = build_meta(
        resolved,
        outcome=result.outcome.model_dump(),
        reconstructed_kinetics=DEFAULT_KINETICS.reconstructed,
        checks=checks,
        homeostasis=validate_homeostasis(resolved),
        n_steps=len(result.reports) - 1,
    )
    write_run_csv(frame, out / "run.csv")
    write_meta_json(meta, out / "meta.json")
    if svg:
        write_curve_svg({f"gamma={resolved.gamma:g}": frame}, out / "curve.svg")

    _banner("RUN COMPLETE")
    typer.echo(f"  gamma:        {resolved.gamma:g}")
    typer.echo(f"  Outcome:      {result.outcome.kind.upper()}")
    typer.echo(f"  Final time:   {frame['t'].iloc[-1]:.4f}")
    typer.echo(f"  Final R:      {frame['R'].iloc[-1]:.6f} (R0 = {resolved.R0:.6f})")
    typer.echo(f"  Steps:        {len(result.reports) - 1}")
    typer.echo("")
    typer.echo(format_checks_table(checks))
    typer.echo("")
    typer.echo(f"  Output: {out}")
    typer.echo("=" * 60)


@app.command("sweep")
def cmd_sweep(
    config: Optional[Path] = ConfigOpt,
    out: Path = OutOpt,
    gammas: str = typer.Option(
        ",".join(f"{g:g}" for g in DEFAULT_GAMMAS),
        "--gammas",
        help="Comma-separated gamma values",
    ),
    workers: int = typer.Option(1, "--workers", "-w", help="Parallel worker processes"),
    cells: Optional[int] = CellsOpt,
    horizon: Optional[float] = HorizonOpt,
    svg: bool = typer.Option(False, "--svg", help="Also write curve.svg with every R(t)"),
    debug: bool = DebugOpt,
) -> None:
    """Run independent simulations over a list of gamma values."""
    setup_logging(debug)
    params = _load(config, None, cells, horizon)
    values = _parse_floats(gammas, "gamma list")
    if not values:
        typer.echo("Error: empty gamma list", err=True)
        raise typer.Exit(1)
    if any(not 0.0 <= g <= 1.0 for g in values):
        typer.echo("Error: gamma values must lie in [0, 1]", err=True)
        raise typer.Exit(1)

    try:
        result = run_sweep(params, values, workers=workers, out_dir=out)
    except StepFailure as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(2)

    write_sweep_csv(result, out / "sweep.csv")
    if svg:
        curves = {
            f"gamma={e.gamma:g}": read_run_csv(gamma_dir(out, e.gamma) / "run.csv")
            for e in result.entries
        }
        write_curve_svg(curves, out / "curve.svg")

    _banner("SWEEP COMPLETE")
    for entry in result.entries:
        typer.echo(f"  gamma={entry.gamma:<6g} {entry.outcome.kind.upper():<10} t_end={entry.t_end:.3f}")
    if result.bracket:
        typer.echo(f"  Bracket: ({result.bracket[0]:g}, {result.bracket[1]:g})")
    typer.echo("")
    typer.echo(format_checks_table(result.verdicts))
    typer.echo("=" * 60)


@app.command("find-gamma-star")
def cmd_find_gamma_star(
    config: Optional[Path] = ConfigOpt,
    out: Path = OutOpt,
    bracket: str = typer.Option("0,1", "--bracket", "-b", help="Bracket as lo,hi"),
    iters: int = typer.Option(10, "--iters", "-k", help="Bisection iterations"),
    cells: Optional[int] = CellsOpt,
    horizon: Optional[float] = HorizonOpt,
    debug: bool = DebugOpt,
) -> None:
    """Bisect the healed/non-healed bracket for the critical gamma."""
    setup_logging(debug)
    params = _load(config, None, cells, horizon)
    ends = _parse_floats(bracket, "bracket")
    if len(ends) != 2:
        typer.echo("Error: bracket needs exactly two values", err=True)
        raise typer.Exit(1)

    try:
        estimate = find_gamma_star(params, ends[0], ends[1], iters)
    except (NoBracket, ValueError) as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(1)
    except StepFailure as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(2)

    path = out / "gamma_star.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(estimate.model_dump(), indent=2, default=str), encoding="utf-8")

    _banner("GAMMA* ESTIMATE")
    for step in estimate.trace:
        typer.echo(f"  {step.iteration:>3}: gamma={step.gamma:.6f} {step.outcome:<11} ({step.lo:.6f}, {step.hi:.6f})")
    typer.echo("")
    typer.echo(f"  gamma* = {estimate.estimate:.6f} +/- {estimate.half_width:.2e}")
    typer.echo(f"  Output: {path}")
    typer.echo("=" * 60)


@app.command("validate-params")
def cmd_validate_params(
    config: Optional[Path] = ConfigOpt,
    debug: bool = DebugOpt,
) -> None:
    """Check the homeostasis constraints and list reconstructed defaults."""
    setup_logging(debug)
    params = _load(config)
    resolved = resolve_parameters(params)

    _banner("PARAMETER VALIDATION")
    typer.echo(format_homeostasis_table(validate_homeostasis(params)))
    if params.enforce_homeostasis:
        typer.echo("")
        typer.echo("  enforce_homeostasis = true, values used by runs:")
        for name in ("lambda_rho", "k_w", "k_f"):
            typer.echo(f"    {name} = {getattr(resolved, name):.6g}")
    typer.echo("")
    typer.echo("  Reconstructed defaults:")
    typer.echo(f"    parameters: {', '.join(RECONSTRUCTED_PARAMETERS)}")
    typer.echo(f"    kinetics:   {', '.join(DEFAULT_KINETICS.reconstructed)}")
    typer.echo("=" * 60)


@app.command("oracle-compare")
def cmd_oracle_compare(
    config: Optional[Path] = ConfigOpt,
    horizon: float = typer.Option(0.5, "--horizon", "-T", help="Comparison horizon"),
    cells: Optional[int] = CellsOpt,
    oracle_cells: Optional[int] = typer.Option(None, "--oracle-cells", help="Oracle resolution (default 4N)"),
    debug: bool = DebugOpt,
) -> None:
    """Compare the production run against the explicit fine-grid oracle."""
    setup_logging(debug)
    params = _load(config, None, cells, None)

    try:
        main = reports_to_frame(run(params, T_max=horizon).reports)
        oracle = oracle_solve(params, horizon, n_oracle=oracle_cells)
    except StepFailure as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(2)

    discrepancy = compare_runs(oracle, main)
    checks = [
        CheckResult(
            name=f"oracle_{label}",
            verdict="pass" if value <= (params.oracle_r_tol if label == "R" else params.oracle_field_tol) else "warn",
            value=value,
            detail="relative sup-norm discrepancy",
        )
        for label, value in discrepancy.items()
    ]
    _banner("ORACLE COMPARISON")
    typer.echo(format_checks_table(checks))
    typer.echo("=" * 60)


@app.command()
def version() -> None:
    """Show version information."""
    typer.echo(f"ischemic-fbp v{__version__}")


if __name__ == "__main__":
    app()
