"""Ischemia sweeps and critical-gamma bisection.

This module runs independent simulations over a list of gamma values,
bundles their outcomes into a SweepResult with monotonicity verdicts, and
bisects a healed/non-healed bracket for the critical ischemia level.
"""

import logging
import os
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ischemic_fbp.errors import NoBracket
from ischemic_fbp.integrator import run
from ischemic_fbp.report import reports_to_frame, write_run_csv
from ischemic_fbp.schema import (
    BisectionStep,
    CheckResult,
    GammaStarEstimate,
    Parameters,
    SweepEntry,
    SweepResult,
)

logger = logging.getLogger(__name__)

THREADS_ENV = "ISCHEMIC_FBP_THREADS"
DEFAULT_GAMMAS = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.92, 0.95, 1.0]


def resolve_workers(requested: int) -> int:
    """Cap the worker count by ISCHEMIC_FBP_THREADS when it is set."""
    workers = max(1, requested)
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            logger.warning(f"Ignoring non-integer {THREADS_ENV}={cap!r}")
    return workers


def gamma_dir(out_dir: Path, gamma: float) -> Path:
    """Per-gamma output directory, named with the shortest exact repr of gamma."""
    return out_dir / f"gamma_{float(gamma)!r}"


def run_gamma(params: Parameters, gamma: float, out_dir: Path | None = None) -> SweepEntry:
    """Run one simulation at the given gamma.

    Args:
        params: Base parameters.
        gamma: Ischemia level to run.
        out_dir: When given, run.csv is written to its per-gamma subdirectory.

    Returns:
        SweepEntry for this gamma.
    """
    result = run(params.model_copy(update={"gamma": gamma}))
    if out_dir is not None:
        write_run_csv(reports_to_frame(result.reports), gamma_dir(out_dir, gamma) / "run.csv")
    return SweepEntry(
        gamma=gamma,
        outcome=result.outcome,
        t_end=result.reports[-1].t,
        n_steps=len(result.reports) - 1,
    )


def _run_gamma_task(args: tuple[dict, float, str | None]) -> dict:
    params_data, gamma, out_dir = args
    entry = run_gamma(Parameters(**params_data), gamma, Path(out_dir) if out_dir else None)
    return entry.model_dump()


def run_sweep(
    params: Parameters,
    gammas: list[float],
    workers: int = 1,
    out_dir: Path | None = None,
) -> SweepResult:
    """Run independent simulations over gamma values.

    Results are sorted by gamma and do not depend on the worker count.

    Args:
        params: Base parameters.
        gammas: Ischemia levels in [0, 1].
        workers: Requested parallel worker processes.
        out_dir: Optional directory for per-gamma run.csv files.

    Returns:
        SweepResult with verdicts and the first healed/non-healed bracket.

    Raises:
        ValueError: If the list is empty or a gamma lies outside [0, 1].
    """
    if not gammas:
        raise ValueError("Sweep needs at least one gamma")
    unique = sorted(set(gammas))
    bad = [g for g in unique if not 0.0 <= g <= 1.0]
    if bad:
        raise ValueError(f"gamma values outside [0, 1]: {bad}")

    workers = resolve_workers(workers)
    logger.info(f"Sweeping {len(unique)} gamma values with {workers} worker(s)")

    if workers == 1:
        entries = [run_gamma(params, g, out_dir) for g in unique]
    else:
        tasks = [(params.model_dump(), g, str(out_dir) if out_dir else None) for g in unique]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            entries = [SweepEntry(**data) for data in pool.map(_run_gamma_task, tasks)]

    entries.sort(key=lambda e: e.gamma)
    result = SweepResult(
        entries=entries,
        bracket=_find_bracket(entries),
        verdicts=[_monotonicity_verdict(entries), _closure_time_verdict(entries)],
    )
    for verdict in result.verdicts:
        if not verdict.passed:
            logger.warning(f"Sweep {verdict.name}: {verdict.detail}")
    return result


def _is_healed(entry: SweepEntry) -> bool:
    return entry.outcome.kind == "healed"


def _find_bracket(entries: list[SweepEntry]) -> tuple[float, float] | None:
    for lo, hi in zip(entries, entries[1:]):
        if _is_healed(lo) and not _is_healed(hi):
            return (lo.gamma, hi.gamma)
    return None


def _monotonicity_verdict(entries: list[SweepEntry]) -> CheckResult:
    stalled = [e.gamma for e in entries if e.outcome.kind == "stalled"]
    if not stalled:
        return CheckResult(name="healing_monotonicity", verdict="pass", detail="no stalled gamma")
    first_stall = min(stalled)
    offenders = [e.gamma for e in entries if _is_healed(e) and e.gamma > first_stall]
    return CheckResult(
        name="healing_monotonicity",
        verdict="pass" if not offenders else "warn",
        value=float(len(offenders)),
        detail=(
            f"no healed gamma above {first_stall}"
            if not offenders
            else f"healed above stalled gamma {first_stall}: {offenders}"
        ),
    )


def _closure_time_verdict(entries: list[SweepEntry]) -> CheckResult:
    healed = [e for e in entries if _is_healed(e)]
    times = [e.outcome.t_heal for e in healed]
    drops = [
        (a.gamma, b.gamma)
        for a, b, ta, tb in zip(healed, healed[1:], times, times[1:])
        if tb < ta
    ]
    return CheckResult(
        name="closure_time_order",
        verdict="pass" if not drops else "warn",
        value=float(len(drops)),
        detail="closure time nondecreasing in gamma" if not drops else f"closure time drops at {drops}",
    )


def find_gamma_star(
    params: Parameters,
    lo: float,
    hi: float,
    iterations: int,
    classify: Callable[[float], str] | None = None,
) -> GammaStarEstimate:
    """Bisect a bracket whose ends heal and fail to heal.

    After k iterations the half-width is (hi - lo) / 2^(k + 1). Stalled and
    Undecided both count as not healed.

    Args:
        params: Base parameters.
        lo: Lower bracket end.
        hi: Upper bracket end.
        iterations: Number of midpoint evaluations.
        classify: Maps gamma to an outcome kind; runs a simulation by default.

    Returns:
        GammaStarEstimate with the full bisection trace.

    Raises:
        ValueError: If the bracket is not inside [0, 1] with lo < hi.
        NoBracket: If both ends classify the same way.
    """
    if not 0.0 <= lo < hi <= 1.0:
        raise ValueError(f"Need 0 <= lo < hi <= 1, got ({lo}, {hi})")

    def default_classify(gamma: float) -> str:
        return run_gamma(params, gamma).outcome.kind

    classify = classify or default_classify

    def healed(gamma: float) -> bool:
        kind = classify(gamma)
        if kind == "undecided":
            logger.warning(f"gamma={gamma} undecided within the horizon; counted as not healed")
        return kind == "healed"

    lo_healed = healed(lo)
    if lo_healed == healed(hi):
        raise NoBracket(
            f"Both bracket ends {'heal' if lo_healed else 'fail to heal'}: ({lo}, {hi})"
        )

    trace: list[BisectionStep] = []
    for k in range(1, iterations + 1):
        mid = 0.5 * (lo + hi)
        mid_healed = healed(mid)
        if mid_healed == lo_healed:
            lo = mid
        else:
            hi = mid
        trace.append(
            BisectionStep(
                iteration=k,
                gamma=mid,
                outcome="healed" if mid_healed else "not_healed",
                lo=lo,
                hi=hi,
            )
        )
        logger.info(f"Bisection {k}/{iterations}: gamma={mid:.6f} -> bracket ({lo:.6f}, {hi:.6f})")

    return GammaStarEstimate(
        estimate=0.5 * (lo + hi),
        half_width=0.5 * (hi - lo),
        lo=lo,
        hi=hi,
        trace=trace,
    )
