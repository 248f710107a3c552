"""Empirical strong and weak convergence orders.

Strong errors are pathwise: one fine master ensemble of increments is drawn
at the smallest step and every coarser grid sums consecutive fine
increments, so all step sizes see the same Brownian paths. Method
randomness (zeta, Levy-area series, weak variables) is drawn fresh for each
step size. Orders come from an unweighted least-squares fit of log error
against log h.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from stochrk_common.config import settings
from stochrk_common.exceptions import GridError, NoAcceptedTrajectoriesError, UnknownNameError
from stochrk_common.logging import get_logger

from ..noise.ito_integrals import SeriesConfig
from ..noise.wiener import TimeGrid
from ..schemes.integrate import integrate, source_for, strong_source
from ..schemes.steppers import Stepper
from ..simulation.montecarlo import McAccumulator, merge
from ..utils.files import write_text
from ..utils.formatting import format_slope
from .problems import FUNCTIONALS, TestProblem

logger = get_logger(__name__)


@dataclass
class OrderEstimate:
    """Errors per step size and the fitted log-log slope."""

    kind: str  # "strong" or "weak"
    method: str
    problem: str
    hs: np.ndarray
    errors: np.ndarray
    mc_stderr: np.ndarray
    slope: float
    intercept: float
    residual: float
    fitted: np.ndarray  # mask of step sizes used in the fit
    excluded: int = 0
    degenerate: bool = False
    reliable: bool = True
    metadata: Dict[str, Any] = field(default_factory=dict)

    def summary(self) -> str:
        flags = []
        if self.degenerate:
            flags.append("degenerate")
        if not self.reliable:
            flags.append("unreliable")
        suffix = f" [{', '.join(flags)}]" if flags else ""
        return f"{self.kind} order of {self.method} on {self.problem}: {format_slope(self.slope)}{suffix}"


def _check_steps(problem: TestProblem, hs: Sequence[float]) -> Tuple[np.ndarray, float]:
    steps = np.array(sorted(set(float(h) for h in hs), reverse=True))
    if len(steps) < 3:
        raise GridError(f"Order estimation needs at least three distinct step sizes, got {len(steps)}")
    for h in steps:
        TimeGrid.from_step(problem.t0, problem.T, h)
    h_min = float(steps[-1])
    for h in steps:
        ratio = h / h_min
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise GridError(f"Step h={h} is not a whole multiple of the finest step {h_min}")
    return steps, h_min


def fit_order(
    hs: np.ndarray, errors: np.ndarray, exclude_largest: int = 0
) -> Tuple[float, float, float, np.ndarray, bool]:
    """(slope, intercept, residual, fitted mask, degenerate) of log error vs log h.

    ``hs`` must be sorted largest first. The fit is degenerate when every
    error is below ``settings.degenerate_error`` or fewer than two positive
    errors remain.
    """
    fitted = np.ones(len(hs), dtype=bool)
    fitted[: max(0, exclude_largest)] = False
    usable = fitted & (errors > 0) & np.isfinite(errors)
    if np.max(errors) < settings.degenerate_error or usable.sum() < 2:
        return math.nan, math.nan, math.nan, fitted, True
    x = np.log(hs[usable])
    y = np.log(errors[usable])
    result = stats.linregress(x, y)
    predicted = result.intercept + result.slope * x
    residual = float(np.sqrt(np.mean((y - predicted) ** 2)))
    return float(result.slope), float(result.intercept), residual, fitted, False


def estimate_strong_order(
    stepper: Stepper,
    problem: TestProblem,
    hs: Sequence[float],
    paths: int,
    rng: np.random.Generator,
    norm: str = "final",
    exclude_largest: int = 0,
    series: Optional[SeriesConfig] = None,
) -> OrderEstimate:
    """Mean pathwise error at T (or sup over the coarse nodes) per step size.

    Raises:
        GridError: fewer than three step sizes, or steps not nested in the finest.
        NoAcceptedTrajectoriesError: every path was non-finite at some step size.
    """
    if norm not in ("final", "sup"):
        raise UnknownNameError(f"Unknown norm {norm!r}; use 'final' or 'sup'")
    steps, h_min = _check_steps(problem, hs)
    sys = problem.sys
    fine = TimeGrid.from_step(problem.t0, problem.T, h_min)
    increments = rng.normal(0.0, math.sqrt(h_min), size=(paths, fine.N, sys.m))
    aux = problem.sample_aux(increments, h_min, rng) if problem.sample_aux is not None else None
    reference = problem.exact_path(increments, h_min, aux)
    x0 = np.broadcast_to(problem.x0, (paths, sys.d)).copy()
    levy_area = stepper.uses_levy_area and not sys.commutative_noise

    errors, stderr = [], []
    excluded = 0
    for h in steps:
        r = int(round(h / h_min))
        grid = TimeGrid.from_step(problem.t0, problem.T, float(h))
        coarse = increments.reshape(paths, grid.N, r, sys.m).sum(axis=2)
        source = strong_source(coarse, rng, series, levy_area)
        with np.errstate(over="ignore", invalid="ignore"):
            traj = integrate(stepper, sys, x0, grid, source, check_finite=False)
        finite = np.all(np.isfinite(traj), axis=(-2, -1))
        excluded += int(np.count_nonzero(~finite))
        if not finite.any():
            raise NoAcceptedTrajectoriesError(f"Every path diverged at h={h}")
        if norm == "final":
            diff = np.linalg.norm(traj[finite, -1, :] - reference[finite, -1, :], axis=-1)
        else:
            diff = np.linalg.norm(traj[finite] - reference[finite, ::r, :], axis=-1).max(axis=-1)
        errors.append(float(diff.mean()))
        stderr.append(float(diff.std(ddof=1) / math.sqrt(len(diff))) if len(diff) > 1 else 0.0)
        logger.debug("strong_error", method=stepper.name, h=float(h), error=errors[-1])

    errs = np.array(errors)
    slope, intercept, residual, fitted, degenerate = fit_order(steps, errs, exclude_largest)
    estimate = OrderEstimate(
        kind="strong",
        method=stepper.name,
        problem=problem.name,
        hs=steps,
        errors=errs,
        mc_stderr=np.array(stderr),
        slope=slope,
        intercept=intercept,
        residual=residual,
        fitted=fitted,
        excluded=excluded,
        degenerate=degenerate,
        metadata={"paths": paths, "norm": norm},
    )
    logger.info("order_estimated", kind="strong", method=stepper.name, problem=problem.name,
                slope=format_slope(slope), excluded=excluded, degenerate=degenerate)
    return estimate


def estimate_weak_order(
    stepper: Stepper,
    problem: TestProblem,
    functional: str,
    hs: Sequence[float],
    trials: int,
    rng: np.random.Generator,
    batch_size: int = 10_000,
    exclude_largest: int = 0,
) -> OrderEstimate:
    """|sample mean of F(x_N) - E[F(x(T))]| per step size, with Monte Carlo standard errors.

    The estimate is flagged unreliable when some fitted step size has a
    standard error not below its error.
    """
    if functional not in FUNCTIONALS or functional not in problem.exact_weak:
        raise UnknownNameError(
            f"Problem {problem.name!r} has no analytic value for functional {functional!r}"
        )
    F = FUNCTIONALS[functional]
    target = problem.exact_weak[functional]
    steps, _ = _check_steps(problem, hs)
    sys = problem.sys

    errors, stderr = [], []
    excluded = 0
    for h in steps:
        grid = TimeGrid.from_step(problem.t0, problem.T, float(h))
        acc = McAccumulator.empty((), track_variance=True)
        done = 0
        while done < trials:
            size = min(batch_size, trials - done)
            x0 = np.broadcast_to(problem.x0, (size, sys.d)).copy()
            source = source_for(stepper, sys, rng, grid, batch_shape=(size,))
            with np.errstate(over="ignore", invalid="ignore"):
                final = integrate(stepper, sys, x0, grid, source, check_finite=False)[:, -1, :]
                values = F(final)
            ok = np.isfinite(values)
            excluded += int(np.count_nonzero(~ok))
            values = values[ok]
            if len(values):
                batch_mean = values.mean()
                spread = ((values - batch_mean) ** 2).sum()
                batch = McAccumulator(len(values), np.asarray(batch_mean), np.asarray(spread))
                acc = merge(acc, batch)
            done += size
        if acc.n == 0:
            raise NoAcceptedTrajectoriesError(f"Every trial diverged at h={h}")
        errors.append(abs(float(acc.mean) - target))
        variance = float(acc.variance) if acc.n > 1 else 0.0  # type: ignore[arg-type]
        stderr.append(math.sqrt(variance / acc.n))
        logger.debug("weak_error", method=stepper.name, h=float(h), error=errors[-1], stderr=stderr[-1])

    errs = np.array(errors)
    mc = np.array(stderr)
    slope, intercept, residual, fitted, degenerate = fit_order(steps, errs, exclude_largest)
    reliable = bool(np.all(mc[fitted] < errs[fitted]))
    if not reliable:
        logger.warning("weak_estimate_unreliable", method=stepper.name, problem=problem.name, trials=trials)
    logger.info("order_estimated", kind="weak", method=stepper.name, problem=problem.name,
                slope=format_slope(slope), degenerate=degenerate, reliable=reliable)
    return OrderEstimate(
        kind="weak",
        method=stepper.name,
        problem=problem.name,
        hs=steps,
        errors=errs,
        mc_stderr=mc,
        slope=slope,
        intercept=intercept,
        residual=residual,
        fitted=fitted,
        excluded=excluded,
        degenerate=degenerate,
        reliable=reliable,
        metadata={"trials": trials, "functional": functional},
    )


def save_report(estimate: OrderEstimate, path: Path, metadata: Optional[Dict[str, Any]] = None) -> None:
    """``# key: value`` metadata lines followed by the ``h,error,mc_stderr`` table."""
    header: Dict[str, Any] = {
        "kind": estimate.kind,
        "method": estimate.method,
        "problem": estimate.problem,
        "slope": format_slope(estimate.slope, 6),
        "intercept": format_slope(estimate.intercept, 6),
        "residual": format_slope(estimate.residual, 6),
        "excluded": estimate.excluded,
        "degenerate": estimate.degenerate,
        "reliable": estimate.reliable,
    }
    header.update(estimate.metadata)
    header.update(metadata or {})
    lines = [f"# {key}: {value}" for key, value in header.items()]
    table = pd.DataFrame({"h": estimate.hs, "error": estimate.errors, "mc_stderr": estimate.mc_stderr})
    body = table.to_csv(index=False, float_format="%.17g", lineterminator="\n")
    write_text(Path(path), "\n".join(lines) + "\n" + body)
