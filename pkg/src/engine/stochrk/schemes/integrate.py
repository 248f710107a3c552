"""Drive a stepper over a time grid.

A randomness source is a callable ``(n, h) -> draw`` returning what the
stepper consumes at step n: an :class:`ItoIntegralSet` for strong steppers
or a :class:`WeakRandomSet` for weak ones.
"""

from pathlib import Path
from typing import Any, Callable, Optional, Tuple

import numpy as np
import pandas as pd

from stochrk_common.exceptions import NonFiniteStateError, OutputError, ShapeError
from stochrk_common.logging import get_logger

from ..noise.ito_integrals import SeriesConfig, sample_step_integrals
from ..noise.wiener import TimeGrid, WienerEnsemble, WienerPath
from .randoms import sample_weak_randoms
from .steppers import Stepper
from .system import SdeSystem

logger = get_logger(__name__)

RandomSource = Callable[[int, float], Any]


def strong_source(
    noise: WienerPath | WienerEnsemble | np.ndarray,
    rng: np.random.Generator,
    series: Optional[SeriesConfig] = None,
    levy_area: bool = True,
) -> RandomSource:
    """Integrals per step from stored increments plus fresh zeta and series draws.

    ``noise`` is a path, an ensemble, or a raw increments array of shape
    (..., N, m).
    """
    if isinstance(noise, (WienerPath, WienerEnsemble)):
        increments = noise.increments
    else:
        increments = np.asarray(noise, dtype=float)
    if increments.ndim < 2:
        raise ShapeError(f"Increments need shape (..., N, m), got {increments.shape}")

    def draw(n: int, h: float) -> Any:
        return sample_step_integrals(increments[..., n, :], h, rng, series, levy_area)

    return draw


def weak_source(rng: np.random.Generator, m: int, batch_shape: Tuple[int, ...] = ()) -> RandomSource:
    """Fresh three-point and two-point variables per step."""

    def draw(n: int, h: float) -> Any:
        return sample_weak_randoms(rng, m, h, batch_shape)

    return draw


def source_for(
    stepper: Stepper,
    sys: SdeSystem,
    rng: np.random.Generator,
    grid: TimeGrid,
    batch_shape: Tuple[int, ...] = (),
    noise: WienerPath | WienerEnsemble | np.ndarray | None = None,
    series: Optional[SeriesConfig] = None,
) -> RandomSource:
    """Pick the source a stepper needs, sampling increments when none are given.

    Levy areas are skipped for steppers that never read them and for systems
    flagged with commutative noise.
    """
    if stepper.randomness == "weak":
        return weak_source(rng, sys.m, batch_shape)
    if noise is None:
        noise = rng.normal(0.0, np.sqrt(grid.h), size=tuple(batch_shape) + (grid.N, sys.m))
    levy_area = stepper.uses_levy_area and not sys.commutative_noise
    return strong_source(noise, rng, series, levy_area)


def integrate(
    stepper: Stepper,
    sys: SdeSystem,
    x0: np.ndarray,
    grid: TimeGrid,
    source: RandomSource,
    check_finite: bool = True,
) -> np.ndarray:
    """Trajectory of shape (..., N+1, d) with trajectory[..., 0, :] = x0.

    Raises:
        NonFiniteStateError: a state became NaN or infinite; ``step`` is the
            index n of the step t_n -> t_{n+1} that produced it.
    """
    x = np.asarray(x0, dtype=float)
    sys.check_state(x)
    sys.check_fields(grid.t0, x)
    h = grid.h
    traj = np.empty(x.shape[:-1] + (grid.N + 1, sys.d), dtype=float)
    traj[..., 0, :] = x
    for n in range(grid.N):
        x = stepper.step(sys, grid.time(n), x, h, source(n, h))
        if check_finite and not np.all(np.isfinite(x)):
            logger.warning("non_finite_state", stepper=stepper.name, system=sys.name, step=n)
            raise NonFiniteStateError(step=n)
        traj[..., n + 1, :] = x
    return traj


def save_trajectory_csv(traj: np.ndarray, grid: TimeGrid, file_path: Path) -> None:
    """Dump a single trajectory with header ``t,x1..xd``."""
    traj = np.asarray(traj, dtype=float)
    if traj.ndim != 2 or traj.shape[0] != grid.N + 1:
        raise ShapeError(f"Expected a ({grid.N + 1}, d) trajectory, got {traj.shape}")
    frame = pd.DataFrame(traj, columns=[f"x{i + 1}" for i in range(traj.shape[1])])
    frame.insert(0, "t", grid.times())
    try:
        frame.to_csv(file_path, index=False, float_format="%.17g")
    except OSError as exc:
        raise OutputError(file_path, f"cannot write trajectory CSV: {exc.strerror or exc}") from exc
