"""Parallel Monte Carlo runs with online trajectory statistics.

Trials are split equally across workers (the remainder goes to the last
worker). Each worker integrates its trials in chunks of ``batch_size``
paths, folds accepted trajectories into a running mean with the online
recurrence, and returns its accumulator; accumulators are then merged in
worker order. Only O((N+1) d) state per worker is kept, never the
ensemble.

Seeding: worker w owns the stream seed_worker(master_seed, w); its chunk c
is driven by that stream's bit generator jumped c + 1 times, so with
batch_size 1 every trial has its own substream. Results are reproducible
for a fixed worker count and batch size.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field, field_validator

from stochrk_common.config import settings
from stochrk_common.exceptions import (
    NoAcceptedTrajectoriesError,
    OutputError,
    ShapeError,
    UserInputError,
    WorkerError,
)
from stochrk_common.logging import get_logger

from ..noise.wiener import TimeGrid
from ..schemes.integrate import integrate, source_for
from ..schemes.system import SdeSystem
from ..utils.files import ensure_dir, write_text

logger = get_logger(__name__)

Predicate = Callable[[np.ndarray], bool]


def all_finite(traj: np.ndarray) -> bool:
    """Default adequacy predicate."""
    return bool(np.all(np.isfinite(traj)))


class McConfig(BaseModel):
    """Monte Carlo run parameters."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    trials: int = Field(..., ge=1)
    workers: int = Field(default_factory=lambda: settings.default_workers, ge=1)
    master_seed: Optional[int] = Field(None, ge=0)
    grid: TimeGrid
    x0: np.ndarray
    stepper: Any
    predicate: Optional[Predicate] = None
    batch_size: int = Field(default_factory=lambda: settings.default_batch_size, ge=1)
    track_variance: bool = False

    @field_validator("x0", mode="before")
    @classmethod
    def _as_state(cls, value: Any) -> np.ndarray:
        array = np.atleast_1d(np.asarray(value, dtype=float))
        if array.ndim != 1:
            raise ValueError(f"x0 must be a vector, got shape {array.shape}")
        return array


@dataclass(frozen=True)
class McAccumulator:
    """Running mean (and optionally second central moment sum) of n trajectories."""

    n: int
    mean: np.ndarray
    m2: Optional[np.ndarray] = None

    @classmethod
    def empty(cls, shape: Tuple[int, ...], track_variance: bool = False) -> "McAccumulator":
        return cls(0, np.zeros(shape), np.zeros(shape) if track_variance else None)

    @property
    def variance(self) -> Optional[np.ndarray]:
        """Unbiased sample variance; zeros until two trajectories are in."""
        if self.m2 is None:
            return None
        if self.n < 2:
            return np.zeros_like(self.m2)
        return self.m2 / (self.n - 1)


def online_mean_update(acc: McAccumulator, traj: np.ndarray) -> McAccumulator:
    """mean_n = mean_{n-1} + (x_n - mean_{n-1}) / n, elementwise."""
    traj = np.asarray(traj, dtype=float)
    if traj.shape != acc.mean.shape:
        raise ShapeError(f"Trajectory shape {traj.shape} does not match accumulator {acc.mean.shape}")
    n = acc.n + 1
    delta = traj - acc.mean
    mean = acc.mean + delta / n
    m2 = None if acc.m2 is None else acc.m2 + delta * (traj - mean)
    return McAccumulator(n, mean, m2)


def merge(a: McAccumulator, b: McAccumulator) -> McAccumulator:
    """Weighted pairwise combination; an empty side returns the other unchanged."""
    if a.mean.shape != b.mean.shape:
        raise ShapeError(f"Cannot merge accumulators of shapes {a.mean.shape} and {b.mean.shape}")
    if a.n == 0:
        return b
    if b.n == 0:
        return a
    n = a.n + b.n
    mean = (a.n * a.mean + b.n * b.mean) / n
    m2 = None
    if a.m2 is not None and b.m2 is not None:
        delta = b.mean - a.mean
        m2 = a.m2 + b.m2 + delta * delta * (a.n * b.n / n)
    return McAccumulator(n, mean, m2)


def seed_worker(master_seed: int, worker_index: int, workers: Optional[int] = None) -> np.random.Generator:
    """Independent, reproducible stream for one worker."""
    if worker_index < 0 or (workers is not None and worker_index >= workers):
        raise UserInputError(f"Worker index {worker_index} outside 0..{(workers or 1) - 1}")
    sequence = np.random.SeedSequence(master_seed, spawn_key=(worker_index,))
    return np.random.Generator(np.random.PCG64(sequence))


def partition_trials(trials: int, workers: int) -> List[int]:
    """Equal shares, remainder to the last worker."""
    share, remainder = divmod(trials, workers)
    counts = [share] * workers
    counts[-1] += remainder
    return counts


def _run_worker(
    sys: SdeSystem, cfg: McConfig, master_seed: int, worker_index: int, trials: int
) -> Tuple[McAccumulator, int]:
    try:
        d = sys.d
        acc = McAccumulator.empty((cfg.grid.N + 1, d), cfg.track_variance)
        predicate = cfg.predicate or all_finite
        bit_generator = seed_worker(master_seed, worker_index, cfg.workers).bit_generator
        rejected = 0
        done = 0
        chunk = 0
        while done < trials:
            size = min(cfg.batch_size, trials - done)
            rng = np.random.Generator(bit_generator.jumped(chunk + 1))
            x0 = np.broadcast_to(cfg.x0, (size, d)).copy()
            source = source_for(cfg.stepper, sys, rng, cfg.grid, batch_shape=(size,))
            with np.errstate(over="ignore", invalid="ignore"):
                paths = integrate(cfg.stepper, sys, x0, cfg.grid, source, check_finite=False)
            for traj in paths:
                if predicate(traj):
                    acc = online_mean_update(acc, traj)
                else:
                    rejected += 1
            done += size
            chunk += 1
        return acc, rejected
    except WorkerError:
        raise
    except Exception as exc:
        raise WorkerError(worker_index, f"{type(exc).__name__}: {exc}") from exc


@dataclass
class McResult:
    times: np.ndarray
    mean: np.ndarray
    accepted: int
    rejected: int
    master_seed: int
    assignment: List[int]
    variance: Optional[np.ndarray] = None
    metadata: Dict[str, Any] = field(default_factory=dict)


def run_trials(sys: SdeSystem, cfg: McConfig) -> McResult:
    """Integrate ``cfg.trials`` paths over ``cfg.workers`` processes and merge the means.

    Raises:
        WorkerError: a worker failed; carries its index.
        NoAcceptedTrajectoriesError: every trajectory was rejected.
    """
    x0 = cfg.x0
    sys.check_state(x0)
    master_seed = cfg.master_seed
    if master_seed is None:
        master_seed = int(np.random.SeedSequence().entropy)  # type: ignore[arg-type]
    assignment = partition_trials(cfg.trials, cfg.workers)
    logger.info(
        "mc_started",
        system=sys.name,
        stepper=cfg.stepper.name,
        trials=cfg.trials,
        workers=cfg.workers,
        batch_size=cfg.batch_size,
        master_seed=master_seed,
    )

    jobs = (
        delayed(_run_worker)(sys, cfg, master_seed, w, count)
        for w, count in enumerate(assignment)
    )
    outcomes = Parallel(n_jobs=cfg.workers, backend="loky")(jobs)

    total = McAccumulator.empty((cfg.grid.N + 1, sys.d), cfg.track_variance)
    rejected = 0
    for acc, worker_rejected in outcomes:
        total = merge(total, acc)
        rejected += worker_rejected
    if total.n == 0:
        raise NoAcceptedTrajectoriesError(f"All {cfg.trials} trajectories were rejected")

    logger.info("mc_finished", accepted=total.n, rejected=rejected)
    return McResult(
        times=cfg.grid.times(),
        mean=total.mean,
        accepted=total.n,
        rejected=rejected,
        master_seed=master_seed,
        assignment=assignment,
        variance=total.variance,
        metadata={
            "seed": master_seed,
            "trials": cfg.trials,
            "workers": cfg.workers,
            "batch_size": cfg.batch_size,
            "method": cfg.stepper.name,
            "h": cfg.grid.h,
            "accepted": total.n,
            "rejected": rejected,
            "assignment": assignment,
        },
    )


def save_results(result: McResult, out_dir: Path, metadata: Optional[Dict[str, Any]] = None) -> None:
    """Write ``mean.csv`` (t, mean_x*, optional var_x*) and ``metadata.json``."""
    out_dir = ensure_dir(Path(out_dir))
    d = result.mean.shape[1]
    frame = pd.DataFrame(result.mean, columns=[f"mean_x{i + 1}" for i in range(d)])
    frame.insert(0, "t", result.times)
    if result.variance is not None:
        for i in range(d):
            frame[f"var_x{i + 1}"] = result.variance[:, i]
    path = out_dir / "mean.csv"
    try:
        frame.to_csv(path, index=False, float_format="%.17g")
    except OSError as exc:
        raise OutputError(path, f"cannot write mean CSV: {exc.strerror or exc}") from exc
    combined = dict(result.metadata)
    combined.update(metadata or {})
    write_text(out_dir / "metadata.json", json.dumps(combined, indent=2, default=str) + "\n")
