"""Uniform time grids and sampled Wiener paths.

A path stores its increments; cumulative values are computed on demand
since every stepper consumes increments. Batched ensembles keep the same
layout with a leading path axis so that many paths can be integrated in
one vectorized sweep.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List

import numpy as np
import pandas as pd

from stochrk_common.exceptions import GridError, OutputError, ShapeError


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t0 < t1 < ... < tN = T."""

    t0: float
    T: float
    N: int

    def __post_init__(self) -> None:
        if not isinstance(self.N, (int, np.integer)) or isinstance(self.N, bool):
            raise GridError(f"Number of steps must be an integer, got {self.N!r}")
        if self.N < 1:
            raise GridError(f"Grid needs at least one step, got N={self.N}")
        if not np.isfinite(self.t0) or not np.isfinite(self.T):
            raise GridError(f"Grid bounds must be finite, got [{self.t0}, {self.T}]")
        if self.T <= self.t0:
            raise GridError(f"Grid end T={self.T} must exceed start t0={self.t0}")

    @classmethod
    def from_step(cls, t0: float, T: float, h: float) -> "TimeGrid":
        """Build a grid from a step size that divides [t0, T] into whole steps."""
        if h <= 0:
            raise GridError(f"Step size must be positive, got h={h}")
        steps = (T - t0) / h
        N = int(round(steps))
        if N < 1 or abs(steps - N) > 1e-9 * max(1.0, steps):
            raise GridError(f"Step h={h} does not divide [{t0}, {T}] into whole steps")
        return cls(t0=t0, T=T, N=N)

    @property
    def h(self) -> float:
        return (self.T - self.t0) / self.N

    def times(self) -> np.ndarray:
        """Node times t_n = t0 + n*h, with the last node pinned to T."""
        t = self.t0 + self.h * np.arange(self.N + 1, dtype=float)
        t[-1] = self.T
        return t

    def time(self, n: int) -> float:
        return self.t0 + n * self.h


def _freeze(obj: object, name: str) -> None:
    """Store a private read-only float copy of an array field."""
    value = np.array(getattr(obj, name), dtype=float)
    value.setflags(write=False)
    object.__setattr__(obj, name, value)


@dataclass(frozen=True)
class WienerPath:
    """One sampled path: N x m increments over ``grid``."""

    grid: TimeGrid
    m: int
    increments: np.ndarray

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ShapeError(f"Noise dimension must be positive, got m={self.m}")
        _freeze(self, "increments")
        if self.increments.shape != (self.grid.N, self.m):
            raise ShapeError(
                f"Increments have shape {self.increments.shape}, "
                f"expected ({self.grid.N}, {self.m})"
            )


@dataclass(frozen=True)
class WienerEnsemble:
    """Several independent paths sharing one grid: count x N x m increments."""

    grid: TimeGrid
    m: int
    increments: np.ndarray

    def __post_init__(self) -> None:
        _freeze(self, "increments")
        if self.increments.ndim != 3 or self.increments.shape[1:] != (self.grid.N, self.m):
            raise ShapeError(
                f"Ensemble increments have shape {self.increments.shape}, "
                f"expected (count, {self.grid.N}, {self.m})"
            )

    @property
    def count(self) -> int:
        return int(self.increments.shape[0])

    def path(self, index: int) -> WienerPath:
        return WienerPath(grid=self.grid, m=self.m, increments=self.increments[index].copy())

    def paths(self) -> List[WienerPath]:
        return [self.path(i) for i in range(self.count)]


def _check_noise_dim(m: int) -> None:
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise ShapeError(f"Noise dimension must be a positive integer, got m={m!r}")


def generate_path(rng: np.random.Generator, grid: TimeGrid, m: int) -> WienerPath:
    """Draw N x m independent N(0, h) increments from ``rng``."""
    _check_noise_dim(m)
    increments = rng.normal(0.0, np.sqrt(grid.h), size=(grid.N, m))
    return WienerPath(grid=grid, m=m, increments=increments)


def generate_paths(rng: np.random.Generator, grid: TimeGrid, m: int, count: int) -> WienerEnsemble:
    """Draw ``count`` independent paths at once (path-major draw order)."""
    _check_noise_dim(m)
    if count < 1:
        raise ShapeError(f"Path count must be positive, got {count}")
    increments = rng.normal(0.0, np.sqrt(grid.h), size=(count, grid.N, m))
    return WienerEnsemble(grid=grid, m=m, increments=increments)


def cumulative(path: WienerPath | np.ndarray) -> np.ndarray:
    """W(t_n) for n = 0..N, starting from a zero row.

    Accepts a path or a raw increments array of shape (..., N, m); a zero-row
    array yields a single zero row. Differencing the result recovers each
    increment only up to the rounding of the running sum, about one ulp of
    the larger neighbouring W value.
    """
    increments = path.increments if isinstance(path, WienerPath) else np.asarray(path, dtype=float)
    lead = increments.shape[:-2]
    m = increments.shape[-1]
    out = np.zeros(lead + (increments.shape[-2] + 1, m), dtype=float)
    np.cumsum(increments, axis=-2, out=out[..., 1:, :])
    return out


def save_path_csv(path: WienerPath, file_path: Path) -> None:
    """Dump cumulative values with header ``t,W1..Wm``."""
    values = cumulative(path)
    frame = pd.DataFrame(values, columns=[f"W{i + 1}" for i in range(path.m)])
    frame.insert(0, "t", path.grid.times())
    try:
        frame.to_csv(file_path, index=False, float_format="%.17g")
    except OSError as exc:
        raise OutputError(file_path, f"cannot write path CSV: {exc.strerror or exc}") from exc


def load_path_csv(file_path: Path) -> WienerPath:
    """Read a path written by :func:`save_path_csv`.

    The file stores W, not dW, so the increments are differences of the
    cumulative values and match the saved path to within about one ulp of W.
    """
    try:
        frame = pd.read_csv(file_path)
    except OSError as exc:
        raise OutputError(file_path, f"cannot read path CSV: {exc.strerror or exc}") from exc

    columns = list(frame.columns)
    m = len(columns) - 1
    expected = ["t"] + [f"W{i + 1}" for i in range(m)]
    if m < 1 or columns != expected:
        raise ShapeError(f"{file_path}: expected header {','.join(expected)}, got {','.join(columns)}")

    t = frame["t"].to_numpy(dtype=float)
    values = frame[expected[1:]].to_numpy(dtype=float)
    if len(t) < 2:
        raise GridError(f"{file_path}: path needs at least two grid nodes")
    if np.any(values[0] != 0.0):
        raise ShapeError(f"{file_path}: first row must be W(t0) = 0")

    grid = TimeGrid(t0=float(t[0]), T=float(t[-1]), N=len(t) - 1)
    if not np.allclose(t, grid.times(), rtol=0.0, atol=1e-9 * max(1.0, abs(grid.T))):
        raise GridError(f"{file_path}: time column is not a uniform grid")
    return WienerPath(grid=grid, m=m, increments=np.diff(values, axis=0))
