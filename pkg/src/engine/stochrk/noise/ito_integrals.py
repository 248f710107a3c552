"""Single, double and triple Ito integrals over one step.

Notation: for noise components a, b the double integral I^{ab} is
int_{t}^{t+h} int_{t}^{s} dW^a(u) dW^b(s), so the inner integral runs over a.
Diagonal and time-mixed integrals have closed forms in the step's increment.
Off-diagonal double integrals are the exact symmetric part plus a truncated
Fourier series for the antisymmetric (Levy area) part, driven by auxiliary
standard normals V_k, U_k (k = 1..n_terms).

All functions accept leading batch axes: an increment of shape (..., m)
yields integrals of matching leading shape.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from stochrk_common.config import settings
from stochrk_common.exceptions import GridError, ShapeError


class SeriesConfig(BaseModel):
    """Truncation length of the Levy-area series."""

    model_config = ConfigDict(frozen=True)

    n_terms: int = Field(..., ge=1)

    @classmethod
    def for_step(cls, h: float) -> "SeriesConfig":
        """Default rule n_terms = max(1, ceil(1/h)) unless overridden in settings.

        Truncation error is O(h^2 / n_terms), kept below the local error of
        the order-1 vector schemes.
        """
        if settings.series_terms is not None:
            return cls(n_terms=settings.series_terms)
        return cls(n_terms=max(1, math.ceil(1.0 / h)))


@dataclass(frozen=True)
class ItoIntegralSet:
    """Integrals needed by one step of any bundled scheme.

    Shapes: single, time_left, time_right, triple_diag are (..., m); double is
    (..., m, m) with double[..., a, b] = I^{ab}.
    """

    h: float
    single: np.ndarray
    time_left: np.ndarray  # I^{0a}
    time_right: np.ndarray  # I^{a0}
    double: np.ndarray
    triple_diag: np.ndarray

    @property
    def m(self) -> int:
        return int(self.single.shape[-1])


def single_integrals(dW: np.ndarray, h: float) -> Tuple[float, np.ndarray]:
    """Return (I^0, I^1..I^m) = (h, dW)."""
    return h, np.asarray(dW, dtype=float)


def double_same(dW: np.ndarray | float, h: float) -> np.ndarray | float:
    """I^{aa} = ((dW^a)^2 - h) / 2."""
    return (dW * dW - h) / 2


def double_time(h: float) -> float:
    """I^{00} = h^2 / 2."""
    return h * h / 2


def mixed_time(I: np.ndarray | float, zeta: np.ndarray | float, h: float) -> Tuple:
    """(I^{0a}, I^{a0}) from the increment and an independent zeta ~ N(0, h)."""
    shift = zeta / math.sqrt(3.0)
    return h * (I - shift) / 2, h * (I + shift) / 2


def triple_diag(dW: np.ndarray | float, h: float) -> np.ndarray | float:
    """I^{aaa} = ((dW^a)^3 - 3 h dW^a) / 6."""
    return (dW * dW * dW - 3 * h * dW) / 6


def draw_series_normals(
    rng: np.random.Generator, n_terms: int, m: int, batch_shape: Tuple[int, ...] = ()
) -> Tuple[np.ndarray, np.ndarray]:
    """Draw the auxiliary normals for the Levy-area series.

    Per path the draw order is k-major, V before U, component-minor: the
    stream yields V_1^1..V_1^m, U_1^1..U_1^m, V_2^1, ... Returns V and U of
    shape batch_shape + (n_terms, m).
    """
    raw = rng.standard_normal(size=tuple(batch_shape) + (n_terms, 2, m))
    return raw[..., 0, :], raw[..., 1, :]


def levy_area_scalar(dW: np.ndarray, h: float, V: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Antisymmetric series part A^{ab} by explicit summation (single path)."""
    dW = np.asarray(dW, dtype=float)
    m = dW.shape[-1]
    n_terms = V.shape[0]
    root = math.sqrt(2.0 / h)
    scale = h / (2 * math.pi)
    area = np.zeros((m, m))
    for a in range(m):
        for b in range(a + 1, m):
            total = 0.0
            for k in range(n_terms):
                total += (
                    V[k, a] * (U[k, b] + root * dW[b]) - V[k, b] * (U[k, a] + root * dW[a])
                ) / (k + 1)
            area[a, b] = scale * total
            area[b, a] = -area[a, b]
    return area


def levy_area_matrix(dW: np.ndarray, h: float, V: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Antisymmetric series part A^{ab} in matrix form, batched over leading axes."""
    dW = np.asarray(dW, dtype=float)
    n_terms = V.shape[-2]
    weights = 1.0 / np.arange(1, n_terms + 1, dtype=float)
    shifted = U + math.sqrt(2.0 / h) * dW[..., None, :]
    products = np.einsum("k,...ka,...kb->...ab", weights, V, shifted)
    return h / (2 * math.pi) * (products - np.swapaxes(products, -1, -2))


def symmetric_double(dW: np.ndarray, h: float) -> np.ndarray:
    """(dW^a dW^b - h delta^{ab}) / 2, the double integrals without areas.

    The diagonal equals :func:`double_same` bit for bit.
    """
    dW = np.asarray(dW, dtype=float)
    m = dW.shape[-1]
    return (dW[..., :, None] * dW[..., None, :] - h * np.eye(m)) / 2


def double_cross(
    dW: np.ndarray,
    h: float,
    cfg: SeriesConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Full m x m matrix of double integrals with truncated Levy areas.

    For m = 1 no auxiliary normals are drawn.
    """
    dW = np.asarray(dW, dtype=float)
    if dW.ndim == 0:
        dW = dW.reshape(1)
    double = symmetric_double(dW, h)
    m = dW.shape[-1]
    if m == 1:
        return double
    V, U = draw_series_normals(rng, cfg.n_terms, m, dW.shape[:-1])
    return double + levy_area_matrix(dW, h, V, U)


def sample_step_integrals(
    dW: np.ndarray,
    h: float,
    rng: np.random.Generator,
    cfg: Optional[SeriesConfig] = None,
    levy_area: bool = True,
) -> ItoIntegralSet:
    """Assemble every integral a step needs from its increment.

    Draws zeta (one per component) first, then the series normals when
    m > 1 and ``levy_area`` is set. With ``levy_area`` off only the symmetric
    part of the double integrals is kept, which suffices for commutative
    noise and for schemes that never read off-diagonal entries.
    """
    dW = np.asarray(dW, dtype=float)
    if dW.ndim == 0:
        raise ShapeError("Increment must have a trailing noise axis, got a scalar")
    if h <= 0:
        raise GridError(f"Step size must be positive, got h={h}")
    zeta = rng.normal(0.0, math.sqrt(h), size=dW.shape)
    time_left, time_right = mixed_time(dW, zeta, h)
    if levy_area and dW.shape[-1] > 1:
        double = double_cross(dW, h, cfg or SeriesConfig.for_step(h), rng)
    else:
        double = symmetric_double(dW, h)
    return ItoIntegralSet(
        h=h,
        single=dW,
        time_left=time_left,
        time_right=time_right,
        double=double,
        triple_diag=triple_diag(dW, h),
    )
