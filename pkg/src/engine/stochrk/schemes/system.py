"""SDE systems dx = f(t, x) dt + G(t, x) dW in Ito form."""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from stochrk_common.exceptions import ShapeError

Field = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SdeSystem:
    """Drift and diffusion of a d-dimensional system driven by m Wiener processes.

    ``drift(t, x)`` returns shape (..., d) and ``diffusion(t, x)`` shape
    (..., d, m) for x of shape (..., d). Systems whose functions only handle
    a single state vector set ``vectorized=False``; batched integration then
    loops over paths.
    """

    d: int
    m: int
    drift: Field
    diffusion: Field
    name: str = ""
    vectorized: bool = True
    commutative_noise: bool = False

    def __post_init__(self) -> None:
        if self.d < 1 or self.m < 1:
            raise ShapeError(f"System dimensions must be positive, got d={self.d}, m={self.m}")

    def f(self, t: float, x: np.ndarray) -> np.ndarray:
        if self.vectorized or x.ndim == 1:
            return np.asarray(self.drift(t, x), dtype=float)
        flat = x.reshape(-1, self.d)
        out = np.stack([np.asarray(self.drift(t, row), dtype=float) for row in flat])
        return out.reshape(x.shape)

    def G(self, t: float, x: np.ndarray) -> np.ndarray:
        if self.vectorized or x.ndim == 1:
            return np.asarray(self.diffusion(t, x), dtype=float)
        flat = x.reshape(-1, self.d)
        out = np.stack([np.asarray(self.diffusion(t, row), dtype=float) for row in flat])
        return out.reshape(x.shape[:-1] + (self.d, self.m))

    def check_state(self, x: np.ndarray) -> None:
        if x.shape[-1:] != (self.d,):
            raise ShapeError(f"State has shape {x.shape}, expected trailing dimension d={self.d}")

    def check_noise(self, dW: np.ndarray) -> None:
        if dW.shape[-1:] != (self.m,):
            raise ShapeError(f"Noise has shape {dW.shape}, expected trailing dimension m={self.m}")

    def check_fields(self, t: float, x: np.ndarray) -> None:
        """Evaluate both fields once and verify their shapes."""
        f = self.f(t, x)
        G = self.G(t, x)
        if f.shape != x.shape:
            raise ShapeError(f"{self.name or 'drift'}: returned {f.shape}, expected {x.shape}")
        if G.shape != x.shape + (self.m,):
            raise ShapeError(
                f"{self.name or 'diffusion'}: returned {G.shape}, expected {x.shape + (self.m,)}"
            )
