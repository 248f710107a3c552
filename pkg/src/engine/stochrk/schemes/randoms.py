"""Discrete random variables for weak schemes.

I-hat takes -sqrt(3h), 0, sqrt(3h) with probabilities 1/6, 2/3, 1/6 and
matches Gaussian moments up to order five; I-tilde takes -sqrt(h), sqrt(h)
with equal probability. Pairwise terms follow

    I-hat^{kl} = (I-hat^k I-hat^l - sqrt(h) I-tilde^k) / 2    k < l
    I-hat^{kl} = (I-hat^k I-hat^l + sqrt(h) I-tilde^l) / 2    k > l
    I-hat^{kk} = ((I-hat^k)^2 - h) / 2
"""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from stochrk_common.exceptions import GridError

THREE_POINT_PROBABILITIES: Tuple[float, float, float] = (1 / 6, 2 / 3, 1 / 6)


@dataclass(frozen=True)
class WeakRandomSet:
    """Random quantities for one weak step: Ihat, Itil of shape (..., m), Ihat2 (..., m, m)."""

    h: float
    Ihat: np.ndarray
    Itil: np.ndarray
    Ihat2: np.ndarray

    @property
    def m(self) -> int:
        return int(self.Ihat.shape[-1])


def weak_pair_matrix(Ihat: np.ndarray, Itil: np.ndarray, h: float) -> np.ndarray:
    """Assemble I-hat^{kl} from the three-point and two-point variables."""
    m = Ihat.shape[-1]
    root_h = math.sqrt(h)
    outer = Ihat[..., :, None] * Ihat[..., None, :]
    upper = np.triu(np.ones((m, m), dtype=bool), k=1)
    lower = upper.T
    correction = np.where(upper, -root_h * Itil[..., :, None], 0.0) + np.where(
        lower, root_h * Itil[..., None, :], 0.0
    )
    pair = outer + correction
    diag = np.arange(m)
    pair[..., diag, diag] = Ihat * Ihat - h
    return pair / 2


def sample_weak_randoms(
    rng: np.random.Generator, m: int, h: float, size: Tuple[int, ...] = ()
) -> WeakRandomSet:
    """Draw I-hat then I-tilde for ``size`` paths and build the pair matrix."""
    if h <= 0:
        raise GridError(f"Step size must be positive, got h={h}")
    shape = tuple(size) + (m,)
    r = math.sqrt(3.0 * h)
    Ihat = rng.choice(np.array([-r, 0.0, r]), size=shape, p=THREE_POINT_PROBABILITIES)
    root_h = math.sqrt(h)
    Itil = rng.choice(np.array([-root_h, root_h]), size=shape)
    return WeakRandomSet(h=h, Ihat=Ihat, Itil=Itil, Ihat2=weak_pair_matrix(Ihat, Itil, h))
