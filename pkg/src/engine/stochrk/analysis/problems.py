"""Test problems with closed-form solutions, used to measure convergence orders.

Every problem provides a pathwise reference ``exact_path`` driven by the same
increments the stepper sees, and analytic values of E[F(x(T))] for the
functionals in :data:`FUNCTIONALS`. A solution that depends on more of the
Brownian path than its increments also provides ``sample_aux``, which draws
the extra per-step variables conditionally on the increments.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional

import numpy as np

from stochrk_common.exceptions import ShapeError, UnknownNameError, UserInputError

from ..noise.ito_integrals import ItoIntegralSet
from ..noise.wiener import WienerPath, cumulative
from ..schemes.system import SdeSystem

ExactPath = Callable[[np.ndarray, float, Optional[np.ndarray]], np.ndarray]
ExactStep = Callable[[float, np.ndarray, float, np.ndarray], np.ndarray]
SampleAux = Callable[[np.ndarray, float, np.random.Generator], np.ndarray]

# Functionals act on final states of shape (..., d) through the first component
FUNCTIONALS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "identity": lambda x: x[..., 0],
    "square": lambda x: x[..., 0] ** 2,
}


@dataclass(frozen=True)
class TestProblem:
    """An SDE on [t0, T] with a pathwise exact solution."""

    __test__ = False  # not a pytest class

    name: str
    sys: SdeSystem
    x0: np.ndarray
    t0: float
    T: float
    exact_path: ExactPath
    exact_weak: Mapping[str, float]
    exact_step: Optional[ExactStep] = None
    sample_aux: Optional[SampleAux] = None
    params: Mapping[str, float] = field(default_factory=dict)

    def exact_strong(
        self, path: WienerPath | np.ndarray, h: Optional[float] = None, aux: Optional[np.ndarray] = None
    ) -> np.ndarray:
        """Exact state at the end of a path prefix (x0 for an empty prefix)."""
        if isinstance(path, WienerPath):
            increments, h = path.increments, path.grid.h
        else:
            increments = np.asarray(path, dtype=float)
            if h is None:
                raise UserInputError("Raw increments need the step size h")
        return self.exact_path(increments, h, aux)[..., -1, :]


def _node_times(increments: np.ndarray, h: float) -> np.ndarray:
    n = increments.shape[-2]
    return h * np.arange(n + 1, dtype=float)


def make_gbm(mu: float = 0.5, sigma: float = 0.3, x0: float = 1.0, T: float = 1.0) -> TestProblem:
    """dx = mu x dt + sigma x dW, x(t) = x0 exp((mu - sigma^2/2) t + sigma W(t))."""
    sys = SdeSystem(
        d=1,
        m=1,
        drift=lambda t, x: mu * x,
        diffusion=lambda t, x: (sigma * x)[..., None],
        name="gbm",
    )
    rate = mu - sigma * sigma / 2

    def exact_path(increments: np.ndarray, h: float, aux: Optional[np.ndarray] = None) -> np.ndarray:
        W = cumulative(increments)
        t = _node_times(increments, h)[:, None]
        return x0 * np.exp(rate * t + sigma * W)

    def exact_step(t: float, x: np.ndarray, h: float, dW: np.ndarray) -> np.ndarray:
        return x * np.exp(rate * h + sigma * dW)

    return TestProblem(
        name="gbm",
        sys=sys,
        x0=np.array([x0]),
        t0=0.0,
        T=T,
        exact_path=exact_path,
        exact_weak={
            "identity": x0 * math.exp(mu * T),
            "square": x0 * x0 * math.exp((2 * mu + sigma * sigma) * T),
        },
        exact_step=exact_step,
        params={"mu": mu, "sigma": sigma, "x0": x0, "T": T},
    )


def sample_ou_integrals(
    increments: np.ndarray, h: float, theta: float, rng: np.random.Generator
) -> np.ndarray:
    """Draw J_i = int exp(-theta (t_{i+1} - s)) dW(s) over each step, given dW_i.

    (J_i, dW_i) is jointly Gaussian with Var J = (1 - exp(-2 theta h)) / (2 theta)
    and Cov(J, dW) = (1 - exp(-theta h)) / theta, so J is the regression on dW
    plus an independent normal residual. For theta = 0, J_i = dW_i.
    """
    increments = np.asarray(increments, dtype=float)
    if theta == 0.0:
        return increments.copy()
    var = -math.expm1(-2 * theta * h) / (2 * theta)
    cov = -math.expm1(-theta * h) / theta
    residual = math.sqrt(max(var - cov * cov / h, 0.0))
    return (cov / h) * increments + residual * rng.standard_normal(increments.shape)


def make_ou(theta: float = 1.0, sigma: float = 0.5, x0: float = 1.0, T: float = 1.0) -> TestProblem:
    """dx = -theta x dt + sigma dW.

    The pathwise reference is x_{i+1} = exp(-theta h) x_i + sigma J_i with J_i
    from :func:`sample_ou_integrals`; for theta = 0 it is x0 + sigma W. There
    is no transition driven by dW alone, so ``exact_step`` is None.
    """
    sys = SdeSystem(
        d=1,
        m=1,
        drift=lambda t, x: -theta * x,
        diffusion=lambda t, x: np.full(np.shape(x) + (1,), sigma),
        name="ou",
        commutative_noise=True,
    )

    def sample_aux(increments: np.ndarray, h: float, rng: np.random.Generator) -> np.ndarray:
        return sample_ou_integrals(increments, h, theta, rng)

    def exact_path(increments: np.ndarray, h: float, aux: Optional[np.ndarray] = None) -> np.ndarray:
        increments = np.asarray(increments, dtype=float)
        if theta == 0.0:
            return x0 + sigma * cumulative(increments)
        n = increments.shape[-2]
        out = np.empty(increments.shape[:-2] + (n + 1, 1))
        out[..., 0, :] = x0
        if n == 0:
            return out
        if aux is None:
            raise UserInputError("The OU reference needs weighted integrals from sample_aux")
        aux = np.asarray(aux, dtype=float)
        if aux.shape != increments.shape:
            raise ShapeError(f"Weighted integrals have shape {aux.shape}, increments {increments.shape}")
        decay = math.exp(-theta * h)
        for i in range(n):
            out[..., i + 1, :] = decay * out[..., i, :] + sigma * aux[..., i, :]
        return out

    mean = x0 * math.exp(-theta * T)
    if theta == 0.0:
        spread = sigma * sigma * T
    else:
        spread = sigma * sigma * (1 - math.exp(-2 * theta * T)) / (2 * theta)
    return TestProblem(
        name="ou",
        sys=sys,
        x0=np.array([x0]),
        t0=0.0,
        T=T,
        exact_path=exact_path,
        exact_weak={"identity": mean, "square": mean * mean + spread},
        sample_aux=sample_aux,
        params={"theta": theta, "sigma": sigma, "x0": x0, "T": T},
    )


def make_diagonal_gbm(
    mu: tuple = (0.5, -0.2), sigma: tuple = (0.3, 0.4), x0: tuple = (1.0, 2.0), T: float = 1.0
) -> TestProblem:
    """Two independent GBMs, dx_i = mu_i x_i dt + sigma_i x_i dW_i (d = m = 2)."""
    mu_v = np.asarray(mu, dtype=float)
    sigma_v = np.asarray(sigma, dtype=float)
    x0_v = np.asarray(x0, dtype=float)
    scale = np.diag(sigma_v)
    sys = SdeSystem(
        d=2,
        m=2,
        drift=lambda t, x: mu_v * x,
        diffusion=lambda t, x: x[..., :, None] * scale,
        name="diagonal_gbm",
    )
    rate = mu_v - sigma_v * sigma_v / 2

    def exact_path(increments: np.ndarray, h: float, aux: Optional[np.ndarray] = None) -> np.ndarray:
        W = cumulative(increments)
        t = _node_times(increments, h)[:, None]
        return x0_v * np.exp(rate * t + sigma_v * W)

    def exact_step(t: float, x: np.ndarray, h: float, dW: np.ndarray) -> np.ndarray:
        return x * np.exp(rate * h + sigma_v * dW)

    return TestProblem(
        name="diagonal_gbm",
        sys=sys,
        x0=x0_v,
        t0=0.0,
        T=T,
        exact_path=exact_path,
        exact_weak={
            "identity": float(x0_v[0] * math.exp(mu_v[0] * T)),
            "square": float(x0_v[0] ** 2 * math.exp((2 * mu_v[0] + sigma_v[0] ** 2) * T)),
        },
        exact_step=exact_step,
        params={"T": T},
    )


def make_zero(x0: float = 1.0, T: float = 1.0) -> TestProblem:
    """f = G = 0; the state never moves."""
    sys = SdeSystem(
        d=1,
        m=1,
        drift=lambda t, x: np.zeros_like(x),
        diffusion=lambda t, x: np.zeros(np.shape(x) + (1,)),
        name="zero",
    )

    def exact_path(increments: np.ndarray, h: float, aux: Optional[np.ndarray] = None) -> np.ndarray:
        shape = np.shape(increments)[:-2] + (np.shape(increments)[-2] + 1, 1)
        return np.full(shape, x0)

    return TestProblem(
        name="zero",
        sys=sys,
        x0=np.array([x0]),
        t0=0.0,
        T=T,
        exact_path=exact_path,
        exact_weak={"identity": x0, "square": x0 * x0},
        exact_step=lambda t, x, h, dW: x,
        params={"x0": x0, "T": T},
    )


_FACTORIES: Dict[str, Callable[..., TestProblem]] = {
    "gbm": make_gbm,
    "ou": make_ou,
    "diagonal_gbm": make_diagonal_gbm,
    "zero": make_zero,
}


def builtin_problems() -> Dict[str, TestProblem]:
    """Catalog of every built-in problem with default parameters."""
    return {name: factory() for name, factory in _FACTORIES.items()}


def problem_names() -> List[str]:
    return list(_FACTORIES)


def get_problem(name: str, **params: Any) -> TestProblem:
    """Build a problem by name, overriding its keyword parameters."""
    try:
        factory = _FACTORIES[name]
    except KeyError:
        raise UnknownNameError(f"Unknown problem {name!r}; available: {', '.join(_FACTORIES)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise UserInputError(f"Bad parameters for problem {name!r}: {exc}") from exc


@dataclass(frozen=True)
class ExactStepper:
    """Advances a problem by its closed-form transition over each step."""

    problem: TestProblem
    randomness: str = "strong"
    uses_levy_area: bool = False

    def __post_init__(self) -> None:
        if self.problem.exact_step is None:
            raise UserInputError(f"Problem {self.problem.name!r} has no closed-form transition")

    @property
    def name(self) -> str:
        return f"exact:{self.problem.name}"

    def step(self, sys: SdeSystem, t: float, x: np.ndarray, h: float, draw: ItoIntegralSet) -> np.ndarray:
        return self.problem.exact_step(t, x, h, draw.single)  # type: ignore[misc]
