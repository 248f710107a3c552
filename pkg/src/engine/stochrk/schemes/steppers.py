"""Table-interpreted one-step methods.

These steppers read a coefficient table at run time and are the reference
the generated code is checked against. Stages are computed in a single loop
i = 1..s, building the drift stage X0_i together with the diffusion stages
(X^k_i, and X-hat^k_i for weak methods); strict lower triangularity makes
every reference well defined. Zero coefficients are skipped and stages that
collapse to the current state share one evaluation per abscissa.

Batch axes: x has shape (..., d) and every random input carries the same
leading axes.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from stochrk_common.config import settings
from stochrk_common.exceptions import NotExplicitError, ShapeError, TableKindError

from ..noise.ito_integrals import ItoIntegralSet
from ..tables.loaders import resolve_table
from ..tables.schemas import CoefficientTable, FloatTable, TableKind, to_float
from .randoms import WeakRandomSet
from .system import SdeSystem

ScalarField = Callable[[float, Any], Any]


class Stepper(Protocol):
    """One step x_n -> x_{n+1} given the step's randomness."""

    name: str
    randomness: str  # "strong" draws ItoIntegralSet, "weak" draws WeakRandomSet
    uses_levy_area: bool

    def step(self, sys: SdeSystem, t: float, x: np.ndarray, h: float, draw: Any) -> np.ndarray:
        ...


def _require_kind(table: FloatTable, kind: TableKind) -> None:
    if table.kind != kind:
        raise TableKindError(f"{table.name} is a {table.kind.value} table, expected {kind.value}")


def _combine(
    row: np.ndarray, values: Sequence[Optional[np.ndarray]], upto: int
) -> Optional[np.ndarray]:
    """sum_j row[j] * values[j] over j < upto with nonzero row[j]; None if empty."""
    total = None
    for j in range(upto):
        coef = row[j]
        if coef == 0.0:
            continue
        term = coef * values[j]
        total = term if total is None else total + term
    return total


def _stage(
    x: np.ndarray, h: float, drift: Optional[np.ndarray], noise: Optional[np.ndarray]
) -> np.ndarray:
    out = x
    if drift is not None:
        out = out + h * drift
    if noise is not None:
        out = out + noise
    return out


def _collapses(i: int, *rows: np.ndarray) -> bool:
    """True when stage i equals the current state (all coupling rows zero)."""
    return all(not np.any(row[:i] != 0.0) for row in rows)


# --- Euler-Maruyama ---------------------------------------------------------


def em_step(sys: SdeSystem, t: float, x: np.ndarray, h: float, dW: np.ndarray) -> np.ndarray:
    """x + f(t, x) h + G(t, x) dW."""
    x = np.asarray(x, dtype=float)
    dW = np.asarray(dW, dtype=float)
    sys.check_state(x)
    sys.check_noise(dW)
    if x.shape[:-1] != dW.shape[:-1] and dW.ndim > 1:
        raise ShapeError(f"State batch {x.shape[:-1]} does not match noise batch {dW.shape[:-1]}")
    G = sys.G(t, x)
    return x + sys.f(t, x) * h + np.einsum("...dm,...m->...d", G, dW)


# --- Scalar noise, strong order 1.5 ----------------------------------------


def scalar_strong_step(
    table: FloatTable,
    f: ScalarField,
    g: ScalarField,
    t: float,
    x: Any,
    h: float,
    ints: ItoIntegralSet,
) -> Any:
    """One step of the scalar strong scheme.

    X0_i = x + h sum_j A0_ij f_j + (I10/h) sum_j B0_ij g_j
    X1_i = x + h sum_j A1_ij f_j + sqrt(h) sum_j B1_ij g_j
    x'   = x + h sum_i a_i f_i
             + sum_i (b1_i I1 + b2_i I11/sqrt(h) + b3_i I10/h + b4_i I111/h) g_i

    with f_j = f(t + c0_j h, X0_j) and g_j = g(t + c1_j h, X1_j). ``ints``
    must have m = 1; its time_right entry is I10.
    """
    _require_kind(table, TableKind.SCALAR_STRONG)
    if ints.m != 1:
        raise ShapeError(f"Scalar scheme needs m = 1 integrals, got m = {ints.m}")
    s = table.s
    sqrt_h = np.sqrt(h)
    I1 = ints.single[..., 0]
    I10 = ints.time_right[..., 0]
    I11 = ints.double[..., 0, 0]
    I111 = ints.triple_diag[..., 0]
    need_f, need_g = table.need_drift, table.need_diffusion

    F: List[Optional[Any]] = [None] * s
    Gv: List[Optional[Any]] = [None] * s
    cache: Dict[Tuple[str, float], Any] = {}
    for i in range(s):
        if need_f[i]:
            if _collapses(i, table.A0[i], table.B0[i]):
                key = ("f", table.c0[i])
                if key not in cache:
                    cache[key] = f(t + table.c0[i] * h, x)
                F[i] = cache[key]
            else:
                noise = _combine(table.B0[i], Gv, i)
                X0 = _stage(x, h, _combine(table.A0[i], F, i), None if noise is None else (I10 / h) * noise)
                F[i] = f(t + table.c0[i] * h, X0)
        if need_g[i]:
            if _collapses(i, table.A1[i], table.B1[i]):
                key = ("g", table.c1[i])
                if key not in cache:
                    cache[key] = g(t + table.c1[i] * h, x)
                Gv[i] = cache[key]
            else:
                noise = _combine(table.B1[i], Gv, i)
                X1 = _stage(x, h, _combine(table.A1[i], F, i), None if noise is None else sqrt_h * noise)
                Gv[i] = g(t + table.c1[i] * h, X1)

    out = _stage(x, h, _combine(table.a, F, s), None)
    for i in range(s):
        if Gv[i] is None:
            continue
        weight = 0.0
        if table.b1[i] != 0.0:
            weight = weight + table.b1[i] * I1
        if table.b2[i] != 0.0:
            weight = weight + table.b2[i] * I11 / sqrt_h
        if table.b3[i] != 0.0:
            weight = weight + table.b3[i] * I10 / h
        if table.b4[i] != 0.0:
            weight = weight + table.b4[i] * I111 / h
        out = out + weight * Gv[i]
    return out


# --- Vector noise, strong order 1.0 ----------------------------------------


def vector_strong_step(
    table: FloatTable, sys: SdeSystem, t: float, x: np.ndarray, h: float, ints: ItoIntegralSet
) -> np.ndarray:
    """One step of the vector strong scheme.

    X0_i  = x + h sum_j A0_ij f_j + sum_j B0_ij sum_l G_l(X^l_j) I^l
    X^k_i = x + h sum_j A1_ij f_j + sum_j B1_ij sum_l G_l(X^l_j) I^{lk}/sqrt(h)
    x'    = x + h sum_i a_i f_i + sum_i sum_k (b1_i I^k + b2_i sqrt(h)) G_k(X^k_i)

    ``table.transpose_double`` swaps I^{lk} for I^{kl}.
    """
    _require_kind(table, TableKind.VECTOR_STRONG)
    x = np.asarray(x, dtype=float)
    sys.check_state(x)
    sys.check_noise(ints.single)
    s, m = table.s, sys.m
    sqrt_h = np.sqrt(h)
    I1 = ints.single
    # pair[..., l, k] is the factor multiplying G_l in stage X^k
    pair = np.swapaxes(ints.double, -1, -2) if table.transpose_double else ints.double
    need_f, need_g = table.need_drift, table.need_diffusion

    F: List[Optional[np.ndarray]] = [None] * s
    # Gc[j][..., :, l] = G_l(t + c1_j h, X^l_j)
    Gc: List[Optional[np.ndarray]] = [None] * s
    cache: Dict[Tuple[str, float], np.ndarray] = {}

    def noise_sum(row: np.ndarray, upto: int, factor: np.ndarray) -> Optional[np.ndarray]:
        total = None
        for j in range(upto):
            if row[j] == 0.0:
                continue
            term = row[j] * np.einsum("...dl,...l->...d", Gc[j], factor)
            total = term if total is None else total + term
        return total

    for i in range(s):
        t0 = t + table.c0[i] * h
        t1 = t + table.c1[i] * h
        if need_f[i]:
            if _collapses(i, table.A0[i], table.B0[i]):
                key = ("f", table.c0[i])
                if key not in cache:
                    cache[key] = sys.f(t0, x)
                F[i] = cache[key]
            else:
                X0 = _stage(x, h, _combine(table.A0[i], F, i), noise_sum(table.B0[i], i, I1))
                F[i] = sys.f(t0, X0)
        if need_g[i]:
            if _collapses(i, table.A1[i], table.B1[i]):
                key = ("G", table.c1[i])
                if key not in cache:
                    cache[key] = sys.G(t1, x)
                Gc[i] = cache[key]
            else:
                drift = _combine(table.A1[i], F, i)
                if _collapses(i, table.B1[i]):
                    Gc[i] = sys.G(t1, _stage(x, h, drift, None))
                else:
                    columns = []
                    for k in range(m):
                        noise = noise_sum(table.B1[i], i, pair[..., :, k])
                        if noise is not None:
                            noise = noise / sqrt_h
                        columns.append(sys.G(t1, _stage(x, h, drift, noise))[..., :, k])
                    Gc[i] = np.stack(columns, axis=-1)

    out = _stage(x, h, _combine(table.a, F, s), None)
    for i in range(s):
        if Gc[i] is None:
            continue
        if table.b1[i] != 0.0:
            out = out + table.b1[i] * np.einsum("...dk,...k->...d", Gc[i], I1)
        if table.b2[i] != 0.0:
            out = out + (table.b2[i] * sqrt_h) * Gc[i].sum(axis=-1)
    return out


# --- Vector noise, weak order 2.0 ------------------------------------------


def vector_weak_step(
    table: FloatTable, sys: SdeSystem, t: float, x: np.ndarray, h: float, w: WeakRandomSet
) -> np.ndarray:
    """One step of the vector weak scheme.

    X0_i      = x + h sum_j A0_ij f_j + sum_j B0_ij sum_l G_l(X^l_j) Ihat^l
    X^k_i     = x + h sum_j A1_ij f_j + sum_j B1_ij G_k(X^k_j) sqrt(h)
    Xhat^k_i  = x + h sum_j A2_ij f_j + sum_j B2_ij sum_{l != k} G_l(X^l_j) Ihat^{kl}/sqrt(h)
    x'        = x + h sum_i a_i f_i
                  + sum_i sum_k (b1_i Ihat^k + b2_i Ihat^{kk}/sqrt(h)) G_k(X^k_i)
                  + sum_i sum_k (b3_i Ihat^k + b4_i sqrt(h)) G_k(Xhat^k_i)
    """
    _require_kind(table, TableKind.VECTOR_WEAK)
    x = np.asarray(x, dtype=float)
    sys.check_state(x)
    sys.check_noise(w.Ihat)
    s, m = table.s, sys.m
    sqrt_h = np.sqrt(h)
    Ihat = w.Ihat
    off_diag = w.Ihat2 * (1.0 - np.eye(m))
    diag = np.diagonal(w.Ihat2, axis1=-2, axis2=-1)
    need_f, need_g, need_hat = table.need_drift, table.need_diffusion, table.need_hat_diffusion

    F: List[Optional[np.ndarray]] = [None] * s
    Gc: List[Optional[np.ndarray]] = [None] * s
    Gh: List[Optional[np.ndarray]] = [None] * s
    cache: Dict[Tuple[str, float], np.ndarray] = {}

    def cached(key: Tuple[str, float], fn: Callable[[], np.ndarray]) -> np.ndarray:
        if key not in cache:
            cache[key] = fn()
        return cache[key]

    for i in range(s):
        t0 = t + table.c0[i] * h
        t1 = t + table.c1[i] * h
        t2 = t + table.c2[i] * h
        if need_f[i]:
            if _collapses(i, table.A0[i], table.B0[i]):
                F[i] = cached(("f", table.c0[i]), lambda: sys.f(t0, x))
            else:
                noise = None
                for j in range(i):
                    if table.B0[i, j] != 0.0:
                        term = table.B0[i, j] * np.einsum("...dl,...l->...d", Gc[j], Ihat)
                        noise = term if noise is None else noise + term
                F[i] = sys.f(t0, _stage(x, h, _combine(table.A0[i], F, i), noise))
        if need_g[i]:
            if _collapses(i, table.A1[i], table.B1[i]):
                Gc[i] = cached(("G", table.c1[i]), lambda: sys.G(t1, x))
            else:
                drift = _combine(table.A1[i], F, i)
                if _collapses(i, table.B1[i]):
                    Gc[i] = sys.G(t1, _stage(x, h, drift, None))
                else:
                    columns = []
                    for k in range(m):
                        noise = None
                        for j in range(i):
                            if table.B1[i, j] != 0.0:
                                term = table.B1[i, j] * Gc[j][..., :, k]
                                noise = term if noise is None else noise + term
                        noise = None if noise is None else noise * sqrt_h
                        columns.append(sys.G(t1, _stage(x, h, drift, noise))[..., :, k])
                    Gc[i] = np.stack(columns, axis=-1)
        if need_hat[i]:
            if _collapses(i, table.A2[i], table.B2[i]):
                Gh[i] = cached(("G", table.c2[i]), lambda: sys.G(t2, x))
            else:
                drift = _combine(table.A2[i], F, i)
                if _collapses(i, table.B2[i]):
                    Gh[i] = sys.G(t2, _stage(x, h, drift, None))
                else:
                    columns = []
                    for k in range(m):
                        noise = None
                        for j in range(i):
                            if table.B2[i, j] != 0.0:
                                coupled = np.einsum("...dl,...l->...d", Gc[j], off_diag[..., k, :])
                                term = table.B2[i, j] * coupled
                                noise = term if noise is None else noise + term
                        noise = None if noise is None else noise / sqrt_h
                        columns.append(sys.G(t2, _stage(x, h, drift, noise))[..., :, k])
                    Gh[i] = np.stack(columns, axis=-1)

    out = _stage(x, h, _combine(table.a, F, s), None)
    for i in range(s):
        if Gc[i] is not None:
            if table.b1[i] != 0.0:
                out = out + table.b1[i] * np.einsum("...dk,...k->...d", Gc[i], Ihat)
            if table.b2[i] != 0.0:
                out = out + (table.b2[i] / sqrt_h) * np.einsum("...dk,...k->...d", Gc[i], diag)
        if Gh[i] is not None:
            if table.b3[i] != 0.0:
                out = out + table.b3[i] * np.einsum("...dk,...k->...d", Gh[i], Ihat)
            if table.b4[i] != 0.0:
                out = out + (table.b4[i] * sqrt_h) * Gh[i].sum(axis=-1)
    return out


# --- Stepper objects ---------------------------------------------------------


def _scalar_fields(sys: SdeSystem) -> Tuple[ScalarField, ScalarField]:
    if sys.d != 1 or sys.m != 1:
        raise ShapeError(f"Scalar scheme needs d = m = 1, system has d={sys.d}, m={sys.m}")

    def f(t: float, v: Any) -> Any:
        return sys.f(t, np.asarray(v, dtype=float)[..., None])[..., 0]

    def g(t: float, v: Any) -> Any:
        return sys.G(t, np.asarray(v, dtype=float)[..., None])[..., 0, 0]

    return f, g


@dataclass(frozen=True)
class EulerMaruyama:
    name: str = "EM"
    randomness: str = "strong"
    uses_levy_area: bool = False

    def step(self, sys: SdeSystem, t: float, x: np.ndarray, h: float, draw: Any) -> np.ndarray:
        dW = draw.single if isinstance(draw, ItoIntegralSet) else draw
        return em_step(sys, t, x, h, dW)


@dataclass(frozen=True)
class _TableStepper:
    table: CoefficientTable
    kind: TableKind = field(init=False, default=TableKind.VECTOR_STRONG)
    randomness: str = field(init=False, default="strong")
    uses_levy_area: bool = field(init=False, default=True)
    floats: FloatTable = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.table.kind != self.kind:
            raise TableKindError(
                f"{self.table.name} is a {self.table.kind.value} table, "
                f"{type(self).__name__} needs {self.kind.value}"
            )
        if not self.table.is_explicit():
            raise NotExplicitError(f"{self.table.name}: stage couplings are not strictly lower triangular")
        object.__setattr__(self, "floats", to_float(self.table, settings.float_digits))

    @property
    def name(self) -> str:
        return self.table.name


@dataclass(frozen=True)
class ScalarStrongStepper(_TableStepper):
    kind: TableKind = field(init=False, default=TableKind.SCALAR_STRONG)
    uses_levy_area: bool = field(init=False, default=False)

    def step(self, sys: SdeSystem, t: float, x: np.ndarray, h: float, draw: ItoIntegralSet) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        sys.check_state(x)
        f, g = _scalar_fields(sys)
        return scalar_strong_step(self.floats, f, g, t, x[..., 0], h, draw)[..., None]


@dataclass(frozen=True)
class VectorStrongStepper(_TableStepper):
    kind: TableKind = field(init=False, default=TableKind.VECTOR_STRONG)

    def step(self, sys: SdeSystem, t: float, x: np.ndarray, h: float, draw: ItoIntegralSet) -> np.ndarray:
        return vector_strong_step(self.floats, sys, t, x, h, draw)


@dataclass(frozen=True)
class VectorWeakStepper(_TableStepper):
    kind: TableKind = field(init=False, default=TableKind.VECTOR_WEAK)
    randomness: str = field(init=False, default="weak")
    uses_levy_area: bool = field(init=False, default=False)

    def step(self, sys: SdeSystem, t: float, x: np.ndarray, h: float, draw: WeakRandomSet) -> np.ndarray:
        return vector_weak_step(self.floats, sys, t, x, h, draw)


@dataclass(frozen=True)
class GeneratedStepper:
    """Adapts an emitted step function to the :class:`Stepper` protocol.

    Emitted signatures by kind:
        scalar_strong: (f, g, t, x, h, I1, I10, I11, I111)
        vector_strong: (f, G, t, x, h, I1, I2)
        vector_weak:   (f, G, t, x, h, Ihat, Ihat2)
    """

    func: Callable[..., Any]
    kind: TableKind
    name: str = "generated"

    @property
    def randomness(self) -> str:
        return "weak" if self.kind == TableKind.VECTOR_WEAK else "strong"

    @property
    def uses_levy_area(self) -> bool:
        return self.kind == TableKind.VECTOR_STRONG

    def step(self, sys: SdeSystem, t: float, x: np.ndarray, h: float, draw: Any) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == TableKind.SCALAR_STRONG:
            f, g = _scalar_fields(sys)
            out = self.func(
                f, g, t, x[..., 0], h,
                draw.single[..., 0], draw.time_right[..., 0],
                draw.double[..., 0, 0], draw.triple_diag[..., 0],
            )
            return np.asarray(out, dtype=float)[..., None]
        if self.kind == TableKind.VECTOR_STRONG:
            return self.func(sys.f, sys.G, t, x, h, draw.single, draw.double)
        return self.func(sys.f, sys.G, t, x, h, draw.Ihat, draw.Ihat2)


_STEPPER_BY_KIND = {
    TableKind.SCALAR_STRONG: ScalarStrongStepper,
    TableKind.VECTOR_STRONG: VectorStrongStepper,
    TableKind.VECTOR_WEAK: VectorWeakStepper,
}


def stepper_for_table(table: CoefficientTable) -> Stepper:
    return _STEPPER_BY_KIND[table.kind](table)  # type: ignore[return-value]


def make_stepper(method: str | CoefficientTable) -> Stepper:
    """Resolve "EM" or a table (object, bundled name, or file path) to a stepper."""
    if isinstance(method, CoefficientTable):
        return stepper_for_table(method)
    if method.upper() in ("EM", "EULER", "EULER-MARUYAMA"):
        return EulerMaruyama()
    return stepper_for_table(resolve_table(method))
