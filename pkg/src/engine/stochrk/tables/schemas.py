"""Data models for stochastic Butcher coefficient tables.

A table holds exact rationals. Steppers and emitted code work from a float
view produced by :func:`to_float`, in which blocks the kind does not use are
zero-filled so every consumer can index them uniformly.
"""

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

Rational = Fraction
Vector = Tuple[Fraction, ...]
Matrix = Tuple[Vector, ...]

MATRIX_KEYS: Tuple[str, ...] = ("A0", "A1", "A2", "B0", "B1", "B2")
VECTOR_KEYS: Tuple[str, ...] = ("c0", "c1", "c2", "a", "b1", "b2", "b3", "b4")


class TableKind(str, Enum):
    SCALAR_STRONG = "scalar_strong"
    VECTOR_STRONG = "vector_strong"
    VECTOR_WEAK = "vector_weak"


# Blocks each kind uses; everything else must be absent
KIND_BLOCKS: Dict[TableKind, Tuple[str, ...]] = {
    TableKind.SCALAR_STRONG: ("A0", "A1", "B0", "B1", "c0", "c1", "a", "b1", "b2", "b3", "b4"),
    TableKind.VECTOR_STRONG: ("A0", "A1", "B0", "B1", "c0", "c1", "a", "b1", "b2"),
    TableKind.VECTOR_WEAK: MATRIX_KEYS + VECTOR_KEYS,
}


class CoefficientTable(BaseModel):
    """Generalized Butcher table of an explicit stochastic Runge-Kutta method.

    Stage families: X0 stages feed the drift, X1 (or X^k) stages feed the
    diffusion and, for weak methods, the X-hat stages feed a second set of
    diffusion evaluations. Matrices are s x s, vectors length s.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    description: str = ""
    kind: TableKind
    s: int
    det_order: Fraction
    stoch_order: Fraction

    A0: Matrix
    A1: Matrix
    B0: Matrix
    B1: Matrix
    A2: Optional[Matrix] = None
    B2: Optional[Matrix] = None

    c0: Vector
    c1: Vector
    c2: Optional[Vector] = None

    a: Vector
    b1: Vector
    b2: Vector
    b3: Optional[Vector] = None
    b4: Optional[Vector] = None

    comment: str = ""
    transpose_double: bool = False

    def block(self, key: str) -> Optional[Matrix | Vector]:
        return getattr(self, key)

    def present_blocks(self) -> List[str]:
        """Block keys that are set, in canonical order."""
        return [key for key in MATRIX_KEYS + VECTOR_KEYS if self.block(key) is not None]

    def is_explicit(self) -> bool:
        """True when every A and B block is strictly lower triangular."""
        for key in MATRIX_KEYS:
            matrix = self.block(key)
            if matrix is None:
                continue
            for i, row in enumerate(matrix):
                if any(value != 0 for value in row[i:]):
                    return False
        return True

    def nonzero_count(self) -> int:
        """Number of nonzero coefficients across all blocks."""
        count = 0
        for key in MATRIX_KEYS:
            matrix = self.block(key)
            if matrix is not None:
                count += sum(1 for row in matrix for value in row if value != 0)
        for key in VECTOR_KEYS:
            vector = self.block(key)
            if vector is not None:
                count += sum(1 for value in vector if value != 0)
        return count


@dataclass(frozen=True)
class FloatTable:
    """Floating-point view of a :class:`CoefficientTable`.

    Absent blocks are zero arrays. ``need_drift[i]`` and ``need_diffusion[i]``
    mark stages whose evaluations some nonzero coefficient consumes.
    """

    name: str
    kind: TableKind
    s: int
    transpose_double: bool
    A0: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    B0: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    c0: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    a: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    b3: np.ndarray
    b4: np.ndarray

    @property
    def need_drift(self) -> np.ndarray:
        used = (self.a != 0) | np.any(self.A0 != 0, axis=0) | np.any(self.A1 != 0, axis=0)
        return used | np.any(self.A2 != 0, axis=0)

    @property
    def need_diffusion(self) -> np.ndarray:
        used = (self.b1 != 0) | (self.b2 != 0) | np.any(self.B0 != 0, axis=0)
        used = used | np.any(self.B1 != 0, axis=0)
        if self.kind != TableKind.VECTOR_WEAK:
            used = used | (self.b3 != 0) | (self.b4 != 0)
        return used | np.any(self.B2 != 0, axis=0)

    @property
    def need_hat_diffusion(self) -> np.ndarray:
        """Stages whose X-hat diffusion evaluations are consumed (weak only)."""
        return (self.b3 != 0) | (self.b4 != 0)


def _round(value: Fraction, precision: Optional[int]) -> float:
    if precision is None:
        return float(value)
    return float(round(value, precision))


def to_float(table: CoefficientTable, precision: Optional[int] = None) -> FloatTable:
    """Render every rational to a float.

    Args:
        table: Parsed coefficient table.
        precision: Decimal digits to round to before conversion; None gives
            the nearest double of each rational.

    Returns:
        FloatTable with zero arrays for blocks the kind does not use.
    """
    s = table.s
    arrays: Dict[str, np.ndarray] = {}
    for key in MATRIX_KEYS:
        matrix = table.block(key)
        arrays[key] = (
            np.zeros((s, s))
            if matrix is None
            else np.array([[_round(v, precision) for v in row] for row in matrix], dtype=float)
        )
    for key in VECTOR_KEYS:
        vector = table.block(key)
        arrays[key] = (
            np.zeros(s)
            if vector is None
            else np.array([_round(v, precision) for v in vector], dtype=float)
        )
    for array in arrays.values():
        array.setflags(write=False)
    return FloatTable(
        name=table.name,
        kind=table.kind,
        s=s,
        transpose_double=table.transpose_double,
        **arrays,
    )
