"""Symbolic expansion of one step of a coefficient table.

The expansion lists, for a fixed noise dimension m, every stage that some
nonzero coefficient actually consumes, the function evaluations those
stages and the update need, and the update itself. Zero coefficients
never produce a term. Stages whose right-hand side is empty are aliases of
x_n; stages with exactly the same terms as an earlier one are aliases of
that stage. Evaluation points are deduplicated on (field, abscissa,
resolved state).
"""

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

from stochrk_common.config import settings
from stochrk_common.exceptions import NotExplicitError, ShapeError

from ..tables.schemas import CoefficientTable, Matrix, TableKind, Vector

FAMILY_ORDER = {"x": 0, "X0": 1, "X1": 2, "X": 2, "Xhat": 3}
FN_ORDER = {"f": 0, "g": 1, "G": 1}


@dataclass(frozen=True)
class StageSymbol:
    """Stage value: family X0 (drift), X1 (scalar diffusion), X or Xhat (per noise k)."""

    family: str
    stage: int
    noise: Optional[int] = None

    @property
    def name(self) -> str:
        if self.family == "x":
            return "x"
        parts = [self.family, str(self.stage)]
        if self.noise is not None:
            parts.append(str(self.noise))
        return "_".join(parts)

    def sort_key(self) -> Tuple[int, int, int]:
        return (self.stage, FAMILY_ORDER[self.family], self.noise or 0)


# The current state x_n
XN = StageSymbol("x", 0)


@dataclass(frozen=True)
class EvalPoint:
    """A field evaluated at (t_n + c h, state). ``c_name`` is display only."""

    fn: str  # "f", "g" (scalar diffusion) or "G" (diffusion matrix)
    c: Fraction
    state: StageSymbol
    c_name: str = field(default="", compare=False)

    def sort_key(self) -> Tuple:
        return self.state.sort_key() + (FN_ORDER[self.fn], self.c)


@dataclass(frozen=True)
class RandomFactor:
    """Random (or step-size) factor of a term.

    Tags: h, sqrt_h, I (k), Ilk/sqrt_h (row, column of the double-integral
    matrix), I10/h, I11/sqrt_h, I111/h, Ihat (k), Ihat_kk/sqrt_h (k),
    Ihat_kl/sqrt_h (k, l). Indices are 1-based.
    """

    tag: str
    indices: Tuple[int, ...] = ()


H = RandomFactor("h")
SQRT_H = RandomFactor("sqrt_h")


@dataclass(frozen=True)
class Term:
    coef: Fraction
    coef_name: str
    point: EvalPoint
    column: Optional[int]  # 1-based noise column of a G evaluation
    factor: RandomFactor

    @property
    def is_drift(self) -> bool:
        return self.factor == H


@dataclass(frozen=True)
class StageDef:
    symbol: StageSymbol
    terms: Tuple[Term, ...]
    alias_of: Optional[StageSymbol] = None

    @property
    def is_alias(self) -> bool:
        return self.alias_of is not None


@dataclass(frozen=True)
class Evaluation:
    name: str
    point: EvalPoint


@dataclass(frozen=True)
class StepExpansion:
    table_name: str
    kind: TableKind
    m: int
    stage_defs: Tuple[StageDef, ...]
    update_terms: Tuple[Term, ...]
    evaluations: Tuple[Evaluation, ...]
    constants: Tuple[Tuple[str, Fraction], ...]
    transpose: bool = False

    def evaluation_name(self, point: EvalPoint) -> str:
        for ev in self.evaluations:
            if ev.point == point:
                return ev.name
        raise KeyError(point)

    def count(self, fn: str) -> int:
        """Number of distinct evaluations of ``f`` or of the diffusion."""
        wanted = {"f"} if fn == "f" else {"g", "G"}
        return sum(1 for ev in self.evaluations if ev.point.fn in wanted)

    def is_deterministic(self) -> bool:
        terms = list(self.update_terms)
        for sd in self.stage_defs:
            terms.extend(sd.terms)
        return all(t.factor == H for t in terms)

    def schedule(self) -> Iterator[Union[StageDef, Evaluation]]:
        """Non-alias stage definitions and evaluations in dependency order."""
        by_stage: Dict[int, List[Evaluation]] = {}
        for ev in self.evaluations:
            by_stage.setdefault(ev.point.state.stage, []).append(ev)
        yield from by_stage.get(0, [])
        stages = sorted({sd.symbol.stage for sd in self.stage_defs} | set(by_stage) - {0})
        for i in stages:
            for sd in self.stage_defs:
                if sd.symbol.stage == i and not sd.is_alias:
                    yield sd
            yield from by_stage.get(i, [])


# --- raw scheme ------------------------------------------------------------


def _point(fn: str, c: Vector, c_key: str, j: int, symbol: StageSymbol) -> EvalPoint:
    return EvalPoint(fn, c[j], symbol, f"{c_key}_{j + 1}")


TermMaker = Callable[[Fraction, str, int], List[Term]]


def _row_terms(matrix: Matrix, key: str, i: int, make: TermMaker) -> List[Term]:
    """Terms of row i of a coupling block; ``make`` expands one nonzero entry."""
    terms: List[Term] = []
    for j in range(i):
        coef = matrix[i][j]
        if coef != 0:
            terms.extend(make(coef, f"{key}_{i + 1}_{j + 1}", j))
    return terms


class _RawScheme:
    """Every stage and update term of the table before pruning."""

    def __init__(self, table: CoefficientTable, m: int) -> None:
        self.table = table
        self.m = m
        self.stages: Dict[StageSymbol, List[Term]] = {}
        self.update: List[Term] = []
        builder = {
            TableKind.SCALAR_STRONG: self._scalar,
            TableKind.VECTOR_STRONG: self._vector_strong,
            TableKind.VECTOR_WEAK: self._vector_weak,
        }[table.kind]
        builder()

    # evaluation points
    def _f(self, j: int) -> EvalPoint:
        return _point("f", self.table.c0, "c0", j, StageSymbol("X0", j + 1))

    def _g(self, j: int, l: int) -> EvalPoint:
        return _point("G", self.table.c1, "c1", j, StageSymbol("X", j + 1, l))

    def _ghat(self, j: int, l: int) -> EvalPoint:
        return _point("G", self.table.c2, "c2", j, StageSymbol("Xhat", j + 1, l))  # type: ignore[arg-type]

    def _drift(self, matrix: Matrix, key: str, i: int) -> List[Term]:
        return _row_terms(matrix, key, i, lambda coef, name, j: [Term(coef, name, self._f(j), None, H)])

    def _weights(self, vector: Optional[Vector], key: str) -> Iterator[Tuple[int, Fraction, str]]:
        if vector is None:
            return
        for i, coef in enumerate(vector):
            if coef != 0:
                yield i, coef, f"{key}_{i + 1}"

    def _update_drift(self) -> None:
        for i, coef, name in self._weights(self.table.a, "a"):
            self.update.append(Term(coef, name, self._f(i), None, H))

    def _scalar(self) -> None:
        t = self.table

        def g(j: int) -> EvalPoint:
            return _point("g", t.c1, "c1", j, StageSymbol("X1", j + 1))

        for i in range(t.s):
            self.stages[StageSymbol("X0", i + 1)] = self._drift(t.A0, "A0", i) + _row_terms(
                t.B0, "B0", i, lambda coef, name, j: [Term(coef, name, g(j), None, RandomFactor("I10/h"))]
            )
            self.stages[StageSymbol("X1", i + 1)] = self._drift(t.A1, "A1", i) + _row_terms(
                t.B1, "B1", i, lambda coef, name, j: [Term(coef, name, g(j), None, SQRT_H)]
            )
        self._update_drift()
        factors = {
            "b1": RandomFactor("I", (1,)),
            "b2": RandomFactor("I11/sqrt_h"),
            "b3": RandomFactor("I10/h"),
            "b4": RandomFactor("I111/h"),
        }
        for i in range(t.s):
            for key, factor in factors.items():
                coef = t.block(key)[i]  # type: ignore[index]
                if coef != 0:
                    self.update.append(Term(coef, f"{key}_{i + 1}", g(i), None, factor))

    def _vector_strong(self) -> None:
        t, m = self.table, self.m
        for i in range(t.s):
            self.stages[StageSymbol("X0", i + 1)] = self._drift(t.A0, "A0", i) + _row_terms(
                t.B0, "B0", i,
                lambda coef, name, j: [
                    Term(coef, name, self._g(j, l), l, RandomFactor("I", (l,))) for l in range(1, m + 1)
                ],
            )
            for k in range(1, m + 1):

                def coupling(coef: Fraction, name: str, j: int, k: int = k) -> List[Term]:
                    out = []
                    for l in range(1, m + 1):
                        indices = (k, l) if t.transpose_double else (l, k)
                        out.append(Term(coef, name, self._g(j, l), l, RandomFactor("Ilk/sqrt_h", indices)))
                    return out

                self.stages[StageSymbol("X", i + 1, k)] = self._drift(t.A1, "A1", i) + _row_terms(
                    t.B1, "B1", i, coupling
                )
        self._update_drift()
        for i, coef, name in self._weights(t.b1, "b1"):
            for k in range(1, m + 1):
                self.update.append(Term(coef, name, self._g(i, k), k, RandomFactor("I", (k,))))
        for i, coef, name in self._weights(t.b2, "b2"):
            for k in range(1, m + 1):
                self.update.append(Term(coef, name, self._g(i, k), k, SQRT_H))

    def _vector_weak(self) -> None:
        t, m = self.table, self.m
        for i in range(t.s):
            self.stages[StageSymbol("X0", i + 1)] = self._drift(t.A0, "A0", i) + _row_terms(
                t.B0, "B0", i,
                lambda coef, name, j: [
                    Term(coef, name, self._g(j, l), l, RandomFactor("Ihat", (l,))) for l in range(1, m + 1)
                ],
            )
            for k in range(1, m + 1):
                self.stages[StageSymbol("X", i + 1, k)] = self._drift(t.A1, "A1", i) + _row_terms(
                    t.B1, "B1", i, lambda coef, name, j, k=k: [Term(coef, name, self._g(j, k), k, SQRT_H)]
                )
            for k in range(1, m + 1):

                def coupling(coef: Fraction, name: str, j: int, k: int = k) -> List[Term]:
                    return [
                        Term(coef, name, self._g(j, l), l, RandomFactor("Ihat_kl/sqrt_h", (k, l)))
                        for l in range(1, m + 1)
                        if l != k
                    ]

                self.stages[StageSymbol("Xhat", i + 1, k)] = self._drift(t.A2, "A2", i) + _row_terms(
                    t.B2, "B2", i, coupling  # type: ignore[arg-type]
                )
        self._update_drift()
        for i, coef, name in self._weights(t.b1, "b1"):
            for k in range(1, m + 1):
                self.update.append(Term(coef, name, self._g(i, k), k, RandomFactor("Ihat", (k,))))
        for i, coef, name in self._weights(t.b2, "b2"):
            for k in range(1, m + 1):
                self.update.append(Term(coef, name, self._g(i, k), k, RandomFactor("Ihat_kk/sqrt_h", (k,))))
        for i, coef, name in self._weights(t.b3, "b3"):
            for k in range(1, m + 1):
                self.update.append(Term(coef, name, self._ghat(i, k), k, RandomFactor("Ihat", (k,))))
        for i, coef, name in self._weights(t.b4, "b4"):
            for k in range(1, m + 1):
                self.update.append(Term(coef, name, self._ghat(i, k), k, SQRT_H))


# --- pruning and factoring ---------------------------------------------------


def _needed(raw: _RawScheme) -> set:
    needed = set()
    frontier = [term.point.state for term in raw.update]
    while frontier:
        symbol = frontier.pop()
        if symbol == XN or symbol in needed:
            continue
        needed.add(symbol)
        frontier.extend(term.point.state for term in raw.stages[symbol])
    return needed


def _resolve(terms: Sequence[Term], canonical: Dict[StageSymbol, StageSymbol]) -> Tuple[Term, ...]:
    out = []
    for term in terms:
        state = canonical.get(term.point.state, term.point.state)
        out.append(replace(term, point=replace(term.point, state=state)))
    return tuple(out)


def _name_evaluations(points: Sequence[EvalPoint]) -> Tuple[Evaluation, ...]:
    ordered = sorted(set(points), key=lambda p: p.sort_key())
    counters = {"F": 0, "G": 0}
    evaluations = []
    for point in ordered:
        prefix = "F" if point.fn == "f" else "G"
        counters[prefix] += 1
        evaluations.append(Evaluation(f"{prefix}_{counters[prefix]}", point))
    return tuple(evaluations)


def expand(table: CoefficientTable, m: int) -> StepExpansion:
    """Zero-pruned, evaluation-factored description of one step at noise dimension m.

    Raises:
        ShapeError: m outside 1..max_noise_dim, or m != 1 for a scalar table.
        NotExplicitError: the table couples a stage to itself or a later one.
    """
    if table.kind == TableKind.SCALAR_STRONG and m != 1:
        raise ShapeError(f"{table.name} is a scalar-noise table; m must be 1, got {m}")
    if m < 1 or m > settings.max_noise_dim:
        raise ShapeError(f"Noise dimension m={m} outside 1..{settings.max_noise_dim}")
    if not table.is_explicit():
        raise NotExplicitError(f"{table.name}: stage couplings are not strictly lower triangular")

    raw = _RawScheme(table, m)
    needed = _needed(raw)

    canonical: Dict[StageSymbol, StageSymbol] = {}
    seen: Dict[Tuple[Term, ...], StageSymbol] = {}
    stage_defs: List[StageDef] = []
    for symbol in sorted(raw.stages, key=lambda s: s.sort_key()):
        if symbol not in needed:
            continue
        terms = _resolve(raw.stages[symbol], canonical)
        if not terms:
            canonical[symbol] = XN
            stage_defs.append(StageDef(symbol, (), XN))
        elif terms in seen:
            canonical[symbol] = seen[terms]
            stage_defs.append(StageDef(symbol, terms, seen[terms]))
        else:
            canonical[symbol] = symbol
            seen[terms] = symbol
            stage_defs.append(StageDef(symbol, terms))

    update = _resolve(raw.update, canonical)
    live_terms = [term for sd in stage_defs if not sd.is_alias for term in sd.terms] + list(update)
    evaluations = _name_evaluations([term.point for term in live_terms])

    constants: Dict[str, Fraction] = {}
    for ev in evaluations:
        if ev.point.c != 0:
            constants.setdefault(ev.point.c_name, ev.point.c)
    for term in live_terms:
        constants.setdefault(term.coef_name, term.coef)

    return StepExpansion(
        table_name=table.name,
        kind=table.kind,
        m=m,
        stage_defs=tuple(stage_defs),
        update_terms=update,
        evaluations=evaluations,
        constants=tuple(constants.items()),
        transpose=table.transpose_double,
    )
