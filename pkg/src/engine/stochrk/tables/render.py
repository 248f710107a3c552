"""LaTeX rendering of generalized Butcher tableaus."""

from typing import List, Optional, Sequence

from ..utils.formatting import format_order, latex_rational
from ..utils.templating import template_environment
from .schemas import CoefficientTable, Matrix, TableKind, Vector


def _cells(values: Optional[Sequence], s: int) -> List[str]:
    if values is None:
        return [""] * s
    return [latex_rational(v) for v in values]


def _block_rows(c: Vector, A: Matrix, B: Matrix, s: int) -> List[List[str]]:
    return [[latex_rational(c[i])] + _cells(A[i], s) + _cells(B[i], s) + [""] * s for i in range(s)]


def tableau_groups(table: CoefficientTable) -> List[List[List[str]]]:
    """Rows of the tableau, grouped by horizontal rule.

    Column groups are: abscissa | first s columns | second s | third s. The
    weight rows read a | b1 | b2, then (for scalar and weak tables) _ | b3 | b4.
    """
    s = table.s
    groups = [
        _block_rows(table.c0, table.A0, table.B0, s),
        _block_rows(table.c1, table.A1, table.B1, s),
    ]
    if table.kind == TableKind.VECTOR_WEAK:
        groups.append(_block_rows(table.c2, table.A2, table.B2, s))  # type: ignore[arg-type]
    weights = [[""] + _cells(table.a, s) + _cells(table.b1, s) + _cells(table.b2, s)]
    if table.kind != TableKind.VECTOR_STRONG:
        weights.append([""] + [""] * s + _cells(table.b3, s) + _cells(table.b4, s))
    groups.append(weights)
    return groups


def render_table_math(table: CoefficientTable) -> str:
    """Deterministic LaTeX ``array`` of the table, one row per line."""
    s = table.s
    colspec = "c|" + "|".join(["c" * s] * 3)
    template = template_environment().get_template("tableau.tex.j2")
    return template.render(
        name=table.name,
        kind=table.kind.value,
        s=s,
        det_order=format_order(table.det_order),
        stoch_order=format_order(table.stoch_order),
        colspec=colspec,
        groups=tableau_groups(table),
    )
