"""Render a :class:`StepExpansion` as source code or LaTeX formulas.

A dialect is a Jinja2 template plus the format strings that spell out
evaluations, random factors and terms in the target language. Registering
a new dialect needs no change here.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Tuple

from stochrk_common.exceptions import DialectError
from stochrk_common.logging import get_logger

from ..tables.schemas import TableKind
from ..utils.formatting import float_literal, format_rational, latex_rational
from ..utils.templating import template_environment
from .expansion import XN, EvalPoint, Evaluation, RandomFactor, StageDef, StageSymbol, StepExpansion, Term

logger = get_logger(__name__)


@dataclass(frozen=True)
class Dialect:
    name: str
    template: str
    extension: str
    formats: Mapping[str, str]

    def fmt(self, key: str, kind: TableKind, **values: object) -> str:
        """Format string ``key@kind`` if registered, else ``key``."""
        pattern = self.formats.get(f"{key}@{kind.value}", self.formats.get(key))
        if pattern is None:
            raise DialectError(f"Dialect {self.name!r} has no format for {key!r}")
        return pattern.format(**values)


PYTHON = Dialect(
    name="python",
    template="stepper_python.py.j2",
    extension=".py",
    formats={
        "signature@scalar_strong": "f, g, t, x, h, I1, I10, I11, I111",
        "signature@vector_strong": "f, G, t, x, h, I1, I2",
        "signature@vector_weak": "f, G, t, x, h, Ihat, Ihat2",
        "call": "{fn}({time}, {state})",
        "time": "t + {c} * h",
        "time0": "t",
        "state": "{name}",
        "column": "{name}[..., :, {col}]",
        "column@scalar_strong": "{name}",
        "term": "{coef} * {value} * {factor}",
        "drift_term": "{coef} * {value}",
        "drift": "h * ({terms})",
        "join": " + ",
        "h": "h",
        "sqrt_h": "sqrt_h",
        "I": "I1[..., {i}:{i1}]",
        "I@scalar_strong": "I1",
        "Ilk/sqrt_h": "I2[..., {i}, {j}:{j1}] / sqrt_h",
        "I10/h": "I10 / h",
        "I11/sqrt_h": "I11 / sqrt_h",
        "I111/h": "I111 / h",
        "Ihat": "Ihat[..., {i}:{i1}]",
        "Ihat_kk/sqrt_h": "Ihat2[..., {i}, {i}:{i1}] / sqrt_h",
        "Ihat_kl/sqrt_h": "Ihat2[..., {i}, {j}:{j1}] / sqrt_h",
    },
)

_DIALECTS: Dict[str, Dialect] = {}


def register_dialect(dialect: Dialect) -> None:
    _DIALECTS[dialect.name] = dialect


def available_dialects() -> List[str]:
    return sorted(_DIALECTS)


def get_dialect(name: str) -> Dialect:
    try:
        return _DIALECTS[name]
    except KeyError:
        raise DialectError(
            f"Unknown dialect {name!r}; available: {', '.join(available_dialects())}"
        ) from None


register_dialect(PYTHON)


_PREFIX = {
    TableKind.SCALAR_STRONG: "scalar",
    TableKind.VECTOR_STRONG: "strong",
    TableKind.VECTOR_WEAK: "weak",
}


def function_name(table_name: str, kind: TableKind, m: int) -> str:
    """``<prefix>_<stem>_w<m>``, e.g. SRK1Wm at m=2 -> strong_srk1_w2."""
    stem = table_name.lower()
    if stem.startswith("weak") and len(stem) > 4:
        stem = stem[4:]
    if stem.endswith("wm") and len(stem) > 2:
        stem = stem[:-2]
    stem = "".join(ch if ch.isalnum() else "_" for ch in stem).strip("_") or "table"
    return f"{_PREFIX[kind]}_{stem}_w{m}"


# --- source code -------------------------------------------------------------


class _SourceWriter:
    def __init__(self, exp: StepExpansion, dialect: Dialect) -> None:
        self.exp = exp
        self.dialect = dialect
        self.names = {ev.point: ev.name for ev in exp.evaluations}
        self.aliases = {sd.symbol: sd.alias_of for sd in exp.stage_defs if sd.is_alias}

    def _fmt(self, key: str, **values: object) -> str:
        return self.dialect.fmt(key, self.exp.kind, **values)

    def state(self, symbol: StageSymbol) -> str:
        return self._fmt("state", name=symbol.name)

    def evaluation(self, ev: Evaluation) -> str:
        point = ev.point
        if point.c == 0:
            time = self._fmt("time0")
        else:
            time = self._fmt("time", c=point.c_name)
        return self._fmt("call", fn=point.fn, time=time, state=self.state(point.state))

    def factor(self, factor: RandomFactor) -> str:
        idx = [k - 1 for k in factor.indices] + [0, 0]
        return self._fmt(factor.tag, i=idx[0], i1=idx[0] + 1, j=idx[1], j1=idx[1] + 1)

    def value(self, term: Term) -> str:
        name = self.names[term.point]
        if term.column is None:
            return name
        return self._fmt("column", name=name, col=term.column - 1)

    def combination(self, terms: Tuple[Term, ...]) -> str:
        parts = [self.state(XN)]
        drift = [t for t in terms if t.is_drift]
        if drift:
            inner = self._fmt("join").join(
                self._fmt("drift_term", coef=t.coef_name, value=self.value(t)) for t in drift
            )
            parts.append(self._fmt("drift", terms=inner))
        for t in terms:
            if not t.is_drift:
                parts.append(self._fmt("term", coef=t.coef_name, value=self.value(t), factor=self.factor(t.factor)))
        return self._fmt("join").join(parts)

    def body(self) -> List[Tuple[str, str]]:
        lines = []
        for item in self.exp.schedule():
            if isinstance(item, StageDef):
                lines.append((self.state(item.symbol), self.combination(item.terms)))
            else:
                lines.append((item.name, self.evaluation(item)))
        return lines


def emit_stepper_source(exp: StepExpansion, dialect: str = "python") -> str:
    """Source text of one specialized step function.

    Aliased stages are inlined; coefficients become named constants, zero
    coefficients never appear.
    """
    chosen = get_dialect(dialect)
    writer = _SourceWriter(exp, chosen)
    body = writer.body()
    result = writer.combination(exp.update_terms)
    uses_sqrt = any("sqrt_h" in expr for _, expr in body) or "sqrt_h" in result
    constants = [
        {"name": name, "literal": float_literal(value), "rational": format_rational(value)}
        for name, value in exp.constants
    ]
    template = template_environment().get_template(chosen.template)
    text = template.render(
        function=function_name(exp.table_name, exp.kind, exp.m),
        table=exp.table_name,
        kind=exp.kind.value,
        m=exp.m,
        signature=chosen.fmt("signature", exp.kind),
        constants=constants,
        body=body,
        result=result,
        uses_sqrt=uses_sqrt,
    )
    logger.debug("stepper_emitted", table=exp.table_name, m=exp.m, dialect=dialect, lines=len(body))
    return text


# --- formulas ----------------------------------------------------------------

_LATEX_FACTORS = {
    "h": "h",
    "sqrt_h": "\\sqrt{{h}}",
    "I": "I^{{{i}}}",
    "Ilk/sqrt_h": "\\frac{{I^{{{i}{j}}}}}{{\\sqrt{{h}}}}",
    "I10/h": "\\frac{{I^{{10}}}}{{h}}",
    "I11/sqrt_h": "\\frac{{I^{{11}}}}{{\\sqrt{{h}}}}",
    "I111/h": "\\frac{{I^{{111}}}}{{h}}",
    "Ihat": "\\hat{{I}}^{{{i}}}",
    "Ihat_kk/sqrt_h": "\\frac{{\\hat{{I}}^{{{i}{i}}}}}{{\\sqrt{{h}}}}",
    "Ihat_kl/sqrt_h": "\\frac{{\\hat{{I}}^{{{i}{j}}}}}{{\\sqrt{{h}}}}",
}


def _latex_symbol(symbol: StageSymbol) -> str:
    if symbol == XN:
        return "x_n"
    if symbol.family == "X0":
        return f"X^{{0,{symbol.stage}}}"
    if symbol.family == "X1":
        return f"X^{{1,{symbol.stage}}}"
    if symbol.family == "Xhat":
        return f"\\hat{{X}}^{{{symbol.noise},{symbol.stage}}}"
    return f"X^{{{symbol.noise},{symbol.stage}}}"


def _latex_time(c: Fraction) -> str:
    if c == 0:
        return "t_n"
    if c == 1:
        return "t_n + h"
    return f"t_n + {latex_rational(c)} h"


def _latex_term(term: Term) -> str:
    point: EvalPoint = term.point
    fn = point.fn if term.column is None else f"G_{{{term.column}}}"
    value = f"{fn}({_latex_time(point.c)}, {_latex_symbol(point.state)})"
    indices = list(term.factor.indices) + [0, 0]
    factor = _LATEX_FACTORS[term.factor.tag].format(i=indices[0], j=indices[1])
    if term.coef == 1:
        coef = ""
    elif term.coef == -1:
        coef = "-"
    else:
        coef = latex_rational(term.coef) + " "
    return f"{coef}{factor}\\, {value}"


def _latex_rhs(terms: Tuple[Term, ...]) -> str:
    text = " + ".join(["x_n"] + [_latex_term(t) for t in terms])
    return text.replace("+ -", "- ")


def emit_math(exp: StepExpansion) -> str:
    """LaTeX listing of every stage (aliases included) and the update."""
    lines: List[Tuple[str, str]] = []
    for sd in exp.stage_defs:
        lhs = _latex_symbol(sd.symbol)
        if sd.alias_of is not None:
            lines.append((lhs, _latex_symbol(sd.alias_of)))
        else:
            lines.append((lhs, _latex_rhs(sd.terms)))
    lines.append(("x_{n+1}", _latex_rhs(exp.update_terms)))
    template = template_environment().get_template("scheme.tex.j2")
    return template.render(
        function=function_name(exp.table_name, exp.kind, exp.m),
        table=exp.table_name,
        kind=exp.kind.value,
        m=exp.m,
        lines=lines,
    )
