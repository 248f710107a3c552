"""Consistency checks for coefficient tables.

Mandatory checks are shapes, explicitness, sum(a) = 1 and sum(b1) = 1.
Everything else (zero sums of b2..b4, abscissae equal to row sums of the
A blocks) is advisory: deeper order conditions are out of reach here.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List

from .schemas import KIND_BLOCKS, MATRIX_KEYS, CoefficientTable


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    mandatory: bool
    detail: str = ""


@dataclass
class ValidationReport:
    """Per-check outcome for one table."""

    table_name: str
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        """True when every mandatory check passed."""
        return all(c.passed for c in self.checks if c.mandatory)

    def failures(self, mandatory_only: bool = True) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed and (c.mandatory or not mandatory_only)]

    def lines(self) -> List[str]:
        """Human-readable report, one line per check."""
        out = []
        for c in self.checks:
            status = "PASS" if c.passed else ("FAIL" if c.mandatory else "WARN")
            level = "mandatory" if c.mandatory else "advisory"
            suffix = f" ({c.detail})" if c.detail else ""
            out.append(f"{status:4}  {c.name:<22} {level}{suffix}")
        out.append(f"{self.table_name}: {'valid' if self.ok else 'INVALID'}")
        return out


def _check_shapes(table: CoefficientTable) -> CheckResult:
    s = table.s
    problems = []
    needed = KIND_BLOCKS[table.kind]
    for key in needed:
        block = table.block(key)
        if block is None:
            problems.append(f"{key} missing")
        elif key in MATRIX_KEYS:
            if len(block) != s or any(len(row) != s for row in block):
                problems.append(f"{key} is not {s}x{s}")
        elif len(block) != s:
            problems.append(f"{key} has {len(block)} entries")
    for key in table.present_blocks():
        if key not in needed:
            problems.append(f"{key} unused by {table.kind.value}")
    return CheckResult("shapes", not problems, True, "; ".join(problems))


def _check_explicit(table: CoefficientTable) -> CheckResult:
    offenders = []
    for key in MATRIX_KEYS:
        block = table.block(key)
        if block is None:
            continue
        for i, row in enumerate(block):
            for j in range(i, len(row)):
                if row[j] != 0:
                    offenders.append(f"{key}[{i + 1}][{j + 1}]")
    return CheckResult("explicit", not offenders, True, ", ".join(offenders))


def _sum_check(table: CoefficientTable, key: str, target: int, mandatory: bool) -> CheckResult:
    vector = table.block(key)
    total = sum(vector, Fraction(0)) if vector is not None else Fraction(0)
    return CheckResult(
        f"sum({key}) = {target}",
        total == target,
        mandatory,
        "" if total == target else f"sum is {total}",
    )


def _row_sum_check(table: CoefficientTable, c_key: str, a_key: str) -> CheckResult:
    c = table.block(c_key)
    matrix = table.block(a_key)
    if c is None or matrix is None:
        return CheckResult(f"{c_key} = rowsum({a_key})", True, False)
    rows = [i + 1 for i, row in enumerate(matrix) if sum(row, Fraction(0)) != c[i]]
    detail = f"rows {', '.join(map(str, rows))} differ" if rows else ""
    return CheckResult(f"{c_key} = rowsum({a_key})", not rows, False, detail)


def validate(table: CoefficientTable) -> ValidationReport:
    """Run every check and collect the results; never raises."""
    report = ValidationReport(table_name=table.name)
    shapes = _check_shapes(table)
    report.checks.append(shapes)
    report.checks.append(_check_explicit(table))
    if not shapes.passed:
        return report

    report.checks.append(_sum_check(table, "a", 1, True))
    report.checks.append(_sum_check(table, "b1", 1, True))
    for key in ("b2", "b3", "b4"):
        if table.block(key) is not None:
            report.checks.append(_sum_check(table, key, 0, False))
    for c_key, a_key in (("c0", "A0"), ("c1", "A1"), ("c2", "A2")):
        if table.block(c_key) is not None:
            report.checks.append(_row_sum_check(table, c_key, a_key))
    return report
