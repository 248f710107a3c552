"""Test problems and empirical convergence orders."""

from .convergence import (
    OrderEstimate,
    estimate_strong_order,
    estimate_weak_order,
    fit_order,
    save_report,
)
from .problems import (
    FUNCTIONALS,
    ExactStepper,
    TestProblem,
    builtin_problems,
    get_problem,
    make_diagonal_gbm,
    make_gbm,
    make_ou,
    make_zero,
    problem_names,
    sample_ou_integrals,
)

__all__ = [
    "TestProblem",
    "ExactStepper",
    "FUNCTIONALS",
    "make_gbm",
    "make_ou",
    "make_diagonal_gbm",
    "make_zero",
    "sample_ou_integrals",
    "builtin_problems",
    "problem_names",
    "get_problem",
    "OrderEstimate",
    "fit_order",
    "estimate_strong_order",
    "estimate_weak_order",
    "save_report",
]
