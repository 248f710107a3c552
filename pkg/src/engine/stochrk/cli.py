"""Command-line entry point: ``stochrk <command> [options]``.

Commands:
    tables list | validate <table> | render <table>
    gen        generate specialized step functions and a manifest
    simulate   integrate one path of a built-in problem
    mc         Monte Carlo mean trajectory
    converge   empirical strong or weak order

Exit codes: 0 success, 1 user or validation error, 2 numerical failure,
3 I/O failure.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from stochrk_common.config import settings
from stochrk_common.exceptions import StochRKError, UserInputError
from stochrk_common.logging import configure_logging, get_logger

from .analysis.convergence import estimate_strong_order, estimate_weak_order, save_report
from .analysis.problems import FUNCTIONALS, TestProblem, get_problem, problem_names
from .codegen.bundle import generate_bundle
from .codegen.emit import available_dialects
from .noise.wiener import TimeGrid
from .schemes.integrate import integrate, save_trajectory_csv, source_for
from .schemes.steppers import make_stepper
from .simulation.montecarlo import McConfig, run_trials, save_results
from .tables.loaders import bundled_tables, resolve_table
from .tables.render import render_table_math
from .tables.validation import validate
from .utils.files import ensure_dir, write_text
from .utils.formatting import format_order, format_slope

logger = get_logger(__name__)


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1 (2 is reserved for numerical failures)."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# --- argument parsing helpers ------------------------------------------------


def parse_m_range(text: str) -> List[int]:
    """"3", "1..4" or "1,2,5"."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            values = list(range(int(lo), int(hi) + 1))
        else:
            values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UserInputError(f"Bad noise-dimension range {text!r}; use 3, 1..4 or 1,2,5") from None
    if not values:
        raise UserInputError(f"Empty noise-dimension range {text!r}")
    return values


def _parse_h(text: str) -> float:
    text = text.strip()
    if text.startswith("2^"):
        return 2.0 ** int(text[2:])
    return float(text)


def parse_hs(text: str) -> List[float]:
    """Comma-separated step sizes, or a power-of-two range such as "2^-4..2^-10"."""
    try:
        if ".." in text:
            lo, hi = (part.strip() for part in text.split("..", 1))
            if not (lo.startswith("2^") and hi.startswith("2^")):
                raise ValueError(text)
            a, b = int(lo[2:]), int(hi[2:])
            step = -1 if b < a else 1
            return [2.0 ** e for e in range(a, b + step, step)]
        return [_parse_h(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UserInputError(f"Bad step list {text!r}; use 0.1,0.05 or 2^-4..2^-10") from None


def parse_params(items: Optional[Sequence[str]]) -> Dict[str, Any]:
    """``key=value`` pairs; values with commas become tuples of floats."""
    params: Dict[str, Any] = {}
    for item in items or []:
        if "=" not in item:
            raise UserInputError(f"Problem parameter {item!r} must look like key=value")
        key, raw = item.split("=", 1)
        try:
            if "," in raw:
                params[key.strip()] = tuple(float(v) for v in raw.split(","))
            else:
                params[key.strip()] = float(raw)
        except ValueError:
            raise UserInputError(f"Problem parameter {key!r} is not numeric: {raw!r}") from None
    return params


def _problem(args: argparse.Namespace) -> TestProblem:
    params = parse_params(args.param)
    if getattr(args, "T", None) is not None:
        params["T"] = args.T
    return get_problem(args.problem, **params)


def _grid(args: argparse.Namespace, problem: TestProblem) -> TimeGrid:
    if args.N is not None:
        return TimeGrid(t0=problem.t0, T=problem.T, N=args.N)
    if args.h is not None:
        return TimeGrid.from_step(problem.t0, problem.T, args.h)
    raise UserInputError("Give either --h or --N")


def _seed(args: argparse.Namespace) -> int:
    if args.seed is not None:
        if args.seed < 0:
            raise UserInputError(f"Seed must be non-negative, got {args.seed}")
        return int(args.seed)
    return int(np.random.SeedSequence().entropy)  # type: ignore[arg-type]


def _write_metadata(out: Path, metadata: Dict[str, Any]) -> None:
    write_text(out / "metadata.json", json.dumps(metadata, indent=2, default=str) + "\n")


# --- commands ----------------------------------------------------------------


def cmd_tables(args: argparse.Namespace) -> int:
    if args.action == "list":
        for table in bundled_tables():
            print(
                f"{table.name:<12} {table.kind.value:<14} s={table.s}  "
                f"(p_d, p_s) = ({format_order(table.det_order)}, {format_order(table.stoch_order)})"
            )
        return 0
    if not args.table:
        raise UserInputError(f"tables {args.action} needs a table name or file")
    table = resolve_table(args.table)
    if args.action == "validate":
        report = validate(table)
        for line in report.lines():
            print(line)
        return 0 if report.ok else 1
    print(render_table_math(table), end="")
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    tables = [resolve_table(name) for name in args.table] if args.table else bundled_tables()
    manifest = generate_bundle(
        tables,
        Path(args.out),
        m_range=parse_m_range(args.m) if args.m else None,
        dialect=args.dialect,
        with_math=args.math,
    )
    for entry in manifest.entries:
        print(f"{entry.function}  {entry.path}  {entry.sha256[:12]}")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    problem = _problem(args)
    stepper = make_stepper(args.method)
    grid = _grid(args, problem)
    seed = _seed(args)
    rng = np.random.default_rng(seed)
    source = source_for(stepper, problem.sys, rng, grid)
    traj = integrate(stepper, problem.sys, problem.x0, grid, source)

    out = ensure_dir(Path(args.out))
    save_trajectory_csv(traj, grid, out / "trajectory.csv")
    _write_metadata(out, {
        "method": stepper.name,
        "problem": problem.name,
        "params": dict(problem.params),
        "seed": seed,
        "h": grid.h,
        "N": grid.N,
        "T": grid.T,
    })
    logger.info("simulation_written", out=str(out), steps=grid.N, seed=seed)
    return 0


def cmd_mc(args: argparse.Namespace) -> int:
    problem = _problem(args)
    stepper = make_stepper(args.method)
    grid = _grid(args, problem)
    cfg = McConfig(
        trials=args.trials,
        workers=args.workers,
        master_seed=_seed(args),
        grid=grid,
        x0=problem.x0,
        stepper=stepper,
        batch_size=args.batch_size,
        track_variance=args.variance,
    )
    result = run_trials(problem.sys, cfg)
    save_results(result, Path(args.out), {"problem": problem.name, "params": dict(problem.params)})
    print(f"accepted={result.accepted} rejected={result.rejected} mean(T)={result.mean[-1].tolist()}")
    return 0


def cmd_converge(args: argparse.Namespace) -> int:
    problem = _problem(args)
    stepper = make_stepper(args.method)
    hs = parse_hs(args.hs)
    seed = _seed(args)
    rng = np.random.default_rng(seed)
    if args.mode == "strong":
        estimate = estimate_strong_order(
            stepper, problem, hs, args.paths, rng, norm=args.norm, exclude_largest=args.exclude_largest
        )
    else:
        estimate = estimate_weak_order(
            stepper, problem, args.functional, hs, args.trials, rng,
            batch_size=args.batch_size, exclude_largest=args.exclude_largest,
        )
    out = ensure_dir(Path(args.out))
    save_report(estimate, out / "report.csv", {"seed": seed, "params": dict(problem.params)})
    print(estimate.summary())

    if args.expect is not None:
        inside = not estimate.degenerate and abs(estimate.slope - args.expect) <= args.tol
        if not inside:
            print(
                f"slope {format_slope(estimate.slope)} outside {args.expect} +/- {args.tol}",
                file=sys.stderr,
            )
            return 1
    return 0


# --- parser ------------------------------------------------------------------


def _add_problem_args(p: argparse.ArgumentParser, with_grid: bool = True) -> None:
    p.add_argument("--method", default="EM", help="EM, a bundled table name, or a table JSON file")
    p.add_argument("--problem", default="gbm", help=f"Built-in problem ({', '.join(problem_names())})")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="Problem parameter override")
    p.add_argument("--T", type=float, help="Final time (overrides the problem's)")
    if with_grid:
        p.add_argument("--h", type=float, help="Step size")
        p.add_argument("--N", type=int, help="Number of steps")
    p.add_argument("--seed", type=int, help="Master seed (random if omitted, recorded in metadata)")
    p.add_argument("--out", required=True, help="Output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stochrk", description="Stochastic Runge-Kutta toolkit")
    parser.add_argument("--log-level", default=None, help=f"Log level (default {settings.log_level})")
    parser.add_argument("--json-logs", action="store_true", default=None, help="Emit JSON log lines")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("tables", help="List, validate or render coefficient tables")
    p.add_argument("action", choices=["list", "validate", "render"])
    p.add_argument("table", nargs="?", help="Bundled table name or JSON file")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("gen", help="Generate specialized step functions")
    p.add_argument("--table", action="append", help="Table name or file (repeatable; default all bundled)")
    p.add_argument("--m", help="Noise dimensions: 3, 1..4 or 1,2,5 (default 1..max)")
    p.add_argument("--dialect", default=settings.default_dialect, help=f"One of {', '.join(available_dialects())}")
    p.add_argument("--math", action="store_true", help="Also write LaTeX formulas")
    p.add_argument("--out", required=True, help="Output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("simulate", help="Integrate one path")
    _add_problem_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mc", help="Monte Carlo mean trajectory")
    _add_problem_args(p)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--workers", type=int, default=settings.default_workers)
    p.add_argument("--batch-size", type=int, default=settings.default_batch_size)
    p.add_argument("--variance", action="store_true", help="Also accumulate the variance")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("converge", help="Estimate a convergence order")
    _add_problem_args(p, with_grid=False)
    p.add_argument("--mode", choices=["strong", "weak"], default="strong")
    p.add_argument("--hs", default="2^-4..2^-10", help="Step sizes: 0.1,0.05,... or 2^-4..2^-10")
    p.add_argument("--paths", type=int, default=200, help="Coupled paths (strong)")
    p.add_argument("--trials", type=int, default=100_000, help="Trials per step size (weak)")
    p.add_argument("--batch-size", type=int, default=10_000)
    p.add_argument("--functional", choices=sorted(FUNCTIONALS), default="identity")
    p.add_argument("--norm", choices=["final", "sup"], default="final")
    p.add_argument("--exclude-largest", type=int, default=0, help="Leave the K largest steps out of the fit")
    p.add_argument("--expect", type=float, help="Expected order; exit 1 when the slope is outside the band")
    p.add_argument("--tol", type=float, default=0.15, help="Half-width of the expected band")
    p.set_defaults(func=cmd_converge)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level, args.json_logs)
    try:
        return int(args.func(args))
    except StochRKError as exc:
        logger.error("command_failed", command=args.command, error=str(exc), error_type=type(exc).__name__)
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
