"""Tests for Euler-Maruyama, the table-interpreted steppers and the integration loop."""

import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, List, Sequence

# Add package directories to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
sys.path.insert(0, str(Path(__file__).parent.parent.parent / "common"))

import numpy as np
import pandas as pd
import pytest

from stochrk.noise.ito_integrals import SeriesConfig, sample_step_integrals
from stochrk.noise.wiener import TimeGrid, cumulative, generate_path
from stochrk.schemes import (
    EulerMaruyama,
    ScalarStrongStepper,
    SdeSystem,
    VectorStrongStepper,
    VectorWeakStepper,
    em_step,
    integrate,
    make_stepper,
    sample_weak_randoms,
    save_trajectory_csv,
    source_for,
    strong_source,
)
from stochrk.tables import BUNDLED_NAMES, TableKind, load_bundled, parse_table
from stochrk_common.exceptions import (
    NonFiniteStateError,
    ShapeError,
    TableKindError,
    UnknownNameError,
)


def _zero_diffusion(m: int) -> Callable[[float, np.ndarray], np.ndarray]:
    return lambda t, x: np.zeros(x.shape + (m,))


def _scalar_ode() -> SdeSystem:
    return SdeSystem(d=1, m=1, drift=lambda t, x: np.sin(t) - x**3 / 3, diffusion=_zero_diffusion(1))


def _pendulum(m: int = 2) -> SdeSystem:
    def drift(t: float, x: np.ndarray) -> np.ndarray:
        return np.stack([x[..., 1], -np.sin(x[..., 0]) + 0.1 * np.cos(t)], axis=-1)

    return SdeSystem(d=2, m=m, drift=drift, diffusion=_zero_diffusion(m))


def _logistic(m: int, d: int = 1) -> SdeSystem:
    """Fixed points at x = 0 and x = 1 for both fields."""
    return SdeSystem(
        d=d,
        m=m,
        drift=lambda t, x: x * (1 - x),
        diffusion=lambda t, x: 0.5 * (x * (1 - x))[..., None] * np.ones(m),
    )


def _rk(
    A: Sequence[Sequence[Fraction]],
    c: Sequence[Fraction],
    a: Sequence[Fraction],
    f: Callable[[float, np.ndarray], np.ndarray],
    x0: np.ndarray,
    grid: TimeGrid,
) -> np.ndarray:
    """Plain explicit Runge-Kutta with the drift block of a table."""
    s = len(a)
    x = np.array(x0, dtype=float)
    h = grid.h
    for n in range(grid.N):
        t = grid.time(n)
        k: List[np.ndarray] = []
        for i in range(s):
            shift = np.zeros_like(x)
            for j in range(i):
                shift = shift + float(A[i][j]) * k[j]
            k.append(f(t + float(c[i]) * h, x + h * shift))
        total = np.zeros_like(x)
        for i in range(s):
            total = total + float(a[i]) * k[i]
        x = x + h * total
    return x


def _trivial_weak_document() -> dict:
    zero = [["0"]]
    return {
        "name": "TrivialWeak",
        "stage": 1,
        "det_order": "1.0",
        "stoch_order": "1.0",
        "A0": zero, "A1": zero, "A2": zero,
        "B0": zero, "B1": zero, "B2": zero,
        "c0": ["0"], "c1": ["0"], "c2": ["0"],
        "a": ["1"], "b1": ["1"], "b2": ["0"], "b3": ["0"], "b4": ["0"],
    }


class TestEulerMaruyama:
    """x + f h + G dW."""

    def test_example(self) -> None:
        sys_ = SdeSystem(d=1, m=1, drift=lambda t, x: 0.5 * x, diffusion=lambda t, x: (0.3 * x)[..., None])
        out = em_step(sys_, 0.0, np.array([1.0]), 0.01, np.array([0.02]))
        assert out[0] == pytest.approx(1.011, abs=1e-15)

    def test_zero_fields_identity(self) -> None:
        sys_ = SdeSystem(d=2, m=3, drift=lambda t, x: np.zeros_like(x), diffusion=_zero_diffusion(3))
        x = np.array([0.3, -1.2])
        np.testing.assert_array_equal(em_step(sys_, 0.0, x, 0.1, np.array([1.0, 2.0, 3.0])), x)

    def test_pure_noise_reproduces_path(self) -> None:
        """dx = dW from x0 = 0 gives W(t_n) exactly."""
        sys_ = SdeSystem(
            d=1, m=1, drift=lambda t, x: np.zeros_like(x), diffusion=lambda t, x: np.ones(x.shape + (1,))
        )
        grid = TimeGrid(0.0, 1.0, 64)
        path = generate_path(np.random.default_rng(0), grid, 1)
        traj = integrate(EulerMaruyama(), sys_, np.zeros(1), grid, strong_source(path, np.random.default_rng(1)))
        np.testing.assert_array_equal(traj, cumulative(path))

    def test_stored_path_matches_manual_loop(self) -> None:
        sys_ = SdeSystem(d=1, m=1, drift=lambda t, x: 0.5 * x, diffusion=lambda t, x: (0.3 * x)[..., None])
        grid = TimeGrid(0.0, 1.0, 20)
        path = generate_path(np.random.default_rng(4), grid, 1)
        traj = integrate(EulerMaruyama(), sys_, np.ones(1), grid, strong_source(path, np.random.default_rng(0)))

        x = 1.0
        for n in range(grid.N):
            x = x + 0.5 * x * grid.h + 0.3 * x * path.increments[n, 0]
        assert traj[-1, 0] == pytest.approx(x, rel=1e-14)

    def test_batch_mismatch(self) -> None:
        sys_ = _logistic(2)
        with pytest.raises(ShapeError):
            em_step(sys_, 0.0, np.ones((3, 1)), 0.1, np.zeros((4, 2)))

    def test_wrong_noise_dimension(self) -> None:
        with pytest.raises(ShapeError):
            em_step(_logistic(2), 0.0, np.ones(1), 0.1, np.zeros(3))


class TestDeterministicDegeneration:
    """With G = 0 every scheme is the Runge-Kutta method of its drift block."""

    @pytest.mark.parametrize("name", BUNDLED_NAMES)
    def test_matches_plain_runge_kutta(self, name: str) -> None:
        table = load_bundled(name)
        stepper = make_stepper(table)
        sys_ = _scalar_ode() if table.kind == TableKind.SCALAR_STRONG else _pendulum()
        x0 = np.array([0.5]) if sys_.d == 1 else np.array([0.5, -0.2])
        grid = TimeGrid(0.0, 1.0, 100)

        source = source_for(stepper, sys_, np.random.default_rng(1), grid)
        traj = integrate(stepper, sys_, x0, grid, source)
        expected = _rk(table.A0, table.c0, table.a, sys_.f, x0, grid)
        np.testing.assert_allclose(traj[-1], expected, rtol=0, atol=1e-12)


class TestInvariants:
    """Properties every table-driven stepper keeps."""

    @pytest.mark.parametrize("name", BUNDLED_NAMES)
    def test_fixed_point(self, name: str) -> None:
        table = load_bundled(name)
        stepper = make_stepper(table)
        m = 1 if table.kind == TableKind.SCALAR_STRONG else 2
        sys_ = _logistic(m)
        grid = TimeGrid(0.0, 1.0, 10)
        traj = integrate(stepper, sys_, np.ones(1), grid, source_for(stepper, sys_, np.random.default_rng(0), grid))
        np.testing.assert_array_equal(traj, 1.0)

    @pytest.mark.parametrize("name", BUNDLED_NAMES)
    def test_translation(self, name: str) -> None:
        """Shifting the state and both fields by c shifts the solution by c."""
        table = load_bundled(name)
        stepper = make_stepper(table)
        m = 1 if table.kind == TableKind.SCALAR_STRONG else 2
        base = _logistic(m)
        shift = 3.0
        moved = SdeSystem(
            d=1,
            m=m,
            drift=lambda t, x: base.drift(t, x - shift),
            diffusion=lambda t, x: base.diffusion(t, x - shift),
        )
        grid = TimeGrid(0.0, 1.0, 16)
        x0 = np.array([0.3])

        a = integrate(stepper, base, x0, grid, source_for(stepper, base, np.random.default_rng(8), grid))
        b = integrate(stepper, moved, x0 + shift, grid, source_for(stepper, moved, np.random.default_rng(8), grid))
        np.testing.assert_allclose(b - shift, a, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("name", ["SRK1Wm", "SRK2Wm", "WeakSRK2Wm"])
    def test_batched_equals_looped(self, name: str) -> None:
        stepper = make_stepper(name)
        sys_ = _logistic(2, d=1)
        x = np.array([[0.2], [0.4], [0.7]])
        h = 0.05
        if stepper.randomness == "weak":
            draw = sample_weak_randoms(np.random.default_rng(0), 2, h, (3,))
            rows = [
                type(draw)(h, draw.Ihat[p], draw.Itil[p], draw.Ihat2[p]) for p in range(3)
            ]
        else:
            dW = np.random.default_rng(0).normal(0.0, math.sqrt(h), size=(3, 2))
            draw = sample_step_integrals(dW, h, np.random.default_rng(1), SeriesConfig(n_terms=4))
            rows = [
                type(draw)(h, draw.single[p], draw.time_left[p], draw.time_right[p], draw.double[p], draw.triple_diag[p])
                for p in range(3)
            ]
        batched = stepper.step(sys_, 0.0, x, h, draw)
        for p in range(3):
            np.testing.assert_allclose(batched[p], stepper.step(sys_, 0.0, x[p], h, rows[p]), rtol=0, atol=1e-14)

    def test_unvectorized_system(self) -> None:
        stepper = make_stepper("SRK2Wm")
        vectorized = _logistic(2)
        looped = SdeSystem(d=1, m=2, drift=vectorized.drift, diffusion=vectorized.diffusion, vectorized=False)
        grid = TimeGrid(0.0, 1.0, 8)
        x0 = np.full((4, 1), 0.4)
        a = integrate(stepper, vectorized, x0, grid, source_for(stepper, vectorized, np.random.default_rng(2), grid, (4,)))
        b = integrate(stepper, looped, x0, grid, source_for(stepper, looped, np.random.default_rng(2), grid, (4,)))
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-14)


class TestVectorStrong:
    """Vector strong stepper against a hand expansion."""

    def test_srk1wm_single_noise(self) -> None:
        sys_ = SdeSystem(
            d=1,
            m=1,
            drift=lambda t, x: -x + np.cos(t),
            diffusion=lambda t, x: (0.4 * np.sin(x) + 0.2)[..., None],
        )
        stepper = VectorStrongStepper(load_bundled("SRK1Wm"))
        h, t = 0.01, 0.3
        x = np.array([0.8])
        ints = sample_step_integrals(np.array([0.07]), h, np.random.default_rng(0))

        g1 = sys_.G(t, x)[:, 0]
        I1 = ints.single[0]
        I11 = ints.double[0, 0]
        X2 = x + g1 * I11 / math.sqrt(h)
        X3 = x - g1 * I11 / math.sqrt(h)
        expected = (
            x
            + h * sys_.f(t, x)
            + g1 * I1
            + math.sqrt(h) * (0.5 * sys_.G(t, X2)[:, 0] - 0.5 * sys_.G(t, X3)[:, 0])
        )
        np.testing.assert_allclose(stepper.step(sys_, t, x, h, ints), expected, rtol=0, atol=1e-12)

    def test_transpose_flag_changes_coupling(self) -> None:
        doc_table = load_bundled("SRK1Wm")
        transposed = doc_table.model_copy(update={"transpose_double": True})
        sys_ = SdeSystem(
            d=2, m=2,
            drift=lambda t, x: -x,
            diffusion=lambda t, x: np.stack([np.sin(x), np.cos(x) * x], axis=-1),
        )
        x = np.array([0.5, 1.5])
        ints = sample_step_integrals(np.array([0.1, -0.2]), 0.01, np.random.default_rng(3), SeriesConfig(n_terms=8))
        a = VectorStrongStepper(doc_table).step(sys_, 0.0, x, 0.01, ints)
        b = VectorStrongStepper(transposed).step(sys_, 0.0, x, 0.01, ints)
        assert not np.allclose(a, b, rtol=0, atol=1e-15)

    def test_wrong_kind(self) -> None:
        with pytest.raises(TableKindError):
            VectorStrongStepper(load_bundled("SRK1W1"))


class TestScalarStrong:
    """Scalar-noise stepper."""

    def test_needs_scalar_system(self) -> None:
        stepper = ScalarStrongStepper(load_bundled("SRK1W1"))
        ints = sample_step_integrals(np.array([0.1, 0.1]), 0.01, np.random.default_rng(0))
        with pytest.raises(ShapeError):
            stepper.step(_pendulum(), 0.0, np.array([0.1, 0.2]), 0.01, ints)

    def test_wrong_kind(self) -> None:
        with pytest.raises(TableKindError):
            ScalarStrongStepper(load_bundled("SRK2Wm"))

    def test_gbm_step_close_to_exact(self) -> None:
        """One small step lands within O(h^1.5) of the closed-form GBM."""
        mu, sigma, h = 0.5, 0.3, 1e-4
        sys_ = SdeSystem(d=1, m=1, drift=lambda t, x: mu * x, diffusion=lambda t, x: (sigma * x)[..., None])
        dW = np.array([0.01])
        ints = sample_step_integrals(dW, h, np.random.default_rng(0))
        out = ScalarStrongStepper(load_bundled("SRK2W1")).step(sys_, 0.0, np.ones(1), h, ints)
        exact = math.exp((mu - sigma**2 / 2) * h + sigma * dW[0])
        assert abs(out[0] - exact) < 1e-6


class TestVectorWeak:
    """Weak stepper driven by three-point variables."""

    def test_trivial_table_is_euler(self) -> None:
        stepper = VectorWeakStepper(parse_table(_trivial_weak_document()))
        sys_ = SdeSystem(
            d=2, m=3,
            drift=lambda t, x: np.stack([x[..., 1], -x[..., 0]], axis=-1),
            diffusion=lambda t, x: np.stack([np.sin(x), np.cos(x), x], axis=-1),
        )
        x = np.array([[0.1, 0.2], [1.0, -0.5]])
        w = sample_weak_randoms(np.random.default_rng(0), 3, 0.01, (2,))
        np.testing.assert_allclose(
            stepper.step(sys_, 0.0, x, 0.01, w), em_step(sys_, 0.0, x, 0.01, w.Ihat), rtol=0, atol=1e-14
        )

    def test_one_step_covariance(self) -> None:
        """f = 0 and constant G: Cov(x' - x) = h G G^T."""
        G = np.array([[1.0, 0.5], [0.0, 2.0]])
        sys_ = SdeSystem(
            d=2, m=2, drift=lambda t, x: np.zeros_like(x), diffusion=lambda t, x: np.broadcast_to(G, x.shape + (2,))
        )
        stepper = VectorWeakStepper(parse_table(_trivial_weak_document()))
        h, paths = 0.01, 100_000
        w = sample_weak_randoms(np.random.default_rng(1), 2, h, (paths,))
        dx = stepper.step(sys_, 0.0, np.zeros((paths, 2)), h, w)
        cov = np.cov(dx.T)
        expected = h * G @ G.T
        assert np.linalg.norm(cov - expected) < 0.05 * np.linalg.norm(expected)

    def test_wrong_kind(self) -> None:
        with pytest.raises(TableKindError):
            VectorWeakStepper(load_bundled("SRK2Wm"))


class TestMakeStepper:
    """Method name resolution."""

    @pytest.mark.parametrize("name", ["EM", "em", "Euler", "euler-maruyama"])
    def test_euler_aliases(self, name: str) -> None:
        assert isinstance(make_stepper(name), EulerMaruyama)

    @pytest.mark.parametrize(
        "name,cls",
        [("SRK1W1", ScalarStrongStepper), ("SRK2Wm", VectorStrongStepper), ("WeakSRK2Wm", VectorWeakStepper)],
    )
    def test_bundled(self, name: str, cls: Any) -> None:
        stepper = make_stepper(name)
        assert isinstance(stepper, cls)
        assert stepper.name == name

    def test_randomness_kinds(self) -> None:
        assert make_stepper("WeakSRK2Wm").randomness == "weak"
        assert make_stepper("SRK1Wm").uses_levy_area
        assert not make_stepper("SRK1W1").uses_levy_area

    def test_unknown(self) -> None:
        with pytest.raises(UnknownNameError):
            make_stepper("Heun")


class TestIntegrate:
    """The integration loop."""

    def test_shape_and_start(self) -> None:
        sys_ = _logistic(2)
        grid = TimeGrid(0.0, 1.0, 5)
        stepper = make_stepper("SRK2Wm")
        x0 = np.full((7, 1), 0.25)
        traj = integrate(stepper, sys_, x0, grid, source_for(stepper, sys_, np.random.default_rng(0), grid, (7,)))
        assert traj.shape == (7, 6, 1)
        np.testing.assert_array_equal(traj[:, 0, :], x0)

    def test_single_step(self) -> None:
        sys_ = _logistic(1)
        grid = TimeGrid(0.0, 0.1, 1)
        traj = integrate(EulerMaruyama(), sys_, np.array([0.5]), grid, strong_source(np.array([[0.2]]), np.random.default_rng(0)))
        assert traj.shape == (2, 1)
        assert traj[1, 0] == pytest.approx(0.5 + 0.25 * 0.1 + 0.125 * 0.2)

    def test_non_finite_reports_step(self) -> None:
        sys_ = SdeSystem(d=1, m=1, drift=lambda t, x: 1e3 * x**2, diffusion=_zero_diffusion(1))
        grid = TimeGrid(0.0, 1.0, 50)
        stepper = EulerMaruyama()
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(NonFiniteStateError) as info:
                integrate(stepper, sys_, np.array([10.0]), grid, source_for(stepper, sys_, np.random.default_rng(0), grid))
        assert 0 <= info.value.step < 50

    def test_non_finite_passthrough(self) -> None:
        sys_ = SdeSystem(d=1, m=1, drift=lambda t, x: 1e3 * x**2, diffusion=_zero_diffusion(1))
        grid = TimeGrid(0.0, 1.0, 50)
        stepper = EulerMaruyama()
        with np.errstate(over="ignore", invalid="ignore"):
            traj = integrate(
                stepper, sys_, np.array([10.0]), grid,
                source_for(stepper, sys_, np.random.default_rng(0), grid), check_finite=False,
            )
        assert not np.all(np.isfinite(traj))

    def test_bad_field_shape(self) -> None:
        sys_ = SdeSystem(d=2, m=1, drift=lambda t, x: x[..., :1], diffusion=_zero_diffusion(1))
        grid = TimeGrid(0.0, 1.0, 2)
        with pytest.raises(ShapeError):
            integrate(EulerMaruyama(), sys_, np.zeros(2), grid, strong_source(np.zeros((2, 1)), np.random.default_rng(0)))

    def test_trajectory_csv(self, tmp_path: Path) -> None:
        grid = TimeGrid(0.0, 1.0, 4)
        traj = np.arange(10, dtype=float).reshape(5, 2)
        target = tmp_path / "trajectory.csv"
        save_trajectory_csv(traj, grid, target)

        frame = pd.read_csv(target)
        assert list(frame.columns) == ["t", "x1", "x2"]
        np.testing.assert_array_equal(frame["x2"].to_numpy(), traj[:, 1])
        np.testing.assert_array_equal(frame["t"].to_numpy(), grid.times())
