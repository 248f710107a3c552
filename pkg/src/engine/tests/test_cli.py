"""Tests for the stochrk command line."""

import json
import sys
from pathlib import Path
from typing import Iterator

# Add package directories to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
sys.path.insert(0, str(Path(__file__).parent.parent.parent / "common"))

import numpy as np
import pandas as pd
import pytest

from stochrk.cli import main, parse_hs, parse_m_range, parse_params
from stochrk_common.exceptions import UserInputError
from stochrk_common.logging import configure_logging

DATA_DIR = Path(__file__).parent.parent / "stochrk" / "tables" / "data"


@pytest.fixture(autouse=True)
def _restore_logging() -> Iterator[None]:
    yield
    configure_logging()


def _table_file(tmp_path: Path, name: str, **changes: object) -> Path:
    document = json.loads((DATA_DIR / "SRK1Wm.json").read_text())
    document["name"] = name
    document.update(changes)
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(document))
    return path


class TestArgumentHelpers:
    """Parsing of ranges, step lists and problem parameters."""

    def test_m_range(self) -> None:
        assert parse_m_range("3") == [3]
        assert parse_m_range("1..4") == [1, 2, 3, 4]
        assert parse_m_range("1,2,5") == [1, 2, 5]
        with pytest.raises(UserInputError):
            parse_m_range("one")

    def test_hs(self) -> None:
        assert parse_hs("2^-4..2^-6") == [2.0**-4, 2.0**-5, 2.0**-6]
        assert parse_hs("0.1,0.05") == [0.1, 0.05]
        assert parse_hs("2^-1,2^-2") == [0.5, 0.25]
        with pytest.raises(UserInputError):
            parse_hs("0.1..0.01")

    def test_params(self) -> None:
        assert parse_params(["mu=1", "x0=1,2"]) == {"mu": 1.0, "x0": (1.0, 2.0)}
        assert parse_params(None) == {}
        with pytest.raises(UserInputError):
            parse_params(["mu"])
        with pytest.raises(UserInputError):
            parse_params(["mu=fast"])


class TestTablesCommand:
    """stochrk tables ..."""

    def test_list(self, capsys: pytest.CaptureFixture[str]) -> None:
        assert main(["tables", "list"]) == 0
        out = capsys.readouterr().out
        for name in ("SRK1W1", "SRK2W1", "K1P1", "SRK1Wm", "SRK2Wm", "WeakSRK2Wm"):
            assert name in out

    def test_validate_bundled(self, capsys: pytest.CaptureFixture[str]) -> None:
        assert main(["tables", "validate", "SRK2Wm"]) == 0
        assert capsys.readouterr().out

    def test_validate_failing_conditions(self, tmp_path: Path) -> None:
        path = _table_file(tmp_path, "BadWeights", a=["1/2", "0", "0"])
        assert main(["tables", "validate", str(path)]) == 1

    def test_validate_bad_shape(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        path = _table_file(tmp_path, "BadShape", B1=[["0", "0", "0"], ["1", "0", "0"]])
        assert main(["tables", "validate", str(path)]) == 1
        assert "error:" in capsys.readouterr().err

    def test_validate_needs_table(self) -> None:
        assert main(["tables", "validate"]) == 1

    def test_render(self, capsys: pytest.CaptureFixture[str]) -> None:
        assert main(["tables", "render", "SRK1Wm"]) == 0
        assert "\\frac{1}{2}" in capsys.readouterr().out


class TestGenCommand:
    """stochrk gen ..."""

    def test_rerun_is_identical(self, tmp_path: Path) -> None:
        for out in ("first", "second"):
            argv = ["gen", "--table", "SRK1Wm", "--table", "WeakSRK2Wm", "--m", "1..3", "--out", str(tmp_path / out)]
            assert main(argv) == 0
        first = json.loads((tmp_path / "first" / "manifest.json").read_text())
        second = json.loads((tmp_path / "second" / "manifest.json").read_text())
        assert len(first["entries"]) == 6
        assert [e["sha256"] for e in first["entries"]] == [e["sha256"] for e in second["entries"]]

    def test_unknown_dialect(self, tmp_path: Path) -> None:
        argv = ["gen", "--table", "SRK1Wm", "--m", "1", "--dialect", "fortran", "--out", str(tmp_path)]
        assert main(argv) == 1

    def test_unknown_table(self, tmp_path: Path) -> None:
        assert main(["gen", "--table", "NoSuchTable", "--out", str(tmp_path)]) == 1


class TestSimulateCommand:
    """stochrk simulate ..."""

    def test_zero_problem(self, tmp_path: Path) -> None:
        argv = ["simulate", "--problem", "zero", "--N", "10", "--seed", "1", "--out", str(tmp_path)]
        assert main(argv) == 0
        frame = pd.read_csv(tmp_path / "trajectory.csv")
        assert list(frame.columns) == ["t", "x1"]
        assert len(frame) == 11
        assert (frame["x1"] == 1.0).all()
        metadata = json.loads((tmp_path / "metadata.json").read_text())
        assert metadata["seed"] == 1
        assert metadata["N"] == 10

    def test_same_seed_same_files(self, tmp_path: Path) -> None:
        for out in ("a", "b"):
            argv = ["simulate", "--method", "SRK2Wm", "--N", "32", "--seed", "42", "--out", str(tmp_path / out)]
            assert main(argv) == 0
        assert (tmp_path / "a" / "trajectory.csv").read_bytes() == (tmp_path / "b" / "trajectory.csv").read_bytes()

    def test_noise_free_gbm(self, tmp_path: Path) -> None:
        argv = [
            "simulate", "--method", "SRK1W1", "--problem", "gbm", "--param", "sigma=0",
            "--h", "1e-4", "--seed", "0", "--out", str(tmp_path),
        ]
        assert main(argv) == 0
        frame = pd.read_csv(tmp_path / "trajectory.csv")
        np.testing.assert_allclose(frame["x1"], np.exp(0.5 * frame["t"]), atol=1e-6)

    def test_needs_grid(self, tmp_path: Path) -> None:
        assert main(["simulate", "--out", str(tmp_path)]) == 1

    def test_unknown_problem(self, tmp_path: Path) -> None:
        assert main(["simulate", "--problem", "heston", "--N", "4", "--out", str(tmp_path)]) == 1

    def test_step_not_dividing_interval(self, tmp_path: Path) -> None:
        assert main(["simulate", "--h", "0.3", "--out", str(tmp_path)]) == 1

    def test_blow_up_is_numerical_failure(self, tmp_path: Path) -> None:
        argv = ["simulate", "--param", "mu=1e300", "--param", "sigma=0", "--N", "10", "--out", str(tmp_path)]
        with np.errstate(over="ignore", invalid="ignore"):
            assert main(argv) == 2

    def test_unwritable_output(self, tmp_path: Path) -> None:
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert main(["simulate", "--N", "4", "--out", str(blocker)]) == 3


class TestMcCommand:
    """stochrk mc ..."""

    def test_worker_count_does_not_change_constant_mean(
        self, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        means = []
        for workers in (1, 3):
            out = tmp_path / f"w{workers}"
            argv = [
                "mc", "--problem", "zero", "--param", "x0=2", "--N", "8", "--trials", "12",
                "--workers", str(workers), "--seed", "5", "--out", str(out),
            ]
            assert main(argv) == 0
            means.append(pd.read_csv(out / "mean.csv")["mean_x1"].to_numpy())
            assert "accepted=12 rejected=0" in capsys.readouterr().out
        np.testing.assert_array_equal(means[0], means[1])
        np.testing.assert_array_equal(means[0], 2.0)

    def test_variance_column(self, tmp_path: Path) -> None:
        argv = ["mc", "--N", "4", "--trials", "10", "--workers", "1", "--seed", "0", "--variance", "--out", str(tmp_path)]
        assert main(argv) == 0
        frame = pd.read_csv(tmp_path / "mean.csv")
        assert list(frame.columns) == ["t", "mean_x1", "var_x1"]
        metadata = json.loads((tmp_path / "metadata.json").read_text())
        assert metadata["trials"] == 10
        assert metadata["problem"] == "gbm"

    def test_zero_trials(self, tmp_path: Path) -> None:
        assert main(["mc", "--N", "4", "--trials", "0", "--out", str(tmp_path)]) == 1


class TestConvergeCommand:
    """stochrk converge ..."""

    def test_noise_free_euler(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        argv = [
            "converge", "--method", "EM", "--problem", "gbm", "--param", "sigma=0", "--hs", "2^-4..2^-7",
            "--paths", "2", "--seed", "0", "--expect", "1.0", "--tol", "0.2", "--out", str(tmp_path),
        ]
        assert main(argv) == 0
        assert "strong order of EM on gbm" in capsys.readouterr().out
        text = (tmp_path / "report.csv").read_text()
        assert text.startswith("# kind: strong")
        assert "# seed: 0" in text

    def test_outside_expected_band(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        argv = [
            "converge", "--method", "EM", "--param", "sigma=0", "--hs", "2^-4..2^-7",
            "--paths", "2", "--seed", "0", "--expect", "2.0", "--out", str(tmp_path),
        ]
        assert main(argv) == 1
        assert "outside" in capsys.readouterr().err

    def test_weak_mode(self, tmp_path: Path) -> None:
        argv = [
            "converge", "--mode", "weak", "--problem", "zero", "--hs", "2^-2..2^-4",
            "--trials", "20", "--seed", "3", "--out", str(tmp_path),
        ]
        assert main(argv) == 0
        assert "# functional: identity" in (tmp_path / "report.csv").read_text()

    def test_too_few_steps(self, tmp_path: Path) -> None:
        assert main(["converge", "--hs", "0.5,0.25", "--out", str(tmp_path)]) == 1


class TestUsage:
    """Argument errors."""

    def test_missing_command(self) -> None:
        with pytest.raises(SystemExit) as info:
            main([])
        assert info.value.code == 1

    def test_bad_choice(self, tmp_path: Path) -> None:
        with pytest.raises(SystemExit) as info:
            main(["converge", "--mode", "median", "--out", str(tmp_path)])
        assert info.value.code == 1

    def test_bad_log_level(self) -> None:
        with pytest.raises(ValueError):
            main(["--log-level", "LOUD", "tables", "list"])
