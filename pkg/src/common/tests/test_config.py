"""Tests for environment-driven settings."""

import sys
from pathlib import Path

# Add package directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

import pytest
from pydantic import ValidationError

from stochrk_common.config import Settings


class TestSettings:
    """Defaults and STOCHRK_* overrides."""

    def test_defaults(self, monkeypatch: pytest.MonkeyPatch) -> None:
        for key in ("STOCHRK_MAX_NOISE_DIM", "STOCHRK_DEFAULT_WORKERS", "STOCHRK_SERIES_TERMS"):
            monkeypatch.delenv(key, raising=False)
        cfg = Settings(_env_file=None)

        assert cfg.max_noise_dim == 6
        assert cfg.default_dialect == "python"
        assert cfg.default_workers == 1
        assert cfg.series_terms is None
        assert cfg.degenerate_error == 1e-10

    def test_env_prefix_override(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv("STOCHRK_MAX_NOISE_DIM", "3")
        monkeypatch.setenv("STOCHRK_LOG_JSON", "true")
        cfg = Settings(_env_file=None)

        assert cfg.max_noise_dim == 3
        assert cfg.log_json is True

    def test_rejects_out_of_range(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv("STOCHRK_MAX_NOISE_DIM", "0")
        with pytest.raises(ValidationError):
            Settings(_env_file=None)

    def test_float_digits_bounds(self) -> None:
        with pytest.raises(ValidationError):
            Settings(_env_file=None, float_digits=18)
        assert Settings(_env_file=None, float_digits=12).float_digits == 12

    def test_frozen(self) -> None:
        cfg = Settings(_env_file=None)
        with pytest.raises(ValidationError):
            cfg.max_noise_dim = 4  # type: ignore[misc]
