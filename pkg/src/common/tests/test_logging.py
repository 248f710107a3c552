"""Tests for structlog configuration."""

import json
import sys
from pathlib import Path
from typing import Iterator

# Add package directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

import pytest

from stochrk_common.logging import configure_logging, get_logger


@pytest.fixture(autouse=True)
def _restore_logging() -> Iterator[None]:
    """Point the processor chain back at the real stderr once capsys is gone."""
    yield
    configure_logging()


def test_json_lines_to_stderr(capsys: pytest.CaptureFixture[str]) -> None:
    """JSON mode writes one parseable object per event on stderr."""
    configure_logging("INFO", json=True)
    get_logger("stochrk.test").info("bundle_generated", entries=3)

    captured = capsys.readouterr()
    assert captured.out == ""
    record = json.loads(captured.err.strip().splitlines()[-1])
    assert record["event"] == "bundle_generated"
    assert record["entries"] == 3
    assert record["level"] == "info"


def test_level_filters_debug(capsys: pytest.CaptureFixture[str]) -> None:
    configure_logging("WARNING", json=True)
    log = get_logger("stochrk.test")
    log.debug("hidden")
    log.info("hidden_too")
    log.warning("shown")

    err = capsys.readouterr().err
    assert "hidden" not in err
    assert "shown" in err


def test_unknown_level_rejected() -> None:
    with pytest.raises(ValueError):
        configure_logging("CHATTY")


def test_console_renderer(capsys: pytest.CaptureFixture[str]) -> None:
    configure_logging("INFO", json=False)
    get_logger("stochrk.test").info("mc_finished", accepted=10)

    err = capsys.readouterr().err
    assert "mc_finished" in err
    assert "accepted=10" in err
