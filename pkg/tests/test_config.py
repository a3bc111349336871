"""
Settings and logging setup
"""
import pytest
import structlog

from config import Config, configure_logging


def test_defaults_are_valid():
    assert Config.validate()


def test_invalid_setting_is_named(monkeypatch):
    monkeypatch.setattr(Config, "ALPHA", -1.0)
    with pytest.raises(ValueError, match="ALPHA"):
        Config.validate()


def test_round_limit_scales_with_problem_size():
    assert Config.max_rounds_for(10, 5) == 10 * 5 * Config.MAX_ROUNDS_FACTOR
    assert Config.max_rounds_for(0, 3) == 1


@pytest.mark.parametrize("fmt", ["console", "json"])
def test_configure_logging(fmt):
    configure_logging("debug", fmt)
    structlog.get_logger("test").info("configured", fmt=fmt)
