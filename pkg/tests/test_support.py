"""Tests for configuration, value parsing and progress monitoring."""

import logging
from fractions import Fraction

import pytest

from digit_spectra.config import DEFAULT_BLOCK_SIZE, get_block_size, get_threads
from digit_spectra.monitoring import Progress, ProgressMonitorDaemon, advance
from digit_spectra.utils import flatten_dict, format_error, parse_rational, serialize_value


def test_threads_from_env(monkeypatch):
    monkeypatch.setenv("DIGIT_SPECTRA_THREADS", "3")
    assert get_threads() == 3
    assert get_threads(5) == 5
    monkeypatch.setenv("DIGIT_SPECTRA_THREADS", "0")
    assert get_threads() == 1


def test_block_size(monkeypatch):
    monkeypatch.delenv("DIGIT_SPECTRA_BLOCK_SIZE", raising=False)
    assert get_block_size() == DEFAULT_BLOCK_SIZE
    monkeypatch.setenv("DIGIT_SPECTRA_BLOCK_SIZE", "4096")
    assert get_block_size() == 4096
    assert get_block_size(100) == 100


def test_parse_rational():
    assert parse_rational("2/6") == Fraction(1, 3)
    assert parse_rational(" 3 ") == Fraction(3)
    assert parse_rational("0.25") == 0.25
    assert isinstance(parse_rational("1e-3"), float)
    for bad in ("", "1/0", "x", "1/2/3"):
        with pytest.raises(ValueError):
            parse_rational(bad)


def test_serialize_value():
    assert serialize_value(True) == "true"
    assert serialize_value(None) == ""
    assert serialize_value(Fraction(1, 3)) == "1/3"
    assert serialize_value(0.1) == "0.1"
    assert serialize_value(1 - 2j) == "1.0-2.0j"


def test_flatten_dict():
    flat = flatten_dict({"config": {"P": 9, "rho": [2, 3], "trend": [{"L": 1}]}})
    assert flat == {"config/P": "9", "config/rho": "2,3", "config/trend/0/L": "1"}


def test_format_error():
    assert format_error("Bad", "detail") == "[digit-spectra] Bad\ndetail"


def test_progress():
    progress = Progress(10, "sum")
    advance(progress, 4)
    advance(None, 4)
    assert progress.done == 4
    assert progress.fraction() == pytest.approx(0.4)
    assert Progress(0).fraction() == 1.0


def test_monitor_logs_progress(caplog):
    progress = Progress(100, "mobius-sum")
    progress.advance(50)
    with caplog.at_level(logging.INFO, logger="digit_spectra.monitoring"):
        with ProgressMonitorDaemon(progress, interval=0.01):
            pass
    assert "mobius-sum 50/100" in caplog.text
