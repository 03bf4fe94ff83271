"""Shared fixtures for the digit-spectra test suite."""

from fractions import Fraction

import pytest

from digit_spectra.digitcore import BMultFunction
from digit_spectra.transfer import FourierConfig


@pytest.fixture(autouse=True)
def single_worker(monkeypatch):
    """Run in-process unless a test asks for workers explicitly."""
    monkeypatch.setenv("DIGIT_SPECTRA_THREADS", "1")


@pytest.fixture
def tm():
    """Thue-Morse in the +-1 convention: g(n) = (-1)^{s_2(n)}."""
    return BMultFunction.thue_morse()


@pytest.fixture
def alternating():
    """b=3, g(1)=-1, g(2)=1, i.e. the periodic g(n) = (-1)^n."""
    return BMultFunction(3, (0, Fraction(1, 2), 0))


@pytest.fixture
def thirds():
    """b=3 with phases 0, 1/3, 2/3 (non-periodic)."""
    return BMultFunction(3, (0, Fraction(1, 3), Fraction(2, 3)))


@pytest.fixture
def one():
    """g = 1."""
    return BMultFunction(2, (0, 0))


@pytest.fixture
def tm_config(tm):
    return FourierConfig.build(tm, 9, 25)
