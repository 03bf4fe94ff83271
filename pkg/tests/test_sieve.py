"""Tests for the prime and Möbius sieves."""

import numpy as np
import pytest

import digit_spectra.sieve as sieve
from digit_spectra.sieve import (
    check_coprime_triple,
    iter_mobius_blocks,
    mertens,
    mobius_trial_division,
    primes_upto,
    sieve_mobius,
)


def test_mobius_small_values():
    assert sieve_mobius(1, 11).tolist() == [1, -1, -1, 0, -1, 1, -1, 0, 0, 1]


def test_mobius_spot_values():
    table = sieve_mobius(1, 300)
    assert table[4] == 0
    assert table[210] == 1
    assert table[30] == -1


def test_primes():
    assert primes_upto(10).tolist() == [2, 3, 5, 7]
    assert len(primes_upto(100)) == 25
    assert primes_upto(2).tolist() == [2]
    assert len(primes_upto(1)) == 0


def test_prime_membership():
    primes = primes_upto(50)
    assert 47 in primes
    assert 49 not in primes
    with pytest.raises(ValueError):
        _ = 53 in primes


def test_coprime_triple():
    assert check_coprime_triple(9, 25, 2)
    assert not check_coprime_triple(9, 25, 3)
    assert check_coprime_triple(4, 9, 5)
    with pytest.raises(ValueError):
        check_coprime_triple(0, 1, 2)


def test_mobius_inversion():
    N = 10**4
    mu = np.zeros(N + 1, dtype=np.int64)
    mu[1:] = sieve_mobius(1, N + 1).values
    total = np.zeros(N + 1, dtype=np.int64)
    for d in range(1, N + 1):
        if mu[d]:
            total[d::d] += mu[d]
    assert total[1] == 1
    assert not total[2:].any()


def test_segmented_matches_single_block():
    whole = sieve_mobius(1, 10**6, block_size=10**6)
    blocked = sieve_mobius(1, 10**6, block_size=4096)
    assert np.array_equal(whole.values, blocked.values)


@pytest.mark.timeout(120)
def test_matches_trial_division():
    table = sieve_mobius(1, 10**5 + 1, block_size=8191)
    assert all(table[n] == mobius_trial_division(n) for n in range(1, 10**5 + 1))


def test_offset_range():
    lo = 10**6
    table = sieve_mobius(lo, lo + 5000, block_size=777)
    assert all(table[n] == mobius_trial_division(n) for n in range(lo, lo + 5000))


def test_blocks_are_contiguous():
    blocks = list(iter_mobius_blocks(5, 1000, block_size=100))
    assert blocks[0].lo == 5 and blocks[-1].hi == 1000
    assert all(a.hi == b.lo for a, b in zip(blocks, blocks[1:]))


def test_mertens():
    assert mertens(10) == -1
    assert mertens(100) == 1
    assert mertens(0) == 0


@pytest.mark.parametrize("lo, hi", [(0, 10), (10, 10), (20, 10)])
def test_rejects_bad_ranges(lo, hi):
    with pytest.raises(ValueError):
        sieve_mobius(lo, hi)


def test_rejects_tiny_blocks():
    with pytest.raises(ValueError):
        sieve_mobius(1, 100, block_size=1)


def test_memory_budget(monkeypatch):
    monkeypatch.setattr(sieve, "get_memory_budget", lambda: 100)
    with pytest.raises(ValueError, match="budgeted"):
        sieve_mobius(1, 10**4)


def test_trial_division_domain():
    with pytest.raises(ValueError):
        mobius_trial_division(0)
