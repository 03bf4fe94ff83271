"""Segmented sieves for the Möbius function and the primes.

The Möbius sieve works one block [lo, hi) at a time with the primes up to
sqrt(hi): every p flips the sign of its multiples and records itself in a
running product, every p^2 zeroes its multiples. An entry whose product of
small primes falls short of n has exactly one prime factor above sqrt(hi),
which flips the sign once more.

Memory per block is O(block_size); the primes take O(sqrt(hi)).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np

from digit_spectra.config import MAX_SIEVE_HI, get_block_size, get_memory_budget

logger = logging.getLogger("digit_spectra.sieve")

# Working set per sieved entry: int8 mu + int64 product + int64 value
_BLOCK_BYTES_PER_ENTRY = 17


@dataclass(frozen=True)
class PrimeList:
    """The primes up to ``bound``, ascending."""

    bound: int
    primes: np.ndarray

    def __len__(self) -> int:
        return len(self.primes)

    def __iter__(self) -> Iterator[int]:
        return (int(p) for p in self.primes)

    def __contains__(self, n: object) -> bool:
        if not isinstance(n, (int, np.integer)):
            return False
        if n > self.bound:
            raise ValueError(f"{n} is above the prime list bound {self.bound}")
        k = int(np.searchsorted(self.primes, n))
        return k < len(self.primes) and int(self.primes[k]) == n

    def tolist(self) -> list[int]:
        return [int(p) for p in self.primes]


@dataclass(frozen=True)
class MobiusTable:
    """Values of mu(n) for n in [lo, hi), stored as int8."""

    lo: int
    hi: int
    values: np.ndarray

    def __len__(self) -> int:
        return self.hi - self.lo

    def __getitem__(self, n: int) -> int:
        if not self.lo <= n < self.hi:
            raise IndexError(f"{n} outside [{self.lo}, {self.hi})")
        return int(self.values[n - self.lo])

    def numbers(self) -> np.ndarray:
        return np.arange(self.lo, self.hi, dtype=np.int64)

    def tolist(self) -> list[int]:
        return self.values.astype(int).tolist()


def primes_upto(M: int) -> PrimeList:
    """Sieve of Eratosthenes over [2, M]; empty for M < 2."""
    M = int(M)
    if M < 2:
        return PrimeList(M, np.zeros(0, dtype=np.int64))
    is_prime = np.ones(M + 1, dtype=bool)
    is_prime[:2] = False
    is_prime[4::2] = False
    for i in range(3, math.isqrt(M) + 1, 2):
        if is_prime[i]:
            is_prime[i * i :: 2 * i] = False
    return PrimeList(M, np.flatnonzero(is_prime).astype(np.int64))


def check_coprime_triple(P: int, Q: int, b: int) -> bool:
    """True iff P, Q and b are pairwise coprime."""
    if min(P, Q, b) < 1:
        raise ValueError(f"P, Q and b must be positive, got P={P}, Q={Q}, b={b}")
    return math.gcd(P, Q) == 1 and math.gcd(P, b) == 1 and math.gcd(Q, b) == 1


def _check_range(lo: int, hi: int) -> None:
    if lo < 1:
        raise ValueError(f"sieve range must start at 1 or above, got lo={lo}")
    if lo >= hi:
        raise ValueError(f"inverted sieve range [{lo}, {hi})")
    if hi > MAX_SIEVE_HI:
        raise ValueError(f"sieve bound {hi} exceeds 2**63")


def mobius_block(lo: int, hi: int, primes: PrimeList | np.ndarray) -> MobiusTable:
    """Sieve mu over [lo, hi) given every prime up to sqrt(hi - 1)."""
    _check_range(lo, hi)
    n = hi - lo
    mu = np.ones(n, dtype=np.int8)
    prod = np.ones(n, dtype=np.int64)
    plist = primes.primes if isinstance(primes, PrimeList) else np.asarray(primes)
    for p in plist:
        p = int(p)
        pp = p * p
        if pp >= hi:
            break
        start = (-lo) % p
        if start < n:
            np.negative(mu[start::p], out=mu[start::p])
            prod[start::p] *= p
        start = (-lo) % pp
        if start < n:
            mu[start::pp] = 0
    # Squarefree part below n leaves exactly one large prime factor
    large = prod != np.arange(lo, hi, dtype=np.int64)
    np.negative(mu, out=mu, where=large)
    return MobiusTable(lo, hi, mu)


def block_bounds(lo: int, hi: int, block_size: int) -> list[tuple[int, int]]:
    """Consecutive [a, b) ranges covering [lo, hi)."""
    if block_size < 2:
        raise ValueError(f"block_size must be at least 2, got {block_size}")
    return [(a, min(a + block_size, hi)) for a in range(lo, hi, block_size)]


def iter_mobius_blocks(
    lo: int,
    hi: int,
    block_size: int | None = None,
    primes: PrimeList | None = None,
) -> Iterator[MobiusTable]:
    """Stream mu over [lo, hi) one block at a time."""
    _check_range(lo, hi)
    block_size = get_block_size(block_size)
    if primes is None:
        primes = primes_upto(math.isqrt(hi - 1))
    for a, b in block_bounds(lo, hi, block_size):
        logger.debug("sieving block [%d, %d)", a, b)
        yield mobius_block(a, b, primes)


def sieve_mobius(lo: int, hi: int, block_size: int | None = None) -> MobiusTable:
    """Materialize mu over [lo, hi).

    Raises:
        ValueError: For an inverted or out-of-range interval, a block size
            below 2, or a table that would not fit the memory budget.
    """
    _check_range(lo, hi)
    block_size = get_block_size(block_size)
    if block_size < 2:
        raise ValueError(f"block_size must be at least 2, got {block_size}")
    budget = get_memory_budget()
    needed = (hi - lo) + _BLOCK_BYTES_PER_ENTRY * min(block_size, hi - lo)
    needed += 8 * math.isqrt(hi - 1)
    if needed > budget:
        raise ValueError(
            f"a table of mu over [{lo}, {hi}) needs about {needed >> 20} MiB but only "
            f"{budget >> 20} MiB are budgeted; stream it with iter_mobius_blocks or "
            "lower DIGIT_SPECTRA_BLOCK_SIZE"
        )
    logger.info("sieving mu over [%d, %d) in blocks of %d", lo, hi, block_size)
    values = np.empty(hi - lo, dtype=np.int8)
    for block in iter_mobius_blocks(lo, hi, block_size):
        values[block.lo - lo : block.hi - lo] = block.values
    return MobiusTable(lo, hi, values)


def mertens(N: int, block_size: int | None = None) -> int:
    """M(N) = sum of mu(n) over 1 <= n <= N."""
    if N < 1:
        return 0
    return sum(
        int(block.values.sum(dtype=np.int64))
        for block in iter_mobius_blocks(1, N + 1, block_size)
    )


def mobius_trial_division(n: int) -> int:
    """mu(n) by trial division."""
    if n < 1:
        raise ValueError(f"mu is defined for n >= 1, got {n}")
    result = 1
    d = 2
    while d * d <= n:
        if n % d == 0:
            n //= d
            if n % d == 0:
                return 0
            result = -result
        d += 1
    if n > 1:
        result = -result
    return result
