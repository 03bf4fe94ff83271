"""Oracle-equivalence checks behind ``digit-spectra selftest``.

Each check compares a fast implementation with a brute-force oracle at a
size that runs in seconds.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from digit_spectra.correlation import count_carry_violations, mobius_square_sum
from digit_spectra.digitcore import BMultFunction, eval_angle
from digit_spectra.pairgraph import (
    build_component,
    component_by_sweep,
    find_i0,
    is_staircase,
    path_counts,
    verify_floor_identity,
)
from digit_spectra.sieve import check_coprime_triple, mertens, mobius_trial_division, sieve_mobius
from digit_spectra.transfer import (
    FourierConfig,
    fourier_direct,
    fourier_vector,
    halton,
    transfer_matrix,
)

logger = logging.getLogger("digit_spectra.selftest")


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def _random_triple(
    rng: np.random.Generator, max_side: int, max_base: int = 5
) -> tuple[int, int, int]:
    while True:
        b = int(rng.integers(2, max_base + 1))
        P = int(rng.integers(1, max_side))
        Q = int(rng.integers(1, max_side))
        if check_coprime_triple(P, Q, b):
            return b, P, Q


def check_sieve(rng: np.random.Generator) -> str | None:
    table = sieve_mobius(1, 10**4, block_size=997)
    bad = [n for n in range(1, 10**4) if table[n] != mobius_trial_division(n)]
    if bad:
        return f"sieve disagrees with trial division at {bad[:5]}"
    if (mertens(10), mertens(100)) != (-1, 1):
        return f"M(10), M(100) = {mertens(10)}, {mertens(100)}"
    return None


def check_digit_relation(rng: np.random.Generator) -> str | None:
    for g in (BMultFunction.thue_morse(), BMultFunction(3, (0, Fraction(1, 3), Fraction(2, 3)))):
        b = g.base
        for n in range(b**5):
            k, a = divmod(n, b)
            if eval_angle(g, n) != eval_angle(g, k) + g.phases[a]:
                return f"g(kb + a) != g(k) g(a) at n={n} for {g.describe()}"
        values = rng.integers(0, 2**62, size=1000, dtype=np.int64)
        fast = g.numerators(values)
        slow = [int(eval_angle(g, int(n)).value * g.denominator) for n in values]
        if list(fast) != slow:
            return f"vectorized evaluation disagrees for {g.describe()}"
    return None


def check_components(rng: np.random.Generator) -> str | None:
    for _ in range(20):
        b, P, Q = _random_triple(rng, 200)
        component = build_component(b, P, Q)
        if component.members != component_by_sweep(b, P, Q).members:
            return f"closure and sweep differ for b={b}, P={P}, Q={Q}"
        if not is_staircase(component):
            return f"component for b={b}, P={P}, Q={Q} is not a staircase"
        if b < P < Q:
            find_i0(component)
        if path_counts(component, 3).row_sums() != [b**3] * len(component):
            return f"path-count rows do not sum to b^3 for b={b}, P={P}, Q={Q}"
    return None


def check_floor_identity(rng: np.random.Generator) -> str | None:
    for b in (2, 3):
        for P in (5, 7):
            for k in range(0, 1000, 7):
                for r in range(b):
                    if not verify_floor_identity(b, P, k, 1000, r):
                        return f"floor identity fails at b={b}, P={P}, t={k}/1000, r={r}"
    return None


def check_fourier(rng: np.random.Generator) -> str | None:
    config = FourierConfig.build(BMultFunction.thue_morse(), 9, 25)
    for t in halton(8):
        for lam in range(0, 7):
            vector = fourier_vector(config, lam, t)
            for (i, j), value in zip(config.component.members[:6], vector[:6]):
                direct = fourier_direct(config, i, j, lam, t)
                if abs(direct - value) > 1e-9:
                    return f"recursion differs from direct sum at lambda={lam}, t={t}, ({i},{j})"
        norm = transfer_matrix(config, t).row_sum_norm()
        if norm > 1 + 1e-12:
            return f"row-sum norm {norm} > 1 at t={t}"
    return None


def check_mertens_sum(rng: np.random.Generator) -> str | None:
    one = BMultFunction(2, (0, 0))
    series = mobius_square_sum(one, 10**4, [10**4], threads=1)
    if series.value_at(10**4) != mertens(10**4 - 1):
        return "sum of mu(n) * 1 differs from the Mertens function"
    return None


def check_carry(rng: np.random.Generator) -> str | None:
    g = BMultFunction.thue_morse()
    for rho in range(2, 7):
        report = count_carry_violations(g, 3, 2, 9, 1, rho)
        if report.violations > report.criterion_count:
            return f"carry violations {report.violations} exceed the criterion at rho={rho}"
    return None


CHECKS: dict[str, Callable[[np.random.Generator], str | None]] = {
    "sieve": check_sieve,
    "digit-relation": check_digit_relation,
    "components": check_components,
    "floor-identity": check_floor_identity,
    "fourier": check_fourier,
    "mertens-sum": check_mertens_sum,
    "carry": check_carry,
}


def run_selftest(seed: int = 0) -> list[CheckResult]:
    """Run every check; a check that raises counts as failed."""
    rng = np.random.default_rng(seed)
    results = []
    for name, check in CHECKS.items():
        try:
            problem = check(rng)
        except Exception as e:
            logger.exception("selftest check %s raised", name)
            problem = f"{type(e).__name__}: {e}"
        results.append(CheckResult(name, problem is None, problem or "ok"))
        logger.info("selftest %s: %s", name, "ok" if problem is None else problem)
    return results


def all_passed(results: list[CheckResult]) -> bool:
    return all(r.passed for r in results)
