"""Empirical sums along the squares.

All three sums share one streaming engine: the range of n is cut at the
sieve block grid and at every checkpoint, each segment is summed on its
own (in a worker process when more than one thread is allowed) and the
segment results are merged in order.

With rational phases and a small common denominator d (together with the
twist), every summand is mu(n) * e(k/d) for an integer k, so a segment
reduces to signed counts per k. Counting is exact; the complex value is
formed only when a checkpoint is reported. Other functions fall back to
floating summation with math.fsum per segment.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import FIRST_COMPLETED, Future, ProcessPoolExecutor, wait
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import islice
from typing import Any, NamedTuple, Union

import numpy as np

from digit_spectra.config import (
    DEFAULT_CHECKPOINTS,
    EXACT_BUCKET_LIMIT,
    MAX_CARRY_WORK,
    PERIODICITY_TOLERANCE,
    get_block_size,
    get_threads,
)
from digit_spectra.digitcore import (
    BMultFunction,
    DigitFunction,
    PairProduct,
    ScaledFunction,
    square_values,
    truncate,
    unit_table,
)
from digit_spectra.monitoring import Progress, advance
from digit_spectra.sieve import PrimeList, block_bounds, mobius_block, primes_upto

logger = logging.getLogger("digit_spectra.correlation")

Twist = Union[Fraction, float]

_THUE_MORSE = BMultFunction.thue_morse()


class SumPoint(NamedTuple):
    N: int
    value: complex

    @property
    def abs_over_N(self) -> float:
        return abs(self.value) / self.N if self.N else 0.0


@dataclass
class SumSeries:
    """Partial sums S(N) at increasing checkpoints.

    ``buckets[k]`` holds the signed counts per angle k/denominator behind
    ``points[k]`` when the sum was computed exactly.
    """

    kind: str
    function: str
    points: list[SumPoint] = field(default_factory=list)
    denominator: int | None = None
    buckets: list[np.ndarray] | None = None
    params: dict[str, Any] = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return self.buckets is not None

    def value_at(self, N: int) -> complex:
        for p in self.points:
            if p.N == N:
                return p.value
        raise KeyError(f"no checkpoint at N={N}")

    def is_conjugate_of(self, other: SumSeries) -> bool:
        """Exact check that every S(N) here is conj of the one in ``other``."""
        if not (self.exact and other.exact) or self.denominator != other.denominator:
            raise ValueError("conjugation symmetry is only checked on exact series")
        if [p.N for p in self.points] != [p.N for p in other.points]:
            return False
        d = self.denominator
        mirror = (-np.arange(d)) % d
        return all(np.array_equal(a, b[mirror]) for a, b in zip(self.buckets, other.buckets))


# ---------------------------------------------------------------------------
# Streaming engine


@dataclass(frozen=True)
class _SumTask:
    f: DigitFunction
    lo: int
    hi: int
    mobius: bool
    twist: Twist
    denominator: int | None
    primes: PrimeList | None


def _twist_numerators(n: np.ndarray, twist: Fraction, d: int) -> np.ndarray:
    scale = d // twist.denominator
    return (n % d) * (twist.numerator * scale) % d


def _segment_sum(task: _SumTask) -> Any:
    n = np.arange(task.lo, task.hi, dtype=np.int64)
    if task.mobius:
        mu = mobius_block(task.lo, task.hi, task.primes).values
        keep = mu != 0
        n, mu = n[keep], mu[keep]
    else:
        mu = None
    args = square_values(n)
    d = task.denominator
    if d is not None:
        k = (task.f.numerators(args) * (d // task.f.denominator)) % d
        if task.twist:
            k = (k + _twist_numerators(n, task.twist, d)) % d
        if mu is None:
            return np.bincount(k, minlength=d).astype(np.int64)
        pos = np.bincount(k[mu > 0], minlength=d)
        neg = np.bincount(k[mu < 0], minlength=d)
        return pos.astype(np.int64) - neg.astype(np.int64)
    values = task.f.complex_values(args)
    if task.twist:
        values = values * np.exp(2j * np.pi * np.mod(n * float(task.twist), 1.0))
    if mu is not None:
        values = values * mu
    return math.fsum(values.real), math.fsum(values.imag)


def _resolve_checkpoints(start: int, N: int, checkpoints: Sequence[int] | None) -> list[int]:
    """Sorted report points. N is always the last one unless the list is empty.

    None means the decade defaults below N. An empty list sums nothing.
    """
    if checkpoints is None:
        points = [c for c in DEFAULT_CHECKPOINTS if c < N] + [N]
    elif not checkpoints:
        points = []
    else:
        points = sorted(set(int(c) for c in checkpoints) | {N})
    for c in points:
        if not 1 <= c <= N:
            raise ValueError(f"checkpoint {c} outside [1, {N}]")
    return points


def _segments(start: int, points: list[int], block_size: int) -> list[tuple[int, int]]:
    if not points or points[-1] <= start:
        return []
    cuts = {a for a, _ in block_bounds(start, points[-1], block_size)}
    cuts |= {c for c in points if c > start}
    edges = sorted(cuts | {start})
    return [(a, b) for a, b in zip(edges, edges[1:])]


def _run_tasks(
    worker: Callable[[Any], Any],
    tasks: list[Any],
    threads: int | None,
    deterministic: bool,
    progress: Progress | None,
    sizes: Iterable[int],
    on_result: Callable[[int, Any], None],
) -> None:
    """Run ``worker`` over ``tasks`` and hand each result to ``on_result(k, result)``.

    At most two tasks per worker are in flight, so callers that fold results
    as they arrive hold a bounded number of them. With ``deterministic`` the
    results are delivered in task order.
    """
    sizes = list(sizes)
    workers = min(get_threads(threads), len(tasks))
    if workers <= 1:
        for k, task in enumerate(tasks):
            on_result(k, worker(task))
            advance(progress, sizes[k])
        return
    window = 2 * workers
    with ProcessPoolExecutor(max_workers=workers) as pool:
        pending: dict[Future, int] = {}
        queued = iter(enumerate(tasks))
        for k, task in islice(queued, window):
            pending[pool.submit(worker, task)] = k
        while pending:
            if deterministic:
                future = min(pending, key=pending.__getitem__)
            else:
                future = next(iter(wait(pending, return_when=FIRST_COMPLETED).done))
            k = pending.pop(future)
            on_result(k, future.result())
            advance(progress, sizes[k])
            for j, task in islice(queued, 1):
                pending[pool.submit(worker, task)] = j


def _exact_denominator(f: DigitFunction, twist: Twist) -> int | None:
    if not f.exact or isinstance(twist, float):
        return None
    d = math.lcm(f.denominator, twist.denominator) if twist else f.denominator
    return d if d <= EXACT_BUCKET_LIMIT else None


def _stream_sum(
    kind: str,
    f: DigitFunction,
    description: str,
    start: int,
    N: int,
    checkpoints: Sequence[int] | None,
    mobius: bool,
    twist: Twist = Fraction(0),
    block_size: int | None = None,
    threads: int | None = None,
    deterministic: bool = True,
    progress: Progress | None = None,
    params: dict[str, Any] | None = None,
) -> SumSeries:
    points = _resolve_checkpoints(start, N, checkpoints)
    d = _exact_denominator(f, twist)
    if d is None:
        logger.warning("%s: exact angle buckets unavailable, summing in floating point", kind)
    series = SumSeries(kind, description, denominator=d, params=dict(params or {}))
    series.buckets = [] if d is not None else None
    segments = _segments(start, points, get_block_size(block_size))
    if progress is not None:
        progress.total = sum(b - a for a, b in segments)
    primes = primes_upto(math.isqrt(max(points[-1] - 1, 1))) if mobius and points else None
    tasks = [_SumTask(f, a, b, mobius, twist, d, primes) for a, b in segments]
    logger.info("%s over [%d, %d): %d segments", kind, start, points[-1] if points else 0,
                len(tasks))
    results: list[Any] = [None] * len(tasks)
    _run_tasks(
        _segment_sum, tasks, threads, deterministic, progress, (b - a for a, b in segments),
        results.__setitem__,
    )

    if d is not None:
        table = unit_table(d)
        counts = np.zeros(d, dtype=np.int64)
    re_parts: list[float] = []
    im_parts: list[float] = []
    by_end = dict(zip((b for _, b in segments), results))
    ends = iter(sorted(by_end))
    for c in points:
        for end in ends if c > start else ():
            if d is not None:
                counts += by_end[end]
            else:
                re_parts.append(by_end[end][0])
                im_parts.append(by_end[end][1])
            if end == c:
                break
        if d is not None:
            series.buckets.append(counts.copy())
            value = complex(np.dot(counts.astype(float), table))
        else:
            value = complex(math.fsum(re_parts), math.fsum(im_parts))
        series.points.append(SumPoint(c, value))
    return series


# ---------------------------------------------------------------------------
# The three sums


def mobius_square_sum(
    g: BMultFunction,
    N: int,
    checkpoints: Sequence[int] | None = None,
    **options: Any,
) -> SumSeries:
    """S(N) = sum of mu(n) g(n^2) over 1 <= n < N.

    Partial sums are reported at ``checkpoints`` and at N itself; an empty
    list reports nothing.
    """
    if N < 1:
        raise ValueError(f"N must be at least 1, got {N}")
    return _stream_sum(
        "mobius-square", g, g.describe(), 1, N, checkpoints, mobius=True,
        params={"N": N}, **options,
    )


def dk_correlation(
    g: BMultFunction,
    p: int,
    q: int,
    N: int,
    checkpoints: Sequence[int] | None = None,
    allow_equal: bool = False,
    **options: Any,
) -> SumSeries:
    """S(N) = sum of g(p^2 n^2) conj(g(q^2 n^2)) over 0 <= n < N.

    Raises:
        ValueError: If p or q is not a prime coprime to b, or p == q
            without ``allow_equal``.
    """
    primes = primes_upto(max(p, q, 2))
    for x in (p, q):
        if x not in primes:
            raise ValueError(f"{x} is not prime")
        if g.base % x == 0:
            raise ValueError(f"prime {x} divides the base {g.base}")
    if p == q:
        if not allow_equal:
            raise ValueError("p == q is the degenerate control; pass allow_equal to run it")
        logger.warning("p == q: the correlation is identically 1 and S(N) = N")
    f = PairProduct(g, p * p, q * q)
    return _stream_sum(
        "dk-correlation", f, g.describe(), 0, N, checkpoints, mobius=False,
        params={"N": N, "p": p, "q": q}, **options,
    )


def twisted_square_sum(
    f: BMultFunction | PairProduct,
    theta: Twist,
    N: int,
    checkpoints: Sequence[int] | None = None,
    **options: Any,
) -> SumSeries:
    """S(N) = sum of f(n^2) e(theta n) over 0 <= n < N."""
    if isinstance(theta, int):
        theta = Fraction(theta)
    if not 0 <= theta < 1:
        raise ValueError(f"theta must lie in [0, 1), got {theta}")
    if isinstance(f, PairProduct):
        description = f.g.describe()
        params = {"N": N, "theta": theta, "P": f.P, "Q": f.Q}
    else:
        description = f.describe()
        params = {"N": N, "theta": theta}
    return _stream_sum(
        "twisted-square", f, description, 0, N, checkpoints, mobius=False, twist=theta,
        params=params, **options,
    )


# ---------------------------------------------------------------------------
# Carry property


@dataclass(frozen=True)
class CarryReport:
    """Violations V of the truncated product identity over l < b^lam.

    ``criterion_count`` counts the l with a*l mod b^rho outside
    [0, b^rho - 2a); every violating l is among them.
    """

    b: int
    a: int
    lam: int
    kappa: int
    rho: int
    violations: int
    criterion_count: int

    @property
    def bound_b_pow(self) -> int:
        return self.b ** (self.lam - self.rho)

    @property
    def ratio(self) -> float:
        """V * b^(rho - lam); bounded in rho when the carry property holds."""
        return self.violations / self.bound_b_pow


def _carry_criterion(a: int, b: int, lam: int, rho: int) -> int:
    window = b**rho
    ell = np.arange(b**lam, dtype=np.int64)
    residues = (ell % window) * (a % window) % window
    return int(np.count_nonzero(~(residues < window - 2 * a)))


def count_carry_violations(
    g: BMultFunction, a: int, b: int, lam: int, kappa: int, rho: int
) -> CarryReport:
    """Count l < b^lam where f(n) = g(an) and its truncation at kappa + rho disagree.

    For l fixed, a violation is a pair k1, k2 < b^kappa with
    f(l b^kappa + k1 + k2) conj(f(l b^kappa + k1)) differing from the same
    product of f_{kappa+rho}. Angles are compared exactly for rational
    phases.

    The count is non-increasing in rho once b^rho >= 2a; below that it can rise.
    """
    if b != g.base:
        raise ValueError(f"base {b} does not match g's base {g.base}")
    if a < 0:
        raise ValueError(f"a must be >= 0, got {a}")
    if not 0 <= rho < lam:
        raise ValueError(f"need 0 <= rho < lambda, got rho={rho}, lambda={lam}")
    if kappa < 0:
        raise ValueError(f"kappa must be >= 0, got {kappa}")
    if b ** (lam + 2 * kappa) > MAX_CARRY_WORK:
        raise ValueError(f"b^lambda * b^(2 kappa) = {b}^{lam + 2 * kappa} exceeds 2**32")

    f = ScaledFunction(g, a)
    ft = truncate(f, kappa + rho)
    width = b**kappa
    total = b**lam
    chunk = max(1, (1 << 20) // (width * width))
    k1 = np.arange(width)
    k2 = np.arange(width)
    violations = 0
    for l0 in range(0, total, chunk):
        l1 = min(l0 + chunk, total)
        n = np.arange(l0 * width, l1 * width + 2 * width, dtype=np.uint64)
        if f.exact:
            d = f.denominator
            delta = (f.numerators(n) - ft.numerators(n)) % d
        else:
            delta = np.mod(f.turns(n) - ft.turns(n), 1.0)
        base = (np.arange(l1 - l0)[:, None] * width + k1[None, :])[:, :, None]
        first = delta[base]
        second = delta[base + k2[None, None, :]]
        diff = second - first
        if f.exact:
            bad = diff % f.denominator != 0
        else:
            wrapped = np.mod(diff, 1.0)
            bad = np.minimum(wrapped, 1.0 - wrapped) > PERIODICITY_TOLERANCE
        violations += int(np.count_nonzero(bad.any(axis=(1, 2))))
    report = CarryReport(b, a, lam, kappa, rho, violations, _carry_criterion(a, b, lam, rho))
    logger.debug("carry a=%d lambda=%d kappa=%d rho=%d: V=%d", a, lam, kappa, rho, violations)
    return report


def fit_carry_constant(reports: Sequence[CarryReport]) -> float:
    """Smallest C with V <= C * b^(lam - rho) across ``reports``."""
    return max((r.ratio for r in reports), default=0.0)


# ---------------------------------------------------------------------------
# Normality of t(n^2)


@dataclass
class BlockHistogram:
    """Counts of each length-L binary word among the windows of t(n^2), n < N.

    Words are indexed with their first symbol as the most significant bit.
    """

    N: int
    L: int
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def frequencies(self) -> np.ndarray:
        return self.counts / self.total

    def block(self, code: int) -> str:
        return format(code, f"0{self.L}b")


@dataclass(frozen=True)
class _HistogramTask:
    lo: int
    hi: int
    L: int


def thue_morse_of_squares(lo: int, hi: int) -> np.ndarray:
    """t(n^2) for lo <= n < hi, as uint8."""
    n = np.arange(lo, hi, dtype=np.int64)
    return _THUE_MORSE.numerators(square_values(n)).astype(np.uint8)


def _histogram_chunk(task: _HistogramTask) -> np.ndarray:
    bits = thue_morse_of_squares(task.lo, task.hi).astype(np.int64)
    windows = len(bits) - task.L + 1
    codes = np.zeros(windows, dtype=np.int64)
    for k in range(task.L):
        codes = (codes << 1) | bits[k : k + windows]
    return np.bincount(codes, minlength=1 << task.L)


def block_histogram(
    N: int,
    L: int,
    block_size: int | None = None,
    threads: int | None = None,
    deterministic: bool = True,
    progress: Progress | None = None,
) -> BlockHistogram:
    """Sliding-window word counts over (t(n^2))_{0 <= n < N}."""
    if not 1 <= L <= 24:
        raise ValueError(f"block length must lie in [1, 24], got {L}")
    if N < L:
        raise ValueError(f"N = {N} is shorter than the block length {L}")
    size = get_block_size(block_size)
    starts = range(0, N - L + 1, size)
    tasks = [_HistogramTask(a, min(a + size + L - 1, N), L) for a in starts]
    if progress is not None:
        progress.total = N - L + 1
    counts = np.zeros(1 << L, dtype=np.int64)

    def fold(_: int, part: np.ndarray) -> None:
        np.add(counts, part, out=counts)

    _run_tasks(
        _histogram_chunk, tasks, threads, deterministic, progress,
        (t.hi - t.lo - L + 1 for t in tasks), fold,
    )
    return BlockHistogram(N, L, counts)


def marginalize(hist: BlockHistogram) -> BlockHistogram:
    """Drop the last symbol of every word: an (L-1)-histogram missing the final window."""
    if hist.L < 2:
        raise ValueError("cannot marginalize a histogram of length-1 words")
    counts = hist.counts[0::2] + hist.counts[1::2]
    return BlockHistogram(hist.N, hist.L - 1, counts)


def missing_blocks(hist: BlockHistogram) -> list[str]:
    return [hist.block(int(c)) for c in np.flatnonzero(hist.counts == 0)]


def entropy_estimate(hist: BlockHistogram) -> float:
    """Empirical block entropy per symbol, -sum(f log f) / L."""
    if hist.total == 0:
        raise ValueError("entropy of an empty histogram")
    f = hist.frequencies()
    f = f[f > 0]
    return float(-(f * np.log(f)).sum() / hist.L)
