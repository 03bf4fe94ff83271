"""Fourier terms of g(Pn) conj(g(Qn)) and their transfer matrices.

For (i, j) in the component C,

    F_lam^{i,j}(t) = b^-lam * sum_{u < b^lam} g(Pu + i) conj(g(Qu + j)) e(-ut)

and splitting off the lowest digit of u gives the vector recursion
F_lam(t) = A(t) F_{lam-1}(bt), where A(t) has one entry per digit r in
each row:

    A(t)[(i,j), target_r(i,j)] += g((Pr + i) mod b) conj(g((Qr + j) mod b)) e(-rt) / b

Rows of A(t) have at most b nonzero entries, so products are evaluated
as gathers rather than dense matrix multiplications.

Suprema over t are certified on a grid: every entry of A(t) has a
t-derivative of modulus at most pi*(b-1), so an (L+1)-fold product has a
row-norm Lipschitz constant K = pi*b^(L+1), and a bound at the grid points
plus K*h covers every t within h of one.

Grid points are stored as integer numerators over a common denominator D;
multiplying t by b stays exact because b*m mod D is exact.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, NamedTuple, Union

import numpy as np

from digit_spectra.config import (
    DEFAULT_DECAY_GRID,
    DEFAULT_DELTA_MIN,
    DEFAULT_L_MAX,
    MAX_DENSE_COMPONENT,
    MAX_DIRECT_TERMS,
    get_memory_budget,
    get_threads,
)
from digit_spectra.digitcore import BMultFunction, is_periodic, scale_values, unit
from digit_spectra.pairgraph import ComponentC, build_component

logger = logging.getLogger("digit_spectra.transfer")

TurnLike = Union[Fraction, float, int]

# complex entries held per chunk of grid points
_CHUNK_ENTRIES = 1 << 19
_INITIAL_OVERSAMPLING = 8
_MAX_REFINEMENTS = 3
_SUBCELL_OFFSETS = np.array([-3, -1, 1, 3], dtype=np.int64)


class NoCertificateError(RuntimeError):
    """No contraction certificate was found up to L_max.

    This is not a disproof; ``trend`` holds one ``(L, grid_sup)`` pair per
    level tried.
    """

    def __init__(self, message: str, trend: list[tuple[int, float]]) -> None:
        super().__init__(message)
        self.trend = trend

    @property
    def best_grid_sup(self) -> float:
        return min((s for _, s in self.trend), default=math.inf)


def _turn(t: TurnLike) -> Fraction | float:
    if isinstance(t, (int, Fraction)) and not isinstance(t, bool):
        return Fraction(t) % 1
    return float(t) % 1.0


def _digit_phases(b: int, t: Fraction | float) -> np.ndarray:
    """e(-r t) for r = 0..b-1."""
    return np.array([unit(-r * t) for r in range(b)])


@dataclass(frozen=True)
class FourierConfig:
    """g together with the pair (P, Q) and the component of (0, 0)."""

    g: BMultFunction
    P: int
    Q: int
    component: ComponentC = field(repr=False)

    @classmethod
    def build(cls, g: BMultFunction, P: int, Q: int) -> FourierConfig:
        return cls(g, P, Q, build_component(g.base, P, Q))

    @property
    def b(self) -> int:
        return self.g.base

    @property
    def size(self) -> int:
        return len(self.component)

    @cached_property
    def cols(self) -> np.ndarray:
        """(|C|, b) row indices of the digit-r targets."""
        return self.component.edge_table

    @cached_property
    def weights(self) -> np.ndarray:
        """(|C|, b) unimodular digit weights divided by b, from exact angles."""
        b, theta = self.b, self.g.phases
        w = np.empty((self.size, b), dtype=complex)
        for x, (i, j) in enumerate(self.component.members):
            for r in range(b):
                angle = theta[(self.P * r + i) % b] - theta[(self.Q * r + j) % b]
                w[x, r] = angle.to_complex() / b
        return w

    @cached_property
    def base_vector(self) -> np.ndarray:
        """F_0 = g(i) conj(g(j)) over the members of C."""
        return np.array(
            [(self.g.angle(i) - self.g.angle(j)).to_complex() for i, j in self.component.members]
        )

    @property
    def origin(self) -> int:
        return self.component.index[(0, 0)]

    def describe(self) -> dict[str, Any]:
        return {"g": self.g.describe(), "b": self.b, "P": self.P, "Q": self.Q, "size": self.size}


@dataclass(frozen=True)
class TransferMatrix:
    """Dense A(t) over the members of C."""

    t: Fraction | float
    entries: np.ndarray

    def row_sum_norm(self) -> float:
        return float(np.abs(self.entries).sum(axis=1).max())

    def __matmul__(self, other: np.ndarray) -> np.ndarray:
        return self.entries @ other


def _apply(config: FourierConfig, t: Fraction | float, vector: np.ndarray) -> np.ndarray:
    coeff = config.weights * _digit_phases(config.b, t)[None, :]
    return np.sum(coeff * vector[config.cols], axis=1)


def _check_dense(config: FourierConfig) -> None:
    if config.size > MAX_DENSE_COMPONENT:
        raise ValueError(
            f"component has {config.size} members; dense products are capped at "
            f"{MAX_DENSE_COMPONENT}"
        )


def transfer_matrix(config: FourierConfig, t: TurnLike) -> TransferMatrix:
    """A(t) as a dense complex matrix."""
    _check_dense(config)
    t = _turn(t)
    coeff = config.weights * _digit_phases(config.b, t)[None, :]
    entries = np.zeros((config.size, config.size), dtype=complex)
    rows = np.repeat(np.arange(config.size), config.b)
    np.add.at(entries, (rows, config.cols.ravel()), coeff.ravel())
    return TransferMatrix(t, entries)


def fourier_direct(config: FourierConfig, i: int, j: int, lam: int, t: TurnLike) -> complex:
    """F_lam^{i,j}(t) by direct summation over u < b^lam."""
    b = config.b
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    if b**lam > MAX_DIRECT_TERMS:
        raise ValueError(f"direct sum needs b^lambda <= 2**24, got {b}^{lam}")
    if not (0 <= i < config.P and 0 <= j < config.Q):
        raise ValueError(f"pair ({i}, {j}) outside [0, {config.P}) x [0, {config.Q})")
    t = _turn(t)
    u = np.arange(b**lam, dtype=np.uint64)
    hi = config.g.complex_values(scale_values(u, config.P) + np.uint64(i))
    lo = config.g.complex_values(scale_values(u, config.Q) + np.uint64(j))
    if isinstance(t, Fraction):
        turns = (u.astype(object) * t.numerator % t.denominator).astype(float) / t.denominator
    else:
        turns = np.mod(u * t, 1.0)
    return complex(np.mean(hi * np.conj(lo) * np.exp(-2j * np.pi * turns)))


def fourier_vector(config: FourierConfig, lam: int, t: TurnLike) -> np.ndarray:
    """F_lam(t) over all members of C, by the digit recursion."""
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    t = _turn(t)
    ts = [t]
    for _ in range(lam - 1):
        ts.append(_turn(ts[-1] * config.b))
    vector = config.base_vector
    for s in reversed(ts[:lam]):
        vector = _apply(config, s, vector)
    return vector


def fourier_recursive(config: FourierConfig, i: int, j: int, lam: int, t: TurnLike) -> complex:
    """F_lam^{i,j}(t) for (i, j) in C, by the digit recursion."""
    if (i, j) not in config.component:
        raise ValueError(f"pair ({i}, {j}) is not in the component of (0,0)")
    return complex(fourier_vector(config, lam, t)[config.component.index[(i, j)]])


def _chunks(count: int, size: int) -> list[slice]:
    return [slice(a, min(a + size, count)) for a in range(0, count, size)]


def _map_chunks(fn: Callable[[slice], np.ndarray], count: int, size: int, threads: int | None):
    parts = _chunks(count, size)
    workers = min(get_threads(threads), len(parts))
    if workers <= 1:
        return [fn(s) for s in parts]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, parts))


def product_norms(
    config: FourierConfig,
    L: int,
    numerators: np.ndarray,
    denominator: int,
    threads: int | None = None,
) -> np.ndarray:
    """Row-sum norm of A(t) A(bt) ... A(b^L t) at t = numerators/denominator."""
    _check_dense(config)
    b, n = config.b, config.size
    numerators = np.mod(np.asarray(numerators, dtype=np.int64), denominator)
    digit = np.arange(b)
    chunk = max(1, _CHUNK_ENTRIES // (n * n))

    def norms(part: slice) -> np.ndarray:
        nums = numerators[part]
        levels = [nums]
        for _ in range(L):
            levels.append(levels[-1] * b % denominator)
        Y = np.broadcast_to(np.eye(n, dtype=complex), (len(nums), n, n))
        for s in reversed(levels):
            phase = np.exp(-2j * np.pi * np.outer(s / denominator, digit))
            coeff = config.weights[None, :, :] * phase[:, None, :]
            out = coeff[:, :, 0, None] * Y[:, config.cols[:, 0], :]
            for r in range(1, b):
                out += coeff[:, :, r, None] * Y[:, config.cols[:, r], :]
            Y = out
        return np.abs(Y).sum(axis=2).max(axis=1)

    parts = _map_chunks(norms, len(numerators), chunk, threads)
    return np.concatenate(parts) if parts else np.zeros(0)


def lipschitz_constant(b: int, L: int) -> float:
    """Row-norm Lipschitz bound pi*b^(L+1) of an (L+1)-fold product in t."""
    return math.pi * b ** (L + 1)


class ProductNormBound(NamedTuple):
    grid_sup: float
    certified_sup: float


def product_norm_certified(
    config: FourierConfig, L: int, grid_M: int, threads: int | None = None
) -> ProductNormBound:
    """Grid supremum of the (L+1)-fold product norm over t = m/grid_M, plus K/grid_M."""
    if L < 0:
        raise ValueError(f"L must be >= 0, got {L}")
    if grid_M < config.b ** (L + 1):
        raise ValueError(f"grid_M = {grid_M} must be at least b^(L+1) = {config.b ** (L + 1)}")
    norms = product_norms(config, L, np.arange(grid_M), grid_M, threads)
    grid_sup = float(norms.max())
    return ProductNormBound(grid_sup, grid_sup + lipschitz_constant(config.b, L) / grid_M)


@dataclass(frozen=True)
class ContractionCertificate:
    """sup_t ||A(t) A(bt) ... A(b^L t)|| <= 1 - delta, with its search parameters."""

    L: int
    delta: float
    grid: int
    h: float
    lipschitz_K: float
    grid_sup: float
    certified_sup: float
    delta_min: float
    refinements: int
    points: int

    @property
    def eta(self) -> float:
        """Decay rate -log(1 - delta)/(L + 1) implied by the certificate."""
        return -math.log1p(-self.delta) / (self.L + 1)

    def to_dict(self) -> dict[str, Any]:
        return {
            "found": True,
            "L": self.L,
            "delta": self.delta,
            "grid": self.grid,
            "h": self.h,
            "lipschitz_K": self.lipschitz_K,
            "grid_sup": self.grid_sup,
            "certified_sup": self.certified_sup,
            "delta_min": self.delta_min,
            "refinements": self.refinements,
            "points": self.points,
            "eta": self.eta,
        }


def _certify_level(
    config: FourierConfig, L: int, delta_min: float, threads: int | None
) -> tuple[ContractionCertificate | None, float]:
    """Try to certify level L; returns (certificate or None, grid sup seen)."""
    b = config.b
    K = lipschitz_constant(b, L)
    M = _INITIAL_OVERSAMPLING * b ** (L + 1)
    target = 1.0 - delta_min
    # cell centres x/D with half-width 1/D; padding uses the full width 2/D
    D = 2 * M
    points = 2 * np.arange(M, dtype=np.int64)
    grid_sup = 0.0
    certified = 0.0
    evaluated = 0
    for level in range(_MAX_REFINEMENTS + 1):
        norms = product_norms(config, L, points, D, threads)
        evaluated += len(points)
        grid_sup = max(grid_sup, float(norms.max()))
        if grid_sup > target:
            logger.debug("L=%d: grid sup %.6f above target, no refinement can help", L, grid_sup)
            return None, grid_sup
        bounds = norms + K * 2.0 / D
        ok = bounds <= target
        if ok.any():
            certified = max(certified, float(bounds[ok].max()))
        flagged = points[~ok]
        logger.debug(
            "L=%d refinement %d: %d points, %d flagged, grid sup %.6f",
            L, level, len(points), len(flagged), grid_sup,
        )
        if flagged.size == 0:
            cert = ContractionCertificate(
                L=L,
                delta=1.0 - certified,
                grid=M,
                h=1.0 / M,
                lipschitz_K=K,
                grid_sup=grid_sup,
                certified_sup=certified,
                delta_min=delta_min,
                refinements=level,
                points=evaluated,
            )
            return cert, grid_sup
        if level == _MAX_REFINEMENTS:
            break
        points = np.mod((4 * flagged[:, None] + _SUBCELL_OFFSETS[None, :]).ravel(), 4 * D)
        D *= 4
    return None, grid_sup


def find_contraction(
    config: FourierConfig,
    L_max: int = DEFAULT_L_MAX,
    delta_min: float = DEFAULT_DELTA_MIN,
    threads: int | None = None,
) -> ContractionCertificate:
    """Smallest L <= L_max whose product norm is certified below 1 - delta_min.

    Raises:
        ValueError: If g is periodic (no contraction can exist).
        NoCertificateError: If every L up to L_max fails.
    """
    if is_periodic(config.g):
        raise ValueError(f"g = {config.g.describe()} is periodic; no contraction exists")
    if not 0 < delta_min < 1:
        raise ValueError(f"delta_min must lie in (0, 1), got {delta_min}")
    _check_dense(config)
    trend: list[tuple[int, float]] = []
    for L in range(1, L_max + 1):
        cert, grid_sup = _certify_level(config, L, delta_min, threads)
        trend.append((L, grid_sup))
        if cert is not None:
            logger.info(
                "contraction certified at L=%d: delta=%.6g (grid sup %.6f, %d points)",
                L, cert.delta, cert.grid_sup, cert.points,
            )
            return cert
    raise NoCertificateError(
        f"no contraction certificate for {config.g.describe()}, P={config.P}, Q={config.Q} "
        f"up to L={L_max}",
        trend,
    )


def verify_certificate(
    config: FourierConfig, cert: ContractionCertificate, threads: int | None = None
) -> bool:
    """Replay the grid search at ``cert.L`` and confirm the bound."""
    replay, _ = _certify_level(config, cert.L, cert.delta_min, threads)
    return replay is not None and replay.certified_sup <= 1.0 - cert.delta + 1e-12


class DecayRecord(NamedTuple):
    lam: int
    grid: int
    sup_grid: float
    sup_certified: float


@dataclass(frozen=True)
class DecayProfile:
    """Certified sup bounds of |F_lam| and the fitted C*exp(-eta*lam)."""

    records: list[DecayRecord]
    C: float
    eta: float
    eta_certified: float
    certificate: ContractionCertificate
    fit_from: int

    @property
    def passed(self) -> bool:
        return self.eta > 0

    def running_min(self) -> list[float]:
        return list(np.minimum.accumulate([r.sup_certified for r in self.records]))


def decay_profile(
    config: FourierConfig,
    lam_max: int,
    grid_M: int = DEFAULT_DECAY_GRID,
    L_max: int = DEFAULT_L_MAX,
    delta_min: float = DEFAULT_DELTA_MIN,
    threads: int | None = None,
    certificate: ContractionCertificate | None = None,
) -> DecayProfile:
    """Per-level certified bounds on sup_t |F_lam(t)| for lam = 0..lam_max.

    The whole vector F_lam is tabulated on the grid t = m/grid_M: since
    b*t lands on grid point b*m mod grid_M, each level costs one sparse
    product per grid point. The certified bound on sup_t max_{(i,j)}
    |F_lam^{i,j}(t)| is the least of

      * 1,
      * the grid maximum plus pi*b^lam/grid_M,
      * the bound at lam - 1 (A(t) has row-sum norm at most 1),
      * (1 - delta) times the bound at lam - L - 1 (the certificate).

    ``sup_grid`` is the grid maximum of |F_lam^{0,0}| alone.
    """
    if lam_max < 0:
        raise ValueError(f"lambda_max must be >= 0, got {lam_max}")
    if grid_M < 2:
        raise ValueError(f"grid must have at least 2 points, got {grid_M}")
    cert = certificate or find_contraction(config, L_max, delta_min, threads)
    b, n = config.b, config.size
    needed = 2 * grid_M * n * 16
    if needed > get_memory_budget():
        raise ValueError(
            f"a decay grid of {grid_M} points over {n} members needs about {needed >> 20} MiB"
        )
    m = np.arange(grid_M, dtype=np.int64)
    successor = (b * m) % grid_M
    phases = np.exp(-2j * np.pi * np.outer(m / grid_M, np.arange(b)))
    chunk = max(1, _CHUNK_ENTRIES // (n * b))

    V = np.broadcast_to(config.base_vector, (grid_M, n)).copy()
    bounds = [1.0]
    records = [DecayRecord(0, grid_M, float(abs(config.base_vector[config.origin])), 1.0)]
    for lam in range(1, lam_max + 1):
        prev = V

        def level(part: slice, prev: np.ndarray = prev) -> np.ndarray:
            coeff = config.weights[None, :, :] * phases[part, None, :]
            shifted = prev[successor[part]]
            out = coeff[:, :, 0] * shifted[:, config.cols[:, 0]]
            for r in range(1, b):
                out += coeff[:, :, r] * shifted[:, config.cols[:, r]]
            return out

        V = np.concatenate(_map_chunks(level, grid_M, chunk, threads))
        vec_sup = float(np.abs(V).max())
        bound = min(1.0, vec_sup + math.pi * b**lam / grid_M, bounds[lam - 1])
        if lam > cert.L:
            bound = min(bound, (1.0 - cert.delta) * bounds[lam - cert.L - 1])
        bounds.append(bound)
        sup00 = float(np.abs(V[:, config.origin]).max())
        records.append(DecayRecord(lam, grid_M, sup00, bound))
        logger.debug("lambda=%d grid sup %.6g certified %.6g", lam, sup00, bound)

    fit = [(r.lam, r.sup_certified) for r in records if r.lam > cert.L and r.sup_certified > 0]
    if len(fit) >= 2:
        slope, intercept = np.polyfit([x for x, _ in fit], [math.log(y) for _, y in fit], 1)
        eta, C = max(0.0, -float(slope)), float(math.exp(intercept))
    else:
        eta, C = 0.0, 1.0
    logger.info("decay fit: C=%.6g eta=%.6g (certificate eta %.6g)", C, eta, cert.eta)
    return DecayProfile(records, C, eta, cert.eta, cert, cert.L + 1)


def halton(count: int, base: int = 2) -> list[Fraction]:
    """First ``count`` points of the van der Corput sequence in ``base``, as Fractions."""
    points = []
    for k in range(1, count + 1):
        x, denom = Fraction(0), 1
        while k:
            k, digit = divmod(k, base)
            denom *= base
            x += Fraction(digit, denom)
        points.append(x)
    return points
