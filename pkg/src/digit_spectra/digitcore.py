"""Base-b digits and strongly b-multiplicative functions of modulus one.

A strongly b-multiplicative function g is fixed by its base b and the
values g(0) = 1, g(1), ..., g(b-1); every other value is the product of
the values at the digits of n. All values have modulus one, so they are
stored as angles (turns mod 1): g(n) = e(theta), e(x) = exp(2*pi*i*x).
Rational angles are exact, and a value computed from them never drifts off
the unit circle.

Example:
    >>> from digit_spectra.digitcore import BMultFunction, eval_angle
    >>> tm = BMultFunction.thue_morse()
    >>> eval_angle(tm, 25)
    Angle(value=Fraction(1, 2))
"""

from __future__ import annotations

import cmath
import logging
import math
import operator
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Any, NamedTuple, Union

import numpy as np

from digit_spectra.config import MAX_DENOMINATOR, MAX_INPUT, PERIODICITY_TOLERANCE
from digit_spectra.utils import parse_rational

logger = logging.getLogger("digit_spectra.digitcore")

_UINT64_LIMIT = 1 << 64
_TABLE_LIMIT = 1 << 16

AngleLike = Union["Angle", Fraction, float, int]


def _check_input(n: Any) -> int:
    n = operator.index(n)
    if n < 0:
        raise ValueError(f"expected a non-negative integer, got {n}")
    if n > MAX_INPUT:
        raise ValueError(f"input {n} exceeds the supported range [0, 2**128)")
    return n


def _check_base(b: Any) -> int:
    b = operator.index(b)
    if b < 2:
        raise ValueError(f"base must be at least 2, got {b}")
    return b


def unit(turns: Fraction | float) -> complex:
    """Return e(turns); multiples of a quarter turn are exact."""
    if isinstance(turns, Fraction) and (4 * turns).denominator == 1:
        return (1 + 0j, 1j, -1 + 0j, -1j)[int(4 * turns) % 4]
    return cmath.exp(2j * math.pi * float(turns))


def unit_table(d: int) -> np.ndarray:
    """Return the vector e(k/d), 0 <= k < d, with exact quarter turns."""
    k = np.arange(d)
    table = np.exp(2j * np.pi * k / d)
    for quarter, value in enumerate((1, 1j, -1, -1j)):
        if (quarter * d) % 4 == 0:
            table[quarter * d // 4] = value
    return table


@dataclass(frozen=True)
class Angle:
    """A point of R/Z stored as an exact Fraction or a float in [0, 1)."""

    value: Union[Fraction, float]

    def __post_init__(self) -> None:
        v = self.value
        if isinstance(v, bool):
            raise TypeError("an angle cannot be a bool")
        if isinstance(v, (int, np.integer)):
            v = Fraction(int(v))
        if isinstance(v, Fraction):
            if v.denominator > MAX_DENOMINATOR:
                raise ValueError(
                    f"angle denominator {v.denominator} exceeds 2**31; "
                    "pass a decimal for a floating angle"
                )
            v = v % 1
        elif isinstance(v, (float, np.floating)):
            v = float(v)
            if not math.isfinite(v):
                raise ValueError(f"angle must be finite, got {v}")
            v = v % 1.0
            if v == 1.0:
                v = 0.0
        else:
            raise TypeError(f"unsupported angle value {type(v).__name__}")
        object.__setattr__(self, "value", v)

    @classmethod
    def of(cls, value: AngleLike) -> Angle:
        return value if isinstance(value, Angle) else cls(value)

    @classmethod
    def parse(cls, text: str) -> Angle:
        """Parse ``p/q`` (exact) or a decimal (floating) angle."""
        return cls(parse_rational(text))

    @property
    def exact(self) -> bool:
        return isinstance(self.value, Fraction)

    def __float__(self) -> float:
        return float(self.value)

    def __add__(self, other: AngleLike) -> Angle:
        other = Angle.of(other)
        if self.exact and other.exact:
            return Angle(self.value + other.value)
        return Angle(float(self.value) + float(other.value))

    def __neg__(self) -> Angle:
        return Angle(-self.value)

    def __sub__(self, other: AngleLike) -> Angle:
        return self + (-Angle.of(other))

    def __mul__(self, k: int) -> Angle:
        return Angle(self.value * operator.index(k))

    __rmul__ = __mul__

    def distance_to_zero(self) -> float:
        """Distance to the nearest integer, in turns."""
        v = float(self.value)
        return min(v, 1.0 - v)

    def is_zero(self, tolerance: float = PERIODICITY_TOLERANCE) -> bool:
        if self.exact:
            return self.value == 0
        return self.distance_to_zero() <= tolerance

    def to_complex(self) -> complex:
        return unit(self.value)

    def __str__(self) -> str:
        if self.exact:
            return str(self.value)
        return repr(self.value)


def digits(n: int, b: int) -> list[int]:
    """Return the base-b digits of n, least significant first.

    ``digits(0, b)`` is the empty list.
    """
    n = _check_input(n)
    b = _check_base(b)
    out = []
    while n:
        n, r = divmod(n, b)
        out.append(r)
    return out


def digit_sum(n: int, b: int) -> int:
    """Sum of the base-b digits of n."""
    return sum(digits(n, b))


def scale_values(values: Any, a: int) -> np.ndarray:
    """Multiply a vector of non-negative integers by a, without wraparound.

    Stays in uint64 while the products fit and falls back to an object
    array of Python integers otherwise.
    """
    x = np.asarray(values)
    if x.dtype != object:
        if x.size == 0:
            return x.astype(np.uint64)
        if int(x.max()) * a < _UINT64_LIMIT:
            return x.astype(np.uint64) * np.uint64(a)
    flat = [int(v) * a for v in x.ravel()]
    out = np.empty(len(flat), dtype=object)
    out[:] = flat
    return out.reshape(x.shape)


def square_values(values: Any) -> np.ndarray:
    """Square a vector of non-negative integers without wraparound."""
    x = np.asarray(values)
    if x.dtype != object:
        if x.size == 0:
            return x.astype(np.uint64)
        if int(x.max()) < (1 << 32):
            y = x.astype(np.uint64)
            return y * y
    flat = [int(v) * int(v) for v in x.ravel()]
    out = np.empty(len(flat), dtype=object)
    out[:] = flat
    return out.reshape(x.shape)


def _accumulate(values: Any, table: np.ndarray, block: int) -> np.ndarray:
    """Sum ``table`` over the base-``block`` digits of every entry of ``values``."""
    x = np.asarray(values)
    if x.dtype == object:
        flat = []
        for v in x.ravel():
            v = int(v)
            acc = table.dtype.type(0)
            while v:
                v, r = divmod(v, block)
                acc += table[r]
            flat.append(acc)
        return np.asarray(flat, dtype=table.dtype).reshape(x.shape)
    if x.size and int(x.min()) < 0:
        raise ValueError("digit functions are defined on non-negative integers")
    x = x.astype(np.uint64, copy=True)
    acc = np.zeros(x.shape, dtype=table.dtype)
    big = np.uint64(block)
    while x.any():
        acc += table[(x % big).astype(np.intp)]
        x //= big
    return acc


class DigitFunction:
    """Evaluation surface shared by g and the functions derived from it.

    Subclasses provide ``base``, ``denominator``, ``angle`` and the two
    vector kernels ``numerators`` (exact) and ``turns`` (floating).
    """

    base: int

    @property
    def denominator(self) -> int | None:
        raise NotImplementedError

    @property
    def exact(self) -> bool:
        return self.denominator is not None

    def angle(self, n: int) -> Angle:
        raise NotImplementedError

    def numerators(self, values: Any) -> np.ndarray:
        """Exact angles of ``values`` as integers mod ``denominator``."""
        raise NotImplementedError

    def turns(self, values: Any) -> np.ndarray:
        """Angles of ``values`` as floats in [0, 1)."""
        raise NotImplementedError

    def complex_values(self, values: Any) -> np.ndarray:
        if self.exact:
            return unit_table(self.denominator)[self.numerators(values)]
        return np.exp(2j * np.pi * self.turns(values))

    def __call__(self, n: int) -> complex:
        return self.angle(n).to_complex()


@dataclass(frozen=True, eq=True)
class BMultFunction(DigitFunction):
    """Strongly b-multiplicative function g with g(l) = e(phases[l]).

    Args:
        base: The base b >= 2.
        phases: b angles theta_0..theta_{b-1}; theta_0 must be 0.
    """

    base: int
    phases: tuple

    def __post_init__(self) -> None:
        base = _check_base(self.base)
        phases = tuple(Angle.of(p) for p in self.phases)
        if len(phases) != base:
            raise ValueError(f"expected {base} phases for base {base}, got {len(phases)}")
        if phases[0].value != 0:
            raise ValueError("theta_0 must be 0 (g(0) = 1)")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "phases", phases)

    @classmethod
    def thue_morse(cls) -> BMultFunction:
        """g(n) = (-1)^{s_2(n)}."""
        return cls(2, (0, Fraction(1, 2)))

    @classmethod
    def parse(cls, text: str) -> BMultFunction:
        """Parse ``b=2;phases=0,1/2`` or a preset name.

        ``phases`` lists theta_0..theta_{b-1}; a list of b-1 values is read
        as theta_1..theta_{b-1}.
        """
        text = text.strip()
        if text in PRESETS:
            return PRESETS[text]
        fields: dict[str, str] = {}
        for part in filter(None, (p.strip() for p in text.split(";"))):
            if "=" not in part:
                raise ValueError(f"malformed function spec part {part!r} (expected key=value)")
            key, value = part.split("=", 1)
            fields[key.strip().lower()] = value.strip()
        base_text = fields.pop("b", fields.pop("base", None))
        phase_text = fields.pop("phases", None)
        if fields:
            raise ValueError(f"unknown function spec keys: {', '.join(sorted(fields))}")
        if base_text is None or phase_text is None:
            raise ValueError(f"function spec {text!r} needs both b= and phases=")
        base = int(base_text)
        values = [parse_rational(p) for p in phase_text.split(",")]
        for v in values:
            if not 0 <= v < 1:
                raise ValueError(f"phase {v} outside [0, 1)")
        if len(values) == base - 1:
            values = [Fraction(0)] + values
        return cls(base, tuple(values))

    def describe(self) -> str:
        return f"b={self.base};phases=" + ",".join(str(p) for p in self.phases)

    @cached_property
    def denominator(self) -> int | None:
        """Common denominator of the phases, or None for floating phases."""
        if not all(p.exact for p in self.phases):
            return None
        d = 1
        for p in self.phases:
            d = d * p.value.denominator // math.gcd(d, p.value.denominator)
        return d if d <= MAX_DENOMINATOR else None

    @cached_property
    def phase_numerators(self) -> tuple[int, ...]:
        d = self.denominator
        if d is None:
            raise ValueError("phase numerators require rational phases")
        return tuple(int(p.value * d) for p in self.phases)

    @cached_property
    def _block(self) -> tuple[int, int]:
        k = 1
        while self.base ** (k + 1) <= _TABLE_LIMIT:
            k += 1
        return k, self.base**k

    def _table(self, digit_values: np.ndarray) -> np.ndarray:
        k, block = self._block
        m = np.arange(block)
        acc = np.zeros(block, dtype=digit_values.dtype)
        for _ in range(k):
            acc += digit_values[m % self.base]
            m //= self.base
        return acc

    @cached_property
    def _numerator_table(self) -> np.ndarray:
        table = self._table(np.asarray(self.phase_numerators, dtype=np.int64))
        return table % self.denominator

    @cached_property
    def _turn_table(self) -> np.ndarray:
        return np.mod(self._table(np.asarray([float(p) for p in self.phases])), 1.0)

    def angle(self, n: int) -> Angle:
        return eval_angle(self, n)

    def numerators(self, values: Any) -> np.ndarray:
        _, block = self._block
        return _accumulate(values, self._numerator_table, block) % self.denominator

    def turns(self, values: Any) -> np.ndarray:
        if self.exact:
            return self.numerators(values) / self.denominator
        _, block = self._block
        return np.mod(_accumulate(values, self._turn_table, block), 1.0)


PRESETS: dict[str, BMultFunction] = {
    "thue-morse": BMultFunction.thue_morse(),
    "alternating-3": BMultFunction(3, (0, Fraction(1, 2), 0)),
}


@dataclass(frozen=True)
class ScaledFunction(DigitFunction):
    """n -> g(a*n)."""

    g: BMultFunction
    a: int

    @property
    def base(self) -> int:
        return self.g.base

    @property
    def denominator(self) -> int | None:
        return self.g.denominator

    def angle(self, n: int) -> Angle:
        return self.g.angle(self.a * _check_input(n))

    def numerators(self, values: Any) -> np.ndarray:
        return self.g.numerators(scale_values(values, self.a))

    def turns(self, values: Any) -> np.ndarray:
        return self.g.turns(scale_values(values, self.a))


@dataclass(frozen=True)
class PairProduct(DigitFunction):
    """n -> g(P*n) * conj(g(Q*n))."""

    g: BMultFunction
    P: int
    Q: int

    @property
    def base(self) -> int:
        return self.g.base

    @property
    def denominator(self) -> int | None:
        return self.g.denominator

    def angle(self, n: int) -> Angle:
        n = _check_input(n)
        return self.g.angle(self.P * n) - self.g.angle(self.Q * n)

    def numerators(self, values: Any) -> np.ndarray:
        hi = self.g.numerators(scale_values(values, self.P))
        lo = self.g.numerators(scale_values(values, self.Q))
        return (hi - lo) % self.denominator

    def turns(self, values: Any) -> np.ndarray:
        if self.exact:
            return self.numerators(values) / self.denominator
        return np.mod(
            self.g.turns(scale_values(values, self.P)) - self.g.turns(scale_values(values, self.Q)),
            1.0,
        )


@dataclass(frozen=True)
class TruncatedFunction(DigitFunction):
    """The b^lam-periodic continuation of ``inner`` restricted to [0, b^lam)."""

    inner: DigitFunction
    lam: int

    def __post_init__(self) -> None:
        if operator.index(self.lam) < 0:
            raise ValueError(f"truncation level must be >= 0, got {self.lam}")

    @property
    def base(self) -> int:
        return self.inner.base

    @property
    def modulus(self) -> int:
        return self.base**self.lam

    @property
    def denominator(self) -> int | None:
        return self.inner.denominator

    def angle(self, n: int) -> Angle:
        return self.inner.angle(_check_input(n) % self.modulus)

    def eval(self, n: int) -> complex:
        return self.angle(n).to_complex()

    def _reduce(self, values: Any) -> np.ndarray:
        x = np.asarray(values)
        if x.dtype == object or self.modulus >= _UINT64_LIMIT:
            if x.dtype != object:
                return x
            out = np.empty(x.shape, dtype=object)
            out.ravel()[:] = [int(v) % self.modulus for v in x.ravel()]
            return out
        return x.astype(np.uint64) % np.uint64(self.modulus)

    def numerators(self, values: Any) -> np.ndarray:
        return self.inner.numerators(self._reduce(values))

    def turns(self, values: Any) -> np.ndarray:
        return self.inner.turns(self._reduce(values))


def eval_angle(g: BMultFunction, n: int) -> Angle:
    """Angle of g(n): the sum of the digit phases of n, reduced mod 1."""
    n = _check_input(n)
    ds = digits(n, g.base)
    if g.exact:
        nums = g.phase_numerators
        return Angle(Fraction(sum(nums[e] for e in ds) % g.denominator, g.denominator))
    return Angle(math.fsum(float(g.phases[e]) for e in ds))


def eval_complex(g: BMultFunction, n: int) -> complex:
    """g(n) as a unit complex number."""
    return eval_angle(g, n).to_complex()


class Periodicity(NamedTuple):
    """Outcome of the periodicity test.

    For a periodic g, g(n) = e(n * j0 / (b - 1)) and ``period`` is the
    minimal period, a divisor of b - 1.
    """

    periodic: bool
    period: int | None = None
    j0: int | None = None


def periodicity(g: BMultFunction, tolerance: float = PERIODICITY_TOLERANCE) -> Periodicity:
    """g is periodic iff theta_l = l*theta_1 for all digits l and theta_{b-1} = 0."""
    b = g.base
    theta1 = g.phases[1]
    if not g.phases[b - 1].is_zero(tolerance):
        return Periodicity(False)
    for ell in range(b):
        if not (g.phases[ell] - theta1 * ell).is_zero(tolerance):
            return Periodicity(False)
    if theta1.exact:
        period = theta1.value.denominator
    else:
        # per-digit errors add up along p * theta_1; the period always divides b - 1
        divisors = (p for p in range(1, b) if (b - 1) % p == 0)
        period = next(
            (p for p in divisors if (theta1 * p).is_zero((p + 1) * tolerance)), b - 1
        )
    j0 = round(float(theta1) * (b - 1)) % (b - 1) if b > 2 else 0
    return Periodicity(True, period, j0)


def is_periodic(g: BMultFunction) -> bool:
    return periodicity(g).periodic


def nonperiodicity_witness(g: BMultFunction) -> int | None:
    """Digit l with g(l) != g(l-1) g(1) conj(g(b-1)); None iff g is periodic."""
    theta = g.phases
    shift = theta[1] - theta[g.base - 1]
    for ell in range(1, g.base):
        if not (theta[ell] - theta[ell - 1] - shift).is_zero():
            return ell
    return None


def truncate(f: DigitFunction, lam: int) -> TruncatedFunction:
    """Truncation of ``f`` at level ``lam``: value(n) = f(n mod b^lam)."""
    return TruncatedFunction(f, lam)


def angle_numerators(f: DigitFunction, values: Any) -> np.ndarray:
    """Exact angles of f over ``values`` as integers mod ``f.denominator``."""
    if not f.exact:
        raise ValueError("exact angle numerators need rational phases")
    return f.numerators(values)


def angle_turns(f: DigitFunction, values: Any) -> np.ndarray:
    """Angles of f over ``values`` as floats in [0, 1)."""
    return f.turns(values)
