"""Tests for digit expansions, angles and strongly b-multiplicative functions."""

from fractions import Fraction

import numpy as np
import pytest

from digit_spectra.digitcore import (
    PRESETS,
    Angle,
    BMultFunction,
    PairProduct,
    ScaledFunction,
    angle_numerators,
    digit_sum,
    digits,
    eval_angle,
    eval_complex,
    is_periodic,
    nonperiodicity_witness,
    periodicity,
    truncate,
    unit,
    unit_table,
)


class TestDigits:
    def test_examples(self):
        assert digits(0, 2) == []
        assert digits(9, 2) == [1, 0, 0, 1]
        assert digits(25, 3) == [1, 2, 2]
        assert digits(10, 10) == [0, 1]

    def test_digit_sum(self):
        assert digit_sum(0, 2) == 0
        assert digit_sum(9, 2) == 2
        assert [digit_sum(n, 2) % 2 for n in range(8)] == [0, 1, 1, 0, 1, 0, 0, 1]

    @pytest.mark.parametrize("b", range(3, 11))
    def test_casting_out(self, b):
        for n in range(0, 10**5, 7):
            assert digit_sum(n, b) % (b - 1) == n % (b - 1)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            digits(-1, 2)
        with pytest.raises(ValueError):
            digits(5, 1)
        with pytest.raises(ValueError):
            digits(2**128, 2)


class TestAngle:
    def test_reduces_mod_one(self):
        assert Angle(Fraction(3, 2)).value == Fraction(1, 2)
        assert Angle(-0.25).value == 0.75
        assert Angle(1).value == 0

    def test_exact_arithmetic(self):
        a = Angle(Fraction(1, 3)) + Angle(Fraction(2, 3))
        assert a.exact and a.value == 0
        assert (Angle(Fraction(1, 4)) * 6).value == Fraction(1, 2)

    def test_mixing_float_gives_float(self):
        assert not (Angle(Fraction(1, 2)) + Angle(0.25)).exact

    def test_denominator_cap(self):
        with pytest.raises(ValueError, match="2\\*\\*31"):
            Angle(Fraction(1, 2**31 + 1))

    def test_quarter_turns_are_exact(self):
        assert unit(Fraction(1, 2)) == -1
        assert unit(Fraction(3, 4)) == -1j
        table = unit_table(4)
        assert list(table) == [1, 1j, -1, -1j]

    def test_parse(self):
        assert Angle.parse("1/3").value == Fraction(1, 3)
        assert Angle.parse("0.25").value == 0.25
        with pytest.raises(ValueError):
            Angle.parse("1/0")


class TestBMultFunction:
    def test_thue_morse_values(self, tm):
        assert eval_angle(tm, 9).value == 0
        assert eval_angle(tm, 25).value == Fraction(1, 2)
        assert eval_complex(tm, 1) == -1
        assert eval_complex(tm, 3) == 1

    def test_alternating_is_minus_one_power(self, alternating):
        for n in range(50):
            assert eval_complex(alternating, n) == (-1) ** n

    @pytest.mark.parametrize("name", ["tm", "thirds"])
    def test_defining_relation(self, name, request):
        g = request.getfixturevalue(name)
        b = g.base
        for n in range(b**6):
            k, a = divmod(n, b)
            assert eval_angle(g, n) == eval_angle(g, k) + g.phases[a]

    def test_vectorized_matches_scalar(self, thirds):
        rng = np.random.default_rng(1)
        values = rng.integers(0, 2**62, size=500, dtype=np.int64)
        fast = thirds.numerators(values)
        slow = [int(eval_angle(thirds, int(n)).value * thirds.denominator) for n in values]
        assert list(fast) == slow

    def test_vectorized_handles_big_integers(self, tm):
        values = np.array([2**100 + k for k in range(20)], dtype=object)
        fast = tm.numerators(values)
        slow = [int(eval_angle(tm, int(n)).value * 2) for n in values]
        assert list(fast) == slow

    def test_float_phases_stay_on_unit_circle(self):
        g = BMultFunction.parse("b=5;phases=0,0.1,0.37,0.5,0.9")
        assert not g.exact
        rng = np.random.default_rng(2)
        values = g.complex_values(rng.integers(0, 2**40, size=10**5, dtype=np.int64))
        assert np.allclose(np.abs(values), 1.0, atol=1e-12)

    def test_theta0_must_vanish(self):
        with pytest.raises(ValueError, match="theta_0"):
            BMultFunction(2, (Fraction(1, 2), 0))

    def test_parse(self, tm, alternating):
        assert BMultFunction.parse("b=2;phases=0,1/2") == tm
        assert BMultFunction.parse("thue-morse") == tm
        assert BMultFunction.parse("b=3;phases=1/2,0") == alternating
        assert PRESETS["alternating-3"] == alternating

    @pytest.mark.parametrize(
        "text",
        ["b=2;phases=0,1/2,1/3", "b=2;phases=0,3/2", "b=1;phases=0", "nonsense", "b=2"],
    )
    def test_parse_rejects(self, text):
        with pytest.raises(ValueError):
            BMultFunction.parse(text)

    def test_describe_round_trip(self, tm, thirds):
        floating = BMultFunction(3, (0, 0.1, 0.7))
        for g in (tm, thirds, floating):
            assert BMultFunction.parse(g.describe()) == g


class TestPeriodicity:
    def test_thue_morse_is_not_periodic(self, tm):
        assert not is_periodic(tm)
        assert nonperiodicity_witness(tm) == 1

    def test_alternating(self, alternating):
        result = periodicity(alternating)
        assert result.periodic
        assert result.period == 2
        assert result.j0 == 1
        assert nonperiodicity_witness(alternating) is None

    def test_constant_is_periodic(self, one):
        assert is_periodic(one)

    def test_periodic_values_repeat(self):
        g = BMultFunction(5, (0, Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), 0))
        result = periodicity(g)
        assert result.periodic and result.period == 4
        for n in range(10**4):
            assert eval_angle(g, n) == eval_angle(g, n % 4)

    def test_float_phases_use_tolerance(self):
        g = BMultFunction(3, (0, 0.5, 1e-12))
        assert is_periodic(g)

    def test_float_errors_accumulate_along_the_period(self):
        # each phase is within tolerance, but 3 * theta_1 is 1.5e-9 off
        g = BMultFunction(4, (0, 1 / 3 + 5e-10, 2 / 3 + 1e-9, 6e-10))
        result = periodicity(g)
        assert result.periodic
        assert result.period == 3
        assert result.j0 == 1


class TestDerivedFunctions:
    def test_pair_product(self, tm):
        f = PairProduct(tm, 9, 25)
        assert f.angle(1).value == Fraction(1, 2)
        assert f.angle(0).value == 0

    def test_scaled(self, tm):
        f = ScaledFunction(tm, 3)
        n = np.arange(100)
        assert list(angle_numerators(f, n)) == [digit_sum(3 * k, 2) % 2 for k in range(100)]

    def test_truncation(self, tm):
        assert all(truncate(tm, 0).eval(n) == 1 for n in range(20))
        assert truncate(tm, 2).eval(5) == -1
        assert truncate(tm, 3).eval(7) == eval_complex(tm, 7)

    def test_truncation_is_periodic(self, thirds):
        ft = truncate(thirds, 4)
        values = np.arange(3 * ft.modulus)
        nums = ft.numerators(values)
        assert np.array_equal(nums[: ft.modulus], nums[ft.modulus : 2 * ft.modulus])

    def test_truncation_level_must_be_non_negative(self, tm):
        with pytest.raises(ValueError):
            truncate(tm, -1)

    def test_exact_numerators_need_rational_phases(self):
        with pytest.raises(ValueError):
            angle_numerators(BMultFunction(2, (0, 0.3)), [1, 2])
