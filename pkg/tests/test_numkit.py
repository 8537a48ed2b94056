"""厳密演算カーネルのテスト"""

import math
import random
from fractions import Fraction

import pytest
from sympy import continued_fraction_periodic

from dirichlet_spectrum.errors import IndeterminateComparisonError, InvalidArgumentError, PreconditionError
from dirichlet_spectrum.numkit import (
    Enclosure,
    QuadraticSurd,
    as_rational,
    bit_budget,
    ceil_log,
    cf_expand,
    current_bit_budget,
    decide_less,
    digit_stream,
    digits_within,
    dist_enclosure,
    dist_to_nearest_int,
    lcm_upto,
    log_enclosure,
    parse_real,
    prop_uv_check,
    rational_power_enclosure,
    real_power_enclosure,
)


def test_as_rational():
    """有理数への変換"""
    assert as_rational("9/10") == Fraction(9, 10)
    assert as_rational("0.3") == Fraction(3, 10)
    assert as_rational(0.5) == Fraction(1, 2)
    with pytest.raises(InvalidArgumentError):
        as_rational("abc")
    with pytest.raises(InvalidArgumentError):
        as_rational(True)


def test_dist_to_nearest_int():
    """最近整数への距離"""
    assert dist_to_nearest_int(Fraction(5, 7)) == Fraction(2, 7)
    assert dist_to_nearest_int(Fraction(3, 2)) == Fraction(1, 2)
    assert dist_to_nearest_int(Fraction(22, 7)) == Fraction(1, 7)
    assert dist_to_nearest_int(-Fraction(1, 3)) == Fraction(1, 3)
    assert dist_to_nearest_int(4) == 0


def test_lcm_upto():
    """Γ_b = lcm(1, …, b−1)"""
    assert lcm_upto(2) == 1
    assert lcm_upto(5) == 12
    assert lcm_upto(10) == 2520
    with pytest.raises(InvalidArgumentError):
        lcm_upto(1)


def test_enclosure_arithmetic():
    """区間の演算"""
    a = Enclosure(Fraction(1, 2), Fraction(3, 4))
    b = Enclosure.exact(2)
    assert (a * b) == Enclosure(1, Fraction(3, 2))
    assert (a + b) == Enclosure(Fraction(5, 2), Fraction(11, 4))
    assert a.reciprocal() == Enclosure(Fraction(4, 3), 2)
    assert a.width == Fraction(1, 4)
    assert a.contains(Fraction(2, 3))
    assert not a.is_exact and b.is_exact
    with pytest.raises(InvalidArgumentError):
        Enclosure(1, 0)
    with pytest.raises(InvalidArgumentError):
        Enclosure(-1, 1).reciprocal()


def test_rational_power_enclosure_exact_roots():
    """根が厳密なら幅 0"""
    assert rational_power_enclosure(64, Fraction(1, 2), 64) == Enclosure.exact(8)
    assert rational_power_enclosure(Fraction(8, 27), Fraction(-1, 3), 64) == Enclosure.exact(Fraction(3, 2))
    assert rational_power_enclosure(5, 0, 64) == Enclosure.exact(1)


def test_rational_power_enclosure_irrational():
    """√2 と 3^(3/4) の包含"""
    root2 = rational_power_enclosure(2, Fraction(1, 2), 80)
    assert root2.lower ** 2 <= 2 <= root2.upper ** 2
    value = rational_power_enclosure(3, Fraction(3, 4), 64)
    assert value.width < Fraction(1, 10 ** 15)
    assert abs(float(value) - 3 ** 0.75) < 1e-12
    inverse = rational_power_enclosure(3, Fraction(-1, 2), 64)
    assert inverse.lower ** 2 * 3 <= 1 <= inverse.upper ** 2 * 3


def test_real_power_enclosure_surd_exponent():
    """2^(−1/√2)/2 ≈ 0.30627"""
    tau = QuadraticSurd.parse("1/sqrt(2)")
    value = real_power_enclosure(2, -tau, 40).scale(Fraction(1, 2))
    assert value.width <= Fraction(1, 1 << 20)
    assert abs(float(value) - 0.5 * 2 ** (-1 / math.sqrt(2))) < 1e-9


def test_log_enclosure():
    """ln の包含"""
    assert log_enclosure(1, 64) == Enclosure.exact(0)
    value = log_enclosure(80, 64)
    assert abs(float(value) - math.log(80)) < 1e-12
    with pytest.raises(InvalidArgumentError):
        log_enclosure(0, 64)


def test_decide_less():
    """精度を上げながらの比較"""
    root2 = lambda bits: rational_power_enclosure(2, Fraction(1, 2), bits)
    assert decide_less(lambda bits: Enclosure.exact(Fraction(141, 100)), root2)
    assert not decide_less(root2, lambda bits: Enclosure.exact(Fraction(141, 100)))
    with pytest.raises(IndeterminateComparisonError):
        decide_less(root2, root2, max_bits=128)


def test_bit_budget_limits_comparisons():
    """予算の中では決まらない比較と、抜けた後の復元"""
    root2 = lambda bits: rational_power_enclosure(2, Fraction(1, 2), bits)
    close = lambda bits: Enclosure.exact(Fraction(14142135623730950488, 10 ** 19))
    default = current_bit_budget()
    with bit_budget(8, 64) as budget:
        assert current_bit_budget() == budget
        assert (budget.start_bits, budget.max_bits) == (8, 64)
        with pytest.raises(IndeterminateComparisonError) as excinfo:
            decide_less(close, root2)
        assert excinfo.value.bits == 64
    assert current_bit_budget() == default
    assert decide_less(close, root2)


def test_bit_budget_rejects_bad_limits():
    """開始値は 8 ビット以上、上限は開始値以上"""
    with pytest.raises(InvalidArgumentError):
        with bit_budget(4, 64):
            pass
    with pytest.raises(InvalidArgumentError):
        with bit_budget(64, 32):
            pass


def test_quadratic_surd_parse_and_compare():
    """二次無理数の記述と厳密な比較"""
    golden = QuadraticSurd.parse("(1+sqrt(5))/2")
    assert golden > Fraction(161, 100) and golden < Fraction(162, 100)
    assert golden.floor() == 1
    half_root = QuadraticSurd.parse("sqrt(2)/2")
    assert half_root == QuadraticSurd.parse("1/sqrt(2)")
    assert QuadraticSurd.parse("3*sqrt(3)/40").floor() == 0
    assert (-half_root).sign() == -1
    assert isinstance(parse_real("1/3"), Fraction)
    with pytest.raises(InvalidArgumentError):
        QuadraticSurd.parse("sqrt(4)")


def test_cf_expand_rational():
    """有理数の連分数は有限で止まる"""
    cf = cf_expand(Fraction(22, 7), 10)
    assert cf.partial_quotients == [3, 7]
    assert cf.values == [Fraction(3), Fraction(22, 7)]
    assert cf.terminated


def test_cf_expand_surds():
    """√2 と黄金比"""
    assert cf_expand("sqrt(2)", 4).partial_quotients == [1, 2, 2, 2]
    assert cf_expand("(1+sqrt(5))/2", 5).partial_quotients == [1, 1, 1, 1, 1]


def _expand_periodic(terms, count):
    """sympy の [a0, …, [周期]] を count 項に展開する"""
    head = [t for t in terms if not isinstance(t, list)]
    period = terms[-1] if isinstance(terms[-1], list) else []
    expanded = list(head)
    while len(expanded) < count and period:
        expanded.extend(period)
    return expanded[:count]


def test_cf_expand_matches_sympy():
    """sympy の周期連分数と一致する"""
    for p, q, d in [(0, 1, 7), (2, 1, 3), (3, 2, 11), (-1, 1, 13)]:
        surd = QuadraticSurd(p, q, d, 1)
        expected = _expand_periodic(continued_fraction_periodic(p, 1, q * q * d), 12)
        assert cf_expand(surd, 12).partial_quotients == expected


def test_prop_uv_worked_examples():
    """既約性の例"""
    first = prop_uv_check(1, 2, 1, 2, 2)
    assert Fraction(first.numerator, first.denominator) == Fraction(3, 4) and first.reduced
    second = prop_uv_check(1, 3, 2, 2, 2)
    assert (second.numerator, second.denominator) == (13, 36) and second.reduced
    third = prop_uv_check(0, 1, 5, 3, 4)
    assert (third.numerator, third.denominator) == (1, 125) and third.reduced
    with pytest.raises(PreconditionError):
        prop_uv_check(2, 4, 1, 2, 2)


def test_prop_uv_randomized():
    """ランダムな 1000 組で常に既約"""
    rng = random.Random(2024)
    checked = 0
    while checked < 1000:
        u, v = rng.randint(0, 1000), rng.randint(1, 1000)
        if math.gcd(u, v) != 1:
            continue
        report = prop_uv_check(u, v, rng.randint(1, 1000), rng.randint(2, 6), rng.randint(2, 6))
        assert report.reduced
        checked += 1


def test_digit_stream():
    """b 進桁の取り出し"""
    stream = digit_stream(Fraction(1, 4), 3, 6)
    assert stream.digits == (0, 2, 0, 2, 0, 2)
    assert digits_within(stream, (0, 2))
    assert stream.first_outside((0, 1)) == 2
    offset = digit_stream(Fraction(1, 4), 3, 2, offset=3)
    assert offset.digits == (0, 2)
    exact = digit_stream(Fraction(5, 8), 2, 3)
    assert exact.value() == Fraction(5, 8)


def test_dist_enclosure():
    """区間上の ‖x‖"""
    assert dist_enclosure(Enclosure(Fraction(1, 10), Fraction(2, 10))) == Enclosure(Fraction(1, 10), Fraction(1, 5))
    assert dist_enclosure(Enclosure(Fraction(-1, 10), Fraction(1, 10))).lower == 0
    assert dist_enclosure(Enclosure(Fraction(4, 10), Fraction(6, 10))).upper == Fraction(1, 2)


def test_ceil_log():
    """base^k ≥ x の最小の k"""
    assert ceil_log(1, 3) == 0
    assert ceil_log(60, 3) == 4
    assert ceil_log(81, 3) == 4
    assert ceil_log(82, 3) == 5
