"""桁集合族のテスト"""

from fractions import Fraction

import pytest

from dirichlet_spectrum.digit_family import (
    DigitPolicy,
    FamilyKind,
    build_digit_family,
    sample_member,
)
from dirichlet_spectrum.errors import InvalidArgumentError, PreconditionError, UnsupportedError
from dirichlet_spectrum.numkit import digit_stream
from dirichlet_spectrum.phi import PowerFn


@pytest.fixture
def exponents():
    """m = 3, depth = 2 の指数列"""
    return [1, 2, 3, 12, 24, 35, 140, 280, 419]


def _spans(blocks):
    return [(block.start, block.end) for block in blocks]


def test_q_family_free_blocks(exponents):
    """Q(γ1, γ2) の自由区間"""
    family = build_digit_family("Qfamily", exponents, 3, 2, gamma1=Fraction(16, 5), gamma2=4)
    assert family.end == 419
    assert _spans(family.free_blocks(1)) == [(10, 11), (112, 139)]
    assert _spans(family.free_blocks(2)) == [(10, 11), (112, 139)]
    assert _spans(family.free_blocks(3)) == [(10, 11), (25, 34), (112, 139), (281, 418)]
    assert [level["delta"] for level in family.level_params] == [4, 4]


def test_q_family_layout_covers_all_positions(exponents):
    """各座標の配置は 1..end を隙間なく覆う"""
    family = build_digit_family(FamilyKind.Q, exponents, 3, 2, gamma1=Fraction(16, 5), gamma2=4)
    for row in family.layout:
        assert row[0].start == 1 and row[-1].end == family.end
        assert all(a.end + 1 == b.start for a, b in zip(row, row[1:]))
    ones = [interval.start for interval in family.layout[0] if interval.policy is DigitPolicy.FIXED_1]
    assert ones == [1, 12, 140]


def test_q_family_parameter_checks(exponents):
    """γ1, γ2 の条件"""
    with pytest.raises(InvalidArgumentError):
        build_digit_family("Qfamily", exponents, 3, 2, gamma1=Fraction(5, 4), gamma2=4)
    with pytest.raises(InvalidArgumentError):
        build_digit_family("Qfamily", exponents, 3, 2, gamma1=Fraction(16, 5), gamma2=3)
    with pytest.raises(InvalidArgumentError):
        build_digit_family("Q1star", exponents, 3, 2, gamma1=Fraction(16, 5), gamma2=5)
    with pytest.raises(PreconditionError):
        build_digit_family("Qfamily", exponents, 3, 2, gamma1=Fraction(17, 4), gamma2=Fraction(9, 2))
    with pytest.raises(InvalidArgumentError):
        build_digit_family("Qfamily", exponents, 3, 2, gamma1="16/5")
    with pytest.raises(InvalidArgumentError):
        build_digit_family("S", exponents, 3, 2)
    assert build_digit_family("Qfamily", exponents, 3, 2, gamma1="16/5", gamma2="4").m == 3


def test_q1star_marks_extra_digit(exponents):
    """Q1* は座標 1 の ⌊γ1 h_n⌋ 桁を 1 に固定する"""
    family = build_digit_family("Q1star", exponents, 3, 2, gamma1=Fraction(16, 5), gamma2=4)
    assert _spans(family.free_blocks(1)) == [(10, 11), (113, 139)]
    ones = [interval.start for interval in family.layout[0] if interval.policy is DigitPolicy.FIXED_1]
    assert ones == [1, 9, 12, 112, 140]


def test_s_family(exponents):
    """S(γ) の自由区間"""
    family = build_digit_family("S", exponents, 3, 2, gamma=Fraction(1, 2), eps=Fraction(1, 20))
    assert _spans(family.free_blocks(2)) == [(7, 11), (78, 139)]
    with pytest.raises(InvalidArgumentError):
        build_digit_family("S", exponents, 3, 2, gamma=Fraction(19, 20), eps=Fraction(1, 10))


def test_falconer_data(exponents):
    """分岐数と隙間"""
    family = build_digit_family("Qfamily", exponents, 3, 2, gamma1=Fraction(16, 5), gamma2=4)
    counts, gaps = family.falconer_data(1)
    assert counts == [4, 2 ** 28]
    assert gaps == [Fraction(1, 2 ** 11) - Fraction(1, 2 ** 111), Fraction(1, 2 ** 139)]


def test_j_schedule(exponents):
    """Ψ(t) = t^(−2) の J_n は 2^(−3h_n) の先頭の n+1 桁"""
    psi = PowerFn(Fraction(1), Fraction(2))
    family = build_digit_family("Jschedule", exponents, 3, 2, psi=psi)
    first = family.level_params[0]
    assert (first["gamma1"], first["gamma2"]) == (3, Fraction(7, 2))
    assert (first["J_start"], first["J_end"]) == (9, 10)
    prescribed = [i for i in family.layout[0] if i.policy is DigitPolicy.PRESCRIBED]
    assert prescribed[0].digits == (1, 0)
    assert (prescribed[1].start, prescribed[1].end) == (105, 107)
    with pytest.raises(UnsupportedError):
        build_digit_family("Jschedule", exponents, 3, 2, base=3, psi=psi)
    with pytest.raises(UnsupportedError):
        build_digit_family("Jschedule", exponents, 3, 2, psi="power:c=1,tau=2")


def test_exponent_checks():
    """指数列の長さと単調性"""
    with pytest.raises(InvalidArgumentError):
        build_digit_family("S", [1, 2, 3], 3, 1, gamma=Fraction(1, 2))
    with pytest.raises(InvalidArgumentError):
        build_digit_family("S", [1, 2, 2, 4, 5, 6], 3, 1, gamma=Fraction(1, 2))
    with pytest.raises(InvalidArgumentError):
        build_digit_family("Pfamily", [1, 2, 3, 4, 5, 6], 3, 1)


def test_sample_member_is_reproducible(exponents):
    """同じ seed なら同じ要素、固定桁は保たれる"""
    family = build_digit_family("Qfamily", exponents, 3, 2, gamma1=Fraction(16, 5), gamma2=4)
    first = sample_member(family, seed=7)
    again = sample_member(family, seed=7)
    assert first.components == again.components
    assert digit_stream(first.components[0], 2, 9).digits == (1, 0, 0, 0, 0, 0, 0, 0, 0)
    assert digit_stream(first.components[0], 2, 1, offset=12).digits == (1,)
    assert digit_stream(first.components[0], 2, 100, offset=12).digits[1:] == (0,) * 99
    assert first.provenance["kind"] == "Qfamily"
    assert first.tail_bound == Fraction(1, 2 ** 419)
