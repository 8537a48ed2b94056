"""近似関数と証明書・対の解法のテスト"""

import json
from fractions import Fraction

import pytest

from dirichlet_spectrum.errors import (
    IndeterminateComparisonError,
    InvalidArgumentError,
    OutOfDomainError,
    PreconditionError,
)
from dirichlet_spectrum.numkit import Enclosure, QuadraticSurd, bit_budget
from dirichlet_spectrum.phi import (
    InterpolationRule,
    PowerFn,
    PropertyKind,
    RescaledFn,
    TabulatedFn,
    Verdict,
    below_phi,
    certify,
    find_threshold_H,
    parse_phi,
    phi_eval,
    solve_pair_lemur,
    solve_pair_lemuren,
    verify_pair_lemur,
    verify_pair_lemuren,
)


@pytest.fixture
def desk_m2():
    """Φ(t) = (9/10)·t^(−1/2)"""
    return parse_phi("power:c=9/10,tau=1/2")


@pytest.fixture
def table_path(tmp_path):
    """表で与えた Φ の JSON"""
    path = tmp_path / "phi.json"
    points = [[t, str(Fraction(9, 10 * t))] for t in range(1, 41)]
    path.write_text(json.dumps({"points": points, "rule": "step"}), encoding="utf-8")
    return path


def test_phi_eval_exact_values(desk_m2):
    """根が厳密な点では値も厳密"""
    assert phi_eval(desk_m2, 4) == Enclosure.exact(Fraction(9, 20))
    assert phi_eval(desk_m2, 64) == Enclosure.exact(Fraction(9, 80))


def test_phi_eval_surd_exponent():
    """τ = 1/√2 のときの包含"""
    fn = parse_phi("power:c=1/2,tau=sqrt(2)/2")
    value = phi_eval(fn, 2, precision=20)
    assert value.width <= Fraction(1, 1 << 20)
    assert abs(float(value) - 0.5 * 2 ** (-2 ** -0.5)) < 1e-6


def test_phi_eval_rejects_bad_t(desk_m2):
    """t は正の整数"""
    with pytest.raises(InvalidArgumentError):
        phi_eval(desk_m2, 0)
    with pytest.raises(InvalidArgumentError):
        PowerFn(Fraction(0), Fraction(1, 2))


def test_parse_phi_errors():
    """記述子の誤り"""
    with pytest.raises(InvalidArgumentError):
        parse_phi("power:c=9/10")
    with pytest.raises(InvalidArgumentError):
        parse_phi("gauss:c=1")


def test_tabulated_step_and_linear():
    """表の補間"""
    step = TabulatedFn(((1, Fraction(1, 2)), (5, Fraction(1, 4))))
    assert step.exact_value(3) == Fraction(1, 2)
    linear = TabulatedFn(((1, Fraction(1, 2)), (5, Fraction(1, 4))), InterpolationRule.LINEAR)
    assert linear.exact_value(3) == Fraction(3, 8)
    assert step.nonincreasing
    with pytest.raises(OutOfDomainError):
        step.exact_value(6)
    with pytest.raises(InvalidArgumentError):
        TabulatedFn(((1, Fraction(3, 2)),))


def test_tabulated_from_file(table_path):
    """tabulated:<path> の読み込みと標本範囲の証明書"""
    fn = parse_phi(f"tabulated:{table_path}")
    assert isinstance(fn, TabulatedFn)
    assert fn.table_range == (1, 40)
    d1 = certify(fn, "d1", 2)
    assert d1.verdict is Verdict.SAMPLED_PASS
    assert d1.tested_range == (1, 40)
    d2 = certify(fn, PropertyKind.D2, 3)
    assert d2.verdict is Verdict.SAMPLED_FAIL


def test_rescaled_fn(desk_m2):
    """Φ̃(t) = factor·Φ(s·t)"""
    rescaled = RescaledFn(desk_m2, Fraction(1, 4), 3)
    assert rescaled.enclose(3, 64) == Enclosure.exact(Fraction(3, 40))
    assert rescaled.exponent() == Fraction(1, 2)
    assert rescaled.nonincreasing


def test_below_phi(desk_m2):
    """1/80 < Φ(5119)"""
    assert below_phi(Fraction(1, 80), desk_m2, 5119)
    assert not below_phi(Fraction(1, 2), desk_m2, 4)
    assert below_phi(Fraction(1, 2), desk_m2, 4, factor=Fraction(2))


def test_below_phi_respects_bit_budget(desk_m2):
    """Φ(2) のすぐ下の値は 64 ビットの予算では決まらない"""
    close = Fraction(636396103067892771960, 10 ** 21)
    with bit_budget(8, 64):
        with pytest.raises(IndeterminateComparisonError):
            below_phi(close, desk_m2, 2)
    with pytest.raises(IndeterminateComparisonError):
        below_phi(close, desk_m2, 2, max_bits=64)
    assert below_phi(close, desk_m2, 2)


def test_certify_d1(desk_m2):
    """τ = 1/m では c < 1 が必要"""
    assert certify(desk_m2, "d1", 2).verdict is Verdict.ANALYTIC_PASS
    assert certify(parse_phi("power:c=1,tau=1/2"), "d1", 2).verdict is Verdict.ANALYTIC_FAIL
    assert certify(parse_phi("power:c=9/10,tau=1/4"), "d1", 2).verdict is Verdict.ANALYTIC_FAIL
    assert certify(desk_m2, "d1", 2) is certify(desk_m2, PropertyKind.D1, 2)


def test_certify_d2_and_threshold(desk_m2):
    """(d2) としきい値 H"""
    certificate = certify(desk_m2, "d2", 2)
    assert certificate.passed
    assert certificate.witness["H"] == 2
    assert certify(parse_phi("power:c=1,tau=1"), "d2", 2).verdict is Verdict.ANALYTIC_FAIL
    assert find_threshold_H(parse_phi("power:c=9/10,tau=1/3"), 3) == 2
    with pytest.raises(PreconditionError):
        find_threshold_H(parse_phi("power:c=1,tau=1"), 2)


def test_certify_d3prime():
    """R = b^(−e) の指数形と有理数形"""
    fn = parse_phi("power:c=1/2,tau=1/3")
    assert certify(fn, "d3prime", 3, b=3, r_exponent="1/3").verdict is Verdict.ANALYTIC_PASS
    assert certify(fn, "d3prime", 3, b=3, r_exponent="1/4").verdict is Verdict.ANALYTIC_FAIL
    assert certify(fn, "d3prime", 3, b=8, R=Fraction(1, 2)).verdict is Verdict.ANALYTIC_PASS
    with pytest.raises(InvalidArgumentError):
        certify(fn, "d3prime", 3)


def test_certify_d4_records_eta(desk_m2):
    """(d4) は η = Φ(1)/2 を記録する"""
    certificate = certify(desk_m2, "d4", 2, gamma=Fraction(1, 2))
    assert certificate.passed
    assert certificate.witness["eta"] == Fraction(9, 20)
    assert not certify(desk_m2, "d4", 2, gamma=Fraction(1, 3)).passed


def test_certify_db_surd_power():
    """D(b) は無理数の τ でのみ成り立ち、対を記録する"""
    fn = parse_phi("power:c=1/2,tau=sqrt(2)/2")
    certificate = certify(fn, "D(b)", 2, b=2)
    assert certificate.verdict is Verdict.ANALYTIC_PASS
    tau = QuadraticSurd.parse("sqrt(2)/2")
    assert verify_pair_lemur(Fraction(1, 2), tau, 2, Fraction(1, 10),
                             certificate.witness["A"], certificate.witness["B"])
    rational = parse_phi("power:c=1/2,tau=1/2")
    assert certify(rational, "D(b)", 2, b=2).verdict is Verdict.ANALYTIC_FAIL


def test_solve_pair_lemuren():
    """c·b^(−(B+1)/m) ≤ b^(−A) < c·b^(−B/m)"""
    pair = solve_pair_lemuren("1/2", 2, 3, A_min=3)
    assert (pair.A, pair.B) == (3, 4)
    assert verify_pair_lemuren(Fraction(1, 2), 2, 3, 3, 4)
    larger = solve_pair_lemuren("1/2", 2, 3, A_min=4)
    assert larger.A >= 4 and verify_pair_lemuren(Fraction(1, 2), 2, 3, larger.A, larger.B)
    boundary = solve_pair_lemuren(Fraction(1), 1, 2)
    assert (boundary.A, boundary.B) == (2, 1)
    with pytest.raises(InvalidArgumentError):
        solve_pair_lemuren("3/2", 2, 3)


def test_solve_pair_lemur():
    """(1−ε)c·b^(−Bτ) < b^(−A) ≤ c·b^(−Bτ)"""
    tau = QuadraticSurd.parse("1/sqrt(2)")
    pair = solve_pair_lemur("1/2", tau, 2, "1/5")
    assert verify_pair_lemur(Fraction(1, 2), tau, 2, Fraction(1, 5), pair.A, pair.B)
    assert verify_pair_lemur(Fraction(1, 2), tau, 2, Fraction(1, 5), 6, 7)
    tight = solve_pair_lemur("1/2", tau, 2, "1/100")
    assert verify_pair_lemur(Fraction(1, 2), tau, 2, Fraction(1, 100), tight.A, tight.B)
    with pytest.raises(InvalidArgumentError):
        solve_pair_lemur("1/2", "1/2", 2, "1/5")
