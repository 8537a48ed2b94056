"""次元の下界の公式のテスト"""

import math
from fractions import Fraction

import pytest

from dirichlet_spectrum.dims import (
    beides_bound,
    cosinus_check,
    dims_formula,
    falconer_lower_bound,
    falconer_lower_bound_logs,
    gs0_log_data,
    hdd_bound,
    misc_constants,
    ohlele_bounds,
)
from dirichlet_spectrum.errors import InvalidArgumentError, OutOfScopeError


def test_falconer_binary_quarter_gaps():
    """P_n = 2, ε_n = 4^(−n) の窓での最小は 30/61"""
    eps = [Fraction(1, 4 ** n) for n in range(1, 41)]
    report = falconer_lower_bound([2] * 40, eps)
    assert report.value.contains(Fraction(30, 61))
    assert float(report.value) == pytest.approx(0.5, abs=0.01)
    assert report.trace["window"] == 10
    assert report.trace["spread"] < 0.01


def test_falconer_degenerate_and_invalid():
    """分岐なしは 0、不正なデータは拒否"""
    assert falconer_lower_bound([1, 2], [Fraction(1, 4), Fraction(1, 16)]).value.upper == 0
    with pytest.raises(InvalidArgumentError):
        falconer_lower_bound([2, 2], [Fraction(1, 4), Fraction(1, 4)])
    with pytest.raises(InvalidArgumentError):
        falconer_lower_bound([2, 2], [Fraction(1, 2), Fraction(1, 4)])
    with pytest.raises(InvalidArgumentError):
        falconer_lower_bound([2], [Fraction(1, 4)], depth=3)


def test_falconer_logs_matches_direct():
    """対数版は同じ値を厳密に返す"""
    log2 = Fraction(1)
    report = falconer_lower_bound_logs([log2] * 40, [-2 * n * log2 for n in range(1, 41)])
    assert report.value.lower == Fraction(30, 61)


def test_gs0():
    """(m, γ1, γ2) = (3, 16/5, 4) の G(S_0) の下界 ≈ 1/44"""
    data = gs0_log_data(3, Fraction(16, 5), 4, 5)
    assert data["log_P"][:2] == [Fraction(4, 5), Fraction(48, 5)]
    assert data["log_eps"][0] == -4
    result = dims_formula("gs0", m=3, gamma1="16/5", gamma2="4")
    assert result["value_float"] == pytest.approx(0.022727, abs=1e-6)
    with pytest.raises(InvalidArgumentError):
        gs0_log_data(3, 4, Fraction(16, 5), 5)


def test_ohlele_bounds():
    """和の形と m 倍の形"""
    bounds = ohlele_bounds(3, Fraction(16, 5), 4)
    assert bounds["eq01"] == "2/11"
    assert bounds["eq02"] == "3/44"
    equal = ohlele_bounds(2, 2, 4)
    assert equal["eq01"] == equal["eq02"] == "2/7"
    with pytest.raises(InvalidArgumentError):
        ohlele_bounds(3, 4, 2)


def test_hdd_bound():
    """最適な γ2 は (m + √(m(m²−m+1)))/(m−1)"""
    two = hdd_bound(2)
    assert two.trace["gamma2_opt"] == pytest.approx(2 + math.sqrt(6), abs=1e-12)
    assert float(two.value) == pytest.approx(0.096170, abs=1e-6)
    three = hdd_bound(3)
    assert three.trace["gamma2_opt"] == pytest.approx((3 + math.sqrt(21)) / 2, abs=1e-12)
    assert float(three.value) == pytest.approx(0.195140, abs=1e-6)
    for report in (two, three):
        assert report.trace["root_residual"] < 1e-12
        assert report.trace["grid_difference"] < 1e-5
    assert float(hdd_bound(64).value) == pytest.approx(0.767, abs=1e-3)
    with pytest.raises(InvalidArgumentError):
        hdd_bound(1)


def test_hdd_bound_grows_with_m():
    """m = 2, …, 6 で下界は増える"""
    values = [float(hdd_bound(m).value) for m in range(2, 7)]
    assert values == sorted(values)
    assert len(set(values)) == len(values)


def test_cosinus_check():
    """3m/8 との比は m とともに 1 に近づく"""
    assert cosinus_check(50).trace["ratio"] == pytest.approx(0.906, abs=1e-3)
    assert cosinus_check(200).trace["ratio"] == pytest.approx(0.959, abs=1e-3)
    with pytest.raises(InvalidArgumentError):
        cosinus_check(4)


def test_beides_bound():
    """λ > 黄金比 でのみ定義される"""
    report = beides_bound(10, 10)
    assert 0.40 < float(report.value) < 0.41
    assert report.trace["asymptotic"] == pytest.approx(0.5)
    small = beides_bound(2, 2)
    assert float(small.value) == pytest.approx(2 / 21, abs=1e-3)
    assert float(small.value) < 2 / 21
    with pytest.raises(OutOfScopeError):
        beides_bound(3, Fraction(8, 5))
    with pytest.raises(OutOfScopeError):
        beides_bound(3, 1)


def test_misc_constants():
    """σ、Ω、m/(τ+1)、m(1−γ)、Γ_b"""
    assert float(misc_constants("sigma", m=2, b=3).value) == pytest.approx(0.577350, abs=1e-6)
    omega = misc_constants("omega_cantor", b=3, r_exponent="1/2", good=False)
    assert float(omega.value) == pytest.approx(0.0040094, abs=1e-7)
    assert misc_constants("omega_cantor", b=3, R="1/2").value.lower == Fraction(1, 2)
    assert misc_constants("gamma_b", b=10).value.lower == 2520
    assert misc_constants("lemma_rem", m=2, tau="1/2").value.lower == Fraction(4, 3)
    assert misc_constants("packing", m=3, gamma="1/2").value.lower == Fraction(3, 2)
    with pytest.raises(InvalidArgumentError):
        misc_constants("omega_cantor", b=3)
    with pytest.raises(InvalidArgumentError):
        misc_constants("zeta", b=3)
    with pytest.raises(InvalidArgumentError):
        misc_constants("sigma", b=3)
    with pytest.raises(InvalidArgumentError):
        misc_constants("sigma", m="two", b=3)


def test_dims_formula_json():
    """JSON 用の辞書"""
    result = dims_formula("hdd", m=2)
    assert result["formula"] == "hdd"
    assert result["inputs"] == {"m": "2"}
    assert result["value_float"] == pytest.approx(0.096170, abs=1e-6)
    assert dims_formula("ohlele", m=3, gamma1="16/5", gamma2="4")["eq02"] == "3/44"
    assert dims_formula("gamma_b", b=5)["value"]["lower"] == "12"
