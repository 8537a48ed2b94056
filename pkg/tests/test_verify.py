"""ψ の総当たり計算とチェックポイント検証のテスト"""

from fractions import Fraction

import pytest

from dirichlet_spectrum.construct import (
    ConstructionMode,
    ConstructionPlan,
    assemble_vector,
    build_sequence,
    construct_in_cantor_set,
)
from dirichlet_spectrum.errors import (
    BudgetExceededError,
    InvalidArgumentError,
    PreconditionError,
    TruncationInsufficientError,
)
from dirichlet_spectrum.numkit import Enclosure, bit_budget
from dirichlet_spectrum.phi import parse_phi
from dirichlet_spectrum.verify import (
    NormDescriptor,
    NormKind,
    check_C1,
    check_C3,
    checkpoint_C2,
    lambda_estimate,
    psi,
    psi_at,
    psi_linear_form,
    psi_sweep,
    theta_estimate,
)

DESK_M2 = "power:c=9/10,tau=1/2"
DESK_M3 = "power:c=9/10,tau=1/3"


@pytest.fixture(scope="module")
def m2_sequence():
    """m = 2 の二段の数列"""
    plan = ConstructionPlan(2, parse_phi(DESK_M2), mode=ConstructionMode.M2, depth=2)
    return build_sequence(plan)


@pytest.fixture(scope="module")
def m2_vector(m2_sequence):
    return assemble_vector(m2_sequence, 2)


@pytest.fixture(scope="module")
def m3_sequence():
    plan = ConstructionPlan(3, parse_phi(DESK_M3), depth=2)
    return build_sequence(plan)


def test_psi_small_rational_vector():
    """(5/7, 2/7) の ψ"""
    result = psi([Fraction(5, 7), Fraction(2, 7)], 6)
    assert result.value == Enclosure.exact(Fraction(1, 7))
    assert result.argmin_q == 3
    assert result.exact
    assert psi([Fraction(5, 7), Fraction(2, 7)], 7).value == Enclosure.exact(0)


def test_psi_sweep_drops():
    """更新点は q = 1, 3, 7"""
    points = psi_sweep([Fraction(5, 7), Fraction(2, 7)], 10)
    assert [p.Q for p in points] == [1, 3, 7]
    assert [p.value.lower for p in points] == [Fraction(2, 7), Fraction(1, 7), 0]


def test_psi_workers_agree():
    """プロセス分割しても同じ結果"""
    vec = [Fraction(5, 17), Fraction(11, 23)]
    single = psi(vec, 300)
    split = psi(vec, 300, workers=2)
    assert (single.value, single.argmin_q) == (split.value, split.argmin_q)


def test_psi_scope_errors(m2_sequence):
    """予算と打ち切りの範囲"""
    with pytest.raises(BudgetExceededError):
        psi([Fraction(1, 3)], 11, q_budget=10)
    with pytest.raises(InvalidArgumentError):
        psi([Fraction(1, 3)], 0)
    coarse = assemble_vector(m2_sequence, 1)
    assert coarse.q_max_valid == 0
    with pytest.raises(TruncationInsufficientError) as excinfo:
        psi(coarse, 100)
    assert excinfo.value.required_level >= 2


def test_norm_descriptor():
    """ノルムの記述子"""
    assert NormDescriptor.parse("max").kind is NormKind.MAX
    assert NormDescriptor.parse("p=2").p == 2
    weighted = NormDescriptor.parse("weighted=1,1/2")
    assert weighted.weights == (Fraction(1), Fraction(1, 2))
    assert weighted.expanding(2)
    assert weighted.chi(2) == Fraction(1, 2)
    assert not NormDescriptor.parse("weighted=2,1").expanding(2)
    with pytest.raises(InvalidArgumentError):
        NormDescriptor.parse("l1")
    with pytest.raises(InvalidArgumentError):
        weighted.expanding(3)


def test_checkpoint_m2(m2_sequence, m2_vector):
    """Q_1 = 5119 で ψ/Φ ≈ 0.9937"""
    report = checkpoint_C2(m2_vector, m2_sequence, 1, parse_phi(DESK_M2))
    assert report.Q_f == 5119
    assert report.passed
    assert float(report.ratio) == pytest.approx(0.9937, abs=1e-3)
    assert float(report.dirichlet_product) == pytest.approx(0.89434, abs=1e-4)
    assert report.reference == Fraction(1, 80)
    with pytest.raises(PreconditionError):
        checkpoint_C2(m2_vector, m2_sequence, 3, parse_phi(DESK_M2))


def test_checkpoint_m3(m3_sequence):
    """m = 3 の Q_1 = 188415"""
    vec = assemble_vector(m3_sequence, 2)
    report = checkpoint_C2(vec, m3_sequence, 1, parse_phi(DESK_M3))
    assert report.Q_f == 188415
    assert report.passed
    assert float(report.ratio) == pytest.approx(0.9953, abs=1e-3)
    assert float(report.dirichlet_product) == pytest.approx(0.8958, abs=1e-3)
    assert float(report.psi.value) == pytest.approx(1 / 64, rel=1e-3)


def test_check_C1(m2_vector):
    """ψ(Q) < Φ(Q) とわずかに縮めた場合の破れ"""
    fn = parse_phi(DESK_M2)
    report = check_C1(m2_vector, fn, 1, 5119)
    assert report.passed
    assert report.observed_Q0 == 1
    tight = check_C1(m2_vector, fn, 1, 5119, factor=Fraction(99, 100))
    assert not tight.passed
    assert tight.violations[-1][1] == 5119
    assert tight.to_json()["observed_Q0"] == 5120


def test_check_C1_in_cantor_set():
    """W = ({0,2}, {1,2}) へ持ち上げたベクトル"""
    plan = ConstructionPlan(2, parse_phi(DESK_M2), mode=ConstructionMode.CANTOR,
                            base=3, digit_sets=[(0, 2), (1, 2)], uniform_quotients=True)
    _, vec = construct_in_cantor_set(plan)
    report = check_C1(vec, parse_phi(DESK_M2), 2, 220, factor=Fraction(21, 20))
    assert report.passed


@pytest.mark.slow
def test_check_C1_in_cantor_set_full_range():
    """持ち上げたベクトルで [2, 5119] を確かめる。打ち切りが足りなければその旨の例外"""
    plan = ConstructionPlan(2, parse_phi(DESK_M2), mode=ConstructionMode.CANTOR, depth=2,
                            base=3, digit_sets=[(0, 2), (1, 2)], uniform_quotients=True)
    _, vec = construct_in_cantor_set(plan)
    fn = parse_phi(DESK_M2)
    if vec.q_max_valid is not None and vec.q_max_valid < 5119:
        with pytest.raises(TruncationInsufficientError):
            check_C1(vec, fn, 2, 5119, factor=Fraction(21, 20))
        return
    report = check_C1(vec, fn, 2, 5119, factor=Fraction(21, 20))
    assert report.passed
    assert report.indeterminate == []


def test_check_C1_under_small_bit_budget():
    """ψ(2) が Φ(2) のすぐ下なら、小さい予算では決まらない点として残る"""
    w = Fraction(3535533905932737622, 10 ** 19)
    vec = [w / 2, w]
    fn = parse_phi("power:c=1/2,tau=1/2")
    with bit_budget(8, 64):
        report = check_C1(vec, fn, 2, 2)
    assert report.indeterminate == [2]
    assert not report.passed
    assert check_C1(vec, fn, 2, 2).passed


def test_check_C3(m2_sequence, m2_vector, m3_sequence):
    """q = a_{mn} での良い近似"""
    first, second = check_C3(m2_vector, m2_sequence, 3, [1, 2])
    assert first["q"] == "4" and first["bound"] == "1/8"
    assert first["passed"] and first["verdict"] == "need-deeper-level"
    assert second["passed"]
    assert check_C3(m2_vector, m2_sequence, Fraction(3, 2), [1])[0]["verdict"] == "pass"

    m3_vec = assemble_vector(m3_sequence, 2)
    verdict = check_C3(m3_vec, m3_sequence, 2, [1])[0]
    assert verdict["q"] == "8" and verdict["bound"] == "1/4"
    with pytest.raises(PreconditionError):
        check_C3(m2_vector, m2_sequence, 3, [3])


@pytest.mark.parametrize("workers", [1, 4, 8])
def test_workers_agree_across_chunks(m2_vector, workers):
    """Q = 5119 はどの分割でも区間の境界をまたぐ"""
    single = psi(m2_vector, 5119)
    split = psi(m2_vector, 5119, workers=workers)
    assert (split.value, split.argmin_q) == (single.value, single.argmin_q)
    drops = [(p.Q, p.value) for p in psi_sweep(m2_vector, 5119)]
    assert [(p.Q, p.value) for p in psi_sweep(m2_vector, 5119, workers=workers)] == drops


def test_psi_at(m2_vector):
    """q = 64 では第二成分が 1/80"""
    value = psi_at(m2_vector, 64)
    assert value.contains(Fraction(1, 80))
    assert value.width < Fraction(1, 10 ** 6)


def test_theta_estimate(m2_sequence, m2_vector):
    """Q^(1/2)·ψ(Q) の上限の推定とノルムの違い"""
    estimate = theta_estimate(m2_vector, m2_sequence)
    assert estimate["estimate_float"] == pytest.approx(0.894, abs=1e-3)
    assert [c["f"] for c in estimate["checkpoints"]] == [1]
    assert estimate["checkpoints"][0]["argmin_component"] == 2

    weighted = theta_estimate(m2_vector, m2_sequence, NormDescriptor.parse("weighted=1,1/2"))
    assert weighted["estimate_float"] == pytest.approx(0.447, abs=1e-3)
    euclid = theta_estimate(m2_vector, m2_sequence, NormDescriptor.parse("p=2"))
    assert euclid["estimate_float"] == pytest.approx(0.894, abs=1e-3)
    with pytest.raises(PreconditionError):
        theta_estimate(m2_vector, m2_sequence, NormDescriptor.parse("weighted=2,1"))


def test_lambda_estimate(m2_vector):
    """log(1/ψ)/log q"""
    estimate = lambda_estimate(m2_vector, 100)
    assert not estimate["infinite"]
    assert estimate["running_max_float"] > 1.05
    rational = lambda_estimate([Fraction(5, 7), Fraction(2, 7)], 10)
    assert rational["infinite"]


def test_lambda_estimate_from_sequence(m2_sequence, m2_vector):
    """数列を渡すと届く最後のチェックポイントまで"""
    estimate = lambda_estimate(m2_vector, m2_sequence)
    assert estimate["Q_max"] == "5119"
    assert estimate["points"][-1]["q"] == "64"
    with pytest.raises(PreconditionError):
        lambda_estimate(m2_vector, m2_sequence, q_budget=100)


def test_linear_form_exact_vectors():
    """‖⟨y, ξ⟩‖ の最小と符号の同一視"""
    zero = psi_linear_form([Fraction(5, 7), Fraction(2, 7)], 2)
    assert zero.value == Enclosure.exact(0)
    assert zero.argmin_y == (1, 1)
    sixth = psi_linear_form([Fraction(1, 2), Fraction(1, 3)], 1)
    assert sixth.value == Enclosure.exact(Fraction(1, 6))
    assert sixth.argmin_y == (1, 1)
    assert sixth.searched == 4


def test_linear_form_limits(m2_sequence):
    """y の予算と打ち切り"""
    with pytest.raises(BudgetExceededError):
        psi_linear_form([Fraction(1, 2), Fraction(1, 3)], 1000)
    with pytest.raises(TruncationInsufficientError):
        psi_linear_form(assemble_vector(m2_sequence, 1), 10)
