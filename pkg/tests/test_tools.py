"""MCP ツールクラスのテスト"""

import json
from fractions import Fraction

import pytest

from dirichlet_spectrum.config import RunConfig
from dirichlet_spectrum.construct import ConstructedVector
from dirichlet_spectrum.tools.construction import ConstructionTools
from dirichlet_spectrum.tools.formulas import FormulaTools
from dirichlet_spectrum.tools.store import ObjectStore
from dirichlet_spectrum.tools.verification import VerificationTools

DESK_M2 = "power:c=9/10,tau=1/2"


@pytest.fixture
def store():
    return ObjectStore()


@pytest.fixture
def construction(store):
    return ConstructionTools(store)


@pytest.fixture
def verification(store):
    return VerificationTools(store)


@pytest.mark.asyncio
async def test_construct_sequence(construction, store):
    """数列とベクトルが保存される"""
    result = json.loads(await construction.construct_sequence(2, DESK_M2, depth=2, mode="m2"))
    assert result["status"] == "success"
    assert result["sequence"]["a"][:4] == ["2", "4", "64", "5120"]
    assert result["sequence_id"] in store.sequences
    assert store.sources[result["vector_id"]] == result["sequence_id"]


@pytest.mark.asyncio
async def test_construct_sequence_failures(construction):
    """証明書が通らない場合と不正な記述"""
    infeasible = json.loads(await construction.construct_sequence(
        2, DESK_M2, mode="m2", growth="explicit", explicit_m=[2]))
    assert infeasible["status"] == "failed"
    assert "case1_margin" in infeasible["error"]
    broken = json.loads(await construction.construct_sequence(2, "cubic:c=1", mode="m2"))
    assert broken["status"] == "failed"


@pytest.mark.asyncio
async def test_assemble_vector(construction):
    """別の打ち切り段でベクトルを作り直す"""
    created = json.loads(await construction.construct_sequence(2, DESK_M2, depth=2, mode="m2"))
    result = json.loads(await construction.assemble_vector(created["sequence_id"], 1))
    assert result["status"] == "success"
    assert result["vector_id"] != created["vector_id"]
    missing = json.loads(await construction.assemble_vector("no-such-id", 1))
    assert missing["status"] == "failed"


@pytest.mark.asyncio
async def test_digit_family(construction):
    """Q 族と要素の取り出し"""
    result = json.loads(await construction.digit_family(
        "Qfamily", 3, 2, exponents=[1, 2, 3, 12, 24, 35, 140, 280, 419],
        params={"gamma1": "16/5", "gamma2": "4"}, sample_seed=7))
    assert result["status"] == "success"
    assert result["falconer"]["1"]["P"] == ["4", str(2 ** 28)]
    assert "vector_id" in result
    missing = json.loads(await construction.digit_family("Qfamily", 3, 2))
    assert missing["status"] == "failed"


@pytest.mark.asyncio
async def test_verification_flow(construction, verification):
    """ψ、チェックポイント、極端な近似、一次形式"""
    created = json.loads(await construction.construct_sequence(2, DESK_M2, depth=2, mode="m2"))
    vec_id = created["vector_id"]

    psi = json.loads(await verification.compute_psi(vec_id, 100))
    assert psi["status"] == "success"
    assert psi["argmin_q"] == "64"

    checkpoint = json.loads(await verification.check_checkpoint(vec_id))
    assert checkpoint["Q_f"] == "5119"
    assert checkpoint["passed"]

    uniform = json.loads(await verification.check_uniform(vec_id, 1, 200))
    assert uniform["passed"]

    liouville = json.loads(await verification.check_liouville(vec_id, "3/2", [1]))
    assert liouville["verdicts"][0]["verdict"] == "pass"

    linear = json.loads(await verification.linear_form_psi(vec_id, 71))
    assert linear["argmin_y"] == [64, 0]

    lam = json.loads(await verification.estimate_lambda(vec_id))
    assert lam["Q_max"] == "5119"
    assert json.loads(await verification.estimate_lambda(vec_id, 100))["Q_max"] == "100"


@pytest.mark.asyncio
async def test_check_uniform_uses_configured_bit_budget(store):
    """設定の精度予算が比較まで届く"""
    w = Fraction(3535533905932737622, 10 ** 19)
    vec_id = store.add_vector(ConstructedVector.exact([str(w / 2), str(w)]))
    tight = VerificationTools(store, config=RunConfig(precision_bits=8, max_precision_bits=64))
    report = json.loads(await tight.check_uniform(vec_id, 2, 2, phi="power:c=1/2,tau=1/2"))
    assert report["indeterminate"] == [2]
    assert not report["passed"]
    roomy = VerificationTools(store, config=RunConfig())
    assert json.loads(await roomy.check_uniform(vec_id, 2, 2, phi="power:c=1/2,tau=1/2"))["passed"]


@pytest.mark.asyncio
async def test_verification_failures(verification):
    """存在しないベクトルと予算超過"""
    missing = json.loads(await verification.compute_psi("no-such-id", 10))
    assert missing["status"] == "failed"
    assert "no-such-id" in missing["error"]
    verification.q_budget = 5
    vec_id = verification.store.add_vector(ConstructedVector.exact(["5/7", "2/7"]))
    over = json.loads(await verification.compute_psi(vec_id, 10))
    assert over["status"] == "failed"


@pytest.mark.asyncio
async def test_formulas():
    """次元の公式と移行の定数"""
    formulas = FormulaTools()
    hdd = json.loads(await formulas.dimension_formula("hdd", {"m": 2}))
    assert hdd["status"] == "success"
    assert hdd["value_float"] == pytest.approx(0.096170, abs=1e-6)
    fr = json.loads(await formulas.transfer_formula("fr", 2, {"c": "3/10"}))
    assert fr["omega"] == {"lower": "3/10000", "upper": "3/10000"}
    kappa = json.loads(await formulas.transfer_formula("kappa", 2))
    assert kappa["log_kappa"] == -6480
    unknown = json.loads(await formulas.transfer_formula("zeta", 2))
    assert unknown["status"] == "failed"
    domain = json.loads(await formulas.dimension_formula("beides", {"m": 3, "lambda": "3/2"}))
    assert domain["status"] == "failed"
