"""構成ツール（数列・ベクトル・カントール集合への持ち上げ・桁集合族）"""

import logging
from typing import Any, ContextManager, Dict, List, Optional

from ..config import RunConfig, load_config
from ..construct import (
    ConstructionMode,
    ConstructionPlan,
    GrowthPolicy,
    assemble_vector,
    build_sequence,
    cantor_lift,
    construct_in_cantor_set,
)
from ..digit_family import build_digit_family, sample_member
from ..errors import ConstructionInfeasibleError
from ..numkit import BitBudget, as_rational, bit_budget
from ..phi import parse_phi
from .store import ObjectStore, failure, success

logger = logging.getLogger(__name__)


class ConstructionTools:
    """構成をサポートするクラス"""

    def __init__(self, store: Optional[ObjectStore] = None, config: Optional[RunConfig] = None):
        self.store = store or ObjectStore()
        self.config = config or load_config()

    def _precision(self) -> ContextManager[BitBudget]:
        return bit_budget(self.config.precision_bits, self.config.max_precision_bits)

    async def construct_sequence(self, m: int, phi: str, depth: int = 1, mode: str = "general",
                                 growth: str = "minimal-certified", base: Optional[int] = None,
                                 digit_sets: Optional[List[List[int]]] = None,
                                 explicit_m: Optional[List[int]] = None, uniform_quotients: bool = False,
                                 truncation_level: Optional[int] = None) -> str:
        """数列を作り、作れればベクトルも保存する"""
        try:
            with self._precision():
                plan = ConstructionPlan(
                    m=m,
                    fn=parse_phi(phi),
                    mode=ConstructionMode(mode),
                    growth=GrowthPolicy(growth),
                    depth=depth,
                    q_budget=self.config.q_budget,
                    base=base,
                    digit_sets=[tuple(W) for W in digit_sets] if digit_sets else None,
                    explicit_m=explicit_m,
                    margin=self.config.certificate_margin,
                    max_growth=self.config.max_growth,
                    uniform_quotients=uniform_quotients,
                )
                level = depth if truncation_level is None else truncation_level
                if plan.mode is ConstructionMode.CANTOR and plan.growth is not GrowthPolicy.EXPONENT_ONLY:
                    seq, vec = construct_in_cantor_set(plan, level)
                else:
                    seq = build_sequence(plan)
                    vec = assemble_vector(seq, level) if seq.materialized else None
                seq_id = self.store.add_sequence(seq)
                result: Dict[str, Any] = {"sequence_id": seq_id, "sequence": seq.to_json()}
                if vec is not None:
                    result["vector_id"] = self.store.add_vector(vec, seq_id)
                    result["vector"] = vec.to_json()
                return success(result)
        except ConstructionInfeasibleError as error:
            logger.warning(f"構成失敗: {error}")
            failed = error.report.failed_checks if error.report is not None else []
            return failure(ValueError(f"{error} (failed: {failed})"))
        except Exception as error:
            return failure(error)

    async def assemble_vector(self, sequence_id: str, truncation_level: int) -> str:
        """保存済みの数列から別の打ち切り段でベクトルを作る"""
        try:
            with self._precision():
                seq = self.store.sequence(sequence_id)
                vec = assemble_vector(seq, truncation_level)
                vec_id = self.store.add_vector(vec, sequence_id)
                return success({"vector_id": vec_id, "vector": vec.to_json()})
        except Exception as error:
            return failure(error)

    async def lift_to_cantor(self, vector_id: str, base: int, digit_sets: List[List[int]],
                             check_digits: int = 10 ** 4) -> str:
        """{0,1} 桁のベクトルを二元の桁集合へ持ち上げる"""
        try:
            with self._precision():
                theta = self.store.vector(vector_id)
                lifted = cantor_lift(theta, base, digit_sets, check_digits)
                source = self.store.sources.get(vector_id, "")
                vec_id = self.store.add_vector(lifted, source)
                return success({"vector_id": vec_id, "vector": lifted.to_json()})
        except Exception as error:
            return failure(error)

    async def digit_family(self, kind: str, m: int, depth: int, base: int = 2,
                           exponents: Optional[List[int]] = None, sequence_id: Optional[str] = None,
                           params: Optional[Dict[str, Any]] = None, sample_seed: Optional[int] = None) -> str:
        """桁集合族を作り、seed があれば要素を一つ取り出す"""
        try:
            with self._precision():
                if exponents is None:
                    if sequence_id is None:
                        raise ValueError("exponents か sequence_id が必要です")
                    exponents = self.store.sequence(sequence_id).exponents
                    if not exponents:
                        raise ValueError("数列に指数列がありません")
                options: Dict[str, Any] = {}
                for key, value in (params or {}).items():
                    options[key] = parse_phi(value) if key == "psi" else as_rational(value)
                family = build_digit_family(kind, exponents, m, depth, base, **options)
                result: Dict[str, Any] = {"family_id": self.store.add_family(family), "family": family.to_json()}
                result["falconer"] = {
                    str(i): {"P": family.falconer_data(i)[0], "eps": family.falconer_data(i)[1]}
                    for i in range(1, m + 1)
                }
                if sample_seed is not None:
                    vec = sample_member(family, sample_seed)
                    result["vector_id"] = self.store.add_vector(vec)
                    result["vector"] = vec.to_json()
                return success(result)
        except Exception as error:
            return failure(error)
