"""検証ツール（ψ の総当たり・C1/C2/C3・指数の推定・一次形式）"""

from typing import ContextManager, Dict, List, Optional

from ..config import RunConfig, load_config
from ..numkit import BitBudget, as_rational, bit_budget
from ..phi import parse_phi
from ..verify import (
    DEFAULT_Y_BUDGET,
    NormDescriptor,
    check_C1,
    check_C3,
    checkpoint_C2,
    lambda_estimate,
    psi,
    psi_linear_form,
    psi_sweep,
    theta_estimate,
)
from .store import ObjectStore, failure, success


class VerificationTools:
    """保存済みベクトルの検証をサポートするクラス"""

    def __init__(self, store: Optional[ObjectStore] = None, config: Optional[RunConfig] = None):
        self.store = store or ObjectStore()
        self.config = config or load_config()
        self.workers = self.config.workers
        self.q_budget = self.config.q_budget

    def _precision(self) -> ContextManager[BitBudget]:
        return bit_budget(self.config.precision_bits, self.config.max_precision_bits)

    def _budget(self) -> Dict[str, int]:
        return {"q_budget": self.q_budget, "workers": self.workers}

    async def compute_psi(self, vector_id: str, Q: int, norm: str = "max") -> str:
        """ψ(Q) の包含"""
        try:
            with self._precision():
                vec = self.store.vector(vector_id)
                result = psi(vec, Q, NormDescriptor.parse(norm), **self._budget())
                return success(result.to_json())
        except Exception as error:
            return failure(error)

    async def sweep_psi(self, vector_id: str, Q_max: int, norm: str = "max") -> str:
        """ψ の更新点の一覧"""
        try:
            with self._precision():
                vec = self.store.vector(vector_id)
                points = psi_sweep(vec, Q_max, NormDescriptor.parse(norm), **self._budget())
                return success({"Q_max": Q_max, "drops": [p.to_json() for p in points]})
        except Exception as error:
            return failure(error)

    async def check_uniform(self, vector_id: str, Q_from: int, Q_to: int, phi: Optional[str] = None,
                            factor: str = "1", norm: str = "max") -> str:
        """Q_from ≤ Q ≤ Q_to で ψ(Q) < factor·Φ(Q)"""
        try:
            with self._precision():
                vec = self.store.vector(vector_id)
                fn = parse_phi(phi or vec.provenance.get("phi", ""))
                report = check_C1(vec, fn, Q_from, Q_to, NormDescriptor.parse(norm), as_rational(factor),
                                  **self._budget())
                return success(report.to_json())
        except Exception as error:
            return failure(error)

    async def check_checkpoint(self, vector_id: str, f: int = 1, tolerance: str = "1/50") -> str:
        """Q_f での ψ/Φ の比"""
        try:
            with self._precision():
                vec = self.store.vector(vector_id)
                seq = self.store.sequence_for(vector_id)
                fn = parse_phi(seq.fn_descriptor)
                report = checkpoint_C2(vec, seq, f, fn, as_rational(tolerance), **self._budget())
                return success(report.to_json())
        except Exception as error:
            return failure(error)

    async def check_liouville(self, vector_id: str, N: str = "2", levels: Optional[List[int]] = None) -> str:
        """q = a_{mn} での極端に良い近似"""
        try:
            with self._precision():
                vec = self.store.vector(vector_id)
                seq = self.store.sequence_for(vector_id)
                verdicts = check_C3(vec, seq, as_rational(N), levels or range(1, seq.depth + 1))
                return success({"verdicts": verdicts})
        except Exception as error:
            return failure(error)

    async def estimate_theta(self, vector_id: str, norm: str = "max") -> str:
        """Q^(1/m)·ψ(Q) の上限の推定"""
        try:
            with self._precision():
                vec = self.store.vector(vector_id)
                seq = self.store.sequence_for(vector_id)
                return success(theta_estimate(vec, seq, NormDescriptor.parse(norm), **self._budget()))
        except Exception as error:
            return failure(error)

    async def estimate_lambda(self, vector_id: str, Q_max: Optional[int] = None, norm: str = "max") -> str:
        """近似指数の推定（Q_max を省くと元の数列のチェックポイントまで）"""
        try:
            with self._precision():
                vec = self.store.vector(vector_id)
                scope = Q_max if Q_max is not None else self.store.sequence_for(vector_id)
                return success(lambda_estimate(vec, scope, NormDescriptor.parse(norm), **self._budget()))
        except Exception as error:
            return failure(error)

    async def linear_form_psi(self, vector_id: str, Q_star: int, y_budget: int = DEFAULT_Y_BUDGET) -> str:
        """一次形式の ψ*(Q*)"""
        try:
            with self._precision():
                vec = self.store.vector(vector_id)
                result = psi_linear_form(vec, Q_star, y_budget=y_budget, workers=self.workers)
                return success(result.to_json())
        except Exception as error:
            return failure(error)
