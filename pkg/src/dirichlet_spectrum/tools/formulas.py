"""公式ツール（次元の下界・移行定理の定数）"""

from typing import Any, Dict, Optional

from ..dims import dims_formula
from ..transfer import Direction, TransferParams, fr_chain, german_map, kappa_bt, round_trip_constants
from .store import failure, success


class FormulaTools:
    """公式の評価をサポートするクラス"""

    async def dimension_formula(self, formula: str, params: Optional[Dict[str, Any]] = None) -> str:
        """falconer, gs0, ohlele, hdd, cosinus, beides, sigma, omega_cantor, lemma_rem, packing, gamma_b"""
        try:
            return success(dims_formula(formula, **(params or {})))
        except Exception as error:
            return failure(error)

    async def transfer_formula(self, action: str, m: int, params: Optional[Dict[str, Any]] = None) -> str:
        """german, fr, kappa, roundtrip"""
        params = params or {}
        try:
            if action == "german":
                direction = Direction(params.get("direction", "sim-to-lin"))
                result = german_map(TransferParams(m, direction, params["X"], params["U"])).to_json()
            elif action == "fr":
                result = fr_chain(m, c=params.get("c"), c_star=params.get("c_star"),
                                  c_tilde=params.get("c_tilde")).to_json()
            elif action == "kappa":
                result = kappa_bt(m, c_star=params.get("c_star"), log_c_star=params.get("log_c_star"))
            elif action == "roundtrip":
                result = round_trip_constants(m, params["c"], params["X"])
            else:
                raise ValueError(f"不明な action: {action}")
            return success(result)
        except Exception as error:
            return failure(error)
