#!/usr/bin/env python3
"""ディリクレ・スペクトル MCP サーバーのメインモジュール"""

import asyncio
import logging
from typing import Any

from mcp.server import Server
from mcp.server.stdio import stdio_server
from mcp.types import Tool

from .tools.construction import ConstructionTools
from .tools.formulas import FormulaTools
from .tools.store import ObjectStore
from .tools.verification import VerificationTools

# ログ設定
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

# サーバーインスタンス
server = Server("dirichlet-spectrum")

# ツールインスタンス（構成物は共有の保管場所に置く）
store = ObjectStore()
construction = ConstructionTools(store)
verification = VerificationTools(store)
formulas = FormulaTools()

_NORM = {
    "type": "string",
    "description": "ノルム: max, p=2, weighted=1,1/2",
    "default": "max"
}

_VECTOR_ID = {
    "type": "string",
    "description": "construct_sequence などが返したベクトル ID"
}

# ツール登録
tools = [
    # 構成ツール
    Tool(
        name="construct_sequence",
        description="""近似関数 Φ に対して ψ_ξ ≍ Φ となる数列 a_j を段ごとに作り、証明書付きで返す。

モード:
- general: m ≥ 3
- m2: m = 2（L̃_n の規則）
- cantor: 基数 b と桁集合 W_i の積集合の中に作る

Φ の書式: power:c=9/10,tau=1/2 または tabulated:<path.json>
""",
        inputSchema={
            "type": "object",
            "properties": {
                "m": {"type": "integer", "description": "次元", "minimum": 2},
                "phi": {"type": "string", "description": "近似関数の記述"},
                "depth": {"type": "integer", "description": "構成する段数", "minimum": 0, "default": 1},
                "mode": {"type": "string", "enum": ["general", "m2", "cantor"], "default": "general"},
                "growth": {
                    "type": "string",
                    "enum": ["minimal-certified", "explicit", "exponent-only"],
                    "default": "minimal-certified"
                },
                "base": {"type": "integer", "description": "cantor / exponent-only の基数", "minimum": 2},
                "digit_sets": {
                    "type": "array",
                    "items": {"type": "array", "items": {"type": "integer"}},
                    "description": "桁集合 W_1, …, W_m"
                },
                "explicit_m": {"type": "array", "items": {"type": "integer"}, "description": "M_n の明示列"},
                "uniform_quotients": {"type": "boolean", "description": "等比の商を使う構成"},
                "truncation_level": {"type": "integer", "description": "ベクトルの打ち切り段", "minimum": 0}
            },
            "required": ["m", "phi"]
        }
    ),
    Tool(
        name="assemble_vector",
        description="保存済みの数列から指定した段で打ち切ったベクトルを作る",
        inputSchema={
            "type": "object",
            "properties": {
                "sequence_id": {"type": "string", "description": "数列 ID"},
                "truncation_level": {"type": "integer", "minimum": 0}
            },
            "required": ["sequence_id", "truncation_level"]
        }
    ),
    Tool(
        name="lift_to_cantor",
        description="桁が {0,1} のベクトルを二元の桁集合 W_i のカントール集合へ持ち上げる",
        inputSchema={
            "type": "object",
            "properties": {
                "vector_id": _VECTOR_ID,
                "base": {"type": "integer", "minimum": 2},
                "digit_sets": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
                "check_digits": {"type": "integer", "minimum": 1, "default": 10000}
            },
            "required": ["vector_id", "base", "digit_sets"]
        }
    ),
    Tool(
        name="digit_family",
        description="""指数列から桁集合族（S, Qfamily, Q1star, Jschedule）を作る。
sample_seed を渡すと族の要素を一つ取り出してベクトルとして保存する。""",
        inputSchema={
            "type": "object",
            "properties": {
                "kind": {"type": "string", "enum": ["S", "Qfamily", "Q1star", "Jschedule"]},
                "m": {"type": "integer", "minimum": 2},
                "depth": {"type": "integer", "minimum": 1},
                "base": {"type": "integer", "minimum": 2, "default": 2},
                "exponents": {"type": "array", "items": {"type": "integer"}},
                "sequence_id": {"type": "string", "description": "exponent-only で作った数列 ID"},
                "params": {"type": "object", "description": "gamma, eps, gamma1, gamma2, psi"},
                "sample_seed": {"type": "integer"}
            },
            "required": ["kind", "m", "depth"]
        }
    ),

    # 検証ツール
    Tool(
        name="compute_psi",
        description="ψ(Q) = min_{1≤q≤Q} |(‖qξ_1‖, …, ‖qξ_m‖)| を総当たりで厳密に求める",
        inputSchema={
            "type": "object",
            "properties": {
                "vector_id": _VECTOR_ID,
                "Q": {"type": "integer", "minimum": 1},
                "norm": _NORM
            },
            "required": ["vector_id", "Q"]
        }
    ),
    Tool(
        name="sweep_psi",
        description="[1, Q_max] での ψ の更新点をすべて返す",
        inputSchema={
            "type": "object",
            "properties": {
                "vector_id": _VECTOR_ID,
                "Q_max": {"type": "integer", "minimum": 1},
                "norm": _NORM
            },
            "required": ["vector_id", "Q_max"]
        }
    ),
    Tool(
        name="check_uniform",
        description="Q_from ≤ Q ≤ Q_to で ψ(Q) < factor·Φ(Q) を確かめる（factor > 1 でカントール版）",
        inputSchema={
            "type": "object",
            "properties": {
                "vector_id": _VECTOR_ID,
                "Q_from": {"type": "integer", "minimum": 1},
                "Q_to": {"type": "integer", "minimum": 1},
                "phi": {"type": "string", "description": "省略時は構成時の Φ"},
                "factor": {"type": "string", "default": "1"},
                "norm": _NORM
            },
            "required": ["vector_id", "Q_from", "Q_to"]
        }
    ),
    Tool(
        name="check_checkpoint",
        description="Q_f = a_{m(f+1)} − 1 での ψ(Q_f)/Φ(Q_f) とディリクレ積",
        inputSchema={
            "type": "object",
            "properties": {
                "vector_id": _VECTOR_ID,
                "f": {"type": "integer", "minimum": 1, "default": 1},
                "tolerance": {"type": "string", "default": "1/50"}
            },
            "required": ["vector_id"]
        }
    ),
    Tool(
        name="check_liouville",
        description="q = a_{mn} で ‖qξ‖ ≤ 2q/a_{mn+1} と実現した指数を調べる",
        inputSchema={
            "type": "object",
            "properties": {
                "vector_id": _VECTOR_ID,
                "N": {"type": "string", "default": "2"},
                "levels": {"type": "array", "items": {"type": "integer"}}
            },
            "required": ["vector_id"]
        }
    ),
    Tool(
        name="estimate_theta",
        description="チェックポイントでの Q^(1/m)·ψ(Q) から上限を推定する（拡大的なノルムのみ）",
        inputSchema={
            "type": "object",
            "properties": {"vector_id": _VECTOR_ID, "norm": _NORM},
            "required": ["vector_id"]
        }
    ),
    Tool(
        name="estimate_lambda",
        description="ψ の更新点での log(1/ψ)/log q（Q_max を省くと元の数列の最後のチェックポイントまで）",
        inputSchema={
            "type": "object",
            "properties": {
                "vector_id": _VECTOR_ID,
                "Q_max": {"type": "integer", "minimum": 2, "description": "掃引の上端（省略可）"},
                "norm": _NORM
            },
            "required": ["vector_id"]
        }
    ),
    Tool(
        name="linear_form_psi",
        description="0 < |y|_∞ ≤ Q* の整数ベクトルでの ‖⟨y, ξ⟩‖ の最小",
        inputSchema={
            "type": "object",
            "properties": {
                "vector_id": _VECTOR_ID,
                "Q_star": {"type": "integer", "minimum": 1},
                "y_budget": {"type": "integer", "minimum": 1, "default": 1000000}
            },
            "required": ["vector_id", "Q_star"]
        }
    ),

    # 公式ツール
    Tool(
        name="dimension_formula",
        description="""次元の下界と定数を評価する。

formula: falconer, gs0, ohlele, hdd, cosinus, beides, sigma, omega_cantor, lemma_rem, packing, gamma_b
""",
        inputSchema={
            "type": "object",
            "properties": {
                "formula": {"type": "string"},
                "params": {"type": "object", "description": "m, b, gamma1, gamma2, lambda, R, tau, P, eps など"}
            },
            "required": ["formula"]
        }
    ),
    Tool(
        name="transfer_formula",
        description="移行定理の写像（german）、定数の連鎖（fr）、κ_m との比較（kappa）、往復（roundtrip）",
        inputSchema={
            "type": "object",
            "properties": {
                "action": {"type": "string", "enum": ["german", "fr", "kappa", "roundtrip"]},
                "m": {"type": "integer", "minimum": 1},
                "params": {"type": "object", "description": "X, U, direction, c, c_star, c_tilde, log_c_star"}
            },
            "required": ["action", "m"]
        }
    )
]


@server.list_tools()
async def handle_list_tools() -> list[Tool]:
    """利用可能なツールのリストを返す"""
    return tools


@server.call_tool()
async def handle_call_tool(name: str, arguments: dict[str, Any]) -> list[dict[str, Any]]:
    """ツール呼び出しを処理する"""
    try:
        if name == "construct_sequence":
            result = await construction.construct_sequence(
                arguments["m"],
                arguments["phi"],
                arguments.get("depth", 1),
                arguments.get("mode", "general"),
                arguments.get("growth", "minimal-certified"),
                arguments.get("base"),
                arguments.get("digit_sets"),
                arguments.get("explicit_m"),
                arguments.get("uniform_quotients", False),
                arguments.get("truncation_level")
            )
        elif name == "assemble_vector":
            result = await construction.assemble_vector(
                arguments["sequence_id"],
                arguments["truncation_level"]
            )
        elif name == "lift_to_cantor":
            result = await construction.lift_to_cantor(
                arguments["vector_id"],
                arguments["base"],
                arguments["digit_sets"],
                arguments.get("check_digits", 10 ** 4)
            )
        elif name == "digit_family":
            result = await construction.digit_family(
                arguments["kind"],
                arguments["m"],
                arguments["depth"],
                arguments.get("base", 2),
                arguments.get("exponents"),
                arguments.get("sequence_id"),
                arguments.get("params"),
                arguments.get("sample_seed")
            )
        elif name == "compute_psi":
            result = await verification.compute_psi(
                arguments["vector_id"],
                arguments["Q"],
                arguments.get("norm", "max")
            )
        elif name == "sweep_psi":
            result = await verification.sweep_psi(
                arguments["vector_id"],
                arguments["Q_max"],
                arguments.get("norm", "max")
            )
        elif name == "check_uniform":
            result = await verification.check_uniform(
                arguments["vector_id"],
                arguments["Q_from"],
                arguments["Q_to"],
                arguments.get("phi"),
                arguments.get("factor", "1"),
                arguments.get("norm", "max")
            )
        elif name == "check_checkpoint":
            result = await verification.check_checkpoint(
                arguments["vector_id"],
                arguments.get("f", 1),
                arguments.get("tolerance", "1/50")
            )
        elif name == "check_liouville":
            result = await verification.check_liouville(
                arguments["vector_id"],
                arguments.get("N", "2"),
                arguments.get("levels")
            )
        elif name == "estimate_theta":
            result = await verification.estimate_theta(
                arguments["vector_id"],
                arguments.get("norm", "max")
            )
        elif name == "estimate_lambda":
            result = await verification.estimate_lambda(
                arguments["vector_id"],
                arguments.get("Q_max"),
                arguments.get("norm", "max")
            )
        elif name == "linear_form_psi":
            result = await verification.linear_form_psi(
                arguments["vector_id"],
                arguments["Q_star"],
                arguments.get("y_budget", 10 ** 6)
            )
        elif name == "dimension_formula":
            result = await formulas.dimension_formula(
                arguments["formula"],
                arguments.get("params")
            )
        elif name == "transfer_formula":
            result = await formulas.transfer_formula(
                arguments["action"],
                arguments["m"],
                arguments.get("params")
            )
        else:
            raise ValueError(f"不明なツール: {name}")

        return [{"type": "text", "text": result}]

    except Exception as e:
        logger.error(f"ツール実行エラー ({name}): {e}")
        return [{"type": "text", "text": f"エラー: {str(e)}"}]


async def async_main():
    """サーバーを開始する"""
    logger.info("ディリクレ・スペクトル MCP サーバーを開始します...")
    async with stdio_server() as (read_stream, write_stream):
        await server.run(
            read_stream,
            write_stream,
            server.create_initialization_options()
        )


def main():
    """エントリーポイント"""
    asyncio.run(async_main())


if __name__ == "__main__":
    main()
