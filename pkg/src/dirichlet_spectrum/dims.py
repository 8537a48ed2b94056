"""次元の下界と定数の評価"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from mpmath import iv

from .errors import InvalidArgumentError, OutOfScopeError
from .numkit import (
    Enclosure,
    QuadraticSurd,
    as_int,
    as_rational,
    interval_precision,
    iv_rational,
    iv_to_enclosure,
    lcm_upto,
    parse_real,
    rational_power_enclosure,
    real_power_enclosure,
    require_param,
)

logger = logging.getLogger(__name__)

GRID_POINTS = 10 ** 4
STABILITY_WINDOW = 10
STABILITY_TOLERANCE = 1e-3
REPORT_BITS = 64


@dataclass
class DimBoundReport:
    formula: str
    inputs: Dict[str, Any]
    value: Enclosure
    trace: Dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> Dict[str, Any]:
        return {
            "formula": self.formula,
            "inputs": {k: str(v) for k, v in self.inputs.items()},
            "value": self.value.to_json(),
            "value_float": float(self.value),
            "trace": self.trace,
        }


def _window_report(formula: str, inputs: Dict[str, Any], terms: List[Enclosure]) -> DimBoundReport:
    """末尾の窓での最小値と安定性"""
    window = terms[-STABILITY_WINDOW:]
    value = Enclosure(min(t.lower for t in window), min(t.upper for t in window))
    midpoints = [float(t) for t in window]
    spread = max(midpoints) - min(midpoints)
    trace = {
        "terms": [float(t) for t in terms],
        "window": len(window),
        "spread": spread,
        "stable": spread < STABILITY_TOLERANCE,
    }
    return DimBoundReport(formula, inputs, value, trace)


def falconer_lower_bound(P: Sequence[int], eps: Sequence[Any], depth: Optional[int] = None) -> DimBoundReport:
    """log(P_1⋯P_{n−1}) / (−log(P_n ε_n)) の末尾での最小値"""
    depth = len(P) if depth is None else depth
    if depth < 1 or len(P) < depth or len(eps) < depth:
        raise InvalidArgumentError(f"P と eps は depth={depth} 個以上必要です")
    counts = [int(p) for p in P[:depth]]
    gaps = [as_rational(e) for e in eps[:depth]]
    inputs = {"depth": depth}
    if any(p < 2 for p in counts):
        return DimBoundReport("falconer", inputs, Enclosure.exact(0), {"note": "P_n < 2 (分岐なし)"})
    _check_falconer_data(gaps, [p * e for p, e in zip(counts, gaps)])

    terms: List[Enclosure] = []
    with interval_precision(REPORT_BITS + 32):
        log_product = iv.mpf(0)
        for p, e in zip(counts, gaps):
            denominator = -iv.ln(iv_rational(p * e))
            terms.append(iv_to_enclosure(log_product / denominator))
            log_product += iv.ln(iv.mpf(p))
    return _window_report("falconer", inputs, terms)


def _check_falconer_data(gaps: Sequence[Any], products: Sequence[Any]) -> None:
    if any(g <= 0 for g in gaps):
        raise InvalidArgumentError("ε_n は正である必要があります")
    if any(later >= earlier for earlier, later in zip(gaps, gaps[1:])):
        raise InvalidArgumentError("ε_n は狭義単調減少である必要があります")
    if any(product >= 1 for product in products):
        raise InvalidArgumentError("P_n·ε_n ≥ 1（対数が非正）")


def falconer_lower_bound_logs(log_P: Sequence[Any], log_eps: Sequence[Any]) -> DimBoundReport:
    """対数で与えたデータ版（二重指数的なデータ向け）"""
    if len(log_P) != len(log_eps) or not log_P:
        raise InvalidArgumentError("log_P と log_eps は同じ長さが必要です")
    logs_P = [as_rational(x) for x in log_P]
    logs_eps = [as_rational(x) for x in log_eps]
    inputs = {"depth": len(logs_P)}
    if any(x <= 0 for x in logs_P):
        return DimBoundReport("falconer-logs", inputs, Enclosure.exact(0), {"note": "P_n < 2 (分岐なし)"})
    if any(later >= earlier for earlier, later in zip(logs_eps, logs_eps[1:])):
        raise InvalidArgumentError("ε_n は狭義単調減少である必要があります")
    if any(p + e >= 0 for p, e in zip(logs_P, logs_eps)):
        raise InvalidArgumentError("P_n·ε_n ≥ 1（対数が非正）")
    terms = []
    total = Fraction(0)
    for p, e in zip(logs_P, logs_eps):
        terms.append(Enclosure.exact(total / -(p + e)))
        total += p
    return _window_report("falconer-logs", inputs, terms)


def gs0_log_data(m: int, gamma1: Any, gamma2: Any, depth: int) -> Dict[str, List[Fraction]]:
    """log H_1 = 1, log H_n = (mγ2)^(n−1) として log P_n と log ε_n を作る"""
    g1, g2 = as_rational(gamma1), as_rational(gamma2)
    if depth < 1 or not g2 > g1 > 1:
        raise InvalidArgumentError(f"Invalid data: γ1={g1}, γ2={g2}, depth={depth}")
    log_H = [(m * g2) ** (n - 1) for n in range(1, depth + 1)]
    return {
        "log_P": [(g2 - g1) * h for h in log_H],
        "log_eps": [-g2 * h for h in log_H],
    }


def _eq01(m: int, g1: Fraction, g2: Fraction) -> Fraction:
    base = 2 * (g2 - g1) / (g1 * (g2 * m - 1))
    total = base
    for i in range(3, m + 1):
        total += min((m * (g2 - g1) + i - 2) / (2 * (m * g2 - 1)),
                     ((i - 1) * g2 - g1) / (g1 * (m * g2 - 1)))
    return total


def _eq01_array(m: int, g1: float, g2: np.ndarray) -> np.ndarray:
    total = 2 * (g2 - g1) / (g1 * (g2 * m - 1))
    for i in range(3, m + 1):
        total = total + np.minimum((m * (g2 - g1) + i - 2) / (2 * (m * g2 - 1)),
                                   ((i - 1) * g2 - g1) / (g1 * (m * g2 - 1)))
    return total


def ohlele_bounds(m: int, gamma1: Any, gamma2: Any) -> Dict[str, Any]:
    """積集合の次元の二つの下界（和の形と m 倍の形）"""
    g1, g2 = as_rational(gamma1), as_rational(gamma2)
    if m < 2:
        raise InvalidArgumentError(f"Invalid m: {m}")
    if not (g2 >= g1 > 1):
        raise InvalidArgumentError(f"γ2 ≥ γ1 > 1 が必要です (γ1={g1}, γ2={g2})")
    eq01 = _eq01(m, g1, g2)
    eq02 = m * (g2 - g1) / (g1 * (g2 * m - 1))
    return {
        "m": m,
        "gamma1": str(g1),
        "gamma2": str(g2),
        "eq01": str(eq01),
        "eq02": str(eq02),
        "eq01_float": float(eq01),
        "eq02_float": float(eq02),
    }


def _hdd_objective(m: int, g2: np.ndarray) -> np.ndarray:
    return ((m - 1) * g2 - m) / (g2 ** 2 + (m - 1 / m) * g2 - 1)


def _golden_section(objective: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> float:
    ratio = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - ratio * (b - a)
    d = a + ratio * (b - a)
    while b - a > tol:
        if objective(c) > objective(d):
            b = d
        else:
            a = c
        c = b - ratio * (b - a)
        d = a + ratio * (b - a)
    return (a + b) / 2


def hdd_bound(m: int) -> DimBoundReport:
    """γ2 を最適に選んだときの次元の下界と格子最大化による照合"""
    if m < 2:
        raise InvalidArgumentError(f"Invalid m: {m} (m ≥ 2)")
    d = m * (m * m - m + 1)
    with interval_precision(REPORT_BITS + 64):
        root = iv.sqrt(iv.mpf(d))
        g2 = (m + root) / (m - 1)
        bound = root / (g2 ** 2 + (m - iv_rational(Fraction(1, m))) * g2 - 1)
        residual = (m - 1) * g2 ** 2 - 2 * m * g2 + m * (1 - m)
        g2_enc = iv_to_enclosure(g2)
        bound_enc = iv_to_enclosure(bound)
        residual_enc = iv_to_enclosure(residual)

    grid = np.linspace(1.0, 4.0 * (m + 1), GRID_POINTS)
    values = _hdd_objective(m, grid)
    k = int(np.argmax(values))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    refined = _golden_section(lambda x: float(_hdd_objective(m, np.array(x))), lo, hi)
    trace = {
        "gamma2_opt": float(g2_enc),
        "gamma2_surd": f"({m}+sqrt({d}))/{m - 1}",
        "grid_argmax": float(grid[k]),
        "refined_argmax": refined,
        "grid_difference": abs(refined - float(g2_enc)),
        "root_residual": float(max(abs(residual_enc.lower), abs(residual_enc.upper))),
    }
    logger.debug(f"hdd m={m}: γ2={trace['gamma2_opt']:.9f}, 格子 {trace['refined_argmax']:.9f}")
    return DimBoundReport("hdd", {"m": m}, bound_enc, trace)


def cosinus_check(m: int) -> DimBoundReport:
    """γ2 = √m, γ1 = γ2/m + 1 + 10^(−6) での和の値と 3m/8 との比"""
    if m < 8:
        raise InvalidArgumentError(f"Invalid m: {m} (m ≥ 8)")
    g2 = rational_power_enclosure(m, Fraction(1, 2), REPORT_BITS).lower
    g1 = g2 / m + 1 + Fraction(1, 10 ** 6)
    value = _eq01(m, g1, g2)
    reference = Fraction(3 * m, 8)
    trace = {"gamma1": float(g1), "gamma2": float(g2), "reference": str(reference),
             "ratio": float(value / reference)}
    return DimBoundReport("cosinus", {"m": m}, Enclosure.exact(value), trace)


def _above_golden_ratio(lam: Fraction) -> bool:
    """λ > (1+√5)/2"""
    return 2 * lam - 1 > 0 and (2 * lam - 1) ** 2 > 5


def beides_bound(m: int, lam: Any) -> DimBoundReport:
    """γ1 = λ+1 とし γ2 ∈ (λ+1, min{mλ, λ²}) を格子で最大化する"""
    lam = as_rational(lam)
    if m < 2:
        raise InvalidArgumentError(f"Invalid m: {m}")
    if not _above_golden_ratio(lam):
        raise OutOfScopeError(f"λ={lam} は黄金比以下です（範囲外）")
    g1 = lam + 1
    upper = min(m * lam, lam * lam)
    grid = np.linspace(float(g1), float(upper), GRID_POINTS + 2)[1:-1]
    values = _eq01_array(m, float(g1), grid)
    k = int(np.argmax(values))
    g2 = Fraction(float(grid[k]))
    if not g1 < g2 < upper:
        g2 = (g1 + upper) / 2
    value = _eq01(m, g1, g2)
    trace = {
        "gamma1": str(g1),
        "gamma2_grid_opt": float(g2),
        "interval": [str(g1), str(upper)],
        "asymptotic": float(Fraction(m) / (2 * lam)),
    }
    return DimBoundReport("beides", {"m": m, "lambda": lam}, Enclosure.exact(value), trace)


def _power_of_R(b: int, R: Optional[Any], r_exponent: Optional[Any], power: int) -> Enclosure:
    """R^power。R は有理数か b^(−e)"""
    if r_exponent is not None:
        e = parse_real(r_exponent)
        scaled = e.scaled(-power) if isinstance(e, QuadraticSurd) else -Fraction(e) * power
        return real_power_enclosure(b, scaled, REPORT_BITS)
    if R is None:
        raise InvalidArgumentError("R または r_exponent が必要です")
    R = as_rational(R)
    if not 0 < R <= 1:
        raise InvalidArgumentError(f"Invalid R: {R} (0 < R ≤ 1)")
    return Enclosure.exact(R ** power)


def misc_constants(request: str, **params: Any) -> DimBoundReport:
    """σ(m,b)、Ω(b,R)、m/(τ+1)、m(1−γ)、Γ_b"""
    def need(key: str) -> Any:
        return require_param(params, key, request)

    if request == "sigma":
        m, b = as_int(need("m")), as_int(need("b"))
        good = bool(params.get("good", True))
        if m < 1 or b < 2:
            raise InvalidArgumentError(f"Invalid sigma inputs: m={m}, b={b}")
        if good:
            value = rational_power_enclosure(b, Fraction(-1, m), REPORT_BITS)
        else:
            constant = Fraction(1, (b - 1) ** 3 * lcm_upto(b))
            value = rational_power_enclosure(b, Fraction(-(b + 2), m), REPORT_BITS).scale(constant)
        return DimBoundReport("sigma", {"m": m, "b": b, "good": good}, value)

    if request == "omega_cantor":
        b = as_int(need("b"))
        good = bool(params.get("good", True))
        if b < 2:
            raise InvalidArgumentError(f"Invalid base: {b}")
        if good:
            value = _power_of_R(b, params.get("R"), params.get("r_exponent"), 1)
        else:
            constant = Fraction(1, (b - 1) ** 3 * lcm_upto(b))
            value = _power_of_R(b, params.get("R"), params.get("r_exponent"), b + 2).scale(constant)
        inputs = {"b": b, "good": good, "R": params.get("R") or f"{b}^(-{params.get('r_exponent')})"}
        return DimBoundReport("omega_cantor", inputs, value)

    if request == "lemma_rem":
        m, tau = as_int(need("m")), as_rational(need("tau"))
        if m < 1 or tau <= 0:
            raise InvalidArgumentError(f"Invalid inputs: m={m}, τ={tau}")
        return DimBoundReport("lemma_rem", {"m": m, "tau": tau}, Enclosure.exact(Fraction(m) / (tau + 1)))

    if request == "packing":
        m, gamma = as_int(need("m")), as_rational(need("gamma"))
        if m < 1 or not 0 < gamma < 1:
            raise InvalidArgumentError(f"Invalid inputs: m={m}, γ={gamma}")
        return DimBoundReport("packing", {"m": m, "gamma": gamma}, Enclosure.exact(m * (1 - gamma)))

    if request == "gamma_b":
        b = as_int(need("b"))
        return DimBoundReport("gamma_b", {"b": b}, Enclosure.exact(lcm_upto(b)))

    raise InvalidArgumentError(f"Unknown request: {request}")


def dims_formula(name: str, **params: Any) -> Dict[str, Any]:
    """名前で公式を選んで JSON 用の辞書を返す"""
    def need(key: str) -> Any:
        return require_param(params, key, name)

    if name == "falconer":
        if "log_P" in params:
            return falconer_lower_bound_logs(need("log_P"), need("log_eps")).to_json()
        return falconer_lower_bound(need("P"), need("eps"), params.get("depth")).to_json()
    if name == "gs0":
        data = gs0_log_data(as_int(need("m")), need("gamma1"), need("gamma2"), as_int(params.get("depth", 40)))
        return falconer_lower_bound_logs(data["log_P"], data["log_eps"]).to_json()
    if name == "ohlele":
        return ohlele_bounds(as_int(need("m")), need("gamma1"), need("gamma2"))
    if name == "hdd":
        return hdd_bound(as_int(need("m"))).to_json()
    if name == "cosinus":
        return cosinus_check(as_int(need("m"))).to_json()
    if name == "beides":
        return beides_bound(as_int(need("m")), need("lambda")).to_json()
    return misc_constants(name, **params).to_json()
