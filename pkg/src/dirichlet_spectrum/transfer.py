"""同時近似と一次形式の間の移行（German の写像と定数の連鎖）"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Union

from .construct import ConstructedVector
from .errors import BudgetExceededError, InvalidArgumentError, OutOfDomainError
from .numkit import Enclosure, as_rational, log_enclosure, rational_power_enclosure
from .verify import DEFAULT_Y_BUDGET, psi_linear_form

logger = logging.getLogger(__name__)

TRANSFER_BITS = 96

Quantity = Union[int, Fraction, Enclosure]


class Direction(Enum):
    SIM_TO_LIN = "sim-to-lin"
    LIN_TO_SIM = "lin-to-sim"


def _as_enclosure(x: Quantity) -> Enclosure:
    if isinstance(x, Enclosure):
        return x
    return Enclosure.exact(as_rational(x))


def enclosure_power(x: Enclosure, exponent: Union[int, Fraction], bits: int = TRANSFER_BITS) -> Enclosure:
    """正の区間の有理数乗（単調性で端点ごとに評価）"""
    exponent = Fraction(exponent)
    if x.lower <= 0:
        raise OutOfDomainError(f"正の区間が必要です: [{x.lower}, {x.upper}]")
    low = rational_power_enclosure(x.lower, exponent, bits)
    high = rational_power_enclosure(x.upper, exponent, bits)
    if exponent >= 0:
        return Enclosure(low.lower, high.upper)
    return Enclosure(high.lower, low.upper)


def _k(m: int) -> Enclosure:
    """(m+1)^(1/(2m))"""
    return rational_power_enclosure(m + 1, Fraction(1, 2 * m), TRANSFER_BITS)


@dataclass
class TransferParams:
    m: int
    direction: Direction
    X: Quantity
    U: Quantity
    Y: Optional[Enclosure] = None
    V: Optional[Enclosure] = None

    def to_json(self) -> Dict[str, Any]:
        primed = "′" if self.direction is Direction.LIN_TO_SIM else ""
        X, U = _as_enclosure(self.X), _as_enclosure(self.U)
        result: Dict[str, Any] = {
            "m": self.m,
            "direction": self.direction.value,
            "X": X.to_json(),
            "U": U.to_json(),
        }
        if self.Y is not None and self.V is not None:
            result[f"Y{primed}"] = self.Y.to_json()
            result[f"V{primed}"] = self.V.to_json()
            result[f"Y{primed}_float"] = float(self.Y)
            result[f"V{primed}_float"] = float(self.V)
        return result


def german_map(params: TransferParams) -> TransferParams:
    """Y, V（または Y′, V′）を埋める"""
    m = params.m
    if m < 1:
        raise InvalidArgumentError(f"Invalid m: {m}")
    X, U = _as_enclosure(params.X), _as_enclosure(params.U)
    if X.lower <= 0 or U.lower <= 0:
        raise InvalidArgumentError("X, U は正である必要があります")
    k = _k(m)
    inverse_m = Fraction(1, m)
    if params.direction is Direction.SIM_TO_LIN:
        params.Y = k * enclosure_power(X, inverse_m)
        params.V = k * enclosure_power(X, inverse_m - 1) * U
    else:
        params.Y = k * X * enclosure_power(U, inverse_m - 1)
        params.V = k * enclosure_power(U, inverse_m)
    return params


@dataclass
class FrChain:
    m: int
    c: Optional[Fraction]
    c_star: Enclosure
    omega: Enclosure
    c_tilde_threshold: Optional[Enclosure] = None
    c_tilde: Optional[Fraction] = None
    C_tilde: Optional[Enclosure] = None
    flags: List[str] = field(default_factory=list)

    def to_json(self) -> Dict[str, Any]:
        result: Dict[str, Any] = {
            "m": self.m,
            "c": None if self.c is None else str(self.c),
            "c_star": self.c_star.to_json(),
            "c_star_float": float(self.c_star),
            "omega": self.omega.to_json(),
            "omega_float": float(self.omega),
            "flags": list(self.flags),
        }
        if self.c_tilde_threshold is not None:
            result["c_tilde_threshold"] = self.c_tilde_threshold.to_json()
        if self.C_tilde is not None:
            result["c_tilde"] = str(self.c_tilde)
            result["C_tilde"] = self.C_tilde.to_json()
            result["C_tilde_float"] = float(self.C_tilde)
        return result


def fr_chain(m: int, c: Optional[Any] = None, c_star: Optional[Any] = None,
             c_tilde: Optional[Any] = None) -> FrChain:
    """c から c*、ω を、c̃ から C̃ を計算する

    ω = (m+1)^(−m²−m)·c*^(m²) は c から書くと c^(m²)·(m+1)^(−m(m+1)/2) なので、
    c か c* のどちらかが有理数なら ω は厳密値になる。
    """
    if m < 1:
        raise InvalidArgumentError(f"Invalid m: {m}")
    if (c is None) == (c_star is None):
        raise InvalidArgumentError("c と c_star のどちらか一方を指定してください")
    flags: List[str] = []
    ratio = rational_power_enclosure(m + 1, Fraction(m + 1, 2 * m), TRANSFER_BITS)
    threshold = None
    if c is not None:
        c = as_rational(c)
        if not 0 < c <= 1:
            raise InvalidArgumentError(f"Invalid c: {c} (0 < c ≤ 1)")
        star = ratio.scale(c)
        omega = _omega_from_c(m, c)
        threshold = omega
    else:
        exact_star = as_rational(c_star)
        if exact_star <= 0:
            raise InvalidArgumentError(f"Invalid c*: {exact_star}")
        star = Enclosure.exact(exact_star)
        omega = Enclosure.exact(exact_star ** (m * m) / Fraction(m + 1) ** (m * m + m))
    if star.lower > 1:
        flags.append("c_star_exceeds_one")
        logger.warning(f"c* > 1 (m={m}): 連鎖の前提を満たしません")

    chain = FrChain(m, c, star, omega, threshold)
    if c_tilde is not None:
        chain.c_tilde = as_rational(c_tilde)
        if chain.c_tilde <= 0:
            raise InvalidArgumentError(f"Invalid c̃: {chain.c_tilde}")
        chain.C_tilde = ratio * rational_power_enclosure(chain.c_tilde, Fraction(1, m * m), TRANSFER_BITS)
        if chain.C_tilde.lower > 1:
            chain.flags.append("C_tilde_exceeds_one")
    chain.flags[:0] = flags
    return chain


def _omega_from_c(m: int, c: Fraction) -> Enclosure:
    """c^(m²)·(m+1)^(−m(m+1)/2)（m(m+1) は偶数なので指数は整数）"""
    return Enclosure.exact(c ** (m * m) / Fraction(m + 1) ** (m * (m + 1) // 2))


def kappa_bt(m: int, c_star: Optional[Any] = None, log_c_star: Optional[Any] = None) -> Dict[str, Any]:
    """log κ_m = −20(m+1)³(m+10) と log ω の比較"""
    if m < 2:
        raise InvalidArgumentError(f"Invalid m: {m} (m ≥ 2)")
    log_kappa = -20 * (m + 1) ** 3 * (m + 10)
    result: Dict[str, Any] = {"m": m, "log_kappa": log_kappa}
    if c_star is None and log_c_star is None:
        return result
    log_base = log_enclosure(m + 1, TRANSFER_BITS)
    if log_c_star is not None:
        log_star = Enclosure.exact(as_rational(log_c_star))
    else:
        log_star = log_enclosure(as_rational(c_star), TRANSFER_BITS)
    log_omega = log_star.scale(m * m) + log_base.scale(-(m * m + m))
    result["log_omega"] = log_omega.to_json()
    result["log_omega_float"] = float(log_omega)
    if log_omega.lower > log_kappa:
        result["comparison"] = "fr-stronger"
    elif log_omega.upper < log_kappa:
        result["comparison"] = "bt-stronger"
    else:
        result["comparison"] = "indeterminate"
    return result


def transfer_verify(vec: Union[ConstructedVector, Sequence[Any]], c: Any, Q_star_list: Sequence[int], *,
                    y_budget: int = DEFAULT_Y_BUDGET, workers: int = 1) -> Dict[str, Any]:
    """総当たりの ψ*(Q*) が c*·Q*^(−m) 以下であることを確かめる"""
    if not isinstance(vec, ConstructedVector):
        vec = ConstructedVector.exact(vec)
    m = vec.m
    chain = fr_chain(m, c=c)
    entries: List[Dict[str, Any]] = []
    for Q_star in Q_star_list:
        bound = chain.c_star.scale(Fraction(1, Q_star ** m))
        try:
            found = psi_linear_form(vec, Q_star, y_budget=y_budget, workers=workers)
        except BudgetExceededError as e:
            logger.warning(f"Q*={Q_star} をスキップ: {e}")
            entries.append({"Q_star": Q_star, "status": "skipped", "note": str(e)})
            continue
        if found.value.upper <= bound.lower:
            status = "pass"
        elif found.value.lower > bound.upper:
            status = "fail"
        else:
            status = "indeterminate"
        entries.append({
            "Q_star": Q_star,
            "status": status,
            "psi_star": found.value.to_json(),
            "psi_star_float": float(found.value),
            "witness": list(found.argmin_y),
            "bound": bound.to_json(),
            "bound_float": float(bound),
            "margin": float(bound.lower - found.value.upper),
        })
    checked = [e for e in entries if e["status"] != "skipped"]
    return {
        "m": m,
        "c": str(as_rational(c)),
        "c_star": chain.c_star.to_json(),
        "entries": entries,
        "passed": bool(checked) and all(e["status"] == "pass" for e in checked),
    }


def round_trip_constants(m: int, c: Any, X: Any) -> Dict[str, Any]:
    """sim-to-lin と lin-to-sim を続けて適用し、定数の受け渡しを確かめる"""
    c, X = as_rational(c), as_rational(X)
    if X <= 0:
        raise InvalidArgumentError(f"Invalid X: {X}")
    chain = fr_chain(m, c=c)
    U = rational_power_enclosure(X, Fraction(-1, m), TRANSFER_BITS).scale(c)
    forward = german_map(TransferParams(m, Direction.SIM_TO_LIN, X, U))
    product = forward.V * enclosure_power(forward.Y, m)
    identity_ok = product.lower <= chain.c_star.upper and chain.c_star.lower <= product.upper

    c_tilde = chain.omega.lower
    closing = fr_chain(m, c=c, c_tilde=c_tilde)
    U_back = enclosure_power(forward.Y, -m).scale(c_tilde)
    backward = german_map(TransferParams(m, Direction.LIN_TO_SIM, forward.Y, U_back))
    realized = backward.V * enclosure_power(backward.Y, Fraction(1, m))
    bounded = realized.upper <= closing.C_tilde.upper
    logger.debug(f"往復 m={m}: V·Y^m={float(product):.6g}, V′·Y′^(1/m)={float(realized):.6g}")
    return {
        "m": m,
        "c": str(c),
        "X": str(X),
        "c_star": chain.c_star.to_json(),
        "V_Y_m": product.to_json(),
        "identity_ok": identity_ok,
        "c_tilde": str(c_tilde),
        "realized_constant": realized.to_json(),
        "realized_constant_float": float(realized),
        "C_tilde": closing.C_tilde.to_json(),
        "C_tilde_float": float(closing.C_tilde),
        "bounded": bounded,
        "passed": identity_ok and bounded,
    }
