"""構成ベクトルの桁を自由に変えてできる集合族

基の構成では ξ_i の b 進桁は位置 c_{mn+i} で 1、それ以外で 0。
族ごとに決まる区間の桁を {0, 1} から自由に選び、集合の要素を作る。
"""

import logging
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

from mpmath import iv

from .construct import ConstructedVector
from .errors import IndeterminateComparisonError, InvalidArgumentError, PreconditionError, UnsupportedError
from .numkit import (
    Enclosure,
    as_rational,
    current_bit_budget,
    interval_precision,
    iv_to_enclosure,
    real_to_interval,
    require_param,
)
from .phi import PowerFn

logger = logging.getLogger(__name__)


class FamilyKind(Enum):
    S = "S"
    Q = "Qfamily"
    Q1_STAR = "Q1star"
    J_SCHEDULE = "Jschedule"


class DigitPolicy(Enum):
    FIXED_0 = "fixed-0"
    FIXED_1 = "fixed-1"
    FREE = "free"
    PRESCRIBED = "prescribed"


@dataclass(frozen=True)
class DigitInterval:
    """位置 start..end（両端含む）の桁の扱い"""
    start: int
    end: int
    policy: DigitPolicy
    digits: Tuple[int, ...] = ()

    @property
    def length(self) -> int:
        return self.end - self.start + 1

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"start": self.start, "end": self.end, "policy": self.policy.value}
        if self.digits:
            data["digits"] = "".join(str(d) for d in self.digits)
        return data


@dataclass
class DigitSetFamily:
    base: int
    m: int
    kind: FamilyKind
    params: Dict[str, Any]
    layout: List[List[DigitInterval]]
    end: int
    level_params: List[Dict[str, Any]] = field(default_factory=list)

    def free_blocks(self, i: int) -> List[DigitInterval]:
        """座標 i（1 始まり）の自由区間。隣接する区間はまとめる"""
        blocks: List[DigitInterval] = []
        for interval in self.layout[i - 1]:
            if interval.policy is not DigitPolicy.FREE:
                continue
            if blocks and blocks[-1].end + 1 == interval.start:
                blocks[-1] = DigitInterval(blocks[-1].start, interval.end, DigitPolicy.FREE)
            else:
                blocks.append(interval)
        return blocks

    def falconer_data(self, i: int) -> Tuple[List[int], List[Fraction]]:
        """座標 i の入れ子区間の分岐数 P と隙間 ε"""
        blocks = self.free_blocks(i)
        counts: List[int] = []
        gaps: List[Fraction] = []
        for k, block in enumerate(blocks):
            counts.append(2 ** block.length)
            gap = Fraction(1, self.base ** block.end)
            if k + 1 < len(blocks):
                gap -= Fraction(1, self.base ** (blocks[k + 1].start - 1))
            gaps.append(gap)
        return counts, gaps

    def to_json(self) -> Dict[str, Any]:
        return {
            "base": self.base,
            "m": self.m,
            "kind": self.kind.value,
            "params": {k: str(v) for k, v in self.params.items()},
            "end": self.end,
            "layout": [[interval.to_json() for interval in row] for row in self.layout],
            "levels": [{k: str(v) for k, v in level.items()} for level in self.level_params],
        }


def _tile(marks: List[DigitInterval], end: int) -> List[DigitInterval]:
    """指定区間を並べ、残りを 0 固定で埋める"""
    marks = sorted((mark for mark in marks if mark.start <= mark.end), key=lambda mark: mark.start)
    tiled: List[DigitInterval] = []
    position = 1
    for mark in marks:
        if mark.start < position:
            raise PreconditionError(f"区間が重なっています: 位置 {mark.start}")
        if mark.start > position:
            tiled.append(DigitInterval(position, mark.start - 1, DigitPolicy.FIXED_0))
        tiled.append(mark)
        position = mark.end + 1
    if position <= end:
        tiled.append(DigitInterval(position, end, DigitPolicy.FIXED_0))
    return tiled


def _ones(exponents: Sequence[int], m: int, i: int) -> List[DigitInterval]:
    return [DigitInterval(c, c, DigitPolicy.FIXED_1) for c in exponents[i - 1::m]]


def _free(start: int, end: int) -> DigitInterval:
    return DigitInterval(start, end, DigitPolicy.FREE)


def _check_q_parameters(m: int, gamma1: Fraction, gamma2: Fraction, star: bool) -> None:
    if not gamma1 > 1 + Fraction(1, m):
        raise InvalidArgumentError(f"γ1 > 1 + 1/m が成り立ちません (γ1={gamma1}, m={m})")
    if not gamma2 >= gamma1:
        raise InvalidArgumentError(f"γ2 ≥ γ1 が成り立ちません (γ1={gamma1}, γ2={gamma2})")
    if not m * (gamma1 - 1) > gamma2:
        raise InvalidArgumentError(f"m(γ1−1) > γ2 が成り立ちません (γ1={gamma1}, γ2={gamma2})")
    if star and not (gamma1 - 1) ** 2 > gamma2:
        raise InvalidArgumentError(f"(γ1−1)^2 > γ2 が成り立ちません (γ1={gamma1}, γ2={gamma2})")


def _q_marks(exponents: Sequence[int], m: int, n: int, start: int, i: int) -> List[DigitInterval]:
    """段 n の (i)/(ii)/(iii) の自由区間（座標 i）"""
    c_next = exponents[m * n]
    marks = [_free(start, c_next - 1)]
    if 3 <= i <= m - 1:
        marks.append(_free(2 * c_next + 1, i * c_next - 1))
    if i == m:
        marks.append(_free(2 * c_next + 1, exponents[m * (n + 1) - 1] - 1))
    return marks


def _binary_digits(value: Enclosure, start: int, stop: int) -> Optional[Tuple[int, ...]]:
    """位置 start..stop の二進桁（包含の両端で一致しなければ None）"""
    scale = 1 << stop
    low, high = math.floor(value.lower * scale), math.floor(value.upper * scale)
    if low != high:
        return None
    return tuple((low >> (stop - j)) & 1 for j in range(start, stop + 1))


def _leading_position(x: Fraction) -> int:
    """x ∈ (0, 1) の最初の二進桁 1 の位置"""
    j = max(0, x.denominator.bit_length() - x.numerator.bit_length())
    while x.numerator << j < x.denominator:
        j += 1
    while j > 0 and x.numerator << (j - 1) >= x.denominator:
        j -= 1
    return j


def _j_gamma1(psi: PowerFn, h: int, n: int) -> int:
    """γ1(n) = ⌊−log Ψ(H_n)/log H_n⌋ + 1（H_n = 2^h）"""
    bits = 64
    max_bits = current_bit_budget().max_bits
    while bits <= max_bits:
        with interval_precision(bits):
            ratio = real_to_interval(psi.tau) - iv.ln(real_to_interval(psi.c)) / (h * iv.ln(iv.mpf(2)))
            value = iv_to_enclosure(ratio)
        if math.floor(value.lower) == math.floor(value.upper):
            return math.floor(value.lower) + 1
        bits *= 2
    raise IndeterminateComparisonError(f"γ1({n}) が決まりません", max_bits)


def _j_schedule_level(psi: PowerFn, h: int, n: int) -> Tuple[int, int, Tuple[int, ...]]:
    """γ1(n)、J_n の終端、位置 ⌈γ1(n)h_n⌉ から終端までの Ψ(H_n)/H_n の二進桁

    J_n は Ψ(H_n)/H_n の先頭桁から n+1 桁。
    """
    gamma1 = _j_gamma1(psi, h, n)
    H = 1 << h
    first = gamma1 * h
    work = (gamma1 + 2) * h + n + 64
    while work <= (1 << 16):
        value = psi.enclose(H, work).scale(Fraction(1, H))
        if value.lower > 0:
            leading = _leading_position(value.lower)
            if leading == _leading_position(value.upper):
                last = max(leading, first) + n
                digits = _binary_digits(value, first, last)
                if digits is not None:
                    return gamma1, last, digits
        work *= 2
    raise IndeterminateComparisonError(f"Ψ(H_{n}) の二進桁が決まりません", work)


def build_digit_family(kind: Any, exponents: Sequence[int], m: int, depth: int,
                       base: int = 2, **params: Any) -> DigitSetFamily:
    """指数列 c_1, …, c_{m(depth+1)} から桁集合族の配置を作る"""
    family_kind = FamilyKind(kind) if isinstance(kind, str) else kind
    if m < 2 or depth < 1:
        raise InvalidArgumentError(f"Invalid m/depth: m={m}, depth={depth}")
    if base < 2:
        raise InvalidArgumentError(f"Invalid base: {base}")
    if len(exponents) < m * (depth + 1):
        raise InvalidArgumentError(f"指数列が短すぎます: {len(exponents)} < {m * (depth + 1)}")
    c = [int(x) for x in exponents[: m * (depth + 1)]]
    if any(x >= y for x, y in zip(c, c[1:])) or c[0] < 1:
        raise InvalidArgumentError("指数列は正で狭義単調増加が必要です")
    end = c[-1]
    marks: List[List[DigitInterval]] = [_ones(c, m, i) for i in range(1, m + 1)]
    levels: List[Dict[str, Any]] = []

    if family_kind is FamilyKind.S:
        gamma = as_rational(require_param(params, "gamma", "S"))
        eps = as_rational(params.get("eps", Fraction(1, 20)))
        if not (0 < gamma < 1) or eps <= 0 or gamma + eps >= 1:
            raise InvalidArgumentError(f"Invalid S parameters: γ={gamma}, ε={eps} (0 < γ, γ+ε < 1)")
        for n in range(depth + 1):
            c_next = c[m * n]
            floor_part = math.floor(c_next * (gamma + eps))
            start = floor_part + 1 if n == 0 else max(floor_part + 1, c[m * n - 1] + 1)
            for i in range(m):
                marks[i].append(_free(start, c_next - 1))
            levels.append({"n": n, "I_start": start, "I_end": c_next - 1})
        family_params: Dict[str, Any] = {"gamma": gamma, "eps": eps}

    elif family_kind in (FamilyKind.Q, FamilyKind.Q1_STAR):
        gamma1 = as_rational(require_param(params, "gamma1", family_kind.value))
        gamma2 = as_rational(require_param(params, "gamma2", family_kind.value))
        star = family_kind is FamilyKind.Q1_STAR
        _check_q_parameters(m, gamma1, gamma2, star)
        for n in range(1, depth + 1):
            h = c[m * n - 1]
            delta = Fraction(c[m * n], h)
            if delta <= gamma1:
                raise PreconditionError(f"δ_{n} = {delta} ≤ γ1 = {gamma1}")
            start = math.ceil(gamma1 * h)
            for i in range(1, m + 1):
                first = start
                if star and i == 1:
                    marked = math.floor(gamma1 * h)
                    marks[0].append(DigitInterval(marked, marked, DigitPolicy.FIXED_1))
                    first = max(start, marked + 1)
                marks[i - 1].extend(_q_marks(c, m, n, first, i))
            levels.append({"n": n, "h": h, "delta": delta})
        family_params = {"gamma1": gamma1, "gamma2": gamma2}

    elif family_kind is FamilyKind.J_SCHEDULE:
        psi = params.get("psi")
        if not isinstance(psi, PowerFn):
            raise UnsupportedError("Jschedule には冪関数族の Ψ が必要です")
        if base != 2:
            raise UnsupportedError("Jschedule は二進展開のみ対応しています")
        for n in range(1, depth + 1):
            h = c[m * n - 1]
            gamma1, last, digits = _j_schedule_level(psi, h, n)
            upper = min(m * (gamma1 - 1), (gamma1 - 1) ** 2)
            if upper <= gamma1:
                raise PreconditionError(f"γ2({n}) の区間 ({gamma1}, {upper}) が空です")
            gamma2 = Fraction(gamma1 + upper, 2)
            first = gamma1 * h
            if last >= c[m * n]:
                raise PreconditionError(f"J_{n} が位置 c_(mn+1) = {c[m * n]} に届きます")
            for i in range(1, m + 1):
                marks[i - 1].append(DigitInterval(first, last, DigitPolicy.PRESCRIBED, digits))
                marks[i - 1].extend(_q_marks(c, m, n, last + 1, i))
            levels.append({"n": n, "h": h, "gamma1": gamma1, "gamma2": gamma2, "J_start": first, "J_end": last})
        family_params = {"psi": psi.describe()}

    else:
        raise InvalidArgumentError(f"Unknown family: {kind}")

    layout = [_tile(row, end) for row in marks]
    logger.info(f"{family_kind.value} 族: m={m}, depth={depth}, 最終位置 {end}")
    return DigitSetFamily(base, m, family_kind, family_params, layout, end, levels)


def _interval_value(interval: DigitInterval, base: int, end: int, rng: random.Random) -> int:
    """end 桁目を 1 とする単位での区間の寄与"""
    if interval.policy is DigitPolicy.FIXED_0:
        return 0
    if interval.policy is DigitPolicy.FIXED_1:
        return sum(base ** (end - j) for j in range(interval.start, interval.end + 1))
    if interval.policy is DigitPolicy.PRESCRIBED:
        digits = interval.digits
    else:
        bits = rng.getrandbits(interval.length)
        digits = tuple((bits >> (interval.length - 1 - k)) & 1 for k in range(interval.length))
    if base == 2:
        value = 0
        for digit in digits:
            value = (value << 1) | digit
        return value << (end - interval.end)
    return sum(digit * base ** (end - j) for j, digit in zip(range(interval.start, interval.end + 1), digits))


def sample_member(family: DigitSetFamily, seed: int = 0) -> ConstructedVector:
    """族から要素を一つ選ぶ（同じ seed なら同じ要素）"""
    rng = random.Random(seed)
    scale = family.base ** family.end
    components = []
    for row in family.layout:
        numerator = sum(_interval_value(interval, family.base, family.end, rng) for interval in row)
        components.append(Fraction(numerator, scale))
    # end より後の桁は {0, 1}
    tail = Fraction(1, (family.base - 1) * scale)
    return ConstructedVector(
        m=family.m,
        components=components,
        truncation_level=None,
        tail_bound=tail,
        q_max_valid=math.ceil(Fraction(1, 1 << 30) / tail) - 1,
        terms=[],
        provenance={"mode": "digit-family", "kind": family.kind.value, "seed": seed, "base": family.base},
    )
