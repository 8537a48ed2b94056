"""近似関数 Φ と減衰性質の証明書、ディオファントス対の解法"""

import json
import logging
import math
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Dict, Optional, Tuple, Union

from mpmath import iv

from .errors import (
    IndeterminateComparisonError,
    InvalidArgumentError,
    OutOfDomainError,
    PreconditionError,
)
from .numkit import (
    Enclosure,
    QuadraticSurd,
    RealParam,
    as_int,
    as_rational,
    cf_expand,
    current_bit_budget,
    decide_less,
    interval_precision,
    iv_rational,
    iv_to_enclosure,
    parse_real,
    rational_power_enclosure,
    real_compare,
    real_enclosure,
    real_power_enclosure,
    require_param,
)

logger = logging.getLogger(__name__)


class PhiFamily(Enum):
    """近似関数の族"""
    POWER = "power"
    TABULATED = "tabulated"
    RESCALED = "rescaled"


class InterpolationRule(Enum):
    """表の補間規則"""
    STEP = "step"
    LINEAR = "linear"


class ApproxFn(ABC):
    """近似関数 Φ: ℕ → (0,1)"""

    family: PhiFamily
    t0: int

    @abstractmethod
    def enclose(self, t: int, bits: int) -> Enclosure:
        """幅 2^(−bits) 以下の Φ(t) の包含"""

    def exponent(self) -> Optional[RealParam]:
        """Φ(t) = C·t^(−τ) の形なら τ"""
        return None

    @property
    def nonincreasing(self) -> bool:
        return False

    @abstractmethod
    def describe(self) -> str:
        """記述子テキスト"""


def _validate_t(t: int) -> None:
    if isinstance(t, bool) or not isinstance(t, int) or t < 1:
        raise InvalidArgumentError(f"Invalid t: {t!r} (正の整数が必要)")


@dataclass(frozen=True)
class PowerFn(ApproxFn):
    """Φ(t) = c·t^(−τ)"""
    c: RealParam
    tau: RealParam
    t0: int = 1

    family = PhiFamily.POWER

    def __post_init__(self):
        if real_compare(self.c, 0) <= 0:
            raise InvalidArgumentError(f"Invalid c: {self.c} (c > 0 が必要)")
        if real_compare(self.tau, 0) <= 0:
            raise InvalidArgumentError(f"Invalid tau: {self.tau} (τ > 0 が必要)")

    def enclose(self, t: int, bits: int) -> Enclosure:
        _validate_t(t)
        target = Fraction(1, 1 << bits)
        work = bits + 8
        neg_tau = -self.tau if isinstance(self.tau, QuadraticSurd) else -Fraction(self.tau)
        while True:
            value = real_enclosure(self.c, work) * real_power_enclosure(t, neg_tau, work)
            if value.width <= target:
                return value
            if work > (1 << 16):
                raise IndeterminateComparisonError(f"Φ({t}) の包含が縮みません", work)
            work *= 2

    def exponent(self) -> Optional[RealParam]:
        return self.tau

    @property
    def nonincreasing(self) -> bool:
        return True

    def describe(self) -> str:
        return f"power:c={self.c},tau={self.tau}"


@dataclass(frozen=True)
class TabulatedFn(ApproxFn):
    """表で与えた Φ（表の外は定義域外）"""
    points: Tuple[Tuple[int, Fraction], ...]
    rule: InterpolationRule = InterpolationRule.STEP
    t0: int = 1

    family = PhiFamily.TABULATED

    def __post_init__(self):
        points = tuple(sorted((int(t), Fraction(v)) for t, v in self.points))
        if not points:
            raise InvalidArgumentError("空の表")
        ts = [t for t, _ in points]
        if len(set(ts)) != len(ts) or ts[0] < 1:
            raise InvalidArgumentError("表の t は相異なる正の整数が必要です")
        if any(not (0 < v < 1) for _, v in points):
            raise InvalidArgumentError("表の値は (0, 1) に入る必要があります")
        object.__setattr__(self, "points", points)

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "TabulatedFn":
        points = tuple((int(t), as_rational(v)) for t, v in data["points"])
        rule = InterpolationRule(data.get("rule", "step"))
        return cls(points, rule, int(data.get("t0", 1)))

    @property
    def table_range(self) -> Tuple[int, int]:
        return self.points[0][0], self.points[-1][0]

    def exact_value(self, t: int) -> Fraction:
        _validate_t(t)
        first, last = self.table_range
        if t < first or t > last:
            raise OutOfDomainError(f"t={t} は表の範囲 [{first}, {last}] の外です")
        lo, hi = 0, len(self.points) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.points[mid][0] <= t:
                lo = mid
            else:
                hi = mid - 1
        t_k, v_k = self.points[lo]
        if t_k == t or self.rule is InterpolationRule.STEP:
            return v_k
        t_next, v_next = self.points[lo + 1]
        return v_k + (v_next - v_k) * Fraction(t - t_k, t_next - t_k)

    def enclose(self, t: int, bits: int) -> Enclosure:
        return Enclosure.exact(self.exact_value(t))

    @property
    def nonincreasing(self) -> bool:
        values = [v for _, v in self.points]
        return all(a >= b for a, b in zip(values, values[1:]))

    def describe(self) -> str:
        return f"tabulated:{len(self.points)} points,{self.rule.value}"


@dataclass(frozen=True)
class RescaledFn(ApproxFn):
    """Φ̃(t) = factor·Φ(argument_scale·t)"""
    inner: ApproxFn
    factor: Fraction
    argument_scale: int = 1
    t0: int = 1

    family = PhiFamily.RESCALED

    def __post_init__(self):
        object.__setattr__(self, "factor", Fraction(self.factor))
        if self.factor <= 0 or self.argument_scale < 1:
            raise InvalidArgumentError("Invalid rescaling")

    def enclose(self, t: int, bits: int) -> Enclosure:
        _validate_t(t)
        extra = max(0, self.factor.numerator.bit_length() - self.factor.denominator.bit_length())
        return self.inner.enclose(self.argument_scale * t, bits + extra + 1).scale(self.factor)

    def exponent(self) -> Optional[RealParam]:
        return self.inner.exponent()

    @property
    def nonincreasing(self) -> bool:
        return self.inner.nonincreasing

    def describe(self) -> str:
        return f"rescaled:factor={self.factor},scale={self.argument_scale},inner=({self.inner.describe()})"


def parse_phi(descriptor: str) -> ApproxFn:
    """`power:c=<rat>,tau=<rat|sqrt(d)/k>` または `tabulated:<path.json>` を読む"""
    kind, _, body = descriptor.strip().partition(":")
    if kind == "power":
        params: Dict[str, str] = {}
        for item in body.split(","):
            key, sep, value = item.partition("=")
            if not sep:
                raise InvalidArgumentError(f"Invalid phi descriptor: {descriptor!r}")
            params[key.strip()] = value.strip()
        if "c" not in params or "tau" not in params:
            raise InvalidArgumentError(f"Invalid phi descriptor: {descriptor!r} (c と tau が必要)")
        return PowerFn(parse_real(params["c"]), parse_real(params["tau"]), as_int(params.get("t0", "1")))
    if kind == "tabulated":
        with open(body, encoding="utf-8") as f:
            return TabulatedFn.from_json(json.load(f))
    raise InvalidArgumentError(f"Invalid phi descriptor: {descriptor!r}")


def phi_eval(fn: ApproxFn, t: int, precision: int = 64) -> Enclosure:
    """Φ(t) の厳密な包含（幅 ≤ 2^(−precision)）"""
    _validate_t(t)
    if precision < 8:
        raise InvalidArgumentError(f"Invalid precision: {precision} (8 ビット以上)")
    return fn.enclose(t, precision)


def below_phi(value: Fraction, fn: ApproxFn, t: int, *,
              factor: Fraction = Fraction(1),
              start_bits: Optional[int] = None, max_bits: Optional[int] = None) -> bool:
    """value < factor·Φ(t) を判定する"""
    return decide_less(lambda bits: Enclosure.exact(value),
                       lambda bits: fn.enclose(t, bits).scale(factor),
                       start_bits, max_bits)


def _phi_vs_power(fn: ApproxFn, t: int, exponent: Fraction) -> bool:
    """t^(−exponent) < Φ(t)"""
    return decide_less(lambda bits: rational_power_enclosure(t, -exponent, bits),
                       lambda bits: fn.enclose(t, bits))


def _first_true(predicate: Callable[[int], bool], start: int = 1, cap: int = 1 << 512) -> int:
    """単調な述語が初めて真になる整数（指数探索＋二分探索）"""
    if predicate(start):
        return start
    lo, hi = start, start * 2
    while not predicate(hi):
        lo, hi = hi, hi * 2
        if hi > cap:
            raise PreconditionError("しきい値が探索上限を超えました")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    return hi


def find_threshold_H(fn: ApproxFn, m: int) -> int:
    """Q ≥ H で Φ(Q) > Q^(−1/(m−1)) となる最小の H"""
    if m < 2:
        raise InvalidArgumentError(f"Invalid m: {m}")
    exponent = Fraction(1, m - 1)
    if isinstance(fn, TabulatedFn):
        first, last = fn.table_range
        last_failure = first - 1
        for t in range(first, last + 1):
            if not _phi_vs_power(fn, t, exponent):
                last_failure = t
        if last_failure == last:
            raise PreconditionError("表の範囲内で (d2) のしきい値が見つかりません")
        return last_failure + 1
    tau = fn.exponent()
    if tau is None or real_compare(tau, exponent) >= 0:
        raise PreconditionError("(d2) が成り立たないため H が存在しません")
    return _first_true(lambda q: _phi_vs_power(fn, q, exponent), max(1, fn.t0))


class PropertyKind(Enum):
    """減衰性質"""
    D1 = "d1"
    D2 = "d2"
    D3 = "d3"
    D3_PRIME = "d3prime"
    D4 = "d4"
    DB = "D(b)"


class Verdict(Enum):
    """証明書の判定"""
    ANALYTIC_PASS = "analytic-pass"
    ANALYTIC_FAIL = "analytic-fail"
    SAMPLED_PASS = "sampled-pass"
    SAMPLED_FAIL = "sampled-fail"
    NOT_DECIDABLE = "not-decidable"


@dataclass
class PropertyCertificate:
    """性質の証明書"""
    property: PropertyKind
    verdict: Verdict
    witness: Dict[str, Any] = field(default_factory=dict)
    tested_range: Optional[Tuple[int, int]] = None

    @property
    def passed(self) -> bool:
        return self.verdict in (Verdict.ANALYTIC_PASS, Verdict.SAMPLED_PASS)

    def to_json(self) -> Dict[str, Any]:
        return {
            "property": self.property.value,
            "verdict": self.verdict.value,
            "witness": {k: str(v) for k, v in self.witness.items()},
            "tested_range": list(self.tested_range) if self.tested_range else None,
        }


_CERT_CACHE: Dict[Tuple[Any, ...], PropertyCertificate] = {}
_CERT_LOCK = threading.Lock()


def certify(fn: ApproxFn, prop: Union[PropertyKind, str], m: int, **params: Any) -> PropertyCertificate:
    """Φ の性質を判定する（冪関数族は解析的、表は標本範囲のみ）"""
    kind = PropertyKind(prop) if isinstance(prop, str) else prop
    if m < 1:
        raise InvalidArgumentError(f"Invalid m: {m}")
    key = (fn, kind, m, tuple(sorted(params.items())))
    with _CERT_LOCK:
        cached = _CERT_CACHE.get(key)
    if cached is not None:
        return cached
    if isinstance(fn, TabulatedFn):
        certificate = _certify_sampled(fn, kind, m, params)
    else:
        certificate = _certify_analytic(fn, kind, m, params)
    with _CERT_LOCK:
        _CERT_CACHE.setdefault(key, certificate)
    logger.debug(f"証明書 {kind.value} (m={m}): {certificate.verdict.value}")
    return certificate


def _real_sign_difference(x: RealParam, y: RealParam) -> int:
    if not isinstance(x, QuadraticSurd) and not isinstance(y, QuadraticSurd):
        diff = Fraction(x) - Fraction(y)
        return (diff > 0) - (diff < 0)
    if isinstance(y, QuadraticSurd) and not isinstance(x, QuadraticSurd):
        return -y.compare(x)
    if isinstance(x, QuadraticSurd) and not isinstance(y, QuadraticSurd):
        return x.compare(y)
    if x == y:
        return 0
    less = decide_less(lambda b: real_enclosure(x, b), lambda b: real_enclosure(y, b))
    return -1 if less else 1


def _certify_analytic(fn: ApproxFn, kind: PropertyKind, m: int,
                      params: Dict[str, Any]) -> PropertyCertificate:
    tau = fn.exponent()
    if tau is None:
        return PropertyCertificate(kind, Verdict.NOT_DECIDABLE)

    if kind is PropertyKind.D1:
        cmp = real_compare(tau, Fraction(1, m))
        if cmp < 0:
            return PropertyCertificate(kind, Verdict.ANALYTIC_FAIL)
        if cmp == 0:
            # Φ(t)·t^(1/m) は定数 Φ(1)
            if not below_phi_power(fn, 1, Fraction(1, m)):
                return PropertyCertificate(kind, Verdict.ANALYTIC_FAIL)
            return PropertyCertificate(kind, Verdict.ANALYTIC_PASS, {"t0": 1})
        t0 = _first_true(lambda t: below_phi_power(fn, t, Fraction(1, m)))
        return PropertyCertificate(kind, Verdict.ANALYTIC_PASS, {"t0": t0})

    if kind is PropertyKind.D2:
        if m < 2 or real_compare(tau, Fraction(1, m - 1)) >= 0:
            return PropertyCertificate(kind, Verdict.ANALYTIC_FAIL)
        return PropertyCertificate(kind, Verdict.ANALYTIC_PASS, {"H": find_threshold_H(fn, m)})

    if kind is PropertyKind.D3:
        return PropertyCertificate(kind, Verdict.ANALYTIC_PASS)

    if kind is PropertyKind.D3_PRIME:
        b = as_int(require_param(params, "b"))
        if params.get("r_exponent") is not None:
            e = parse_real(params["r_exponent"])
            ok = _real_sign_difference(e, tau) >= 0
            witness = {"b": b, "R": f"{b}^(-{e})"}
        else:
            R = as_rational(require_param(params, "R"))
            ok = _rational_le_power(R, b, tau)
            witness = {"b": b, "R": R}
        return PropertyCertificate(kind, Verdict.ANALYTIC_PASS if ok else Verdict.ANALYTIC_FAIL, witness)

    if kind is PropertyKind.D4:
        gamma = parse_real(require_param(params, "gamma"))
        if _real_sign_difference(tau, gamma) > 0:
            return PropertyCertificate(kind, Verdict.ANALYTIC_FAIL, {"gamma": gamma})
        eta = fn.enclose(1, 64).lower / 2
        return PropertyCertificate(kind, Verdict.ANALYTIC_PASS, {"gamma": gamma, "eta": eta})

    b = as_int(require_param(params, "b"))
    if not isinstance(tau, QuadraticSurd):
        return PropertyCertificate(kind, Verdict.ANALYTIC_FAIL, {"b": b})
    witness: Dict[str, Any] = {"b": b}
    if isinstance(fn, PowerFn) and not isinstance(fn.c, QuadraticSurd):
        pair = solve_pair_lemur(fn.c, tau, b, Fraction(1, 10), 1)
        witness.update({"A": pair.A, "B": pair.B, "eps": Fraction(1, 10)})
    return PropertyCertificate(kind, Verdict.ANALYTIC_PASS, witness)


def _rational_le_power(R: Fraction, b: int, tau: RealParam) -> bool:
    """R ≤ b^(−τ)"""
    power = real_power_enclosure(b, -tau if isinstance(tau, QuadraticSurd) else -Fraction(tau), 64)
    if power.is_exact:
        return R <= power.lower
    return decide_less(lambda bits: Enclosure.exact(R),
                       lambda bits: real_power_enclosure(
                           b, -tau if isinstance(tau, QuadraticSurd) else -Fraction(tau), bits))


def _certify_sampled(fn: TabulatedFn, kind: PropertyKind, m: int,
                     params: Dict[str, Any]) -> PropertyCertificate:
    first, last = fn.table_range
    tested = (first, last)
    ts = [t for t, _ in fn.points]

    if kind is PropertyKind.D1:
        for t in ts:
            if t >= fn.t0 and not below_phi_power(fn, t, Fraction(1, m)):
                return PropertyCertificate(kind, Verdict.SAMPLED_FAIL, {"first_failure": t}, tested)
        return PropertyCertificate(kind, Verdict.SAMPLED_PASS, {"t0": fn.t0}, tested)

    if kind is PropertyKind.D2:
        if m < 2:
            return PropertyCertificate(kind, Verdict.SAMPLED_FAIL, {}, tested)
        try:
            H = find_threshold_H(fn, m)
        except PreconditionError:
            return PropertyCertificate(kind, Verdict.SAMPLED_FAIL, {}, tested)
        return PropertyCertificate(kind, Verdict.SAMPLED_PASS, {"H": H}, tested)

    if kind is PropertyKind.D3:
        values = [v for _, v in fn.points]
        steady = fn.nonincreasing and all(b_ * 2 >= a_ for a_, b_ in zip(values, values[1:]))
        verdict = Verdict.SAMPLED_PASS if steady else Verdict.NOT_DECIDABLE
        return PropertyCertificate(kind, verdict, {}, tested)

    if kind is PropertyKind.D3_PRIME:
        b = as_int(require_param(params, "b"))
        if params.get("r_exponent") is not None:
            e = parse_real(params["r_exponent"])
            R_upper = real_power_enclosure(b, -e if isinstance(e, QuadraticSurd) else -Fraction(e), 64).upper
        else:
            R_upper = as_rational(require_param(params, "R"))
        for t in range(first, last // b + 1):
            if b * t < first:
                continue
            if not fn.exact_value(b * t) > R_upper * fn.exact_value(t):
                return PropertyCertificate(kind, Verdict.SAMPLED_FAIL, {"b": b, "first_failure": t}, tested)
        return PropertyCertificate(kind, Verdict.SAMPLED_PASS, {"b": b, "R": R_upper}, tested)

    if kind is PropertyKind.D4:
        gamma = parse_real(require_param(params, "gamma"))
        g = gamma if isinstance(gamma, QuadraticSurd) else Fraction(gamma)
        eta = min(v * real_power_enclosure(t, g, 64).lower for t, v in fn.points) / 2
        return PropertyCertificate(kind, Verdict.SAMPLED_PASS, {"gamma": gamma, "eta": eta}, tested)

    return PropertyCertificate(kind, Verdict.NOT_DECIDABLE, {}, tested)


def below_phi_power(fn: ApproxFn, t: int, exponent: Fraction) -> bool:
    """Φ(t) < t^(−exponent)"""
    return decide_less(lambda bits: fn.enclose(t, bits),
                       lambda bits: rational_power_enclosure(t, -exponent, bits))


@dataclass
class PairSolution:
    A: int
    B: int

    def to_json(self) -> Dict[str, int]:
        return {"A": self.A, "B": self.B}


def _floor_log(x: int, b: int) -> int:
    """b^k ≤ x となる最大の k（x ≥ 1）"""
    k, power = 0, 1
    while power * b <= x:
        power *= b
        k += 1
    return k


def verify_pair_lemuren(c: Fraction, m: int, b: int, A: int, B: int) -> bool:
    """c·b^(−B/m)·b^(−1/m) ≤ b^(−A) < c·b^(−B/m) を整数で確かめる"""
    u, v = c.numerator, c.denominator
    scaled = u ** m * b ** (m * A)
    return v ** m * b ** B < scaled <= v ** m * b ** (B + 1)


def solve_pair_lemuren(c: Union[Fraction, str], m: int, b: int, A_min: int = 1) -> PairSolution:
    """A ≥ A_min を固定し、B を条件を満たす最大の整数に取る"""
    c = as_rational(c)
    if not (0 < c <= 1) or m < 1 or b < 2:
        raise InvalidArgumentError(f"Invalid parameters: c={c}, m={m}, b={b}")
    u, v = c.numerator, c.denominator
    A = max(A_min, 1)
    while True:
        target = u ** m * b ** (m * A)
        bound = -((-target) // v ** m) - 1
        if bound >= b:
            B = _floor_log(bound, b)
            if verify_pair_lemuren(c, m, b, A, B):
                return PairSolution(A, B)
        A += 1


def verify_pair_lemur(c: Fraction, tau: QuadraticSurd, b: int, eps: Fraction, A: int, B: int) -> bool:
    """(1−ε)c·b^(−Bτ) < b^(−A) ≤ c·b^(−Bτ) を包含で確かめる"""
    power_bits = lambda bits: real_power_enclosure(b, (-tau).scaled(B), bits).scale(c)  # noqa: E731
    mid = Enclosure.exact(Fraction(1, b ** A))
    lower_ok = decide_less(lambda bits: power_bits(bits).scale(1 - eps), lambda bits: mid)
    upper_ok = not decide_less(lambda bits: power_bits(bits), lambda bits: mid)
    return lower_ok and upper_ok


def solve_pair_lemur(c: Union[Fraction, str], tau: Union[QuadraticSurd, str], b: int,
                     eps: Union[Fraction, str], size_min: int = 1) -> PairSolution:
    """0 ≤ (A − Bτ)·log b − log c < −log(1−ε) となる A, B ≥ size_min を探す"""
    c = as_rational(c)
    eps = as_rational(eps)
    tau = parse_real(tau) if isinstance(tau, str) else tau
    if not isinstance(tau, QuadraticSurd):
        raise InvalidArgumentError(f"τ={tau} は有理数です（無理数の τ が必要）")
    if c <= 0 or not (0 < eps < 1) or b < 2 or size_min < 1:
        raise InvalidArgumentError(f"Invalid parameters: c={c}, b={b}, eps={eps}, size_min={size_min}")

    with interval_precision(128):
        width = iv_to_enclosure(-iv.ln(iv_rational(1 - eps)) / iv.ln(iv.mpf(b))).lower

    # 近似分母 s_k で {Bτ} の隙間が width 未満になる窓の長さを決める
    depth = 4
    while True:
        expansion = cf_expand(tau, depth)
        denominators = [s for _, s in expansion.convergents]
        if Fraction(2, denominators[-1]) < width:
            window = denominators[-1] + denominators[-2]
            break
        depth += 4
    logger.debug(f"lemur 探索窓: {window}")

    B = size_min
    limit = size_min + 4 * window + 64
    while B <= limit:
        A = _candidate_A(c, tau, b, B, width)
        if A is not None and A >= size_min and verify_pair_lemur(c, tau, b, eps, A, B):
            return PairSolution(A, B)
        B += 1
    raise IndeterminateComparisonError("探索窓内で対が見つかりません", current_bit_budget().max_bits)


def _candidate_A(c: Fraction, tau: QuadraticSurd, b: int, B: int, width: Fraction) -> Optional[int]:
    """A = ⌈Bτ + log_b(1/c)⌉ が幅 width の条件を満たせば A"""
    bits = 96
    max_bits = current_bit_budget().max_bits
    while bits <= max_bits:
        with interval_precision(bits):
            x = iv_to_enclosure(tau.to_interval() * B + iv.ln(iv_rational(1 / c)) / iv.ln(iv.mpf(b)))
        lo_ceil = math.ceil(x.lower)
        if lo_ceil == math.ceil(x.upper):
            gap_lo = lo_ceil - x.upper
            gap_hi = lo_ceil - x.lower
            if gap_hi < width:
                return lo_ceil
            if gap_lo >= width:
                return None
        bits *= 2
    return None
