"""漸化的な数列の構成とベクトルの組み立て

一般の m ≥ 3、m = 2 の変形、b 進カントール集合向けの三つのモードで
数列 a_1, a_2, … を段ごとに伸ばし、各段を証明書で確かめてから採用する。
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from mpmath import iv

from .errors import (
    ConstructionInfeasibleError,
    IndeterminateComparisonError,
    InvalidArgumentError,
    PreconditionError,
    UnsupportedError,
)
from .numkit import (
    Enclosure,
    QuadraticSurd,
    RealParam,
    ceil_log,
    current_bit_budget,
    digit_stream,
    digits_within,
    dist_enclosure,
    interval_precision,
    iv_to_enclosure,
    real_to_interval,
)
from .phi import (
    ApproxFn,
    PowerFn,
    PropertyKind,
    RescaledFn,
    below_phi,
    certify,
    find_threshold_H,
    _first_true,
)

logger = logging.getLogger(__name__)

# 打ち切りベクトルを使ってよい範囲: Q·tail < 2^(−30)
TRUNCATION_RESOLUTION = Fraction(1, 1 << 30)


class ConstructionMode(Enum):
    """構成モード"""
    GENERAL = "general"
    M2 = "m2"
    CANTOR = "cantor"


class GrowthPolicy(Enum):
    """M_n の選び方"""
    MINIMAL_CERTIFIED = "minimal-certified"
    EXPLICIT = "explicit"
    EXPONENT_ONLY = "exponent-only"


@dataclass
class ConstructionPlan:
    """構成の計画"""
    m: int
    fn: ApproxFn
    mode: ConstructionMode = ConstructionMode.GENERAL
    growth: GrowthPolicy = GrowthPolicy.MINIMAL_CERTIFIED
    depth: int = 1
    q_budget: int = 10 ** 7
    base: Optional[int] = None
    digit_sets: Optional[List[Tuple[int, ...]]] = None
    explicit_m: Optional[List[int]] = None
    margin: Fraction = Fraction(1, 1000)
    max_growth: int = 64
    uniform_quotients: bool = False
    exponent_growth: Fraction = Fraction(2)

    def validate(self) -> None:
        if self.m < 2:
            raise InvalidArgumentError(f"Invalid m: {self.m} (m ≥ 2)")
        if self.depth < 0:
            raise InvalidArgumentError(f"Invalid depth: {self.depth}")
        if self.mode is ConstructionMode.GENERAL and self.m < 3:
            raise InvalidArgumentError("general モードは m ≥ 3 が必要です（m = 2 は m2 モード）")
        if self.mode is ConstructionMode.M2 and self.m != 2:
            raise InvalidArgumentError("m2 モードは m = 2 が必要です")
        if self.mode is ConstructionMode.CANTOR:
            if self.base is None or self.base < 2:
                raise InvalidArgumentError("cantor モードには基数 b ≥ 2 が必要です")
            if self.digit_sets is None or len(self.digit_sets) != self.m:
                raise InvalidArgumentError("cantor モードには m 個の桁集合 W_i が必要です")
            for W in self.digit_sets:
                if len(set(W)) < 2 or any(w < 0 or w >= self.base for w in W):
                    raise InvalidArgumentError(f"Invalid digit set: {W} (W ⊆ {{0,…,b−1}}, |W| ≥ 2)")
        if self.growth is GrowthPolicy.EXPLICIT:
            if not self.explicit_m or len(self.explicit_m) < self.depth:
                raise InvalidArgumentError("explicit 成長には depth 個の M_n が必要です")
            small = [M for M in self.explicit_m if M < 2]
            if small:
                raise InvalidArgumentError(f"Invalid explicit M_n: {small} (M_n ≥ 2)")
        if self.growth is GrowthPolicy.EXPONENT_ONLY:
            if self.base is None or self.base < 2:
                raise InvalidArgumentError("exponent-only 成長には基数 b が必要です")
            if not isinstance(self.fn, PowerFn):
                raise UnsupportedError("exponent-only 成長は冪関数族のみ対応しています")
            if self.exponent_growth <= 1:
                raise InvalidArgumentError("exponent_growth は 1 より大きい必要があります")
        if self.max_growth < 2:
            raise InvalidArgumentError(f"Invalid max_growth: {self.max_growth}")

    @property
    def uniform(self) -> bool:
        return self.mode is ConstructionMode.M2 or self.uniform_quotients

    @property
    def is_good_product(self) -> bool:
        """すべての W_i が {0, 1} を含むか"""
        if self.digit_sets is None:
            return True
        return all({0, 1} <= set(W) for W in self.digit_sets)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    lhs: Optional[Fraction] = None
    rhs: Optional[Fraction] = None

    def to_json(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "detail": self.detail,
            "lhs": None if self.lhs is None else str(self.lhs),
            "rhs": None if self.rhs is None else str(self.rhs),
        }


@dataclass
class CertificateReport:
    """段 n の証明書"""
    level: int
    growth: int
    checks: List[CheckResult] = field(default_factory=list)
    pending: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed_checks(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_json(self) -> Dict[str, Any]:
        return {
            "level": self.level,
            "growth": self.growth,
            "passed": self.passed,
            "checks": [c.to_json() for c in self.checks],
            "pending": list(self.pending),
        }


@dataclass
class SequenceRecord:
    """構成された数列"""
    m: int
    mode: ConstructionMode
    a: List[int]
    M: List[int]
    L: List[int]
    H: int
    certificates: List[CertificateReport] = field(default_factory=list)
    base: Optional[int] = None
    exponents: Optional[List[int]] = None
    uniform_quotients: bool = False
    fn_descriptor: str = ""

    @property
    def depth(self) -> int:
        return len(self.M)

    @property
    def materialized(self) -> bool:
        return bool(self.a)

    def term(self, j: int) -> int:
        """a_j（1 始まり）"""
        if not self.materialized:
            raise UnsupportedError("exponent-only の数列は項を持ちません")
        if j < 1 or j > len(self.a):
            raise PreconditionError(f"a_{j} は構成されていません（{len(self.a)} 項）")
        return self.a[j - 1]

    def next_level_floor(self) -> int:
        """まだ作っていない a_{m(depth+1)+1} の下界（次の段でも a_{mn+1} ≥ a_{mn}^2）"""
        return self.a[-1] ** 2

    def tail_after(self, level: int) -> Fraction:
        """Σ_{n>level} 1/a_{mn+i} の上界 2/a_{m(level+1)+1}"""
        index = self.m * (level + 1) + 1
        if index <= len(self.a):
            return Fraction(2, self.a[index - 1])
        if level == self.depth:
            return Fraction(2, self.next_level_floor())
        raise PreconditionError(f"level {level} は構成の深さ {self.depth} を超えています")

    def partial_sums(self, level: int) -> List[Fraction]:
        return [sum((Fraction(1, self.a[self.m * n + i - 1]) for n in range(level + 1)), Fraction(0))
                for i in range(1, self.m + 1)]

    def checkpoint_Q(self, f: int) -> int:
        """Q_f = a_{m(f+1)} − 1"""
        return self.term(self.m * (f + 1)) - 1

    def to_json(self) -> Dict[str, Any]:
        return {
            "m": self.m,
            "mode": self.mode.value,
            "a": [str(x) for x in self.a],
            "M": list(self.M),
            "L": [str(x) for x in self.L],
            "H": self.H,
            "base": self.base,
            "exponents": None if self.exponents is None else list(self.exponents),
            "uniform_quotients": self.uniform_quotients,
            "phi": self.fn_descriptor,
            "certificates": [c.to_json() for c in self.certificates],
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "SequenceRecord":
        return cls(
            m=int(data["m"]),
            mode=ConstructionMode(data["mode"]),
            a=[int(x) for x in data["a"]],
            M=[int(x) for x in data["M"]],
            L=[int(x) for x in data["L"]],
            H=int(data["H"]),
            base=data.get("base"),
            exponents=data.get("exponents"),
            uniform_quotients=bool(data.get("uniform_quotients", False)),
            fn_descriptor=data.get("phi", ""),
        )


@dataclass
class ConstructedVector:
    """打ち切った級数ベクトル ξ_i = Σ 1/a_{mn+i}"""
    m: int
    components: List[Fraction]
    truncation_level: Optional[int] = None
    tail_bound: Fraction = Fraction(0)
    q_max_valid: Optional[int] = None
    terms: List[int] = field(default_factory=list)
    provenance: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def exact(cls, components: Sequence[Any]) -> "ConstructedVector":
        """有理数ベクトル（打ち切り誤差なし）"""
        values = [Fraction(c) for c in components]
        if not values:
            raise InvalidArgumentError("空のベクトル")
        return cls(len(values), values, provenance={"kind": "exact"})

    @property
    def is_exact(self) -> bool:
        return self.tail_bound == 0

    def to_json(self) -> Dict[str, Any]:
        return {
            "m": self.m,
            "mode": self.provenance.get("mode", "exact"),
            "a": [str(x) for x in self.terms],
            "components": [{"num": str(c.numerator), "den": str(c.denominator)} for c in self.components],
            "truncation_level": self.truncation_level,
            "tail_bound": str(self.tail_bound),
            "q_max_valid": None if self.q_max_valid is None else str(self.q_max_valid),
            "provenance": self.provenance,
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "ConstructedVector":
        components = [Fraction(int(c["num"]), int(c["den"])) for c in data["components"]]
        q_max = data.get("q_max_valid")
        return cls(
            m=int(data["m"]),
            components=components,
            truncation_level=data.get("truncation_level"),
            tail_bound=Fraction(data.get("tail_bound", "0")),
            q_max_valid=None if q_max is None else int(q_max),
            terms=[int(x) for x in data.get("a", [])],
            provenance=dict(data.get("provenance", {})),
        )


def q_max_for_tail(tail: Fraction) -> Optional[int]:
    """Q·tail < 2^(−30) を満たす最大の Q"""
    if tail == 0:
        return None
    return math.ceil(TRUNCATION_RESOLUTION / tail) - 1


def _check_preconditions(plan: ConstructionPlan) -> None:
    required = [PropertyKind.D1, PropertyKind.D2]
    for prop in required:
        certificate = certify(plan.fn, prop, plan.m)
        if not certificate.passed:
            raise PreconditionError(
                f"Φ は ({prop.value}) を満たしません: {certificate.verdict.value}")
    if plan.mode is ConstructionMode.CANTOR and plan.fn.exponent() is not None:
        tau = plan.fn.exponent()
        if isinstance(tau, QuadraticSurd):
            certificate = certify(plan.fn, PropertyKind.DB, plan.m, b=plan.base)
        else:
            certificate = certify(plan.fn, PropertyKind.D3_PRIME, plan.m, b=plan.base, r_exponent=tau)
        if not certificate.passed:
            raise PreconditionError(f"Φ は ({certificate.property.value}) を満たしません")
    if not plan.fn.nonincreasing:
        raise PreconditionError("Φ が非増加であることを確認できません")


def _largest_L(fn: ApproxFn, d: int, prev: int) -> int:
    """max{z: 1/d < Φ(Q), 1 ≤ Q ≤ z·prev}"""
    inverse = Fraction(1, d)
    holds = lambda z: below_phi(inverse, fn, z * prev)  # noqa: E731
    if not holds(1):
        return 0
    return _first_true(lambda z: not holds(z), 1) - 1


def _smallest_uniform_L(fn: ApproxFn, d: int, m: int, base: Optional[int] = None) -> int:
    """min{z: 1/z < Φ(Q), 1 ≤ Q ≤ z^(m−1)·d}（base を与えると b の冪に限る）"""
    if base is None:
        return _first_true(lambda z: below_phi(Fraction(1, z), fn, z ** (m - 1) * d), 1)
    ell = _first_true(lambda k: below_phi(Fraction(1, base ** (k - 1)), fn, base ** ((k - 1) * (m - 1)) * d), 1) - 1
    return base ** ell


def closed_form_L(c: Fraction, m: int, d: int, prev: int) -> int:
    """Φ = c·t^(−1/m) のときの L_n = ⌊(⌈c^m d^m⌉ − 1)/a_{mn+m−1}⌋"""
    return (math.ceil(c ** m * d ** m) - 1) // prev


def _largest_power_at_most(x: int, base: int) -> int:
    power = 1
    while power * base <= x:
        power *= base
    return power


def _extend_level(plan: ConstructionPlan, a: List[int], n: int, growth: int) -> Optional[Tuple[List[int], int]]:
    """段 n の m 項と L_n（L̃_n）を作る。L_n が 1 未満なら None"""
    m = plan.m
    prev = a[m * n - 1]
    if plan.mode is ConstructionMode.CANTOR:
        d = plan.base ** growth * prev
    else:
        d = prev ** growth
    if plan.uniform:
        base = plan.base if plan.mode is ConstructionMode.CANTOR else None
        L = _smallest_uniform_L(plan.fn, d, m, base)
        return [d * L ** j for j in range(m)], L
    terms = [d ** j for j in range(1, m)]
    L = _largest_L(plan.fn, d, terms[-1])
    if plan.mode is ConstructionMode.CANTOR and L >= 1:
        L = _largest_power_at_most(L, plan.base)
    if L < 1:
        return None
    terms.append(L * terms[-1])
    return terms, L


def _max_norm_upper(components: Sequence[Fraction], tail: Fraction, q: int) -> Fraction:
    worst = Fraction(0)
    for s in components:
        value = dist_enclosure(Enclosure(q * s, q * s + q * tail))
        worst = max(worst, value.upper)
    return worst


def _margin_check(name: str, fn: ApproxFn, components: Sequence[Fraction], tail: Fraction,
                  q: int, Q: int) -> CheckResult:
    upper = _max_norm_upper(components, tail, q)
    try:
        ok = below_phi(upper, fn, Q)
    except IndeterminateComparisonError as e:
        return CheckResult(name, False, f"indeterminate: {e}", upper)
    phi_lower = fn.enclose(Q, 64).lower
    return CheckResult(name, ok, f"q={q}, Q={Q}", upper, phi_lower)


def certify_level(seq: SequenceRecord, level: int, fn: ApproxFn,
                  margin: Fraction = Fraction(1, 1000)) -> CertificateReport:
    """段 level を厳密な部分和と尾部の包含で確かめる"""
    m = seq.m
    if level < 1 or level > seq.depth:
        raise PreconditionError(f"level {level} は構成されていません（depth {seq.depth}）")
    report = CertificateReport(level, seq.M[level - 1])
    a = seq.a
    upto = m * (level + 1)

    # (a) a_j | a_{j+1}
    broken = [j for j in range(1, upto) if a[j] % a[j - 1] != 0 or a[j] <= a[j - 1]]
    report.checks.append(CheckResult(
        "divisibility", not broken, f"a_j ∤ a_(j+1) at j={broken[0]}" if broken else ""))

    d = seq.term(m * level + 1)
    L = seq.L[level - 1]
    if seq.mode is ConstructionMode.M2 or seq.uniform_quotients:
        report.checks.append(CheckResult("reverse_inequality", L > d, f"L̃={L}, a={d}", Fraction(L), Fraction(d)))
    else:
        last = seq.term(m * level + m)
        ok = L <= d and last <= d ** m
        report.checks.append(CheckResult("L_bound", ok, f"L={L}, d={d}", Fraction(L), Fraction(d)))

    components = seq.partial_sums(level)
    tail = seq.tail_after(level)

    # (c) q = a_{mn}, Q = a_{mn+1} − 1
    report.checks.append(_margin_check("case1_margin", fn, components, tail,
                                       seq.term(m * level), d - 1))
    # (d) q = d_n, Q = a_{m(n+1)} − 1
    report.checks.append(_margin_check("case23_margin", fn, components, tail,
                                       d, seq.term(m * (level + 1)) - 1))

    # (e) f = level − 1 の誤差支配
    if level >= 2:
        f = level - 1
        Q_f = seq.checkpoint_Q(f)
        d_f = seq.term(m * f + 1)
        lhs = Q_f * Fraction(2, d)
        rhs = margin / d_f
        report.checks.append(CheckResult("error_domination", lhs < rhs, f"f={f}", lhs, rhs))
    report.pending.append(f"error_domination_pending(f={level})")

    if not report.passed:
        logger.warning(f"段 {level} の証明書が失敗: {report.failed_checks}")
    return report


def _growth_candidates(plan: ConstructionPlan, a: List[int], n: int) -> Iterable[int]:
    if plan.growth is GrowthPolicy.EXPLICIT:
        return [plan.explicit_m[n - 1]]
    if plan.mode is ConstructionMode.CANTOR:
        start = ceil_log(a[plan.m * n - 1], plan.base)
        return range(max(1, start), start + plan.max_growth + 1)
    return range(2, plan.max_growth + 1)


def build_sequence(plan: ConstructionPlan) -> SequenceRecord:
    """数列を段ごとに作り、各段を証明書で採否する"""
    plan.validate()
    _check_preconditions(plan)
    if plan.growth is GrowthPolicy.EXPONENT_ONLY:
        return _build_exponents(plan)

    H = find_threshold_H(plan.fn, plan.m)
    first = plan.base ** ceil_log(H, plan.base) if plan.mode is ConstructionMode.CANTOR else H
    a = [first ** j for j in range(1, plan.m + 1)]
    seq = SequenceRecord(plan.m, plan.mode, a, [], [], H, base=plan.base,
                         uniform_quotients=plan.uniform_quotients, fn_descriptor=plan.fn.describe())
    logger.info(f"H = {H}, 初期項 {a}")

    for n in range(1, plan.depth + 1):
        last_report: Optional[CertificateReport] = None
        for growth in _growth_candidates(plan, seq.a, n):
            extended = _extend_level(plan, seq.a, n, growth)
            if extended is None:
                last_report = CertificateReport(n, growth, [CheckResult("L_positive", False, "L_n < 1")])
                continue
            terms, L = extended
            candidate = SequenceRecord(plan.m, plan.mode, seq.a + terms, seq.M + [growth], seq.L + [L], H,
                                       seq.certificates, plan.base, None, plan.uniform_quotients,
                                       seq.fn_descriptor)
            report = certify_level(candidate, n, plan.fn, plan.margin)
            if report.passed:
                candidate.certificates = seq.certificates + [report]
                seq = candidate
                logger.info(f"段 {n}: M={growth}, L={L}")
                break
            last_report = report
        else:
            failed = last_report.failed_checks if last_report else []
            raise ConstructionInfeasibleError(
                f"段 {n} の証明書が成長上限で通りません: {failed}", report=last_report)

    if plan.mode is ConstructionMode.CANTOR:
        seq.exponents = [ceil_log(x, plan.base) for x in seq.a]
    return seq


def _integer_below(value: Callable[[int], Enclosure], exact: Optional[Fraction]) -> int:
    """x より真に小さい最大の整数"""
    if exact is not None:
        return math.ceil(exact) - 1
    bits = 64
    max_bits = current_bit_budget().max_bits
    while bits <= max_bits:
        e = value(bits)
        if math.ceil(e.lower) == math.ceil(e.upper):
            return math.ceil(e.lower) - 1
        bits *= 2
    raise IndeterminateComparisonError("指数の整数部が決まりません", max_bits)


def _integer_above(value: Callable[[int], Enclosure], exact: Optional[Fraction]) -> int:
    """y より真に大きい最小の整数"""
    if exact is not None:
        return math.floor(exact) + 1
    bits = 64
    max_bits = current_bit_budget().max_bits
    while bits <= max_bits:
        e = value(bits)
        if math.floor(e.lower) == math.floor(e.upper):
            return math.floor(e.lower) + 1
        bits *= 2
    raise IndeterminateComparisonError("指数の整数部が決まりません", max_bits)


def _log_scale(c: RealParam, tau: RealParam, base: int,
               formula: Callable[[Any, Any], Any]) -> Tuple[Callable[[int], Enclosure], Optional[Fraction]]:
    """formula(log_b c, τ) の包含関数と、有理数で閉じるときの厳密値"""
    def evaluate(bits: int) -> Enclosure:
        with interval_precision(bits):
            log_c = iv.ln(real_to_interval(c)) / iv.ln(iv.mpf(base))
            return iv_to_enclosure(formula(log_c, real_to_interval(tau)))

    exact = None
    if not isinstance(c, QuadraticSurd) and not isinstance(tau, QuadraticSurd):
        log_c = _exact_log(Fraction(c), base)
        if log_c is not None:
            exact = Fraction(formula(Fraction(log_c), Fraction(tau)))
    return evaluate, exact


def _exact_log(c: Fraction, base: int) -> Optional[int]:
    """c = b^k なら k"""
    num, den = c.numerator, c.denominator
    if num != 1 and den != 1:
        return None
    power = den if num == 1 else num
    k = 0
    while power % base == 0:
        power //= base
        k += 1
    if power != 1:
        return None
    return -k if num == 1 else k


def _build_exponents(plan: ConstructionPlan) -> SequenceRecord:
    """a_j = b^(c_j) の指数だけを持つ構成"""
    m, b = plan.m, plan.base
    fn: PowerFn = plan.fn  # type: ignore[assignment]
    H = find_threshold_H(fn, m)
    c1 = ceil_log(H, b)
    c = [j * c1 for j in range(1, m + 1)]
    growth_list: List[int] = []
    ells: List[int] = []
    certificates: List[CertificateReport] = []
    tau = fn.tau

    for n in range(1, plan.depth + 1):
        c_prev = c[m * n - 1]
        c_d = max(math.ceil(plan.exponent_growth * c_prev), c_prev + 1)
        report = CertificateReport(n, c_d - c_prev)
        if plan.uniform:
            value, exact = _log_scale(fn.c, tau, b,
                                      lambda log_c, t: (t * c_d - log_c) / (1 - t * (m - 1)))
            ell = _integer_above(value, exact)
            new = [c_d + j * ell for j in range(m)]
            report.checks.append(CheckResult("reverse_inequality", ell > c_d, f"ℓ={ell}, c={c_d}"))
        else:
            c_last = (m - 1) * c_d
            value, exact = _log_scale(fn.c, tau, b,
                                      lambda log_c, t: (c_d + log_c) / t - c_last)
            ell = _integer_below(value, exact)
            new = [j * c_d for j in range(1, m)] + [c_last + ell]
            report.checks.append(CheckResult("L_bound", 0 <= ell <= c_d, f"ℓ={ell}, c={c_d}"))
        ordered = all(x < y for x, y in zip(c[-1:] + new, new))
        report.checks.insert(0, CheckResult("divisibility", ordered, "c_j strictly increasing"))
        if not report.passed:
            raise ConstructionInfeasibleError(f"段 {n} の指数構成が成り立ちません", report=report)
        c.extend(new)
        growth_list.append(c_d - c_prev)
        ells.append(ell)
        certificates.append(report)

    return SequenceRecord(m, plan.mode, [], growth_list, ells, H, certificates, b, c,
                          plan.uniform_quotients, fn.describe())


def assemble_vector(seq: SequenceRecord, truncation_level: int) -> ConstructedVector:
    """ξ_i = Σ_{n ≤ truncation_level} 1/a_{mn+i} を厳密に足し合わせる"""
    if not seq.materialized:
        raise UnsupportedError("exponent-only の数列からはベクトルを作れません")
    if truncation_level < 0 or truncation_level > seq.depth:
        raise PreconditionError(f"truncation_level {truncation_level} は depth {seq.depth} を超えています")
    components = seq.partial_sums(truncation_level)
    tail = seq.tail_after(truncation_level)
    used = seq.a[: seq.m * (truncation_level + 1)]
    return ConstructedVector(
        m=seq.m,
        components=components,
        truncation_level=truncation_level,
        tail_bound=tail,
        q_max_valid=q_max_for_tail(tail),
        terms=list(used),
        provenance={"mode": seq.mode.value, "phi": seq.fn_descriptor, "depth": seq.depth},
    )


def auxiliary_phi(fn: ApproxFn, base: int, R: Optional[Fraction] = None) -> ApproxFn:
    """良くない積集合のための Φ̃ = (b−1)^(−2)·R·Φ

    R を省くと冪関数族の R·Φ(t) = Φ(bt) を使う。
    """
    factor = Fraction(1, (base - 1) ** 2)
    if R is None:
        if fn.exponent() is None:
            raise PreconditionError("R を指定してください（冪関数族以外）")
        return RescaledFn(fn, factor, base)
    return RescaledFn(fn, factor * Fraction(R), 1)


def split_digit_set(W: Sequence[int]) -> Tuple[int, int]:
    """W = {w2, w1 + w2} から (w1, w2)"""
    values = sorted(set(W))
    if len(values) != 2:
        raise UnsupportedError(f"|W| = {len(values)}: 二元の桁集合のみ持ち上げられます")
    return values[1] - values[0], values[0]


def cantor_lift(theta: ConstructedVector, base: int, digit_sets: Sequence[Sequence[int]],
                check_digits: int = 10 ** 4) -> ConstructedVector:
    """θ ∈ C_{b,{0,1}}^m を ξ_i = w_{i,1}θ_i + w_{i,2}/(b−1) で K に写す"""
    if len(digit_sets) != theta.m:
        raise InvalidArgumentError("桁集合の数が次元と一致しません")
    pairs = [split_digit_set(W) for W in digit_sets]
    for i, value in enumerate(theta.components, start=1):
        stream = digit_stream(value, base, check_digits)
        if not digits_within(stream, (0, 1)):
            position = stream.first_outside((0, 1))
            raise PreconditionError(f"θ_{i} の {base} 進桁が {{0,1}} の外です（位置 {position}）")

    lifted = [w1 * value + Fraction(w2, base - 1) for (w1, w2), value in zip(pairs, theta.components)]
    for i, (value, W) in enumerate(zip(lifted, digit_sets), start=1):
        stream = digit_stream(value, base, check_digits)
        if not digits_within(stream, W):
            raise PreconditionError(f"ξ_{i} の桁が W_{i} の外です（位置 {stream.first_outside(W)}）")

    tail = theta.tail_bound * max(w1 for w1, _ in pairs)
    provenance = dict(theta.provenance)
    provenance.update({"lift_base": base, "digit_sets": [sorted(set(W)) for W in digit_sets]})
    return ConstructedVector(
        m=theta.m,
        components=lifted,
        truncation_level=theta.truncation_level,
        tail_bound=tail,
        q_max_valid=q_max_for_tail(tail),
        terms=list(theta.terms),
        provenance=provenance,
    )


def construct_in_cantor_set(plan: ConstructionPlan, truncation_level: Optional[int] = None,
                            R: Optional[Fraction] = None) -> Tuple[SequenceRecord, ConstructedVector]:
    """K = C_{b,W_1} × … × C_{b,W_m} 内のベクトルを作る

    すべての W_i が {0, 1} を含むときは θ ∈ C_{b,{0,1}}^m をそのまま使い、
    そうでなければ Φ̃ で θ を作ってから二元の桁集合へ持ち上げる。
    """
    if plan.mode is not ConstructionMode.CANTOR:
        raise InvalidArgumentError("cantor モードの計画が必要です")
    plan.validate()
    level = plan.depth if truncation_level is None else truncation_level
    if plan.is_good_product:
        seq = build_sequence(plan)
        return seq, assemble_vector(seq, level)

    theta_plan = ConstructionPlan(**{**plan.__dict__, "fn": auxiliary_phi(plan.fn, plan.base, R)})
    seq = build_sequence(theta_plan)
    theta = assemble_vector(seq, level)
    logger.info(f"θ を W = {plan.digit_sets} へ持ち上げます")
    return seq, cantor_lift(theta, plan.base, plan.digit_sets)
