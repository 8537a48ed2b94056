"""ψ の総当たり計算とチェックポイント検証

ψ(Q) = min_{1≤q≤Q} |(‖qξ_1‖, …, ‖qξ_m‖)| を打ち切りベクトルの厳密な部分和で求め、
尾部の寄与だけ包含を広げる。q の範囲を区切ってプロセスに分け、最小値と最小の q を集約する。
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from mpmath import iv

from .construct import TRUNCATION_RESOLUTION, ConstructedVector, ConstructionMode, SequenceRecord
from .errors import (
    BudgetExceededError,
    IndeterminateComparisonError,
    InvalidArgumentError,
    PreconditionError,
    TruncationInsufficientError,
)
from .numkit import (
    Enclosure,
    as_rational,
    dist_enclosure,
    interval_precision,
    iv_rational,
    iv_to_enclosure,
    rational_power_enclosure,
)
from .phi import ApproxFn, below_phi

logger = logging.getLogger(__name__)

DEFAULT_Q_BUDGET = 10 ** 7
DEFAULT_Y_BUDGET = 10 ** 6
REPORT_BITS = 128


class NormKind(Enum):
    MAX = "max"
    P = "p"
    WEIGHTED_MAX = "weighted-max"


@dataclass(frozen=True)
class NormDescriptor:
    """成分ごとの距離に掛けるノルム"""
    kind: NormKind = NormKind.MAX
    p: int = 2
    weights: Tuple[Fraction, ...] = ()

    def __post_init__(self):
        if self.kind is NormKind.P and (not isinstance(self.p, int) or self.p < 1):
            raise InvalidArgumentError(f"Invalid p: {self.p} (整数 p ≥ 1)")
        if self.kind is NormKind.WEIGHTED_MAX:
            weights = tuple(Fraction(w) for w in self.weights)
            if not weights or any(w <= 0 for w in weights):
                raise InvalidArgumentError(f"Invalid weights: {self.weights}")
            object.__setattr__(self, "weights", weights)

    @classmethod
    def parse(cls, text: Optional[str]) -> "NormDescriptor":
        """`max`、`p=2`、`weighted=1,1/2` を読む"""
        if text is None or text.strip() in ("", "max"):
            return cls()
        key, _, value = text.strip().partition("=")
        if key == "p":
            return cls(NormKind.P, p=int(value))
        if key == "weighted":
            return cls(NormKind.WEIGHTED_MAX, weights=tuple(as_rational(w) for w in value.split(",")))
        raise InvalidArgumentError(f"Invalid norm: {text!r}")

    def _weights_for(self, m: int) -> Tuple[Fraction, ...]:
        if len(self.weights) != m:
            raise InvalidArgumentError(f"重みの数 {len(self.weights)} が次元 {m} と一致しません")
        return self.weights

    def expanding(self, m: int) -> bool:
        if self.kind is NormKind.WEIGHTED_MAX:
            return all(w <= 1 for w in self._weights_for(m))
        return True

    def chi(self, m: int) -> Fraction:
        """χ = min_i |e_i|"""
        if self.kind is NormKind.WEIGHTED_MAX:
            return min(self._weights_for(m))
        return Fraction(1)

    def omega(self, m: int) -> Fraction:
        """Ω = max_i |e_i|"""
        if self.kind is NormKind.WEIGHTED_MAX:
            return max(self._weights_for(m))
        return Fraction(1)

    def perturbation(self, m: int) -> Fraction:
        """各成分が δ 動いたときのノルムの変化の上界 / δ"""
        if self.kind is NormKind.P:
            return Fraction(m)
        return self.omega(m)

    def describe(self) -> str:
        if self.kind is NormKind.P:
            return f"p={self.p}"
        if self.kind is NormKind.WEIGHTED_MAX:
            return "weighted=" + ",".join(str(w) for w in self.weights)
        return "max"

    def certificate(self, m: int) -> Dict[str, Any]:
        return {
            "norm": self.describe(),
            "expanding": self.expanding(m),
            "chi": str(self.chi(m)),
            "omega": str(self.omega(m)),
        }

    def combine(self, values: Sequence[Enclosure], bits: int = REPORT_BITS) -> Enclosure:
        """成分の包含からノルムの包含を作る"""
        if self.kind is NormKind.MAX:
            return Enclosure(max(v.lower for v in values), max(v.upper for v in values))
        if self.kind is NormKind.WEIGHTED_MAX:
            scaled = [v.scale(w) for v, w in zip(values, self._weights_for(len(values)))]
            return Enclosure(max(v.lower for v in scaled), max(v.upper for v in scaled))
        exponent = Fraction(1, self.p)
        lower = rational_power_enclosure(sum(v.lower ** self.p for v in values), exponent, bits).lower
        upper = rational_power_enclosure(sum(v.upper ** self.p for v in values), exponent, bits).upper
        return Enclosure(lower, upper)


MAX_NORM = NormDescriptor()


@dataclass
class PsiResult:
    Q: int
    value: Enclosure
    argmin_q: int
    exact: bool

    def to_json(self) -> Dict[str, Any]:
        return {
            "Q": str(self.Q),
            "value": self.value.to_json(),
            "argmin_q": str(self.argmin_q),
            "exact": self.exact,
        }


@dataclass
class LinearFormResult:
    Q_star: int
    value: Enclosure
    argmin_y: Tuple[int, ...]
    exact: bool
    searched: int

    def to_json(self) -> Dict[str, Any]:
        return {
            "Q_star": str(self.Q_star),
            "value": self.value.to_json(),
            "argmin_y": list(self.argmin_y),
            "exact": self.exact,
            "searched": self.searched,
        }


def _as_vector(vec: Union[ConstructedVector, Sequence[Any]]) -> ConstructedVector:
    if isinstance(vec, ConstructedVector):
        return vec
    return ConstructedVector.exact(vec)


def required_truncation_level(vec: ConstructedVector, Q: int) -> int:
    """Q·tail < 2^(−30) を満たすのに必要な打ち切り段数

    未構成の段の初項は直前の項の 2 乗以上として見積もる。
    """
    level = vec.truncation_level or 0
    if vec.q_max_valid is None or Q <= vec.q_max_valid:
        return level
    if not vec.terms:
        return level + 1
    needed_bits = Q.bit_length() + 32
    floor_bits = vec.terms[-1].bit_length() - 1
    extra = 1
    while floor_bits * (2 ** extra) < needed_bits:
        extra += 1
    return level + extra


def _check_scope(vec: ConstructedVector, Q: int, q_budget: int) -> None:
    if isinstance(Q, bool) or not isinstance(Q, int) or Q < 1:
        raise InvalidArgumentError(f"Invalid Q: {Q!r}")
    if Q > q_budget:
        raise BudgetExceededError(f"Q={Q} は探索予算 {q_budget} を超えます", Q, q_budget)
    if vec.q_max_valid is not None and Q > vec.q_max_valid:
        level = required_truncation_level(vec, Q)
        raise TruncationInsufficientError(
            f"Q={Q} は打ち切りの有効範囲 {vec.q_max_valid} を超えます（段 {level} まで必要）", level)


def _scan_chunk(task: Tuple[Any, ...]) -> Tuple[Optional[int], int, List[Tuple[int, int]]]:
    """q ∈ [start, stop) の最小キーと最小の q、必要なら区間内の更新点"""
    numerators, D, start, stop, kind, p, weights, want_drops = task
    residues = [(start * n) % D for n in numerators]
    best_key: Optional[int] = None
    best_q = 0
    drops: List[Tuple[int, int]] = []
    for q in range(start, stop):
        if kind == "max":
            key = max(min(r, D - r) for r in residues)
        elif kind == "weighted-max":
            key = max(w * min(r, D - r) for w, r in zip(weights, residues))
        else:
            key = sum(min(r, D - r) ** p for r in residues)
        if best_key is None or key < best_key:
            best_key, best_q = key, q
            if want_drops:
                drops.append((q, key))
        for i, n in enumerate(numerators):
            r = residues[i] + n
            residues[i] = r - D if r >= D else r
    return best_key, best_q, drops


def _run_tasks(tasks: List[Tuple[Any, ...]], workers: int, function: Any = _scan_chunk) -> List[Any]:
    if workers <= 1 or len(tasks) == 1:
        return [function(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(function, tasks))


def _chunks(first: int, last: int, workers: int) -> List[Tuple[int, int]]:
    """[first, last] を連続区間に分ける"""
    total = last - first + 1
    if workers <= 1:
        return [(first, last + 1)]
    size = max(1, -(-total // (workers * 4)))
    return [(s, min(s + size, last + 1)) for s in range(first, last + 1, size)]


@dataclass(frozen=True)
class _Kernel:
    """ベクトルを共通分母 D の整数に直した評価器"""
    numerators: Tuple[int, ...]
    denominator: int
    tail: Fraction
    norm: NormDescriptor
    weight_numerators: Tuple[int, ...] = ()
    weight_denominator: int = 1

    @classmethod
    def build(cls, vec: ConstructedVector, norm: NormDescriptor) -> "_Kernel":
        D = math.lcm(*(c.denominator for c in vec.components))
        numerators = tuple((c.numerator * (D // c.denominator)) % D for c in vec.components)
        if norm.kind is NormKind.WEIGHTED_MAX:
            weights = norm._weights_for(vec.m)
            W = math.lcm(*(w.denominator for w in weights))
            return cls(numerators, D, vec.tail_bound, norm,
                       tuple(w.numerator * (W // w.denominator) for w in weights), W)
        return cls(numerators, D, vec.tail_bound, norm)

    def task(self, start: int, stop: int, want_drops: bool) -> Tuple[Any, ...]:
        return (self.numerators, self.denominator, start, stop, self.norm.kind.value,
                self.norm.p, self.weight_numerators, want_drops)

    def minimum(self, first: int, last: int, workers: int) -> Tuple[int, int]:
        tasks = [self.task(s, e, False) for s, e in _chunks(first, last, workers)]
        results = [(key, q) for key, q, _ in _run_tasks(tasks, workers) if key is not None]
        return min(results)

    def drops(self, last: int, workers: int) -> List[Tuple[int, int]]:
        """ψ の更新点 (q, key)"""
        tasks = [self.task(s, e, True) for s, e in _chunks(1, last, workers)]
        merged: List[Tuple[int, int]] = []
        for _, _, local in _run_tasks(tasks, workers):
            for q, key in local:
                if not merged or key < merged[-1][1]:
                    merged.append((q, key))
        return merged

    def truncated_value(self, key: int, bits: int = REPORT_BITS) -> Enclosure:
        D = self.denominator
        if self.norm.kind is NormKind.MAX:
            return Enclosure.exact(Fraction(key, D))
        if self.norm.kind is NormKind.WEIGHTED_MAX:
            return Enclosure.exact(Fraction(key, D * self.weight_denominator))
        return rational_power_enclosure(Fraction(key, D ** self.norm.p), Fraction(1, self.norm.p), bits)

    def enclosure(self, key: int, Q: int, bits: int = REPORT_BITS) -> Enclosure:
        """q ≤ Q の尾部の寄与まで広げた包含"""
        value = self.truncated_value(key, bits)
        if self.tail == 0:
            return value
        shift = self.norm.perturbation(len(self.numerators)) * Q * self.tail
        return Enclosure(max(Fraction(0), value.lower - shift), value.upper + shift)


def psi(vec: Union[ConstructedVector, Sequence[Any]], Q: int, norm: NormDescriptor = MAX_NORM, *,
        q_budget: int = DEFAULT_Q_BUDGET, workers: int = 1) -> PsiResult:
    """ψ(Q) の包含と、それを与える最小の q"""
    vec = _as_vector(vec)
    _check_scope(vec, Q, q_budget)
    kernel = _Kernel.build(vec, norm)
    key, q = kernel.minimum(1, Q, workers)
    value = kernel.enclosure(key, Q)
    logger.debug(f"ψ({Q}) ∈ [{float(value.lower):.6g}, {float(value.upper):.6g}], q={q}")
    return PsiResult(Q, value, q, value.is_exact)


def psi_sweep(vec: Union[ConstructedVector, Sequence[Any]], Q_max: int, norm: NormDescriptor = MAX_NORM, *,
              q_budget: int = DEFAULT_Q_BUDGET, workers: int = 1) -> List[PsiResult]:
    """[1, Q_max] 上の ψ の更新点（各点で新しい値）"""
    vec = _as_vector(vec)
    _check_scope(vec, Q_max, q_budget)
    kernel = _Kernel.build(vec, norm)
    points = []
    for q, key in kernel.drops(Q_max, workers):
        value = kernel.enclosure(key, q)
        points.append(PsiResult(q, value, q, value.is_exact))
    return points


SWEEP_CSV_HEADER = ("Q", "psi_num", "psi_den", "argmin_q", "dirichlet_product")


def sweep_csv_row(point: PsiResult, m: int) -> Tuple[str, str, str, str, str]:
    """更新点を CSV の一行にする

    厳密な値は分子と分母を、包含は両端の分子どうし・分母どうしを "下端:上端" で書く。
    dirichlet_product は包含の中点での Q^(1/m)·ψ(Q) を小数 12 桁で書く。
    """
    lower, upper = point.value.lower, point.value.upper
    if point.value.is_exact:
        num, den = str(lower.numerator), str(lower.denominator)
    else:
        num = f"{lower.numerator}:{upper.numerator}"
        den = f"{lower.denominator}:{upper.denominator}"
    product = _root_enclosure(point.Q, m).midpoint * point.value.midpoint
    return str(point.Q), num, den, str(point.argmin_q), f"{float(product):.12f}"


def psi_at(vec: Union[ConstructedVector, Sequence[Any]], q: int, norm: NormDescriptor = MAX_NORM) -> Enclosure:
    """|(‖qξ_1‖, …, ‖qξ_m‖)| の包含"""
    vec = _as_vector(vec)
    if q < 1:
        raise InvalidArgumentError(f"Invalid q: {q}")
    if vec.q_max_valid is not None and q > vec.q_max_valid:
        level = required_truncation_level(vec, q)
        raise TruncationInsufficientError(f"q={q} は打ち切りの有効範囲を超えます", level)
    values = [dist_enclosure(Enclosure(q * c, q * c + q * vec.tail_bound)) for c in vec.components]
    return norm.combine(values)


@dataclass
class C1Report:
    Q_from: int
    Q_to: int
    factor: Fraction
    violations: List[Tuple[int, int]] = field(default_factory=list)
    indeterminate: List[int] = field(default_factory=list)
    pieces: int = 0

    @property
    def observed_Q0(self) -> int:
        if not self.violations:
            return self.Q_from
        return self.violations[-1][1] + 1

    @property
    def passed(self) -> bool:
        return not self.violations and not self.indeterminate

    def to_json(self) -> Dict[str, Any]:
        return {
            "Q_from": self.Q_from,
            "Q_to": self.Q_to,
            "factor": str(self.factor),
            "violations": [list(v) for v in self.violations],
            "indeterminate": self.indeterminate,
            "observed_Q0": self.observed_Q0,
            "pieces": self.pieces,
            "passed": self.passed,
        }


def check_C1(vec: Union[ConstructedVector, Sequence[Any]], fn: ApproxFn, Q_from: int, Q_to: int,
             norm: NormDescriptor = MAX_NORM, factor: Fraction = Fraction(1), *,
             q_budget: int = DEFAULT_Q_BUDGET, workers: int = 1) -> C1Report:
    """Q_from ≤ Q ≤ Q_to で ψ(Q) < factor·Φ(Q) を確かめる

    Φ が非増加なら ψ の定数区間ごとに右端だけを比べ、失敗した区間だけ二分探索する。
    """
    vec = _as_vector(vec)
    if Q_from < 1 or Q_to < Q_from:
        raise InvalidArgumentError(f"Invalid range: [{Q_from}, {Q_to}]")
    _check_scope(vec, Q_to, q_budget)
    factor = Fraction(factor)
    kernel = _Kernel.build(vec, norm)
    drops = kernel.drops(Q_to, workers)
    report = C1Report(Q_from, Q_to, factor)

    def holds(key: int, Q: int) -> Optional[bool]:
        try:
            return below_phi(kernel.enclosure(key, Q).upper, fn, Q, factor=factor)
        except IndeterminateComparisonError:
            report.indeterminate.append(Q)
            return None

    for k, (start, key) in enumerate(drops):
        stop = drops[k + 1][0] - 1 if k + 1 < len(drops) else Q_to
        lo, hi = max(start, Q_from), min(stop, Q_to)
        if lo > hi:
            continue
        report.pieces += 1
        if not fn.nonincreasing:
            for Q in range(lo, hi + 1):
                if holds(key, Q) is False:
                    _add_violation(report, Q, Q)
            continue
        if holds(key, hi) is not False:
            continue
        # 失敗は区間の右側に連続する
        left, right = lo, hi
        while left < right:
            mid = (left + right) // 2
            if holds(key, mid) is False:
                right = mid
            else:
                left = mid + 1
        _add_violation(report, left, hi)

    if report.violations:
        logger.warning(f"ψ < Φ が破れる区間: {report.violations[:5]}")
    return report


def _add_violation(report: C1Report, start: int, end: int) -> None:
    if report.violations and report.violations[-1][1] + 1 == start:
        report.violations[-1] = (report.violations[-1][0], end)
    else:
        report.violations.append((start, end))


def _root_enclosure(Q: int, m: int, bits: int = REPORT_BITS) -> Enclosure:
    return rational_power_enclosure(Q, Fraction(1, m), bits)


@dataclass
class CheckpointReport:
    f: int
    Q_f: int
    psi: PsiResult
    phi_at_Qf: Enclosure
    ratio: Enclosure
    dirichlet_product: Enclosure
    reference: Fraction
    tolerance: Fraction
    passed: bool

    def to_json(self) -> Dict[str, Any]:
        return {
            "f": self.f,
            "Q_f": str(self.Q_f),
            "psi": self.psi.to_json(),
            "phi_at_Qf": self.phi_at_Qf.to_json(),
            "ratio": self.ratio.to_json(),
            "dirichlet_product": self.dirichlet_product.to_json(),
            "reference": str(self.reference),
            "tolerance": str(self.tolerance),
            "passed": self.passed,
        }


def checkpoint_C2(vec: ConstructedVector, seq: SequenceRecord, f: int, fn: ApproxFn,
                  tolerance: Fraction = Fraction(1, 50), norm: NormDescriptor = MAX_NORM, *,
                  q_budget: int = DEFAULT_Q_BUDGET, workers: int = 1) -> CheckpointReport:
    """Q_f = a_{m(f+1)} − 1 での ψ(Q_f)/Φ(Q_f)"""
    if f < 1 or f > seq.depth:
        raise PreconditionError(f"Invalid checkpoint f={f} (1 ≤ f ≤ {seq.depth})")
    Q_f = seq.checkpoint_Q(f)
    result = psi(vec, Q_f, norm, q_budget=q_budget, workers=workers)
    phi_value = fn.enclose(Q_f, REPORT_BITS)
    ratio = result.value * phi_value.reciprocal()
    product = result.value * _root_enclosure(Q_f, seq.m)
    if seq.mode is ConstructionMode.M2 or seq.uniform_quotients:
        reference = Fraction(1, seq.L[f - 1])
    else:
        reference = Fraction(1, seq.term(seq.m * f + 1))
    tolerance = Fraction(tolerance)
    passed = ratio.lower >= 1 - tolerance and ratio.upper < 1
    if not passed:
        logger.warning(f"チェックポイント f={f}: 比 [{float(ratio.lower):.6f}, {float(ratio.upper):.6f}]")
    return CheckpointReport(f, Q_f, result, phi_value, ratio, product, reference, tolerance, passed)


def _log_exponent(value: Enclosure, q: int, bits: int = REPORT_BITS) -> Optional[Enclosure]:
    """log(1/ψ)/log q の包含（ψ の下端が 0 なら None）"""
    if value.lower <= 0 or q < 2:
        return None
    with interval_precision(bits):
        log_q = iv.ln(iv.mpf(q))
        low = -iv.ln(iv_rational(value.upper)) / log_q
        high = -iv.ln(iv_rational(value.lower)) / log_q
        return Enclosure(iv_to_enclosure(low).lower, iv_to_enclosure(high).upper)


def check_C3(vec: ConstructedVector, seq: SequenceRecord, N: Union[int, Fraction],
             levels: Iterable[int]) -> List[Dict[str, Any]]:
    """q = a_{mn} で ‖qξ‖ ≤ 2·a_{mn}^(−M_n+1) と実現した指数"""
    verdicts = []
    for n in levels:
        if n < 1 or n > seq.depth:
            raise PreconditionError(f"level {n} は構成されていません")
        q = seq.term(seq.m * n)
        value = psi_at(vec, q)
        # a_{mn+1} = a_{mn}^{M_n} なら 2·a_{mn}^(−M_n+1)
        bound = Fraction(2 * q, seq.term(seq.m * n + 1))
        exponent = _log_exponent(value, q)
        passed = value.upper <= bound
        if not passed:
            verdict = "fail"
        elif exponent is not None and exponent.upper < N:
            verdict = "need-deeper-level"
        else:
            verdict = "pass"
        verdicts.append({
            "level": n,
            "q": str(q),
            "value": value.to_json(),
            "bound": str(bound),
            "passed": passed,
            "exponent": None if exponent is None else exponent.to_json(),
            "verdict": verdict,
        })
    return verdicts


def _argmin_component(vec: ConstructedVector, q: int, norm: NormDescriptor) -> int:
    """q でノルムを決めている座標（1 始まり）"""
    weights = norm._weights_for(vec.m) if norm.kind is NormKind.WEIGHTED_MAX else [Fraction(1)] * vec.m
    values = [w * dist_enclosure(Enclosure(q * c, q * c)).upper for c, w in zip(vec.components, weights)]
    return values.index(max(values)) + 1


def theta_estimate(vec: ConstructedVector, seq: SequenceRecord, norm: NormDescriptor = MAX_NORM, *,
                   q_budget: int = DEFAULT_Q_BUDGET, workers: int = 1) -> Dict[str, Any]:
    """到達できるチェックポイントでの Q_f^(1/m)·ψ(Q_f) と上限の推定"""
    if not norm.expanding(vec.m):
        raise PreconditionError(f"ノルムが拡大的であることを確認できません: {norm.certificate(vec.m)}")
    checkpoints = []
    for f in range(1, seq.depth + 1):
        Q_f = seq.checkpoint_Q(f)
        if Q_f > q_budget or (vec.q_max_valid is not None and Q_f > vec.q_max_valid):
            logger.info(f"チェックポイント f={f} (Q={Q_f}) は範囲外のため省略")
            continue
        result = psi(vec, Q_f, norm, q_budget=q_budget, workers=workers)
        product = result.value * _root_enclosure(Q_f, vec.m)
        checkpoints.append({
            "f": f,
            "Q_f": str(Q_f),
            "psi": result.to_json(),
            "dirichlet_product": product.to_json(),
            "argmin_component": _argmin_component(vec, result.argmin_q, norm),
            "_product": product,
        })
    if not checkpoints:
        raise PreconditionError("到達できるチェックポイントがありません")
    products = [c.pop("_product") for c in checkpoints]
    estimate = Enclosure(max(p.lower for p in products), max(p.upper for p in products))
    return {
        "norm": norm.certificate(vec.m),
        "checkpoints": checkpoints,
        "estimate": estimate.to_json(),
        "estimate_float": float(estimate),
    }


def _canonical_vectors(m: int, Q_star: int, first: int, stop: int) -> Iterable[Tuple[int, ...]]:
    """番号 first..stop−1 の y ∈ [−Q*, Q*]^m のうち最初の非零成分が正のもの"""
    width = 2 * Q_star + 1
    for index in range(first, stop):
        y = []
        rest = index
        for _ in range(m):
            rest, digit = divmod(rest, width)
            y.append(digit - Q_star)
        y.reverse()
        leading = next((v for v in y if v != 0), 0)
        if leading > 0:
            yield tuple(y)


def _tie_key(y: Tuple[int, ...]) -> Tuple[Any, ...]:
    return (max(abs(v) for v in y), tuple((abs(v), v < 0) for v in y))


def _scan_linear_chunk(task: Tuple[Any, ...]) -> Optional[Tuple[int, Tuple[Any, ...], Tuple[int, ...]]]:
    numerators, D, m, Q_star, first, stop = task
    best = None
    for y in _canonical_vectors(m, Q_star, first, stop):
        r = sum(v * n for v, n in zip(y, numerators)) % D
        candidate = (min(r, D - r), _tie_key(y), y)
        if best is None or candidate[:2] < best[:2]:
            best = candidate
    return best


def psi_linear_form(vec: Union[ConstructedVector, Sequence[Any]], Q_star: int, *,
                    y_budget: int = DEFAULT_Y_BUDGET, workers: int = 1) -> LinearFormResult:
    """0 < |y|_∞ ≤ Q* の整数ベクトル y での ‖⟨y, ξ⟩‖ の最小（±y は同一視）"""
    vec = _as_vector(vec)
    if Q_star < 1:
        raise InvalidArgumentError(f"Invalid Q*: {Q_star}")
    total = (2 * Q_star + 1) ** vec.m
    count = (total - 1) // 2
    if count > y_budget:
        raise BudgetExceededError(f"探索する y の数 {count} が予算 {y_budget} を超えます", count, y_budget)
    if vec.tail_bound and vec.m * Q_star * vec.tail_bound >= TRUNCATION_RESOLUTION:
        raise TruncationInsufficientError("打ち切りが Q* に対して粗すぎます", (vec.truncation_level or 0) + 1)

    kernel = _Kernel.build(vec, MAX_NORM)
    tasks = [(kernel.numerators, kernel.denominator, vec.m, Q_star, s, e)
             for s, e in _chunks(0, total - 1, workers)]
    results = [r for r in _run_tasks(tasks, workers, _scan_linear_chunk) if r is not None]
    key, _, y = min(results, key=lambda r: r[:2])
    value = Enclosure.exact(Fraction(key, kernel.denominator))
    shift = sum(abs(v) for v in y) * vec.tail_bound
    if shift:
        value = Enclosure(max(Fraction(0), value.lower - shift), value.upper + shift)
    return LinearFormResult(Q_star, value, y, value.is_exact, count)


def _reachable_Q(vec: ConstructedVector, seq: SequenceRecord, q_budget: int) -> int:
    """予算と打ち切りの範囲に収まる最後のチェックポイント Q_f"""
    reach = 0
    for f in range(1, seq.depth + 1):
        Q_f = seq.checkpoint_Q(f)
        if Q_f <= q_budget and (vec.q_max_valid is None or Q_f <= vec.q_max_valid):
            reach = Q_f
    if not reach:
        raise PreconditionError("到達できるチェックポイントがありません")
    return reach


def lambda_estimate(vec: Union[ConstructedVector, Sequence[Any]], scope: Union[SequenceRecord, int],
                    norm: NormDescriptor = MAX_NORM, *,
                    q_budget: int = DEFAULT_Q_BUDGET, workers: int = 1) -> Dict[str, Any]:
    """ψ の各更新点 q での log(1/ψ)/log q

    scope が数列なら、範囲内で最後のチェックポイントまで掃引する。整数なら Q_max そのもの。
    """
    vec = _as_vector(vec)
    Q_max = _reachable_Q(vec, scope, q_budget) if isinstance(scope, SequenceRecord) else scope
    points = []
    running = Fraction(0)
    infinite = False
    for drop in psi_sweep(vec, Q_max, norm, q_budget=q_budget, workers=workers):
        if drop.Q < 2:
            continue
        exponent = _log_exponent(drop.value, drop.Q)
        record: Dict[str, Any] = {"q": str(drop.Q), "value": drop.value.to_json()}
        if exponent is None:
            record["exponent"] = None
            record["infinite"] = True
            infinite = True
        else:
            record["exponent"] = exponent.to_json()
            record["exponent_float"] = float(exponent)
            record["infinite"] = False
            running = max(running, exponent.lower)
        points.append(record)
    return {
        "Q_max": str(Q_max),
        "points": points,
        "running_max": str(running),
        "running_max_float": float(running),
        "infinite": infinite,
    }
