"""厳密演算カーネル

有理数、最近整数への距離、連分数、b進桁列、そして厳密な区間包含を扱う。
コアの計算経路はすべて Fraction と整数で行い、無理数は区間で包む。
"""

import logging
import math
import re
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

from mpmath import iv
from mpmath.libmp import to_rational
from sympy import integer_nthroot

from .errors import IndeterminateComparisonError, InvalidArgumentError, PreconditionError

logger = logging.getLogger(__name__)

ExactRational = Fraction

DEFAULT_START_BITS = 64
DEFAULT_MAX_BITS = 4096


def as_rational(value: Any) -> Fraction:
    """整数・Fraction・文字列 ("9/10", "0.3") を Fraction に変換する"""
    if isinstance(value, bool):
        raise InvalidArgumentError(f"Invalid rational: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise InvalidArgumentError(f"Invalid rational: {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise InvalidArgumentError(f"Invalid rational: {value!r}") from e
    raise InvalidArgumentError(f"Invalid rational: {value!r}")


def as_int(value: Any) -> int:
    """整数・整数の文字列を int に変換する"""
    if isinstance(value, bool):
        raise InvalidArgumentError(f"Invalid integer: {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, Fraction) and value.denominator == 1:
        return int(value)
    if isinstance(value, str):
        try:
            return int(value.strip())
        except ValueError as e:
            raise InvalidArgumentError(f"Invalid integer: {value!r}") from e
    raise InvalidArgumentError(f"Invalid integer: {value!r}")


def require_param(params: Dict[str, Any], name: str, owner: str = "") -> Any:
    """params[name] を返す。無ければ InvalidArgumentError"""
    if params.get(name) is None:
        prefix = f"{owner} には" if owner else ""
        raise InvalidArgumentError(f"{prefix}パラメータ {name} が必要です")
    return params[name]


def dist_to_nearest_int(x: Union[int, Fraction]) -> Fraction:
    """‖x‖: 最も近い整数までの距離"""
    x = Fraction(x)
    r = x - math.floor(x)
    return min(r, 1 - r)


def lcm_upto(b: int) -> int:
    """Γ_b = lcm(1, …, b−1)"""
    if b < 2:
        raise InvalidArgumentError(f"Invalid base: b={b} (b ≥ 2 が必要)")
    return math.lcm(*range(1, b))


@dataclass(frozen=True)
class Enclosure:
    """有理数端点による閉区間 [lower, upper]"""
    lower: Fraction
    upper: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lower", Fraction(self.lower))
        object.__setattr__(self, "upper", Fraction(self.upper))
        if self.lower > self.upper:
            raise InvalidArgumentError(f"Invalid enclosure: [{self.lower}, {self.upper}]")

    @classmethod
    def exact(cls, value: Union[int, Fraction]) -> "Enclosure":
        return cls(Fraction(value), Fraction(value))

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    @property
    def is_exact(self) -> bool:
        return self.lower == self.upper

    @property
    def midpoint(self) -> Fraction:
        return (self.lower + self.upper) / 2

    def contains(self, x: Union[int, Fraction]) -> bool:
        return self.lower <= x <= self.upper

    def __add__(self, other: "Enclosure") -> "Enclosure":
        return Enclosure(self.lower + other.lower, self.upper + other.upper)

    def __mul__(self, other: "Enclosure") -> "Enclosure":
        products = [
            self.lower * other.lower, self.lower * other.upper,
            self.upper * other.lower, self.upper * other.upper,
        ]
        return Enclosure(min(products), max(products))

    def scale(self, k: Union[int, Fraction]) -> "Enclosure":
        k = Fraction(k)
        if k >= 0:
            return Enclosure(self.lower * k, self.upper * k)
        return Enclosure(self.upper * k, self.lower * k)

    def widen(self, amount: Fraction) -> "Enclosure":
        return Enclosure(self.lower - amount, self.upper + amount)

    def reciprocal(self) -> "Enclosure":
        if self.lower <= 0 <= self.upper:
            raise InvalidArgumentError("0 を含む区間の逆数")
        return Enclosure(1 / self.upper, 1 / self.lower)

    def __float__(self) -> float:
        return float(self.midpoint)

    def to_json(self) -> dict:
        return {"lower": str(self.lower), "upper": str(self.upper)}


@dataclass(frozen=True)
class BitBudget:
    """適応的な比較で使う精度の開始値と上限"""
    start_bits: int = DEFAULT_START_BITS
    max_bits: int = DEFAULT_MAX_BITS


_BUDGET = threading.local()


def current_bit_budget() -> BitBudget:
    return getattr(_BUDGET, "value", BitBudget())


@contextmanager
def bit_budget(start_bits: int, max_bits: int) -> Iterator[BitBudget]:
    """このスレッドでの精度予算を一時的に差し替える"""
    if start_bits < 8 or max_bits < start_bits:
        raise InvalidArgumentError(f"Invalid bit budget: start={start_bits}, max={max_bits}")
    previous = current_bit_budget()
    _BUDGET.value = BitBudget(start_bits, max_bits)
    try:
        yield _BUDGET.value
    finally:
        _BUDGET.value = previous


def decide_less(left: Callable[[int], Enclosure], right: Callable[[int], Enclosure],
                start_bits: Optional[int] = None, max_bits: Optional[int] = None) -> bool:
    """left < right を精度を上げながら判定する

    どちらも精度 bits で包含を返す関数。max_bits で決まらなければ例外。
    省略した精度は current_bit_budget() から取る。
    """
    budget = current_bit_budget()
    max_bits = budget.max_bits if max_bits is None else max_bits
    bits = min(budget.start_bits if start_bits is None else start_bits, max_bits)
    while True:
        lo = left(bits)
        hi = right(bits)
        if lo.upper < hi.lower:
            return True
        if lo.lower >= hi.upper:
            return False
        if bits >= max_bits:
            raise IndeterminateComparisonError(
                f"比較が {max_bits} ビットで決定できません: {float(lo)} vs {float(hi)}", max_bits)
        bits = min(2 * bits, max_bits)


# mpmath の iv コンテキストは精度をグローバルに持つので、変更はロックで直列化する
_IV_LOCK = threading.RLock()


@contextmanager
def interval_precision(bits: int) -> Iterator[Any]:
    """iv の作業精度を一時的に設定する"""
    with _IV_LOCK:
        saved = iv.prec
        iv.prec = max(bits, 53)
        try:
            yield iv
        finally:
            iv.prec = saved


def iv_rational(x: Union[int, Fraction]) -> Any:
    """有理数を iv 区間に変換する（interval_precision の中で呼ぶ）"""
    x = Fraction(x)
    return iv.mpf(x.numerator) / iv.mpf(x.denominator)


def iv_to_enclosure(x: Any) -> Enclosure:
    """iv 区間の端点を丸めずに Fraction へ写す"""
    a, b = x._mpi_
    try:
        lo = Fraction(*to_rational(a))
        hi = Fraction(*to_rational(b))
    except ValueError as e:
        raise IndeterminateComparisonError("区間が有限でありません", 0) from e
    return Enclosure(lo, hi)


def integer_root_floor(n: int, k: int) -> Tuple[int, bool]:
    """⌊n^(1/k)⌋ と厳密根かどうか"""
    root, exact = integer_nthroot(n, k)
    return int(root), bool(exact)


def rational_power_enclosure(x: Union[int, Fraction], exponent: Union[int, Fraction],
                             bits: int) -> Enclosure:
    """有理数 x ≥ 0 の有理数乗 x^exponent の包含

    整数の冪根で端点を作るので、根が厳密なら幅 0 になる。
    """
    x = Fraction(x)
    exponent = Fraction(exponent)
    if x < 0:
        raise InvalidArgumentError(f"Invalid base: {x}")
    if exponent == 0 or x == 1:
        return Enclosure.exact(1)
    if x == 0:
        if exponent < 0:
            raise InvalidArgumentError("0 の負冪")
        return Enclosure.exact(0)
    if exponent < 0:
        # 逆数で幅が広がる分だけ余分に精度を取る
        inner = rational_power_enclosure(x, -exponent, bits + 8 + 2 * _log2_size(x, -exponent))
        return inner.reciprocal()
    p, q = exponent.numerator, exponent.denominator
    base = x ** p
    num, den = base.numerator, base.denominator
    if q == 1:
        return Enclosure.exact(base)
    num_root, num_exact = integer_root_floor(num, q)
    den_root, den_exact = integer_root_floor(den, q)
    if num_exact and den_exact:
        return Enclosure.exact(Fraction(num_root, den_root))
    k = bits + 2
    scaled = num << (k * q)
    lo_root, _ = integer_root_floor(scaled // den, q)
    hi_root, hi_exact = integer_root_floor(-((-scaled) // den), q)
    if not hi_exact:
        hi_root += 1
    return Enclosure(Fraction(lo_root, 1 << k), Fraction(hi_root, 1 << k))


def _log2_size(x: Fraction, exponent: Fraction) -> int:
    """x^exponent の大きさのビット数の粗い上界"""
    magnitude = abs(x.numerator.bit_length() - x.denominator.bit_length()) + 1
    return int(magnitude * math.ceil(abs(exponent))) + 2


def _sign_a_plus_b_sqrt(a: int, b: int, d: int) -> int:
    """a + b√d の符号（d は平方数でない）"""
    if b == 0:
        return (a > 0) - (a < 0)
    if a == 0:
        return (b > 0) - (b < 0)
    if a > 0 and b > 0:
        return 1
    if a < 0 and b < 0:
        return -1
    if a > 0:
        return 1 if a * a > b * b * d else -1
    return 1 if b * b * d > a * a else -1


_SURD_PATTERNS = [
    re.compile(r"^(?:(?P<q>\d+)\*?)?sqrt\((?P<d>\d+)\)(?:/(?P<r>\d+))?$"),
    re.compile(r"^\((?P<p>-?\d+)(?P<sign>[+-])(?:(?P<q>\d+)\*?)?sqrt\((?P<d>\d+)\)\)(?:/(?P<r>\d+))?$"),
    re.compile(r"^(?P<n>\d+)/sqrt\((?P<d>\d+)\)$"),
]


@dataclass(frozen=True)
class QuadraticSurd:
    """二次無理数 (p + q√d)/r（r > 0, d は平方数でない）"""
    p: int
    q: int
    d: int
    r: int = 1

    def __post_init__(self):
        if self.r == 0:
            raise InvalidArgumentError("Invalid surd: r = 0")
        if self.q == 0:
            raise InvalidArgumentError("Invalid surd: q = 0 (有理数)")
        if self.d < 2 or math.isqrt(self.d) ** 2 == self.d:
            raise InvalidArgumentError(f"Invalid surd: d={self.d} は平方数")
        if self.r < 0:
            object.__setattr__(self, "p", -self.p)
            object.__setattr__(self, "q", -self.q)
            object.__setattr__(self, "r", -self.r)
        g = math.gcd(math.gcd(self.p, self.q), self.r)
        if g > 1:
            object.__setattr__(self, "p", self.p // g)
            object.__setattr__(self, "q", self.q // g)
            object.__setattr__(self, "r", self.r // g)

    @classmethod
    def parse(cls, text: str) -> "QuadraticSurd":
        """`sqrt(2)/2`, `3*sqrt(3)/40`, `(1+sqrt(5))/2`, `1/sqrt(2)` を読む"""
        s = text.replace(" ", "")
        for pattern in _SURD_PATTERNS:
            match = pattern.match(s)
            if not match:
                continue
            groups = match.groupdict()
            d = int(groups["d"])
            if groups.get("n") is not None:
                return cls(0, int(groups["n"]), d, d)
            q = int(groups["q"]) if groups.get("q") else 1
            if groups.get("sign") == "-":
                q = -q
            p = int(groups["p"]) if groups.get("p") else 0
            r = int(groups["r"]) if groups.get("r") else 1
            return cls(p, q, d, r)
        raise InvalidArgumentError(f"Invalid surd: {text!r}")

    def compare(self, x: Union[int, Fraction]) -> int:
        """sign(self − x) を厳密に返す"""
        x = Fraction(x)
        u, v = x.numerator, x.denominator
        return _sign_a_plus_b_sqrt(self.p * v - self.r * u, self.q * v, self.d)

    def __lt__(self, other: Union[int, Fraction]) -> bool:
        return self.compare(other) < 0

    def __gt__(self, other: Union[int, Fraction]) -> bool:
        return self.compare(other) > 0

    def __le__(self, other: Union[int, Fraction]) -> bool:
        return self.compare(other) <= 0

    def __ge__(self, other: Union[int, Fraction]) -> bool:
        return self.compare(other) >= 0

    def sign(self) -> int:
        return self.compare(0)

    def floor(self) -> int:
        big_d = self.q * self.q * self.d
        s = math.isqrt(big_d)
        top = self.p + s if self.q > 0 else self.p - s - 1
        return top // self.r

    def __neg__(self) -> "QuadraticSurd":
        return QuadraticSurd(-self.p, -self.q, self.d, self.r)

    def scaled(self, k: Union[int, Fraction]) -> "QuadraticSurd":
        k = Fraction(k)
        return QuadraticSurd(self.p * k.numerator, self.q * k.numerator, self.d,
                             self.r * k.denominator)

    def shifted(self, k: Union[int, Fraction]) -> "QuadraticSurd":
        k = Fraction(k)
        u, v = k.numerator, k.denominator
        return QuadraticSurd(self.p * v + self.r * u, self.q * v, self.d, self.r * v)

    def enclosure(self, bits: int) -> Enclosure:
        s = math.isqrt((self.q * self.q * self.d) << (2 * bits))
        base = self.p << bits
        scale = self.r << bits
        if self.q > 0:
            return Enclosure(Fraction(base + s, scale), Fraction(base + s + 1, scale))
        return Enclosure(Fraction(base - s - 1, scale), Fraction(base - s, scale))

    def to_interval(self) -> Any:
        """iv 区間（interval_precision の中で呼ぶ）"""
        return (iv.mpf(self.p) + iv.mpf(self.q) * iv.sqrt(iv.mpf(self.d))) / iv.mpf(self.r)

    def __float__(self) -> float:
        return (self.p + self.q * math.sqrt(self.d)) / self.r

    def __str__(self) -> str:
        if self.p == 0:
            head = "sqrt" if self.q == 1 else f"{self.q}*sqrt"
            body = f"{head}({self.d})"
        else:
            sign = "+" if self.q > 0 else "-"
            body = f"({self.p}{sign}{abs(self.q)}*sqrt({self.d}))"
        return body if self.r == 1 else f"{body}/{self.r}"


RealParam = Union[Fraction, QuadraticSurd]


def parse_real(text: Union[str, int, Fraction, QuadraticSurd]) -> RealParam:
    """有理数か二次無理数の記述を読む"""
    if isinstance(text, QuadraticSurd):
        return text
    if isinstance(text, str) and "sqrt" in text:
        return QuadraticSurd.parse(text)
    return as_rational(text)


def real_enclosure(x: RealParam, bits: int) -> Enclosure:
    if isinstance(x, QuadraticSurd):
        return x.enclosure(bits)
    return Enclosure.exact(x)


def real_compare(x: RealParam, y: Union[int, Fraction]) -> int:
    """sign(x − y)"""
    if isinstance(x, QuadraticSurd):
        return x.compare(y)
    diff = Fraction(x) - Fraction(y)
    return (diff > 0) - (diff < 0)


def real_to_interval(x: RealParam) -> Any:
    if isinstance(x, QuadraticSurd):
        return x.to_interval()
    return iv_rational(x)


def real_power_enclosure(x: Union[int, Fraction], exponent: RealParam, bits: int) -> Enclosure:
    """x^exponent（指数は有理数か二次無理数）の包含"""
    if not isinstance(exponent, QuadraticSurd):
        return rational_power_enclosure(x, exponent, bits)
    x = Fraction(x)
    if x <= 0:
        raise InvalidArgumentError(f"Invalid base: {x}")
    if x == 1:
        return Enclosure.exact(1)
    work = bits + 16 + _log2_size(x, Fraction(math.ceil(abs(float(exponent))) + 1))
    with interval_precision(work):
        value = iv.exp(exponent.to_interval() * iv.ln(iv_rational(x)))
        return iv_to_enclosure(value)


def log_enclosure(x: Union[int, Fraction], bits: int) -> Enclosure:
    """ln x の包含"""
    x = Fraction(x)
    if x <= 0:
        raise InvalidArgumentError(f"Invalid log argument: {x}")
    if x == 1:
        return Enclosure.exact(0)
    with interval_precision(bits + 16):
        return iv_to_enclosure(iv.ln(iv_rational(x)))


@dataclass
class ContinuedFraction:
    """部分商と近似分数 (r_k, s_k)"""
    partial_quotients: List[int]
    convergents: List[Tuple[int, int]]
    terminated: bool

    @property
    def values(self) -> List[Fraction]:
        return [Fraction(r, s) for r, s in self.convergents]


def _convergents(quotients: Sequence[int]) -> List[Tuple[int, int]]:
    result = []
    r_prev, r_prev2 = 1, 0
    s_prev, s_prev2 = 0, 1
    for a in quotients:
        r = a * r_prev + r_prev2
        s = a * s_prev + s_prev2
        result.append((r, s))
        r_prev2, r_prev = r_prev, r
        s_prev2, s_prev = s_prev, s
    return result


def cf_expand(x: Union[int, Fraction, QuadraticSurd, str], depth: int) -> ContinuedFraction:
    """連分数展開（有理数は有限で停止、二次無理数は記号的に展開）"""
    if depth < 1:
        raise InvalidArgumentError(f"Invalid depth: {depth}")
    if isinstance(x, str):
        x = parse_real(x)
    quotients: List[int] = []
    if isinstance(x, QuadraticSurd):
        # (P + √D)/Q の形に直し、Q | D − P² を保つ
        big_d = x.q * x.q * x.d
        if x.q > 0:
            p_, q_ = x.p, x.r
        else:
            p_, q_ = -x.p, -x.r
        if (big_d - p_ * p_) % q_ != 0:
            big_d *= q_ * q_
            p_ *= abs(q_)
            q_ *= abs(q_)
        s = math.isqrt(big_d)
        while len(quotients) < depth:
            if q_ > 0:
                a = (p_ + s) // q_
            else:
                a = -((p_ + s) // (-q_)) - 1
            quotients.append(a)
            p_ = a * q_ - p_
            q_ = (big_d - p_ * p_) // q_
        return ContinuedFraction(quotients, _convergents(quotients), False)

    value = Fraction(x)
    num, den = value.numerator, value.denominator
    terminated = False
    while len(quotients) < depth:
        a = num // den
        quotients.append(a)
        rem = num - a * den
        if rem == 0:
            terminated = True
            break
        num, den = den, rem
    return ContinuedFraction(quotients, _convergents(quotients), terminated)


@dataclass
class ReducedFractionReport:
    reduced: bool
    numerator: int
    denominator: int


def prop_uv_check(u: int, v: int, L: int, M: int, m: int) -> ReducedFractionReport:
    """(u·L^M·v^((m−1)M−1) + 1) / (L^M·v^((m−1)M)) が既約かを調べる"""
    if v < 1 or L < 1 or M < 2 or m < 2:
        raise InvalidArgumentError(f"Invalid parameters: v={v}, L={L}, M={M}, m={m}")
    if math.gcd(u, v) != 1:
        raise PreconditionError(f"gcd(u, v) ≠ 1: u={u}, v={v}")
    numerator = u * L ** M * v ** ((m - 1) * M - 1) + 1
    denominator = L ** M * v ** ((m - 1) * M)
    return ReducedFractionReport(math.gcd(numerator, denominator) == 1, numerator, denominator)


@dataclass(frozen=True)
class DigitStream:
    """位置 offset から始まる b 進桁の列（位置 j の重みは b^(−j)）"""
    base: int
    digits: Tuple[int, ...]
    offset: int = 1

    def __post_init__(self):
        if self.base < 2:
            raise InvalidArgumentError(f"Invalid base: {self.base}")
        if any(d < 0 or d >= self.base for d in self.digits):
            raise InvalidArgumentError("桁が [0, b−1] の範囲外です")

    def value(self) -> Fraction:
        total = Fraction(0)
        for j, digit in enumerate(self.digits, start=self.offset):
            if digit:
                total += Fraction(digit, self.base ** j)
        return total

    def first_outside(self, allowed: Sequence[int]) -> Optional[int]:
        """allowed にない最初の桁の位置"""
        allowed_set = set(allowed)
        for j, digit in enumerate(self.digits, start=self.offset):
            if digit not in allowed_set:
                return j
        return None


def digit_stream(x: Union[int, Fraction], base: int, count: int, offset: int = 1) -> DigitStream:
    """x の小数部の b 進桁を位置 offset から count 個取り出す"""
    if base < 2:
        raise InvalidArgumentError(f"Invalid base: {base}")
    if count < 0 or offset < 1:
        raise InvalidArgumentError(f"Invalid range: count={count}, offset={offset}")
    x = Fraction(x)
    frac = x - math.floor(x)
    num, den = frac.numerator, frac.denominator
    r = (num * pow(base, offset - 1, den)) % den
    digits = []
    for _ in range(count):
        r *= base
        digit, r = divmod(r, den)
        digits.append(digit)
    return DigitStream(base, tuple(digits), offset)


def digits_within(stream: DigitStream, allowed: Sequence[int]) -> bool:
    return stream.first_outside(allowed) is None


def dist_enclosure(value: Enclosure) -> Enclosure:
    """区間上の ‖x‖ の値域"""
    if value.width >= Fraction(1, 2):
        return Enclosure(0, Fraction(1, 2))
    lo, hi = value.lower, value.upper
    has_integer = math.floor(hi) >= math.ceil(lo)
    has_half = math.floor(hi - Fraction(1, 2)) >= math.ceil(lo - Fraction(1, 2))
    ends = (dist_to_nearest_int(lo), dist_to_nearest_int(hi))
    lower = Fraction(0) if has_integer else min(ends)
    upper = Fraction(1, 2) if has_half else max(ends)
    return Enclosure(lower, upper)


def ceil_log(x: int, base: int) -> int:
    """base^k ≥ x となる最小の k"""
    if x < 1 or base < 2:
        raise InvalidArgumentError(f"Invalid arguments: x={x}, base={base}")
    k, power = 0, 1
    while power < x:
        power *= base
        k += 1
    return k
