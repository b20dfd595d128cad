"""
精确算术
有理数、带有理指数的幂积和实二次无理数的精确比较与距离计算。
认证路径上不使用浮点数；十进制渲染只用于显示。
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import mpmath
from sympy import integer_nthroot
from sympy.ntheory.continued_fraction import continued_fraction_periodic
from sympy.ntheory.factor_ import core

from utils.exceptions import ArithmeticDomainError, ValidationError
from utils.logger import get_logger

logger = get_logger(__name__)

# 显示用十进制位数
DISPLAY_DIGITS = 50
# 有理包络的默认精度（二进制位）
DEFAULT_BITS = 64


@dataclass(frozen=True)
class QuadraticSurd:
    """
    实二次无理数 (a + b·√d)/c

    规范形式：c > 0，b ≠ 0，d 无平方因子且 > 1，gcd(a, b, c) = 1。
    b = 0 的结果在构造时直接折叠为 Fraction，所以实例总是无理数。
    """

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.c <= 0 or self.b == 0 or self.d <= 1:
            raise ArithmeticDomainError(f"非规范二次无理数: {self.a}, {self.b}, {self.c}, {self.d}")

    @classmethod
    def of(cls, a: int, b: int, c: int, d: int, reduce_radicand: bool = False) -> 'ExactReal':
        """
        构造并规范化 (a + b√d)/c

        Args:
            reduce_radicand: 为True时先提取 d 的平方因子（解析输入时使用）

        Returns:
            QuadraticSurd，或 b = 0 / d 为完全平方时的 Fraction
        """
        if c == 0:
            raise ZeroDivisionError("二次无理数分母为零")
        if c < 0:
            a, b, c = -a, -b, -c
        if b == 0 or d == 0:
            return Fraction(a, c)
        if d < 0:
            raise ArithmeticDomainError(f"根号下必须为正数: {d}")
        if reduce_radicand:
            free = core(d)
            b *= math.isqrt(d // free)
            d = free
        root = math.isqrt(d)
        if root * root == d:
            return Fraction(a + b * root, c)
        g = math.gcd(math.gcd(a, b), c)
        return cls(a // g, b // g, c // g, d)

    # 运算 ---------------------------------------------------------------

    def _coerce(self, other) -> Optional[Tuple[int, int, int]]:
        if isinstance(other, QuadraticSurd):
            if other.d != self.d:
                raise ArithmeticDomainError(f"不同根号下数不能混合运算: √{self.d} 与 √{other.d}")
            return other.a, other.b, other.c
        if isinstance(other, int):
            return other, 0, 1
        if isinstance(other, Fraction):
            return other.numerator, 0, other.denominator
        return None

    def __add__(self, other):
        parts = self._coerce(other)
        if parts is None:
            return NotImplemented
        a2, b2, c2 = parts
        return QuadraticSurd.of(self.a * c2 + a2 * self.c, self.b * c2 + b2 * self.c, self.c * c2, self.d)

    __radd__ = __add__

    def __neg__(self):
        return QuadraticSurd(-self.a, -self.b, self.c, self.d)

    def __sub__(self, other):
        if self._coerce(other) is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        if self._coerce(other) is None:
            return NotImplemented
        return (-self) + other

    def __mul__(self, other):
        parts = self._coerce(other)
        if parts is None:
            return NotImplemented
        a2, b2, c2 = parts
        return QuadraticSurd.of(self.a * a2 + self.b * b2 * self.d,
                                self.a * b2 + a2 * self.b,
                                self.c * c2, self.d)

    __rmul__ = __mul__

    def reciprocal(self) -> 'ExactReal':
        """1/x，通过共轭有理化"""
        return QuadraticSurd.of(self.c * self.a, -self.c * self.b,
                                self.a * self.a - self.b * self.b * self.d, self.d)

    def __truediv__(self, other):
        if isinstance(other, QuadraticSurd):
            return self * other.reciprocal()
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("除以零")
            return self * (1 / Fraction(other))
        return NotImplemented

    def __rtruediv__(self, other):
        if self._coerce(other) is None:
            return NotImplemented
        return self.reciprocal() * other

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.reciprocal() ** -n
        result: ExactReal = Fraction(1)
        base: ExactReal = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def conjugate(self) -> 'QuadraticSurd':
        return QuadraticSurd(self.a, -self.b, self.c, self.d)

    # 符号与比较 ---------------------------------------------------------

    def sign(self) -> int:
        """a + b√d 的精确符号（c > 0）"""
        sa = (self.a > 0) - (self.a < 0)
        sb = (self.b > 0) - (self.b < 0)
        if sa >= 0 and sb > 0:
            return 1
        if sa <= 0 and sb < 0:
            return -1
        # 符号相反：比较 a² 与 b²d，二者不可能相等
        return sa if self.a * self.a > self.b * self.b * self.d else sb

    def __abs__(self):
        return self if self.sign() > 0 else -self

    def _cmp(self, other) -> Optional[int]:
        if self._coerce(other) is None:
            return None
        return exact_sign(self - other)

    def __lt__(self, other):
        s = self._cmp(other)
        return NotImplemented if s is None else s < 0

    def __le__(self, other):
        s = self._cmp(other)
        return NotImplemented if s is None else s <= 0

    def __gt__(self, other):
        s = self._cmp(other)
        return NotImplemented if s is None else s > 0

    def __ge__(self, other):
        s = self._cmp(other)
        return NotImplemented if s is None else s >= 0

    def __floor__(self) -> int:
        # ⌊b√d⌋ 由整数平方根精确给出；b√d 不是整数
        root = math.isqrt(self.b * self.b * self.d)
        f = root if self.b > 0 else -root - 1
        return (self.a + f) // self.c

    def __ceil__(self) -> int:
        return self.__floor__() + 1

    def __trunc__(self) -> int:
        return self.__floor__() if self.sign() > 0 else self.__ceil__()

    def bounds(self, bits: int = DEFAULT_BITS) -> Tuple[Fraction, Fraction]:
        """宽度 2^{-bits}/c 的有理包络"""
        scale = 1 << bits
        root = math.isqrt(self.b * self.b * self.d * scale * scale)
        f = root if self.b > 0 else -root - 1
        lo = Fraction(self.a * scale + f, self.c * scale)
        return lo, lo + Fraction(1, self.c * scale)

    def __str__(self) -> str:
        b = "" if abs(self.b) == 1 else f"{abs(self.b)}*"
        op = "+" if self.b > 0 else "-"
        body = f"{self.a}{op}{b}sqrt({self.d})" if self.a else f"{'-' if self.b < 0 else ''}{b}sqrt({self.d})"
        return body if self.c == 1 else f"({body})/{self.c}"


ExactReal = Union[Fraction, QuadraticSurd]


def as_exact(x) -> ExactReal:
    """把 int 提升为 Fraction；拒绝浮点数"""
    if isinstance(x, (Fraction, QuadraticSurd)):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise ArithmeticDomainError(f"不支持的精确数类型: {type(x).__name__}")


def exact_sign(x) -> int:
    if isinstance(x, QuadraticSurd):
        return x.sign()
    return (x > 0) - (x < 0)


def exact_bounds(x: ExactReal, bits: int = DEFAULT_BITS) -> Tuple[Fraction, Fraction]:
    if isinstance(x, QuadraticSurd):
        return x.bounds(bits)
    x = Fraction(x)
    return x, x


@dataclass(frozen=True)
class RationalExponentPower:
    """base^exponent，base 为正有理数，exponent 为有理数"""

    base: Fraction
    exponent: Fraction

    def __post_init__(self):
        object.__setattr__(self, 'base', Fraction(self.base))
        object.__setattr__(self, 'exponent', Fraction(self.exponent))
        if self.base <= 0:
            raise ArithmeticDomainError(f"幂的底必须为正: {self.base}")

    def as_product(self) -> 'PowerProduct':
        return PowerProduct.of(1, [(self.base, self.exponent)])


@dataclass(frozen=True)
class PowerProduct:
    """
    正实数 coefficient × ∏ base_k^{e_k}

    coefficient 为正的有理数或二次无理数；整数指数在规范化时并入系数。
    所有无理阈值（高度、c/H、c₂、δ、Hölder 常数等）都用它表示。
    """

    coefficient: ExactReal
    factors: Tuple[RationalExponentPower, ...] = field(default=())

    @classmethod
    def of(cls, coefficient=1, factors: Iterable[Tuple[Fraction, Fraction]] = ()) -> 'PowerProduct':
        coefficient = as_exact(coefficient)
        merged: Dict[Fraction, Fraction] = {}
        for base, exponent in factors:
            base, exponent = Fraction(base), Fraction(exponent)
            if base <= 0:
                raise ArithmeticDomainError(f"幂的底必须为正: {base}")
            merged[base] = merged.get(base, Fraction(0)) + exponent
        kept = []
        for base in sorted(merged):
            exponent = merged[base]
            if base == 1 or exponent == 0:
                continue
            if exponent.denominator == 1:
                coefficient = coefficient * base ** int(exponent)
            else:
                kept.append(RationalExponentPower(base, exponent))
        if exact_sign(coefficient) <= 0:
            raise ArithmeticDomainError(f"幂积系数必须为正: {coefficient}")
        return cls(coefficient, tuple(kept))

    @classmethod
    def power(cls, base, exponent) -> 'PowerProduct':
        return cls.of(1, [(Fraction(base), Fraction(exponent))])

    @property
    def is_exact(self) -> bool:
        return not self.factors

    def simplify(self) -> 'Magnitude':
        """无根式因子时退化为精确数"""
        return self.coefficient if not self.factors else self

    def _pairs(self) -> List[Tuple[Fraction, Fraction]]:
        return [(f.base, f.exponent) for f in self.factors]

    def __mul__(self, other):
        if isinstance(other, PowerProduct):
            return PowerProduct.of(self.coefficient * other.coefficient, self._pairs() + other._pairs())
        if isinstance(other, (int, Fraction, QuadraticSurd)):
            return PowerProduct.of(self.coefficient * other, self._pairs())
        return NotImplemented

    __rmul__ = __mul__

    def reciprocal(self) -> 'PowerProduct':
        return PowerProduct.of(1 / self.coefficient, [(b, -e) for b, e in self._pairs()])

    def __truediv__(self, other):
        if isinstance(other, PowerProduct):
            return self * other.reciprocal()
        if isinstance(other, (int, Fraction, QuadraticSurd)):
            return PowerProduct.of(self.coefficient / as_exact(other), self._pairs())
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (int, Fraction, QuadraticSurd)):
            return self.reciprocal() * other
        return NotImplemented

    def __pow__(self, exponent):
        exponent = Fraction(exponent)
        pairs = [(b, e * exponent) for b, e in self._pairs()]
        if isinstance(self.coefficient, QuadraticSurd):
            if exponent.denominator != 1:
                raise ArithmeticDomainError("二次无理系数只能取整数次幂")
            return PowerProduct.of(self.coefficient ** int(exponent), pairs)
        return PowerProduct.of(1, pairs + [(self.coefficient, exponent)])

    def bounds(self, bits: int = DEFAULT_BITS) -> Tuple[Fraction, Fraction]:
        """相对精度约 2^{-bits} 的有理包络"""
        lo, hi = exact_bounds(self.coefficient, bits)
        lo = max(lo, Fraction(0))
        for f in self.factors:
            f_lo, f_hi = _root_bounds(f.base, f.exponent, bits)
            lo, hi = lo * f_lo, hi * f_hi
        return lo, hi

    def floor(self) -> int:
        bits = DEFAULT_BITS
        while True:
            lo, hi = self.bounds(bits)
            if hi - lo < Fraction(1, 2):
                break
            bits *= 2
        f = math.floor(lo)
        if math.floor(hi) == f:
            return f
        return f + 1 if compare(self, f + 1) >= 0 else f

    def ceil(self) -> int:
        f = self.floor()
        return f if compare(self, f) == 0 else f + 1

    def _cmp(self, other) -> Optional[int]:
        if isinstance(other, (int, Fraction, QuadraticSurd, PowerProduct)):
            return compare(self, other)
        return None

    def __lt__(self, other):
        s = self._cmp(other)
        return NotImplemented if s is None else s < 0

    def __le__(self, other):
        s = self._cmp(other)
        return NotImplemented if s is None else s <= 0

    def __gt__(self, other):
        s = self._cmp(other)
        return NotImplemented if s is None else s > 0

    def __ge__(self, other):
        s = self._cmp(other)
        return NotImplemented if s is None else s >= 0

    def __str__(self) -> str:
        parts = [] if self.coefficient == 1 else [str(self.coefficient)]
        parts += [f"{f.base}^({f.exponent})" for f in self.factors]
        return "*".join(parts) or "1"


Magnitude = Union[Fraction, QuadraticSurd, PowerProduct]


def _root_bounds(base: Fraction, exponent: Fraction, bits: int) -> Tuple[Fraction, Fraction]:
    p, q = exponent.numerator, exponent.denominator
    value = base ** abs(p)
    num, den = value.numerator, value.denominator
    scale = 1 << bits
    # r ≥ 2^bits，保证相对精度
    root, exact = integer_nthroot(num * den ** (q - 1) * scale ** q, q)
    root = int(root)
    lo = Fraction(root, den * scale)
    hi = lo if exact else Fraction(root + 1, den * scale)
    if p < 0:
        lo, hi = 1 / hi, 1 / lo
    return lo, hi


def to_power_product(x: Magnitude) -> PowerProduct:
    if isinstance(x, PowerProduct):
        return x
    return PowerProduct.of(as_exact(x))


def compare(x, y) -> int:
    """
    两个实数的精确比较，返回 -1 / 0 / 1

    x、y 可以是 int、Fraction、QuadraticSurd 或 PowerProduct（恒为正）。
    """
    x_pp, y_pp = isinstance(x, PowerProduct), isinstance(y, PowerProduct)
    if not x_pp and not y_pp:
        return exact_sign(as_exact(x) - as_exact(y))
    if not x_pp and exact_sign(as_exact(x)) <= 0:
        return -1
    if not y_pp and exact_sign(as_exact(y)) <= 0:
        return 1
    return _cmp_positive(to_power_product(x), to_power_product(y))


def _cmp_positive(x: PowerProduct, y: PowerProduct) -> int:
    z = x / y
    if not z.factors:
        return exact_sign(z.coefficient - 1)
    lo, hi = z.bounds(DEFAULT_BITS)
    if hi < 1:
        return -1
    if lo > 1:
        return 1
    # 升到指数分母的最小公倍数次幂，化为整数幂比较
    power = math.lcm(*(f.exponent.denominator for f in z.factors))
    product = Fraction(1)
    for f in z.factors:
        product *= f.base ** int(f.exponent * power)
    raised = as_exact(z.coefficient) ** power
    return exact_sign(raised * product - 1)


def cmp_power(x: Union[RationalExponentPower, PowerProduct], y: Union[RationalExponentPower, PowerProduct]) -> int:
    """
    比较两个有理指数幂

    Args:
        x, y: RationalExponentPower 或 PowerProduct

    Returns:
        -1（小于）、0（相等）或 1（大于）
    """
    if isinstance(x, RationalExponentPower):
        x = x.as_product()
    if isinstance(y, RationalExponentPower):
        y = y.as_product()
    return compare(x, y)


def magnitude_bounds(x: Magnitude, bits: int = DEFAULT_BITS) -> Tuple[Fraction, Fraction]:
    if isinstance(x, PowerProduct):
        return x.bounds(bits)
    return exact_bounds(as_exact(x), bits)


def floor_of(x: Magnitude) -> int:
    if isinstance(x, PowerProduct):
        return x.floor()
    return math.floor(as_exact(x))


def ceil_of(x: Magnitude) -> int:
    if isinstance(x, PowerProduct):
        return x.ceil()
    return math.ceil(as_exact(x))


def floor_sum_div(y: ExactReal, w: Magnitude, h: Fraction) -> int:
    """
    精确计算 ⌊(y + w)/h⌋

    Args:
        y: 任意符号的精确实数
        w: 非负量（可为无理幂积）
        h: 正有理数步长
    """
    if not isinstance(w, PowerProduct) or w.is_exact:
        w_exact = w.coefficient if isinstance(w, PowerProduct) else as_exact(w)
        return math.floor((as_exact(y) + w_exact) / h)
    bits = DEFAULT_BITS
    while True:
        y_lo, y_hi = exact_bounds(as_exact(y), bits)
        w_lo, w_hi = w.bounds(bits)
        x_lo, x_hi = (y_lo + w_lo) / h, (y_hi + w_hi) / h
        if x_hi - x_lo < 1:
            break
        bits *= 2
    f = math.floor(x_lo)
    if math.floor(x_hi) == f:
        return f
    # (y + w)/h ≥ f + 1 ⇔ w ≥ (f + 1)h − y
    return f + 1 if compare(w, (f + 1) * h - y) >= 0 else f


def sign_of_sum(terms: Sequence[Magnitude], signs: Sequence[int]) -> Optional[int]:
    """
    Σ sign·term 的符号

    用逐步加细的有理包络判定；精度用尽仍无法判定时返回 None。
    """
    bits = DEFAULT_BITS
    while bits <= 4096:
        lo = hi = Fraction(0)
        for term, sign in zip(terms, signs):
            t_lo, t_hi = magnitude_bounds(term, bits)
            if sign > 0:
                lo, hi = lo + t_lo, hi + t_hi
            else:
                lo, hi = lo - t_hi, hi - t_lo
        if lo > 0:
            return 1
        if hi < 0:
            return -1
        if lo == hi == 0:
            return 0
        bits *= 4
    return None


def nearest_int_dist(x, q: int) -> Tuple[ExactReal, int]:
    """
    计算 ‖q·x‖ 及最近整数

    Args:
        x: Fraction 或 QuadraticSurd
        q: 正整数

    Returns:
        (距离, 最近整数)，距离在 [0, 1/2] 内
    """
    if q < 1:
        raise ValidationError(f"q 必须 ≥ 1: {q}")
    y = as_exact(x) * q
    nearest = math.floor(y + Fraction(1, 2))
    return abs(y - nearest), nearest


def dyadic_floor(x: Magnitude) -> Fraction:
    """不超过 x 的最大2的整数次幂"""
    lo, _ = magnitude_bounds(x)
    if lo <= 0:
        lo = Fraction(1, 1 << 4096)
    e = lo.numerator.bit_length() - lo.denominator.bit_length()
    candidate = Fraction(2) ** e
    while compare(x, candidate * 2) >= 0:
        candidate *= 2
    while compare(x, candidate) < 0:
        candidate /= 2
    return candidate


def farey_floor(x: Magnitude, limit: int) -> Fraction:
    """
    严格小于 x 且分母不超过 limit 的最大有理数（Stern–Brocot 下降）

    Args:
        x: 正实数
        limit: 分母上限
    """
    top = ceil_of(x)
    lower, upper = (top - 1, 1), (top, 1)
    while True:
        mediant = (lower[0] + upper[0], lower[1] + upper[1])
        if mediant[1] > limit:
            return Fraction(*lower)
        if compare(Fraction(*mediant), x) < 0:
            lower = mediant
        else:
            upper = mediant


def to_decimal(x: Magnitude, digits: int = DISPLAY_DIGITS) -> str:
    """近似十进制字符串（仅用于显示）"""
    with mpmath.workdps(digits + 10):
        if isinstance(x, PowerProduct):
            value = _mp(x.coefficient)
            for f in x.factors:
                value *= mpmath.power(mpmath.mpf(f.base.numerator) / f.base.denominator,
                                      mpmath.mpf(f.exponent.numerator) / f.exponent.denominator)
        else:
            value = _mp(as_exact(x))
        return mpmath.nstr(value, digits)


def _mp(x: ExactReal):
    if isinstance(x, QuadraticSurd):
        return (mpmath.mpf(x.a) + x.b * mpmath.sqrt(x.d)) / x.c
    return mpmath.mpf(x.numerator) / x.denominator


@dataclass(frozen=True)
class ClosedInterval:
    """有理端点的闭区间"""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, 'lo', Fraction(self.lo))
        object.__setattr__(self, 'hi', Fraction(self.hi))
        if self.hi < self.lo:
            raise ValidationError(f"区间端点顺序错误: [{self.lo}, {self.hi}]")

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, x: ExactReal) -> bool:
        return self.lo <= x <= self.hi

    def to_dict(self) -> Dict[str, int]:
        return {'lo_num': self.lo.numerator, 'lo_den': self.lo.denominator,
                'hi_num': self.hi.numerator, 'hi_den': self.hi.denominator}


# θ 的解析与认证 ---------------------------------------------------------

_SQRT_ONLY = re.compile(r'sqrt\((\d+)\)')
_A_PLUS_B = re.compile(r'\(?([+-]?\d+)([+-])(\d*)\*?sqrt\((\d+)\)\)?(?:/(\d+))?')
_B_PLUS_A = re.compile(r'\(?([+-]?\d*)\*?sqrt\((\d+)\)([+-]\d+)\)?(?:/(\d+))?')


def _coef(text: str) -> int:
    if text in ('', '+'):
        return 1
    if text == '-':
        return -1
    return int(text)


def parse_theta(text: str) -> ExactReal:
    """
    解析 θ，结果约化到 [0, 1)

    语法: "sqrt(D)"（表示 √D 的小数部分）、"(a+b*sqrt(d))/c"、
    "sqrt(d)-a" 之类的变体，以及有理数 "p/q"。
    """
    s = text.replace(' ', '')
    value: ExactReal
    m = _SQRT_ONLY.fullmatch(s)
    if m:
        value = QuadraticSurd.of(0, 1, 1, int(m.group(1)), reduce_radicand=True)
    elif _A_PLUS_B.fullmatch(s):
        m = _A_PLUS_B.fullmatch(s)
        b = _coef(m.group(3)) * (1 if m.group(2) == '+' else -1)
        value = QuadraticSurd.of(int(m.group(1)), b, int(m.group(5) or 1), int(m.group(4)), reduce_radicand=True)
    elif _B_PLUS_A.fullmatch(s):
        m = _B_PLUS_A.fullmatch(s)
        value = QuadraticSurd.of(int(m.group(3)), _coef(m.group(1)), int(m.group(4) or 1), int(m.group(2)),
                                 reduce_radicand=True)
    else:
        try:
            value = Fraction(s)
        except (ValueError, ZeroDivisionError):
            raise ValidationError(f"无法解析 theta: {text!r}")
    return value - math.floor(value)


@dataclass(frozen=True)
class BadnessCertificate:
    """c(θ) 的证书：有限扫描 + 连分数周期尾部界"""

    c: Fraction
    i: Fraction
    Q: int
    minimizing_q: int
    scan_minimum: ExactReal
    tail_bound: ExactReal
    preperiod: Tuple[int, ...]
    period: Tuple[int, ...]
    a_max: int
    denominator_limit: int

    def to_dict(self) -> Dict[str, object]:
        return {
            'c': str(self.c),
            'i': str(self.i),
            'Q': self.Q,
            'minimizing_q': self.minimizing_q,
            'scan_minimum': str(self.scan_minimum),
            'scan_minimum_approx': to_decimal(self.scan_minimum, 20),
            'tail_bound': str(self.tail_bound),
            'tail_bound_approx': to_decimal(self.tail_bound, 20),
            'preperiod': list(self.preperiod),
            'period': list(self.period),
            'a_max': self.a_max,
            'classical_bound': str(Fraction(1, self.a_max + 2)),
            'denominator_limit': self.denominator_limit,
        }


@dataclass(frozen=True)
class ThetaSpec:
    """二次无理数 θ 及其认证的 badness 常数 c(θ)"""

    value: QuadraticSurd
    source: str
    certificate: BadnessCertificate

    @property
    def c_theta(self) -> Fraction:
        return self.certificate.c

    def to_dict(self) -> Dict[str, object]:
        return {'source': self.source, 'value': str(self.value),
                'approx': to_decimal(self.value, 30), 'certificate': self.certificate.to_dict()}


def _partial_quotients(theta: QuadraticSurd) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    # (a + b√d)/c = (a + s√(b²d))/c
    expansion = continued_fraction_periodic(theta.a, theta.c, theta.b * theta.b * theta.d,
                                            1 if theta.b > 0 else -1)
    period = expansion[-1]
    if not isinstance(period, list):
        raise ValidationError(f"θ 的连分数不是周期的: {theta}")
    return tuple(int(a) for a in expansion[:-1]), tuple(int(a) for a in period)


def badness_lower_bound(theta, i=Fraction(1), Q: int = 10000, denominator_limit: int = 32) -> BadnessCertificate:
    """
    认证 ‖qθ‖ > c·q^{-1/i} 对所有 q 成立的有理常数 c

    对 q ≤ Q 精确扫描 q‖qθ‖，再用连分数周期给出所有收敛分母之后的
    精确尾部下界；取二者较小者向下取到分母不超过 denominator_limit
    的有理数。因 i ≤ 1 时 q^{-1/i} ≤ q^{-1}，同一常数对所有这样的 i 有效。

    Args:
        theta: 二次无理数
        i: 指数，0 < i ≤ 1
        Q: 扫描上界
        denominator_limit: 取整时的分母上限

    Returns:
        BadnessCertificate
    """
    i = Fraction(i)
    if not 0 < i <= 1:
        raise ValidationError(f"i 必须在 (0, 1] 内: {i}")
    if not isinstance(theta, QuadraticSurd):
        raise ValidationError(f"theta must be a badly approximable irrational: {theta} 是有理数")
    if Q < 1:
        raise ValidationError(f"Q 必须 ≥ 1: {Q}")

    preperiod, period = _partial_quotients(theta)
    quotients = list(preperiod) + list(period)

    def quotient(k: int) -> int:
        if k < len(preperiod):
            return preperiod[k]
        return period[(k - len(preperiod)) % len(period)]

    # 从 k0 起 (α_{k+1}, a_k, a_{k-1}) 随 k 周期变化
    k0 = max(len(preperiod) + 1, 2)

    # 完全商 α_k 与收敛分母 q_k
    alphas: List[ExactReal] = [theta]
    denominators = [1]
    prev_den = 0
    for k in range(1, k0 + len(period) + 1):
        alphas.append(1 / (alphas[k - 1] - quotient(k - 1)))
        if k <= k0:
            denominators.append(quotient(k) * denominators[-1] + prev_den)
            prev_den = denominators[-2]

    tail: Optional[ExactReal] = None
    for k in range(k0, k0 + len(period)):
        beta_upper = 1 / (quotient(k) + Fraction(1, quotient(k - 1) + 1))
        candidate = 1 / (alphas[k + 1] + beta_upper)
        if tail is None or candidate < tail:
            tail = candidate

    # 扫描必须覆盖 q_{k0} 之前的所有 q
    Q = max(Q, denominators[k0])
    scan_min: Optional[ExactReal] = None
    arg_q = 1
    for q in range(1, Q + 1):
        dist, _ = nearest_int_dist(theta, q)
        value = dist * q
        if scan_min is None or value < scan_min:
            scan_min, arg_q = value, q

    bound = scan_min if scan_min < tail else tail
    # 按分母上限向下取 Farey 有理数而非二进数：√2 − 1 的下界由此取到 1/3
    c = farey_floor(bound, denominator_limit)
    certificate = BadnessCertificate(c=c, i=i, Q=Q, minimizing_q=arg_q, scan_minimum=scan_min,
                                     tail_bound=tail, preperiod=preperiod, period=period,
                                     a_max=max(quotients[1:] or quotients), denominator_limit=denominator_limit)
    logger.info(f"θ = {theta} 的 badness 常数 c = {c}（扫描最小值在 q = {arg_q}，Q = {Q}）")
    return certificate


def certify_theta(text: str, Q: int = 10000, denominator_limit: int = 32) -> ThetaSpec:
    """
    解析并认证 θ

    Raises:
        ValidationError: θ 为有理数或无法解析
    """
    value = parse_theta(text)
    if not isinstance(value, QuadraticSurd):
        raise ValidationError(f"theta must be a badly approximable irrational: {text!r} 是有理数")
    certificate = badness_lower_bound(value, Fraction(1), Q, denominator_limit)
    return ThetaSpec(value=value, source=text, certificate=certificate)
