"""
直线族
直线 L(A,B,C): Ax − By + C = 0 与竖线 x = θ 交于 y = (Aθ + C)/B，
构造中每条直线从 Θ 上去掉以该点为中心、长 2c/H(A,B) 的区间 Δ(L)。
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Tuple, Union

from badweave.exact_arith import (
    ClosedInterval,
    ExactReal,
    Magnitude,
    PowerProduct,
    ThetaSpec,
    as_exact,
    compare,
    floor_sum_div,
    magnitude_bounds,
    to_decimal,
)
from utils.exceptions import FalsificationError, ValidationError
from utils.logger import get_logger

logger = get_logger(__name__)

GENERIC = 'generic'
X_ONLY = 'x_only'   # (1, 0)：不起作用
Y_ONLY = 'y_only'   # (0, 1)：有理点族 Δ(p/q)


@dataclass(frozen=True)
class Pair:
    """权重对 (i, j)，i + j = 1"""

    i: Fraction
    j: Fraction

    def __post_init__(self):
        object.__setattr__(self, 'i', Fraction(self.i))
        object.__setattr__(self, 'j', Fraction(self.j))
        if self.i + self.j != 1:
            raise ValidationError(f"权重对必须满足 i + j = 1: ({self.i}, {self.j})")
        if self.i < 0 or self.j < 0:
            raise ValidationError(f"权重必须非负: ({self.i}, {self.j})")

    @property
    def kind(self) -> str:
        if self.j == 0:
            return X_ONLY
        if self.i == 0:
            return Y_ONLY
        return GENERIC

    @property
    def is_degenerate(self) -> bool:
        return self.kind != GENERIC

    @property
    def alpha(self) -> Fraction:
        return self.i * self.j / 4

    @property
    def lam(self) -> Fraction:
        if self.j == 0:
            raise ValidationError("λ = 3/j 对 (1,0) 无定义")
        return 3 / self.j

    def __str__(self) -> str:
        return f"{self.i},{self.j}"


def parse_pair(text: str) -> Pair:
    """
    解析 "p/q,p'/q'" 形式的权重对

    Args:
        text: 例如 "1/2,1/2" 或 "1/3,2/3"

    Returns:
        Pair 对象
    """
    parts = [p.strip() for p in str(text).split(',')]
    if len(parts) != 2:
        raise ValidationError(f"权重对格式错误: {text!r}")
    try:
        return Pair(Fraction(parts[0]), Fraction(parts[1]))
    except (ValueError, ZeroDivisionError) as e:
        raise ValidationError(f"权重对格式错误: {text!r}") from e


@dataclass(frozen=True)
class Line:
    """规范化直线：gcd(A,B,C) = 1 且 B > 0"""

    A: int
    B: int
    C: int

    def __post_init__(self):
        if self.B <= 0 or math.gcd(self.A, self.B, self.C) != 1:
            raise ValidationError(f"直线未规范化: ({self.A},{self.B},{self.C})")

    @property
    def sort_key(self) -> Tuple[int, int, int]:
        return self.B, self.A, self.C

    def trace(self, theta: ExactReal) -> ExactReal:
        """与 x = θ 的交点纵坐标 (Aθ + C)/B"""
        return (self.A * as_exact(theta) + self.C) / self.B

    def passes_through(self, p: int, r: int, q: int) -> bool:
        return self.A * p - self.B * r + self.C * q == 0

    def to_dict(self) -> Dict[str, int]:
        return {'A': self.A, 'B': self.B, 'C': self.C}

    def __str__(self) -> str:
        return f"L({self.A},{self.B},{self.C})"


def normalize(A: int, B: int, C: int) -> Line:
    """
    化为等价的规范三元组

    Raises:
        ValidationError: B = 0（竖线被 θ ∈ Bad(i) 排除）
    """
    if B == 0:
        raise ValidationError("vertical line excluded by θ ∈ Bad(i)")
    if B < 0:
        A, B, C = -A, -B, -C
    g = math.gcd(A, B, C)
    return Line(A // g, B // g, C // g)


@lru_cache(maxsize=1 << 16)
def height_terms(A: int, B: int, pair: Pair) -> Tuple[Magnitude, bool]:
    """
    计算 H(A,B) = B·max{|A|^{1/i}, B^{1/j}}

    Returns:
        (H, A 项是否严格占优)
    """
    if pair.is_degenerate:
        raise ValidationError(f"高度对退化权重对无定义: {pair}")
    if B <= 0:
        raise ValidationError(f"高度要求 B > 0: {B}")
    b_term = PowerProduct.power(B, 1 / pair.j)
    a_dominates = False
    top: PowerProduct = b_term
    if A != 0:
        a_term = PowerProduct.power(abs(A), 1 / pair.i)
        if compare(a_term, b_term) > 0:
            top, a_dominates = a_term, True
    return (top * B).simplify(), a_dominates


def height(line: Union[Line, Tuple[int, int]], pair: Pair) -> Magnitude:
    A, B = (line.A, line.B) if isinstance(line, Line) else line
    return height_terms(A, B, pair)[0]


@dataclass(frozen=True)
class RemovalInterval:
    """以 center 为中心、半径 halfwidth 的闭区间 Δ"""

    center: ExactReal
    halfwidth: Magnitude
    source: Union[Line, Fraction]

    @property
    def length(self) -> Magnitude:
        return self.halfwidth * 2

    def meets(self, lo: Fraction, hi: Fraction) -> bool:
        """与闭区间 [lo, hi] 相交（含端点接触）"""
        return (compare(self.halfwidth, self.center - hi) >= 0
                and compare(self.halfwidth, lo - self.center) >= 0)

    def contains(self, y: ExactReal) -> bool:
        return compare(self.halfwidth, abs(as_exact(y) - self.center)) >= 0

    def index_range(self, step: Fraction) -> Tuple[int, int]:
        """
        与 Δ 相交的网格区间 [k·step, (k+1)·step] 的编号范围

        Returns:
            (kmin, kmax)，闭区间
        """
        kmax = floor_sum_div(self.center, self.halfwidth, step)
        kmin = -floor_sum_div(-self.center, self.halfwidth, step) - 1
        return kmin, kmax

    def to_dict(self) -> Dict[str, object]:
        record: Dict[str, object] = {
            'center': str(self.center),
            'center_approx': to_decimal(self.center, 20),
            'halfwidth': str(self.halfwidth),
            'halfwidth_approx': to_decimal(self.halfwidth, 20),
        }
        if isinstance(self.source, Line):
            record.update(self.source.to_dict())
        else:
            record.update({'p': self.source.numerator, 'q': self.source.denominator})
        return record


def theta_value(theta) -> ExactReal:
    return theta.value if isinstance(theta, ThetaSpec) else as_exact(theta)


def removal_halfwidth(c: Fraction, H: Magnitude) -> Magnitude:
    if c == 0:
        return Fraction(0)
    if isinstance(H, PowerProduct):
        return (c / H).simplify()
    return Fraction(c) / H


def delta_interval(line: Line, pair: Pair, c: Fraction, theta) -> RemovalInterval:
    """Δ(L)：中心 (Aθ + C)/B，半径 c/H(A,B)"""
    return RemovalInterval(line.trace(theta_value(theta)), removal_halfwidth(Fraction(c), height(line, pair)), line)


def rational_delta(point: Fraction, c: Fraction) -> RemovalInterval:
    """Δ(p/q)：中心 p/q，半径 c/q²"""
    point = Fraction(point)
    return RemovalInterval(point, removal_halfwidth(Fraction(c), Fraction(point.denominator ** 2)), point)


@dataclass(frozen=True)
class FamilyIndex:
    n: int
    l: int
    k: int

    def to_dict(self) -> Dict[str, int]:
        return {'n': self.n, 'l': self.l, 'k': self.k}


def classify(line: Line, pair: Pair, R: int, n: int) -> Optional[FamilyIndex]:
    """
    判定直线所属的族 C(n,l,k)

    Args:
        line: 规范化直线
        pair: 非退化权重对
        R: 细分基数
        n: 层号

    Returns:
        FamilyIndex；高度不在 [R^{n−1}, R^n) 时返回 None
    """
    if R < 2 or n < 1:
        raise ValidationError(f"classify 要求 R ≥ 2, n ≥ 1: R={R}, n={n}")
    H, a_dominates = height_terms(line.A, line.B, pair)
    if compare(H, Fraction(R) ** (n - 1)) < 0 or compare(H, Fraction(R) ** n) >= 0:
        return None

    band_top = Fraction(n) * pair.j / (pair.j + 1)
    lam = pair.lam
    l = 0
    while compare(line.B, PowerProduct.power(R, band_top - lam * (l + 1))) < 0:
        l += 1

    k = 0
    while compare(H, Fraction(2 ** (k + 1)) * Fraction(R) ** (n - 1)) >= 0:
        k += 1

    if l > 0:
        witness = {'line': line.to_dict(), 'pair': str(pair), 'R': R, 'n': n, 'l': l}
        if not a_dominates:
            raise FalsificationError("C(n,l>0) 中的直线高度应由 A 项决定", witness)
        lower = PowerProduct.power(R, n * pair.i / (pair.j + 1) + (lam * l - 1) * pair.i)
        upper = PowerProduct.power(R, n * pair.i / (pair.j + 1) + lam * (l + 1) * pair.i)
        if not (compare(abs(line.A), lower) > 0 and compare(abs(line.A), upper) < 0):
            raise FalsificationError("|A| 超出 C(n,l) 的代数界", witness)
    return FamilyIndex(n, l, k)


def _ceil_diff(x: ExactReal, w: Magnitude) -> int:
    # ⌈x − w⌉ = −⌊(−x) + w⌋
    return -floor_sum_div(-x, w, Fraction(1))


def _lines_for_b_range(pair: Pair, R: int, n: int, window: ClosedInterval, c: Fraction,
                       theta: ExactReal, b_start: int, b_stop: int) -> List[Line]:
    top, bottom = Fraction(R) ** n, Fraction(R) ** (n - 1)
    out: List[Line] = []
    for B in range(b_start, b_stop):
        # |A| 满足 B·|A|^{1/i} < R^n
        a_max = PowerProduct.power(top / B, pair.i).ceil() - 1
        for A in range(-a_max, a_max + 1):
            H, _ = height_terms(A, B, pair)
            if compare(H, bottom) < 0:
                continue
            spread = removal_halfwidth(c, H) * B if c else Fraction(0)
            # Δ(L) 与窗口相交 ⇔ B·lo − Aθ − B·w ≤ C ≤ B·hi − Aθ + B·w
            base = A * theta
            c_min = _ceil_diff(B * window.lo - base, spread)
            c_max = floor_sum_div(B * window.hi - base, spread, Fraction(1))
            for C in range(c_min, c_max + 1):
                if math.gcd(A, B, C) == 1:
                    out.append(Line(A, B, C))
    return out


def _b_limit(pair: Pair, R: int, n: int) -> int:
    # 最大的 B 满足 B^{1+1/j} < R^n
    top = Fraction(R) ** n
    b = PowerProduct.power(top, pair.j / (pair.j + 1)).ceil() - 1
    return max(b, 0)


def enumerate_lines(pair: Pair, R: int, n: int, window: ClosedInterval, c: Fraction, theta,
                    workers: int = 1) -> List[Line]:
    """
    枚举 C(n) 中 Δ(L) 与窗口相交的全部规范直线

    Args:
        pair: 非退化权重对
        R: 细分基数
        n: 层号（n = 0 时结果为空）
        window: Θ 上的有理窗口
        c: 常数；c = 0 时只要求交点落在窗口内
        theta: ThetaSpec 或精确实数
        workers: 并行进程数，按 B 区段划分

    Returns:
        按 (B, A, C) 排序的直线列表
    """
    if pair.is_degenerate:
        raise ValidationError(f"直线族只对非退化权重对定义: {pair}")
    if n < 1:
        return []
    c = Fraction(c)
    if c > Fraction(1, 2):
        raise ValidationError(f"c 必须 ≤ 1/2: {c}")
    value = theta_value(theta)
    b_max = _b_limit(pair, R, n)
    if workers <= 1 or b_max < 2 * workers:
        lines = _lines_for_b_range(pair, R, n, window, c, value, 1, b_max + 1)
    else:
        bounds = _partition(b_max, workers)
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(_lines_for_b_range, pair, R, n, window, c, value, lo, hi)
                       for lo, hi in bounds]
            lines = [line for future in futures for line in future.result()]
    logger.debug(f"C({n}) 与窗口 [{window.lo}, {window.hi}] 相交的直线 {len(lines)} 条 (B ≤ {b_max})")
    return lines


def _partition(b_max: int, workers: int) -> List[Tuple[int, int]]:
    # 区间 [1, b_max] 的连续分块；小 B 的 A 范围更大，按 B^{-i} 的量级均衡并不必要
    size = math.ceil(b_max / workers)
    return [(lo, min(lo + size, b_max + 1)) for lo in range(1, b_max + 1, size)]


def enumerate_rationals(R: int, n: int, window: ClosedInterval, c: Fraction) -> List[Fraction]:
    """
    枚举 R^{n−1} ≤ q² < R^n 且 Δ(p/q) 与窗口相交的既约分数 p/q

    Returns:
        按 (q, p) 排序的分数列表
    """
    if n < 1:
        return []
    c = Fraction(c)
    top, bottom = R ** n, R ** (n - 1)
    out: List[Fraction] = []
    q = math.isqrt(bottom - 1) + 1
    while q * q < top:
        reach = c / q
        p_min = math.ceil(q * window.lo - reach)
        p_max = math.floor(q * window.hi + reach)
        for p in range(p_min, p_max + 1):
            if math.gcd(p, q) == 1:
                out.append(Fraction(p, q))
        q += 1
    return out


def line_record(line: Line, pair: Pair, R: Optional[int] = None,
                family: Optional[FamilyIndex] = None) -> Dict[str, object]:
    """
    直线的 JSON 记录；H 以精确幂积字符串给出，H_num/H_den 为精确值或有理下界
    """
    H = height(line, pair)
    exact = not isinstance(H, PowerProduct)
    value = as_exact(H) if exact else magnitude_bounds(H)[0]
    record: Dict[str, object] = {
        **line.to_dict(),
        'H': str(H),
        'H_num': value.numerator,
        'H_den': value.denominator,
        'H_exact': exact,
    }
    if family is None and R is not None:
        n = 1
        while compare(H, Fraction(R) ** n) >= 0:
            n += 1
        family = classify(line, pair, R, n)
    if family is not None:
        record.update(family.to_dict())
    return record
