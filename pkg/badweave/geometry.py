"""
有理交点几何
把共点性、格 Λ(P)、图形 F / F_l、锥 C(A₀,B₀)、鸽笼直线与 L₀ 的搜索
做成可执行的精确检查，并给出每个 J_{n−l} 上的移除计数。
"""

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cmp_to_key
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from badweave.construction import ConstructionTree, PairParams, line_removal_bound, trimmed_children
from badweave.exact_arith import (
    ClosedInterval,
    ExactReal,
    Magnitude,
    PowerProduct,
    ThetaSpec,
    compare,
    exact_sign,
    magnitude_bounds,
    nearest_int_dist,
    sign_of_sum,
    to_decimal,
    to_power_product,
)
from badweave.index_runs import IndexRuns
from badweave.lines import (
    GENERIC,
    Line,
    Pair,
    classify,
    delta_interval,
    enumerate_lines,
    height,
    normalize,
    removal_halfwidth,
    theta_value,
)
from utils.exceptions import FalsificationError, ValidationError
from utils.logger import get_logger

logger = get_logger(__name__)

COUNT_HEADER = ['n', 'pair', 'l', 'k', 'j', 'lines', 'count', 'per_line_max', 'aggregate_bound',
                'aggregate_holds', 'case', 'K', 'd', 'type1', 'type2', 'M_star']
FIGURE_HEADER = ['A', 'B', 'in_F', 'in_F_l', 'in_cone']


# 有理点与交点 -------------------------------------------------------------

@dataclass(frozen=True)
class RationalPoint:
    """
    平面有理点 P = (p/q, r/q)

    q > 0 且 gcd(p, r, q) = 1。由两直线求交得到时 t 满足
    t·q = A₁B₂ − A₂B₁、t·p = B₁C₂ − B₂C₁。
    """

    p: int
    r: int
    q: int
    t: Optional[int] = field(default=None, compare=False)

    def __post_init__(self):
        if self.q <= 0 or math.gcd(self.p, self.r, self.q) != 1:
            raise ValidationError(f"有理点未约化: ({self.p}, {self.r}, {self.q})")

    @classmethod
    def from_coordinates(cls, x: Fraction, y: Fraction) -> 'RationalPoint':
        x, y = Fraction(x), Fraction(y)
        q = math.lcm(x.denominator, y.denominator)
        return cls(int(x * q), int(y * q), q)

    @property
    def x(self) -> Fraction:
        return Fraction(self.p, self.q)

    @property
    def y(self) -> Fraction:
        return Fraction(self.r, self.q)

    def on_line(self, line: Line) -> bool:
        return line.passes_through(self.p, self.r, self.q)

    def theta_gap(self, theta) -> ExactReal:
        """|qθ − p|"""
        return abs(self.q * theta_value(theta) - self.p)

    def to_dict(self) -> Dict[str, object]:
        return {'p': self.p, 'r': self.r, 'q': self.q, 't': self.t}

    def __str__(self) -> str:
        return f"({self.x}, {self.y})"


def intersect(first: Line, second: Line) -> Optional[RationalPoint]:
    """
    两条规范直线的精确交点

    Returns:
        RationalPoint；平行（A₁B₂ = A₂B₁）时返回 None

    Raises:
        ValidationError: 两条直线相同
    """
    D = first.A * second.B - second.A * first.B
    X = first.B * second.C - second.B * first.C
    Y = first.A * second.C - second.A * first.C
    if D == 0:
        if first == second:
            raise ValidationError(f"两条直线相同: {first}")
        return None
    g = math.gcd(D, X, Y)
    sign = 1 if D > 0 else -1
    q = abs(D) // g
    return RationalPoint(sign * X // g, sign * Y // g, q, D // q)


# 格 Λ(P) ------------------------------------------------------------------

@dataclass(frozen=True)
class LatticePlane:
    """
    Λ(P) = {(A,B,C) : Ap − Br + Cq = 0} 在 (A,B) 平面上的投影

    三角基 (q/g, 0)、(a_shift, g)，g = gcd(p, q)；B 必须是 g 的倍数，
    B = s·g 时 A ≡ s·a_shift (mod q/g)。
    """

    point: RationalPoint
    g: int
    a_shift: int

    @property
    def a_step(self) -> int:
        return self.point.q // self.g

    @property
    def basis(self) -> Tuple[Tuple[int, int], Tuple[int, int]]:
        return (self.a_step, 0), (self.a_shift, self.g)

    @property
    def determinant(self) -> int:
        (a1, b1), (a2, b2) = self.basis
        return abs(a1 * b2 - a2 * b1)

    def contains(self, A: int, B: int) -> bool:
        return (A * self.point.p - B * self.point.r) % self.point.q == 0

    def C_for(self, A: int, B: int) -> int:
        numerator = B * self.point.r - A * self.point.p
        if numerator % self.point.q:
            raise ValidationError(f"({A}, {B}) 不在 Λ(P) 中")
        return numerator // self.point.q

    def row(self, B: int, a_limit: int) -> Iterator[int]:
        """给定 B 时 |A| ≤ a_limit 的格点横坐标，升序"""
        if B % self.g or a_limit < 0:
            return
        step = self.a_step
        residue = (B // self.g) * self.a_shift % step
        start = -a_limit + (residue + a_limit) % step
        yield from range(start, a_limit + 1, step)

    def points_in_band(self, b_max: int, a_limit) -> Iterator[Tuple[int, int]]:
        """0 < B ≤ b_max、|A| ≤ a_limit(B) 的全部格点"""
        for B in range(self.g, b_max + 1, self.g):
            for A in self.row(B, a_limit(B)):
                yield A, B


def lattice_plane(point: RationalPoint) -> LatticePlane:
    g = math.gcd(point.p, point.q)
    m = point.q // g
    a_shift = 0 if m == 1 else point.r * pow(point.p // g, -1, m) % m
    return LatticePlane(point, g, a_shift)


# 共点性 -------------------------------------------------------------------

@dataclass
class ConcurrencyVerdict:
    status: str                      # empty | concurrent | violation
    lines: List[Line]
    point: Optional[RationalPoint] = None
    witness: Optional[Dict[str, object]] = None

    def to_dict(self) -> Dict[str, object]:
        return {
            'status': self.status,
            'lines': [line.to_dict() for line in self.lines],
            'point': None if self.point is None else self.point.to_dict(),
            'witness': self.witness,
        }


def concurrency_check(pair: Pair, R: int, n: int, l: int, window: ClosedInterval, theta,
                      c1: Optional[Fraction] = None) -> ConcurrencyVerdict:
    """
    检查与窗口相交的 C(n,l) 直线是否共点

    Args:
        pair: 非退化权重对
        R: 细分基数
        n: 层号
        l: B 带编号
        window: 长 c₁R^{−(n−l)} 的窗口
        theta: ThetaSpec 或精确实数
        c1: 给出时校验窗口长度，并在 4c₁R^{λi} > 1 时告警

    Returns:
        ConcurrencyVerdict；violation 给出不共点的三条直线
    """
    if c1 is not None:
        c1 = Fraction(c1)
        if window.length != c1 / Fraction(R) ** (n - l):
            raise ValidationError(f"窗口长度必须为 c₁R^(-(n-l)): {window.length}")
        if compare(PowerProduct.power(R, pair.lam * pair.i) * (4 * c1), 1) > 0:
            logger.warning(f"c₁ = {c1} 不满足 4c₁R^(λi) ≤ 1，共点性不受保证")
    lines = [line for line in enumerate_lines(pair, R, n, window, 0, theta)
             if classify(line, pair, R, n).l == l]
    if not lines:
        return ConcurrencyVerdict('empty', lines)
    if len(lines) == 1:
        return ConcurrencyVerdict('concurrent', lines)
    first, second = lines[0], lines[1]
    point = intersect(first, second)
    if point is None:
        return ConcurrencyVerdict('violation', lines, witness={
            'reason': 'parallel', 'lines': [first.to_dict(), second.to_dict()]})
    for line in lines[2:]:
        if not point.on_line(line):
            return ConcurrencyVerdict('violation', lines, point, {
                'reason': 'triangle', 'lines': [first.to_dict(), second.to_dict(), line.to_dict()]})
    return ConcurrencyVerdict('concurrent', lines, point)


def _random_window(rng: random.Random, length: Fraction, span: Fraction = Fraction(1)) -> ClosedInterval:
    lo = Fraction(rng.randrange(1 << 32), 1 << 32) * (span - length)
    return ClosedInterval(lo, lo + length)


def concurrency_sweep(pair: Pair, theta, R: int, c1: Fraction, n_max: int, l_max: int = 1,
                      trials: int = 100, seed: int = 0) -> Dict[str, object]:
    """对每个 (n, l) 取 trials 个随机窗口运行 concurrency_check"""
    rng = random.Random(seed)
    summary: Dict[str, object] = {'pair': str(pair), 'R': R, 'c1': str(c1), 'checked': 0,
                                  'nonempty': 0, 'max_lines': 0, 'violations': []}
    for n in range(1, n_max + 1):
        for l in range(0, min(l_max, n) + 1):
            length = Fraction(c1) / Fraction(R) ** (n - l)
            for _ in range(trials):
                verdict = concurrency_check(pair, R, n, l, _random_window(rng, length), theta, c1)
                summary['checked'] += 1
                summary['nonempty'] += verdict.status != 'empty'
                summary['max_lines'] = max(summary['max_lines'], len(verdict.lines))
                if verdict.status == 'violation':
                    summary['violations'].append({'n': n, 'l': l, **verdict.to_dict()})
    logger.info(f"共点性扫描 {pair}: {summary['checked']} 个窗口，违例 {len(summary['violations'])}")
    return summary


# 鸽笼直线与两直线不等式 ------------------------------------------------------

def pigeonhole_line(point: RationalPoint, theta, pair: Pair,
                    c_theta: Optional[Fraction] = None) -> Line:
    """
    过 P 且 |A| ≤ q^i、0 < B ≤ q^j 的直线

    在 0 ≤ a ≤ [q^i]、0 ≤ b ≤ [q^j] 的网格上找 ap − br 模 q 的碰撞。

    Args:
        point: 有理点 P
        theta: ThetaSpec 或精确实数
        pair: 权重对
        c_theta: θ 的 badness 常数；theta 为 ThetaSpec 时可省略

    Raises:
        ValidationError: |qθ − p| < c(θ)q^{−i} 不成立
        FalsificationError: 网格上没有 B > 0 的碰撞
    """
    if c_theta is None:
        if not isinstance(theta, ThetaSpec):
            raise ValidationError("未给出 c(θ)")
        c_theta = theta.c_theta
    q, p, r = point.q, point.p, point.r
    gap = point.theta_gap(theta)
    if compare(gap, PowerProduct.power(q, -pair.i) * Fraction(c_theta)) >= 0:
        raise ValidationError(f"|qθ − p| < c(θ)q^(-i) 不成立: P = {point}")
    if q == 1:
        return normalize(0, 1, r)

    a_top = PowerProduct.power(q, pair.i).floor()
    b_top = PowerProduct.power(q, pair.j).floor()
    seen: Dict[int, Tuple[int, int]] = {}
    for b in range(b_top + 1):
        for a in range(a_top + 1):
            residue = (a * p - b * r) % q
            if residue not in seen:
                seen[residue] = (a, b)
                continue
            a0, b0 = seen[residue]
            A, B = a - a0, b - b0
            if B == 0:
                continue
            C = -(A * p - B * r) // q
            line = normalize(A, B, C)
            if not (point.on_line(line) and abs(line.A) <= a_top and 0 < line.B <= b_top):
                raise FalsificationError("鸽笼直线不满足界", {'point': point.to_dict(), 'line': line.to_dict()})
            return line
    raise FalsificationError("鸽笼网格上没有 B > 0 的碰撞", {
        'point': point.to_dict(), 'pair': str(pair), 'a_top': a_top, 'b_top': b_top})


def pigeonhole_sweep(theta: ThetaSpec, pair: Pair, q_max: int) -> Dict[str, object]:
    """
    对 q ≤ q_max 中满足 |qθ − p| < c(θ)q^{−i} 的全部 P = (p/q, r/q) 运行 pigeonhole_line
    """
    c = theta.c_theta
    cases = points = 0
    for q in range(1, q_max + 1):
        gap, p = nearest_int_dist(theta.value, q)
        if compare(gap, PowerProduct.power(q, -pair.i) * c) >= 0:
            continue
        cases += 1
        for r in range(q):
            if math.gcd(p, r, q) == 1:
                pigeonhole_line(RationalPoint(p, r, q), theta, pair, c)
                points += 1
    logger.info(f"鸽笼扫描 {pair}: {cases} 个 (p, q)，{points} 个点全部成功")
    return {'pair': str(pair), 'q_max': q_max, 'c_theta': str(c), 'cases': cases, 'points': points}


def lemma2_check(first: Line, second: Line, point: Optional[RationalPoint], window: ClosedInterval,
                 pair: Pair, R: int, n: int, k: int, tau: Magnitude, theta) -> Optional[bool]:
    """
    两条过 P 且穿过窗口的直线满足 |qθ − p| < 2^i·τ·2^{k+1}R^{−1}·q^{−i}

    Returns:
        不等式是否成立；前提（交于 P、都穿过窗口、|窗口| ≤ τR^{−n}、
        高度 < 2^{k+1}R^{n−1}）不满足时返回 None
    """
    meet = intersect(first, second)
    if meet is None:
        return None
    if point is not None and point != meet:
        raise ValidationError(f"两条直线交于 {meet} 而不是 {point}")
    value = theta_value(theta)
    if not (window.contains(first.trace(value)) and window.contains(second.trace(value))):
        return None
    if compare(window.length, to_power_product(tau) / Fraction(R) ** n) > 0:
        return None
    top = Fraction(2 ** (k + 1)) * Fraction(R) ** (n - 1)
    if compare(height(first, pair), top) >= 0 or compare(height(second, pair), top) >= 0:
        return None
    bound = to_power_product(tau) * PowerProduct.of(Fraction(2 ** (k + 1), R), [(2, pair.i), (meet.q, -pair.i)])
    return compare(meet.theta_gap(value), bound) < 0


def lemma2_sweep(pair: Pair, theta, R: int, n_max: int, tau: Fraction = Fraction(1),
                 trials: int = 100, seed: int = 0) -> Dict[str, object]:
    """随机窗口内同一 C(n,k) 的全部非平行直线对都应满足 lemma2_check"""
    rng = random.Random(seed)
    checked, violations = 0, []
    for n in range(1, n_max + 1):
        length = Fraction(tau) / Fraction(R) ** n
        for _ in range(trials):
            window = _random_window(rng, length)
            by_k: Dict[int, List[Line]] = {}
            for line in enumerate_lines(pair, R, n, window, 0, theta):
                by_k.setdefault(classify(line, pair, R, n).k, []).append(line)
            for k, members in by_k.items():
                for a in range(len(members)):
                    for b in range(a + 1, len(members)):
                        verdict = lemma2_check(members[a], members[b], None, window, pair, R, n, k, tau, theta)
                        if verdict is None:
                            continue
                        checked += 1
                        if not verdict:
                            violations.append({'n': n, 'k': k, 'lines': [members[a].to_dict(), members[b].to_dict()]})
    logger.info(f"两直线不等式扫描 {pair}: 检查 {checked} 对，违例 {len(violations)}")
    return {'pair': str(pair), 'tau': str(tau), 'checked': checked, 'violations': violations}


# 图形 F 与锥 ----------------------------------------------------------------

@dataclass(frozen=True)
class FigureSpec:
    """
    过 P 且穿过长 τR^{−n} 窗口的 C(n,k) 直线的 (A,B) 所在区域

    c₂ = 2^{k+1}τ/(R|qθ−p|)，δ 由 c₂ = δ^{−1}2^{−i}q^i 给出。
    """

    pair: Pair
    point: RationalPoint
    R: int
    k: int
    l: int
    tau: Magnitude
    c2: PowerProduct
    delta: PowerProduct

    @property
    def c3(self) -> Optional[PowerProduct]:
        """R^{j/i − λl(j+1)/i}，仅 l > 0"""
        if self.l == 0:
            return None
        i, j = self.pair.i, self.pair.j
        return PowerProduct.power(self.R, (j - self.pair.lam * self.l * (j + 1)) / i)

    def to_dict(self) -> Dict[str, object]:
        return {
            'pair': str(self.pair), 'point': self.point.to_dict(), 'R': self.R, 'k': self.k, 'l': self.l,
            'tau': str(self.tau), 'c2': str(self.c2), 'c2_approx': to_decimal(self.c2, 12),
            'delta': str(self.delta), 'delta_approx': to_decimal(self.delta, 12),
        }


def figure_spec(point: RationalPoint, theta, pair: Pair, R: int, k: int, tau: Magnitude, l: int = 0) -> FigureSpec:
    if pair.is_degenerate:
        raise ValidationError(f"图形 F 只对非退化权重对定义: {pair}")
    gap = point.theta_gap(theta)
    if exact_sign(gap) == 0:
        raise ValidationError("qθ = p：θ 不能是有理数")
    c2 = to_power_product(tau) * Fraction(2 ** (k + 1), R) / gap
    delta = PowerProduct.of(1, [(point.q, pair.i), (2, -pair.i)]) / c2
    return FigureSpec(pair, point, R, k, l, tau, c2, delta)


def figure_membership(point: Tuple[int, int], spec: FigureSpec, variant: str = 'F') -> bool:
    """
    (A,B) 是否在 F（|A| < c₂^i B^i，0 < B < c₂^{j/i}）或 F_l 内

    F_l 在 F 的基础上再要求 B < c₃c₂^{j/i} 与 |A| < c₃^i c₂，所以 F_l ⊆ F。
    比较都化为不对 c₂ 开方的形式：|A|^{1/i} < c₂B，B^{i/j} < c₂。
    """
    if variant not in ('F', 'F_l'):
        raise ValidationError(f"未知图形: {variant}")
    A, B = point
    if B <= 0:
        return False
    i, j = spec.pair.i, spec.pair.j
    if compare(PowerProduct.power(B, i / j), spec.c2) >= 0:
        return False
    if A and compare(PowerProduct.power(abs(A), 1 / i), spec.c2 * B) >= 0:
        return False
    if variant == 'F' or spec.l == 0:
        return True
    shift = spec.pair.lam * spec.l * (j + 1)
    # B < c₃c₂^{j/i} ⇔ B^{i/j}·c₃^{−i/j} < c₂；|A| < c₃^i c₂ ⇔ |A|·c₃^{−i} < c₂
    if compare(PowerProduct.of(1, [(B, i / j), (spec.R, shift / j - 1)]), spec.c2) >= 0:
        return False
    return not A or compare(PowerProduct.of(abs(A), [(spec.R, shift - j)]), spec.c2) < 0


def figure_lattice_points(spec: FigureSpec, variant: str = 'F',
                          lattice: Optional[LatticePlane] = None) -> List[Tuple[int, int]]:
    """F∩Λ（或 F_l∩Λ）的全部格点，按 (B, A) 排序"""
    lattice = lattice or lattice_plane(spec.point)
    i, j = spec.pair.i, spec.pair.j
    c2_hi = magnitude_bounds(spec.c2)[1]
    points: List[Tuple[int, int]] = []
    B = lattice.g
    while compare(PowerProduct.power(B, i / j), spec.c2) < 0:
        a_cap = PowerProduct.power(c2_hi * B, i).floor()
        for A in lattice.row(B, a_cap):
            if figure_membership((A, B), spec, variant):
                points.append((A, B))
        B += lattice.g
    return points


@dataclass(frozen=True)
class ConeSpec:
    """以原点为顶点的斜率带 |A/B − A₀/B₀| ≤ c/(H(A₀,B₀)|θ − p/q|)"""

    line: Line
    center: Fraction
    width: Magnitude

    def to_dict(self) -> Dict[str, object]:
        return {'line': self.line.to_dict(), 'center': str(self.center), 'width': str(self.width),
                'width_approx': to_decimal(self.width, 12)}


def cone_spec(line: Line, point: RationalPoint, theta, pair: Pair, c: Fraction) -> ConeSpec:
    if not point.on_line(line):
        raise ValidationError(f"{line} 不经过 {point}")
    c = Fraction(c)
    gap = abs(theta_value(theta) - point.x)
    width = removal_halfwidth(c, height(line, pair)) / gap if c else Fraction(0)
    return ConeSpec(line, Fraction(line.A, line.B), width)


def cone_membership(point: Tuple[int, int], cone: ConeSpec) -> bool:
    A, B = point
    if B <= 0:
        return False
    return compare(abs(Fraction(A, B) - cone.center), cone.width) <= 0


def delta_membership(point: Tuple[int, int], line: Line, lattice: LatticePlane, theta, pair: Pair,
                     c: Fraction) -> bool:
    """过 P、系数为 (A,B) 的直线与 Θ 的交点 Y 是否落在 Δ(L₀) 内"""
    A, B = point
    C = lattice.C_for(A, B)
    Y = (A * theta_value(theta) + C) / B
    return delta_interval(line, pair, c, theta).contains(Y)


def figure_point_rows(spec: FigureSpec, cone: Optional[ConeSpec] = None) -> List[List[object]]:
    """F∩Λ 点云（作图用）：每个格点在 F、F_l 和锥中的归属"""
    rows = []
    for A, B in figure_lattice_points(spec, 'F'):
        rows.append([A, B, True, figure_membership((A, B), spec, 'F_l'),
                     '' if cone is None else cone_membership((A, B), cone)])
    return rows


# L₀ 搜索 ------------------------------------------------------------------

def _c4(pair: Pair) -> PowerProduct:
    # 4^{−2/j}·2^{−i}
    return PowerProduct.of(1, [(4, -2 / pair.j), (2, -pair.i)])


def _sigma(spec: FigureSpec, c: Fraction) -> PowerProduct:
    # (2^{k+2+ij}τ/(Rc))^{1/j}
    i, j = spec.pair.i, spec.pair.j
    inner = to_power_product(spec.tau) * Fraction(2 ** (spec.k + 2), spec.R * c) * PowerProduct.power(2, i * j)
    return inner ** (1 / j)


def proposition_conditions(spec: FigureSpec, c: Fraction) -> Dict[str, bool]:
    """τ ≥ cR2^{−k} 与 δ ≤ c₄(cR/(2^kτ))^{2/j}"""
    c = Fraction(c)
    if c <= 0:
        raise ValidationError(f"c 必须为正: {c}")
    scale = Fraction(c * spec.R, 2 ** spec.k)
    ratio = to_power_product(scale) / to_power_product(spec.tau)
    return {
        'tau_large': compare(spec.tau, scale) >= 0,
        'delta_small': compare(spec.delta, _c4(spec.pair) * ratio ** (2 / spec.pair.j)) <= 0,
    }


@dataclass
class L0Result:
    status: str                                   # certified | fallback | not_applicable
    conditions: Dict[str, bool]
    line: Optional[Line] = None
    case: Optional[str] = None
    route: Optional[str] = None                   # case_a | case_b | fallback
    candidate: Optional[str] = None
    points: int = 0
    exceptional: List[Line] = field(default_factory=list)
    rejected: List[Dict[str, object]] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.status == 'certified'

    @property
    def found(self) -> bool:
        return self.line is not None

    def to_dict(self) -> Dict[str, object]:
        return {
            'status': self.status, 'conditions': dict(self.conditions),
            'line': None if self.line is None else self.line.to_dict(),
            'case': self.case, 'route': self.route, 'candidate': self.candidate, 'points': self.points,
            'exceptional': [line.to_dict() for line in self.exceptional], 'rejected': self.rejected,
        }


def _height_order(pair: Pair):
    return cmp_to_key(lambda a, b: compare(height(a, pair), height(b, pair)) or (a > b) - (a < b))


def _certify(line: Line, points: Sequence[Tuple[int, int]], point: RationalPoint, lattice: LatticePlane,
             theta, pair: Pair, c: Fraction, R: int, n: int) -> Optional[Dict[str, object]]:
    # 返回 None 表示 F∩Λ ⊆ C(A₀,B₀) 且 F∩Λ 上 H(A,B) ≥ H(A₀,B₀)，否则返回失败原因
    H0 = height(line, pair)
    if compare(H0, Fraction(R) ** n) >= 0:
        return {'line': line.to_dict(), 'reason': 'height_not_below_R^n'}
    cone = cone_spec(line, point, theta, pair, c)
    for A, B in points:
        inside = cone_membership((A, B), cone)
        if inside != delta_membership((A, B), line, lattice, theta, pair, c):
            raise FalsificationError("锥判定与 Δ(L₀) 直接判定不一致", {
                'line': line.to_dict(), 'A': A, 'B': B, 'point': point.to_dict()})
        if not inside:
            return {'line': line.to_dict(), 'reason': 'outside_cone', 'A': A, 'B': B}
        if compare(height((A, B), pair), H0) < 0:
            return {'line': line.to_dict(), 'reason': 'lower_height', 'A': A, 'B': B}
    return None


def find_L0(point: RationalPoint, tau: Magnitude, pair: Pair, R: int, n: int, k: int, c: Fraction,
            theta, lines: Sequence[Line]) -> L0Result:
    """
    为过 P 的一组 C(n,k) 直线寻找 L₀

    L₀ 过 P、高度 < R^n，且 F∩Λ 落在锥 C(A₀,B₀) 内、F∩Λ 上高度不低于 H(A₀,B₀)。
    候选依次为：Case A 中 B 最小的 F∩Λ 点，Case B 中的鸽笼直线，F∩Λ 中高度最小的点；
    每个候选都在完整枚举的 F∩Λ 上逐点验证。只有最后一种候选通过时 status 为 fallback，
    route 记录给出 L₀ 的途径。

    Args:
        point: 公共交点 P
        tau: 窗口长度系数，窗口长 τR^{−n}
        pair: 非退化权重对
        R, n, k: 族 C(n,k) 的参数
        c: 该权重对的常数
        theta: ThetaSpec（Case B 需要 c(θ)）
        lines: 过 P 且穿过同一窗口的 C(n,k) 直线

    Returns:
        L0Result；前提不成立时 status 为 not_applicable，Case A/B 的候选都不通过
        而高度最小的点通过时为 fallback

    Raises:
        FalsificationError: F 外的直线多于一条，或没有候选通过验证
    """
    c = Fraction(c)
    if len(lines) < 2:
        return L0Result('not_applicable', {'lines': False})
    for line in lines:
        if not point.on_line(line):
            raise ValidationError(f"{line} 不经过 {point}")

    spec = figure_spec(point, theta, pair, R, k, tau)
    conditions = proposition_conditions(spec, c)
    conditions['lines'] = True
    value = theta_value(theta)
    traces = sorted((line.trace(value) for line in lines), key=cmp_to_key(compare))
    conditions['window'] = compare(traces[-1] - traces[0], to_power_product(tau) / Fraction(R) ** n) <= 0
    top = Fraction(2 ** (k + 1)) * Fraction(R) ** (n - 1)
    conditions['heights'] = all(compare(height(line, pair), top) < 0 for line in lines)
    if not all(conditions.values()):
        return L0Result('not_applicable', conditions)

    lattice = lattice_plane(point)
    points = figure_lattice_points(spec, 'F', lattice)
    exceptional = [line for line in lines if not figure_membership((line.A, line.B), spec)]
    witness = {'point': point.to_dict(), 'pair': str(pair), 'R': R, 'n': n, 'k': k}
    if len(exceptional) > 1:
        raise FalsificationError("多于一条直线落在图形 F 之外", {
            **witness, 'exceptional': [line.to_dict() for line in exceptional]})
    if not points:
        raise FalsificationError("F∩Λ 为空", witness)

    threshold = _sigma(spec, c) * spec.delta * PowerProduct.power(point.q, pair.j)
    small = [pt for pt in points if compare(pt[1], threshold) <= 0]
    candidates: List[Tuple[str, str, Tuple[int, int]]] = []
    if small:
        case = 'A'
        candidates.append(('case_a', 'case_a_min_b', min(small, key=lambda pt: (pt[1], abs(pt[0]), pt[0]))))
    else:
        case = 'B'
        try:
            line = pigeonhole_line(point, theta, pair)
            candidates.append(('case_b', 'case_b_pigeonhole', (line.A, line.B)))
        except ValidationError as e:
            logger.debug(f"Case B 鸽笼候选不可用: {e}")
    candidates.append(('fallback', 'min_height', min(points, key=_height_order(pair))))

    rejected: List[Dict[str, object]] = []
    for route, label, (A0, B0) in candidates:
        line = normalize(A0, B0, lattice.C_for(A0, B0))
        failure = _certify(line, points, point, lattice, theta, pair, c, R, n)
        if failure is None:
            status = 'fallback' if route == 'fallback' else 'certified'
            if status == 'fallback':
                logger.warning(f"Case {case} 的构造没有给出 L₀，改用 F∩Λ 中高度最小的 {line}: {rejected}")
            else:
                logger.debug(f"L₀ = {line} ({label}, Case {case})，|F∩Λ| = {len(points)}")
            return L0Result(status, conditions, line, case, route, label, len(points), exceptional, rejected)
        rejected.append({'route': route, 'candidate': label, **failure})
    raise FalsificationError("没有候选 L₀ 通过验证", {**witness, 'case': case, 'rejected': rejected})


# 计数 ---------------------------------------------------------------------

@dataclass(frozen=True)
class CountingContext:
    """
    单条 J_{n−l} 上计数所用的量

    K = 2R^{1−α}/2^k + 2 是单条直线去掉区间数的上界，d = ⌈R^{1−ε}/K⌉ 是
    J_{n−l} 的等分数，τ = c̃₁ 是 Type 2 子区间对应的窗口系数。
    """

    pair: Pair
    R: int
    n: int
    l: int
    k: int
    c1: Fraction
    epsilon: Fraction
    case: str
    tau: PowerProduct
    K_term: PowerProduct
    d: int

    @property
    def K_bounds(self) -> Tuple[Fraction, Fraction]:
        lo, hi = magnitude_bounds(self.K_term)
        return lo + 2, hi + 2

    @property
    def c4(self) -> PowerProduct:
        return _c4(self.pair)

    def to_dict(self) -> Dict[str, object]:
        return {
            'pair': str(self.pair), 'R': self.R, 'n': self.n, 'l': self.l, 'k': self.k,
            'case': self.case, 'tau': str(self.tau), 'K_approx': to_decimal(self.K_term, 12) + ' + 2',
            'd': self.d, 'c4': str(self.c4),
        }


def counting_context(pair: Pair, R: int, n: int, l: int, k: int, c1: Fraction,
                     epsilon: Fraction) -> CountingContext:
    alpha = pair.alpha
    root = PowerProduct.power(R, 1 - alpha)
    case = 'A' if compare(2 ** k, root) < 0 else 'B'
    if case == 'A':
        tau = PowerProduct.power(R, l + epsilon - alpha) * Fraction(4 * c1, 2 ** k)
    else:
        tau = PowerProduct.power(R, l + epsilon - 1) * (4 * Fraction(c1))
    K_term = root * Fraction(2, 2 ** k)
    target = PowerProduct.power(R, 1 - epsilon)
    # 最小的 d 使 d·K ≥ R^{1−ε}
    d = max(1, math.floor(magnitude_bounds(target)[0] / (magnitude_bounds(K_term)[1] + 2)))
    while sign_of_sum([K_term * d, Fraction(2 * d), target], [1, 1, -1]) == -1:
        d += 1
    return CountingContext(pair, R, n, l, k, Fraction(c1), Fraction(epsilon), case, tau, K_term, d)


def _pair_step(tree: ConstructionTree, pair_index: int, n: int) -> Tuple[PairParams, Optional[int]]:
    params = tree.params
    if not 0 <= pair_index < len(params.pairs):
        raise ValidationError(f"权重对编号越界: {pair_index}")
    p = params.pairs[pair_index]
    if p.kind != GENERIC:
        raise ValidationError(f"计数检查只针对非退化权重对: {p.pair}")
    if not 0 <= n <= tree.depth:
        raise ValidationError(f"层号越界: {n}")
    if params.schedule.m[p.index] != 1:
        raise ValidationError(f"计数检查只支持 m_t = 1 的权重对: {p.pair}")
    return p, params.schedule.family_at(p.index, n)


def _cells(y: ExactReal, tree: ConstructionTree, level: int) -> List[int]:
    # 包含 y 的 J_level 区间编号（端点处可能两个）
    collection = tree.level(level)
    step = collection.step
    j = math.floor(y / step)
    cells = [j]
    if isinstance(y, Fraction) and y == j * step:
        cells.append(j - 1)
    return [cell for cell in cells if cell in collection.runs]


def _type_counts(traced: Sequence[Tuple[Line, ExactReal]], window: ClosedInterval, d: int) -> List[List[Line]]:
    # 每个 Type 2 子区间上穿过的直线
    width = window.length / d
    crowded = []
    for u in range(d):
        sub = ClosedInterval(window.lo + u * width, window.lo + (u + 1) * width)
        members = [line for line, y in traced if sub.contains(y)]
        if len(members) >= 2:
            crowded.append(members)
    return crowded


def count_removed_oracle(tree: ConstructionTree, pair_index: int, n: int, l: int, k: int, j: int,
                         lines: Optional[Sequence[Line]] = None,
                         candidates: Optional[IndexRuns] = None) -> Dict[str, object]:
    """
    J_{n−l} 内被 C(n,l,k) 的 Δ 去掉的 I_{n+1} ∈ I⁻ 个数

    单条直线的界 2R^{n−α}/H + 2 是硬断言；总数与 R^{1−ε} 的比较只报告。

    Args:
        tree: 构造结果
        pair_index: 权重对编号
        n: 步 n → n+1
        l, k: 族编号
        j: J_{n−l} 在第 n−l 层的编号
        lines: 预先枚举的 Δ 与 J_{n−l} 相交的直线；缺省时在 J_{n−l} 上重新枚举
        candidates: 预先算好的 I⁻_{n+1}
    """
    params = tree.params
    p, s = _pair_step(tree, pair_index, n)
    if s is None or s < 1:
        raise ValidationError(f"第 {n} → {n + 1} 步不移除权重对 {p.pair} 的直线")
    if l > n:
        raise ValidationError(f"l = {l} 超过层号 {n}")
    pair, R = p.pair, params.R
    level = tree.level(n - l)
    if j not in level.runs:
        raise ValidationError(f"J_{n - l} 中没有编号 {j}")
    window = level.interval(j)
    value = params.theta.value
    if lines is None:
        lines = []
        for line in enumerate_lines(pair, R, s, window, p.c, params.theta):
            family = classify(line, pair, R, s)
            if family.l == l and family.k == k:
                lines.append(line)
    if candidates is None:
        candidates = trimmed_children(tree.level(n), params)

    step = params.step(n + 1)
    span = R ** (l + 1)
    j_lo, j_hi = j * span - 1, (j + 1) * span
    ranges: List[Tuple[int, int]] = []
    per_line_max = 0
    for line in lines:
        delta = delta_interval(line, pair, p.c, params.theta)
        kmin, kmax = delta.index_range(step)
        total = candidates.count_in(kmin, kmax + 1)
        per_line_max = max(per_line_max, total)
        bound = line_removal_bound(p, params, height(line, pair), step)
        if total > 2 and compare(total - 2, bound) > 0:
            raise FalsificationError("单条直线去掉的区间数超过 2R^(n−α)/H + 2", {
                'line': line.to_dict(), 'n': n, 'count': total, 'bound': str(bound)})
        if delta.meets(window.lo, window.hi):
            lo, hi = max(kmin, j_lo), min(kmax, j_hi)
            if lo <= hi:
                ranges.append((lo, hi + 1))
    removed = candidates.intersection(IndexRuns(ranges)).count

    ctx = counting_context(pair, R, s, l, k, p.c1, params.epsilon)
    aggregate = PowerProduct.power(R, 1 - params.epsilon)
    traced = [(line, line.trace(value)) for line in lines]
    traced = [(line, y) for line, y in traced if window.contains(y)]
    crowded = _type_counts(traced, window, ctx.d)
    M_star = None
    if len(traced) >= 2:
        point = intersect(traced[0][0], traced[1][0])
        if point is not None and all(point.on_line(line) for line, _ in traced):
            spec = figure_spec(point, params.theta, pair, R, k, ctx.tau, l)
            variant = 'F_l' if l else 'F'
            M_star = sum(1 for line, _ in traced if figure_membership((line.A, line.B), spec, variant))
    return {
        'n': n, 'pair': str(pair), 'l': l, 'k': k, 'j': j, 'lines': len(lines), 'count': removed,
        'per_line_max': per_line_max, 'aggregate_bound': to_decimal(aggregate, 12),
        'aggregate_holds': compare(removed, aggregate) <= 0, 'case': ctx.case,
        'K': to_decimal(ctx.K_term, 12) + ' + 2', 'd': ctx.d,
        'type1': ctx.d - len(crowded), 'type2': len(crowded), 'M_star': M_star,
    }


def count_table(tree: ConstructionTree, pair_index: int, n: int) -> List[Dict[str, object]]:
    """
    第 n → n+1 步所有 (l, k, J_{n−l}) 的 count_removed_oracle 结果

    只列出至少有一条族内直线的 Δ 与之相交的 J_{n−l}；其余计数为 0。
    """
    params = tree.params
    p, s = _pair_step(tree, pair_index, n)
    if s is None or s < 1:
        return []
    pair, R = p.pair, params.R
    window = tree.level(0).hull()
    if window is None:
        return []
    groups: Dict[Tuple[int, int, int], List[Line]] = {}
    for line in enumerate_lines(pair, R, s, window, p.c, params.theta):
        family = classify(line, pair, R, s)
        if family.l > n:
            continue
        level = tree.level(n - family.l)
        kmin, kmax = delta_interval(line, pair, p.c, params.theta).index_range(level.step)
        for start, stop in level.runs.runs_in(kmin, kmax + 1):
            for j in range(start, stop):
                groups.setdefault((family.l, family.k, j), []).append(line)
    candidates = trimmed_children(tree.level(n), params)
    rows = [count_removed_oracle(tree, pair_index, n, l, k, j, members, candidates)
            for (l, k, j), members in sorted(groups.items())]
    logger.info(f"计数表 {pair} n = {n}: {len(rows)} 行，"
                f"R^(1−ε) 界不成立 {sum(1 for r in rows if not r['aggregate_holds'])} 行")
    return rows


def scan_type2(tree: ConstructionTree, pair_index: int, n: int, run_find: bool = True) -> List[Dict[str, object]]:
    """
    第 n → n+1 步的全部 Type 2 子区间

    按穿过的 J_{n−l} 把 C(n,l) 直线分组并检查共点，再按 k 把 J_{n−l} 等分为 d 份；
    至少被两条直线穿过的子区间记录 P、δ、Case 标签和 L₀ 的前提，
    前提成立且 run_find 为真时运行 find_L0。

    Raises:
        FalsificationError: 同一 J_{n−l} 上的 C(n,l) 直线不共点，或两直线不等式不成立
    """
    params = tree.params
    p, s = _pair_step(tree, pair_index, n)
    if s is None or s < 1:
        return []
    pair, R = p.pair, params.R
    value = params.theta.value
    window = tree.level(0).hull()
    if window is None:
        return []
    groups: Dict[Tuple[int, int], List[Tuple[Line, int]]] = {}
    for line in enumerate_lines(pair, R, s, window, 0, params.theta):
        family = classify(line, pair, R, s)
        if family.l > n:
            continue
        for j in _cells(line.trace(value), tree, n - family.l):
            groups.setdefault((family.l, j), []).append((line, family.k))

    records: List[Dict[str, object]] = []
    for (l, j), members in sorted(groups.items()):
        if len(members) < 2:
            continue
        point = intersect(members[0][0], members[1][0])
        if point is None or not all(point.on_line(line) for line, _ in members):
            raise FalsificationError("与同一 J_{n−l} 相交的 C(n,l) 直线不共点", {
                'n': n, 'l': l, 'j': j, 'lines': [line.to_dict() for line, _ in members]})
        window = tree.level(n - l).interval(j)
        for k in sorted({kk for _, kk in members}):
            traced = [(line, line.trace(value)) for line, kk in members if kk == k]
            ctx = counting_context(pair, R, s, l, k, p.c1, params.epsilon)
            width = window.length / ctx.d
            for u in range(ctx.d):
                sub = ClosedInterval(window.lo + u * width, window.lo + (u + 1) * width)
                crossing = [line for line, y in traced if sub.contains(y)]
                if len(crossing) < 2:
                    continue
                records.append(_type2_record(params, p, s, n, l, j, k, u, sub, point, crossing, ctx, run_find))
    logger.info(f"Type 2 扫描 {pair} n = {n}: {len(records)} 个子区间")
    return records


def _type2_record(params, p: PairParams, s: int, n: int, l: int, j: int, k: int, u: int, sub: ClosedInterval,
                  point: RationalPoint, crossing: List[Line], ctx: CountingContext, run_find: bool) -> Dict[str, object]:
    pair, R = p.pair, params.R
    verdict = lemma2_check(crossing[0], crossing[1], point, sub, pair, R, s, k, ctx.tau, params.theta)
    if verdict is False:
        raise FalsificationError("两直线不等式不成立", {
            'point': point.to_dict(), 'lines': [crossing[0].to_dict(), crossing[1].to_dict()]})
    spec = figure_spec(point, params.theta, pair, R, k, ctx.tau, l)
    conditions = proposition_conditions(spec, p.c)
    record: Dict[str, object] = {
        'n': n, 'pair': str(pair), 'l': l, 'k': k, 'j': j, 'sub': u, 'window': sub.to_dict(),
        'P': point.to_dict(), 'lines': [line.to_dict() for line in crossing],
        'case': ctx.case, 'tau': str(ctx.tau), 'delta_approx': to_decimal(spec.delta, 12),
        'lemma2': verdict, 'conditions': conditions, 'L0': None,
    }
    if run_find and all(conditions.values()):
        record['L0'] = find_L0(point, ctx.tau, pair, R, s, k, p.c, params.theta, crossing).to_dict()
    return record


def figure_clouds(tree: ConstructionTree, pair_index: int, n: int) -> List[Dict[str, object]]:
    """每个 Type 2 子区间的 F∩Λ 点云；L₀ 通过验证时附上其锥的归属"""
    params = tree.params
    p, s = _pair_step(tree, pair_index, n)
    clouds: List[Dict[str, object]] = []
    for record in scan_type2(tree, pair_index, n):
        P = record['P']
        point = RationalPoint(P['p'], P['r'], P['q'])
        ctx = counting_context(p.pair, params.R, s, record['l'], record['k'], p.c1, params.epsilon)
        spec = figure_spec(point, params.theta, p.pair, params.R, record['k'], ctx.tau, record['l'])
        cone = None
        found = record['L0']
        if found is not None and found['line'] is not None:
            cone = cone_spec(Line(**found['line']), point, params.theta, p.pair, p.c)
        clouds.append({'record': record, 'figure': spec.to_dict(), 'rows': figure_point_rows(spec, cone)})
    return clouds
