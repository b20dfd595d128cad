"""
对偶与同时逼近检查，以及线性型的转换定理
"""

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key, reduce
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from badweave.exact_arith import (
    ExactReal,
    Magnitude,
    PowerProduct,
    as_exact,
    compare,
    floor_of,
    magnitude_bounds,
    nearest_int_dist,
    to_power_product,
)
from badweave.lines import Pair
from utils.exceptions import FalsificationError, ValidationError
from utils.logger import get_logger

logger = get_logger(__name__)

DEFAULT_NODE_CAP = 2_000_000


@dataclass(frozen=True)
class CheckResult:
    """检查结果；失败时 witness 为最小反例"""

    passed: bool
    witness: Optional[Dict[str, object]] = None


def _dist(x: ExactReal) -> ExactReal:
    # ‖x‖
    x = as_exact(x)
    return abs(x - math.floor(x + Fraction(1, 2)))


def _value_record(value: ExactReal) -> Dict[str, object]:
    lo, _ = magnitude_bounds(value)
    return {'value': str(value), 'value_num': lo.numerator, 'value_den': lo.denominator,
            'value_exact': isinstance(value, Fraction)}


def _scale(c: Magnitude, q: int, exponent: Fraction) -> Magnitude:
    # (c/q)^{exponent}
    return (to_power_product(c) / q) ** exponent


def check_simultaneous(x, y, pair: Pair, c: Magnitude, Q: int) -> CheckResult:
    """
    检查 max{‖qx‖^{1/i}, ‖qy‖^{1/j}} > c/q 对 1 ≤ q ≤ Q 全部成立

    i = 0（或 j = 0）时对应项按 0 计。

    Returns:
        CheckResult；失败时 witness 给出最小的 q
    """
    if compare(c, 0) <= 0 or Q < 1:
        raise ValidationError(f"要求 c > 0, Q ≥ 1: c={c}, Q={Q}")
    for q in range(1, Q + 1):
        dx, _ = nearest_int_dist(x, q)
        dy, _ = nearest_int_dist(y, q)
        # ‖qx‖^{1/i} > c/q ⇔ ‖qx‖ > (c/q)^i
        if pair.i > 0 and compare(dx, _scale(c, q, pair.i)) > 0:
            continue
        if pair.j > 0 and compare(dy, _scale(c, q, pair.j)) > 0:
            continue
        logger.debug(f"同时逼近检查在 q = {q} 失败")
        return CheckResult(False, {'kind': 'simultaneous', 'q': q, 'dx': str(dx), 'dy': str(dy),
                                   'constant': str(c)})
    return CheckResult(True)


def max_term(A: int, B: int, pair: Pair) -> Magnitude:
    """max{|A|^{1/i}, |B|^{1/j}}，指数为 0 的一侧按 0 计"""
    terms: List[Magnitude] = []
    if A and pair.i > 0:
        terms.append(PowerProduct.power(abs(A), 1 / pair.i).simplify())
    if B and pair.j > 0:
        terms.append(PowerProduct.power(abs(B), 1 / pair.j).simplify())
    if not terms:
        return Fraction(0)
    if len(terms) == 1 or compare(terms[0], terms[1]) >= 0:
        return terms[0]
    return terms[1]


def _dual_candidates(pair: Pair, Hmax: int, bound: str) -> List[Tuple[int, int, Magnitude]]:
    def admissible(A: int, B: int) -> bool:
        term = max_term(A, B, pair)
        if bound == 'max':
            return compare(term, Hmax) <= 0
        return compare(term * B if B else term, Hmax) < 0

    out: List[Tuple[int, int, Magnitude]] = []
    B = 0
    while B == 0 or admissible(0, B):
        A = 0 if B else 1
        while admissible(A, B):
            for signed in ((A, -A) if A else (0,)):
                out.append((signed, B, max_term(signed, B, pair)))
            A += 1
        B += 1
    return out


def _witness_order(a: Tuple[int, int, Magnitude], b: Tuple[int, int, Magnitude]) -> int:
    s = compare(a[2], b[2])
    if s:
        return s
    ka = (abs(a[0]) + abs(a[1]), a[1], a[0])
    kb = (abs(b[0]) + abs(b[1]), b[1], b[0])
    return (ka > kb) - (ka < kb)


def check_dual(x, y, pair: Pair, c: Magnitude, Hmax: int, bound: str = 'height') -> CheckResult:
    """
    检查 max{|A|^{1/i}, |B|^{1/j}}·‖Ax − By‖ > c 对范围内全部 (A,B) ≠ (0,0) 成立

    Args:
        x, y: 精确实数（二次无理数须有相同的根号下数）
        pair: 非退化权重对
        c: 常数
        Hmax: 范围上界
        bound: 'height' 取 H(A,B) < Hmax（B = 0 时为 |A|^{1/i}）；'max' 取最大项 ≤ Hmax

    Returns:
        CheckResult；反例按 (最大项, |A|+|B|, B, A) 取最小
    """
    if pair.is_degenerate:
        raise ValidationError(f"对偶检查要求非退化权重对: {pair}")
    if compare(c, 0) <= 0:
        raise ValidationError(f"要求 c > 0: {c}")
    if bound not in ('height', 'max'):
        raise ValidationError(f"未知范围类型: {bound}")
    x, y = as_exact(x), as_exact(y)
    candidates = sorted(_dual_candidates(pair, Hmax, bound), key=cmp_to_key(_witness_order))
    for A, B, term in candidates:
        value = _dist(A * x - B * y)
        # term·‖Ax − By‖ ≤ c ⇔ ‖Ax − By‖ ≤ c/term
        if compare(value, c / term) <= 0:
            logger.debug(f"对偶检查在 (A,B) = ({A},{B}) 失败")
            return CheckResult(False, {'kind': 'dual', 'A': A, 'B': B, 'max_term': str(term),
                                       'constant': str(c), **_value_record(value)})
    logger.debug(f"对偶检查通过：{len(candidates)} 个 (A,B)")
    return CheckResult(True)


# 转换定理 ---------------------------------------------------------------

@dataclass(frozen=True)
class TransferenceProblem:
    """
    线性型组 L_t(q) = Σ_s θ_ts q_s（t ≤ n, s ≤ m）及其转置 M_s(u) = Σ_t θ_ts u_t

    C 为 ‖L_t‖ 的界，X 为 |q_s| 的界，primal 为已知解（可选）。
    """

    coefficients: Tuple[Tuple[ExactReal, ...], ...]
    C: Tuple[Magnitude, ...]
    X: Tuple[Magnitude, ...]
    primal: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if not self.coefficients or len({len(row) for row in self.coefficients}) != 1:
            raise ValidationError("系数矩阵必须是非空的矩形")
        if len(self.C) != self.n or len(self.X) != self.m:
            raise ValidationError(f"常数个数与维数不符: n={self.n}, m={self.m}")
        if self.primal is not None and len(self.primal) != self.m:
            raise ValidationError("已知解的维数必须为 m")

    @property
    def n(self) -> int:
        return len(self.coefficients)

    @property
    def m(self) -> int:
        return len(self.coefficients[0])

    @property
    def l(self) -> int:
        return self.m + self.n

    def form(self, t: int, q: Sequence[int]) -> ExactReal:
        return sum((as_exact(self.coefficients[t][s]) * q[s] for s in range(self.m)), Fraction(0))

    def transposed(self, s: int, u: Sequence[int]) -> ExactReal:
        return sum((as_exact(self.coefficients[t][s]) * u[t] for t in range(self.n)), Fraction(0))

    def verify_primal(self) -> bool:
        q = self.primal
        if q is None or not any(q):
            return False
        return (all(compare(_dist(self.form(t, q)), self.C[t]) <= 0 for t in range(self.n))
                and all(compare(abs(q[s]), self.X[s]) <= 0 for s in range(self.m)))


@dataclass(frozen=True)
class TransferBounds:
    d: Magnitude
    D: Tuple[Magnitude, ...]
    U: Tuple[Magnitude, ...]

    def to_dict(self) -> Dict[str, object]:
        def render(v: Magnitude) -> Dict[str, str]:
            return {'exact': str(v), 'upper': str(magnitude_bounds(v)[1])}
        return {'d': render(self.d), 'D': [render(v) for v in self.D], 'U': [render(v) for v in self.U]}


def transfer_bounds(problem: TransferenceProblem) -> TransferBounds:
    """
    d = ∏C_t·∏X_s，D_s = (l−1)X_s^{−1}d^{1/(l−1)}，U_t = (l−1)C_t^{−1}d^{1/(l−1)}

    Raises:
        ValidationError: max D_s ≥ 1
    """
    factors = [to_power_product(v) for v in problem.C + problem.X]
    d = reduce(lambda a, b: a * b, factors)
    k = problem.l - 1
    root = (d ** Fraction(1, k)) * k
    D = tuple((root / to_power_product(x)).simplify() for x in problem.X)
    U = tuple((root / to_power_product(c)).simplify() for c in problem.C)
    if any(compare(v, 1) >= 0 for v in D):
        raise ValidationError(f"转换定理要求 max D_s < 1: {[str(v) for v in D]}")
    return TransferBounds(d.simplify(), D, U)


def bound_products(problem: TransferenceProblem, bounds: TransferBounds) -> List[Magnitude]:
    """U_t·C_t 与 D_s·X_s；全部等于 (l−1)d^{1/(l−1)}"""
    return ([to_power_product(u) * to_power_product(c) for u, c in zip(bounds.U, problem.C)]
            + [to_power_product(d) * to_power_product(x) for d, x in zip(bounds.D, problem.X)])


@dataclass(frozen=True)
class SearchOutcome:
    status: str            # found | not_searched
    u: Optional[Tuple[int, ...]]
    nodes: int

    def to_dict(self) -> Dict[str, object]:
        return {'status': self.status, 'u': None if self.u is None else list(self.u), 'nodes': self.nodes}


def _ordered(limit: int) -> List[int]:
    # 0, 1, −1, 2, −2, …
    return sorted(range(-limit, limit + 1), key=lambda v: (abs(v), -v))


def _shells(limits: Sequence[int]) -> Iterator[Tuple[int, ...]]:
    """按 max|u_t| 递增枚举非零整数向量，每对 ±u 只给出首个非零坐标为正者"""
    for r in range(1, max(limits, default=0) + 1):
        for star, limit in enumerate(limits):
            if limit < r:
                continue
            ranges = [_ordered(min(r - 1, lim)) for lim in limits[:star]]
            ranges.append([r, -r])
            ranges += [_ordered(min(r, lim)) for lim in limits[star + 1:]]
            for u in itertools.product(*ranges):
                first = next(v for v in u if v)
                if first > 0:
                    yield u


def _satisfies(problem: TransferenceProblem, bounds: TransferBounds, u: Sequence[int]) -> bool:
    return all(compare(_dist(problem.transposed(s, u)), bounds.D[s]) <= 0 for s in range(problem.m))


def transfer_witness_search(problem: TransferenceProblem, bounds: TransferBounds,
                            node_cap: int = DEFAULT_NODE_CAP) -> SearchOutcome:
    """
    在 |u_t| ≤ U_t 内穷举 u ≠ 0 使 ‖M_s(u)‖ ≤ D_s 对全部 s 成立

    搜索空间超过 node_cap 时返回 not_searched。

    Raises:
        ValidationError: 给定的已知解不成立
        FalsificationError: 已知解成立但穷举没有找到 u
    """
    if problem.primal is not None and not problem.verify_primal():
        raise ValidationError(f"已知解不满足原问题: {problem.primal}")
    limits = [max(floor_of(v), 0) for v in bounds.U]
    space = math.prod(2 * lim + 1 for lim in limits)
    if space > node_cap:
        logger.warning(f"搜索空间 {space} 超过上限 {node_cap}，未搜索")
        return SearchOutcome('not_searched', None, 0)

    test = _integer_test(problem, bounds)
    nodes = 0
    for u in _shells(limits):
        nodes += 1
        if test(u):
            if not _satisfies(problem, bounds, u):
                raise FalsificationError("整数快速判定与精确判定不一致", {'u': list(u)})
            return SearchOutcome('found', tuple(u), nodes)
    raise FalsificationError("在转换定理给出的范围内没有找到解", {
        'U': [str(v) for v in bounds.U], 'D': [str(v) for v in bounds.D], 'nodes': nodes})


def _integer_test(problem: TransferenceProblem, bounds: TransferBounds):
    entries = [as_exact(v) for row in problem.coefficients for v in row]
    if not all(isinstance(v, Fraction) for v in entries):
        return lambda u: _satisfies(problem, bounds, u)
    # 有理系数：通分后在模 N 下判定 ‖M_s(u)‖ ≤ D_s
    N = math.lcm(*(v.denominator for v in entries))
    nums = [[int(as_exact(v) * N) for v in row] for row in problem.coefficients]
    thresholds = [floor_of(to_power_product(D) * N) for D in bounds.D]

    def test(u: Sequence[int]) -> bool:
        for s in range(problem.m):
            v = sum(nums[t][s] * u[t] for t in range(problem.n)) % N
            if min(v, N - v) > thresholds[s]:
                return False
        return True
    return test


# 两种形式之间的转换 -------------------------------------------------------

@dataclass(frozen=True)
class DualWitness:
    status: str
    u: Optional[Tuple[int, int]]
    constant: Magnitude
    bounds: TransferBounds
    nodes: int = 0

    def to_dict(self) -> Dict[str, object]:
        record: Dict[str, object] = {'kind': 'dual', 'status': self.status, 'constant': str(self.constant),
                                     'nodes': self.nodes, 'bounds': self.bounds.to_dict()}
        if self.u is not None:
            # 对偶检查的记号：(A, B) = (u₁, −u₂)
            record.update({'A': self.u[0], 'B': -self.u[1]})
        return record


@dataclass(frozen=True)
class SimultaneousWitness:
    status: str
    q: Optional[int]
    constant: Magnitude
    bounds: TransferBounds
    nodes: int = 0

    def to_dict(self) -> Dict[str, object]:
        return {'kind': 'simultaneous', 'status': self.status, 'q': self.q, 'constant': str(self.constant),
                'nodes': self.nodes, 'bounds': self.bounds.to_dict()}


def _require_generic(pair: Pair) -> None:
    if pair.is_degenerate:
        raise ValidationError(f"形式转换要求非退化权重对: {pair}")


def dual_constant(c: Magnitude, pair: Pair) -> Magnitude:
    """2^{1/i+1/j+1}·c"""
    return (PowerProduct.power(2, 1 / pair.i + 1 / pair.j + 1) * c).simplify()


def simultaneous_constant(c: Magnitude, pair: Pair) -> Magnitude:
    """max{2^{(1+i)/i}c^{j/(2i)}, 2^{(1+j)/j}c^{i/(2j)}}"""
    base = to_power_product(c)
    first = PowerProduct.power(2, (1 + pair.i) / pair.i) * base ** (pair.j / (2 * pair.i))
    second = PowerProduct.power(2, (1 + pair.j) / pair.j) * base ** (pair.i / (2 * pair.j))
    return (first if compare(first, second) >= 0 else second).simplify()


def simultaneous_constant_from_dual(c: Magnitude, pair: Pair) -> Magnitude:
    """
    对偶形式在常数 c 下成立时推出的同时逼近常数 min{c''^{1/i}, c''^{1/j}}，c'' = c/2^{1/i+1/j+1}
    """
    _require_generic(pair)
    inner = to_power_product(c) / PowerProduct.power(2, 1 / pair.i + 1 / pair.j + 1)
    first, second = inner ** (1 / pair.i), inner ** (1 / pair.j)
    return (first if compare(first, second) <= 0 else second).simplify()


def dual_from_simultaneous(q0: int, c: Fraction, pair: Pair, x, y,
                           node_cap: int = DEFAULT_NODE_CAP) -> DualWitness:
    """
    由同时逼近反例 q₀（‖q₀x‖ ≤ cq₀^{−i}，‖q₀y‖ ≤ cq₀^{−j}）构造对偶反例

    Returns:
        DualWitness，(u₁,u₂) 满足 max{|u₁|^{1/i},|u₂|^{1/j}}·‖xu₁ + yu₂‖ ≤ 2^{1/i+1/j+1}c
    """
    _require_generic(pair)
    c = Fraction(c)
    if not 0 < c < Fraction(1, 2):
        raise ValidationError(f"要求 0 < c < 1/2: {c}")
    if q0 < 1:
        raise ValidationError(f"q₀ 必须 ≥ 1: {q0}")
    C = (PowerProduct.power(q0, -pair.i) * c, PowerProduct.power(q0, -pair.j) * c)
    problem = TransferenceProblem(((as_exact(x),), (as_exact(y),)), C, (Fraction(q0),), (q0,))
    if not problem.verify_primal():
        raise ValidationError(f"q₀ = {q0} 不是常数 {c} 下的同时逼近反例")
    bounds = transfer_bounds(problem)
    constant = dual_constant(c, pair)
    outcome = transfer_witness_search(problem, bounds, node_cap)
    if outcome.u is None:
        return DualWitness(outcome.status, None, constant, bounds)
    u = (outcome.u[0], outcome.u[1])
    value = _dist(as_exact(x) * u[0] + as_exact(y) * u[1])
    if compare(value, constant / max_term(u[0], u[1], pair)) > 0:
        raise FalsificationError("转换得到的对偶反例未达到常数", {'u': list(u), 'constant': str(constant)})
    return DualWitness('found', u, constant, bounds, outcome.nodes)


def simultaneous_from_dual(witness: Tuple[int, int], c: Fraction, pair: Pair, x, y,
                           node_cap: int = DEFAULT_NODE_CAP) -> SimultaneousWitness:
    """
    由对偶反例 (a,b)（max{|a|^{1/i},|b|^{1/j}}·‖ax + by‖ ≤ c）构造同时逼近反例

    Returns:
        SimultaneousWitness，q 满足 max{‖qx‖^{1/i}, ‖qy‖^{1/j}} ≤ κ/q
    """
    _require_generic(pair)
    c = Fraction(c)
    if not 0 < c < Fraction(1, 4):
        raise ValidationError(f"要求 0 < c < 1/4: {c}")
    a, b = witness
    if a == 0 and b == 0:
        raise ValidationError("对偶反例不能为零向量")
    q0 = to_power_product(max_term(a, b, pair))
    problem = TransferenceProblem(((as_exact(x), as_exact(y)),), ((c / q0).simplify(),),
                                  ((q0 ** pair.i).simplify(), (q0 ** pair.j).simplify()), (a, b))
    if not problem.verify_primal():
        raise ValidationError(f"({a},{b}) 不是常数 {c} 下的对偶反例")
    bounds = transfer_bounds(problem)
    constant = simultaneous_constant(c, pair)
    outcome = transfer_witness_search(problem, bounds, node_cap)
    if outcome.u is None:
        return SimultaneousWitness(outcome.status, None, constant, bounds)
    q = abs(outcome.u[0])
    dx, _ = nearest_int_dist(x, q)
    dy, _ = nearest_int_dist(y, q)
    if compare(dx, _scale(constant, q, pair.i)) > 0 or compare(dy, _scale(constant, q, pair.j)) > 0:
        raise FalsificationError("转换得到的同时逼近反例未达到常数", {'q': q, 'constant': str(constant)})
    return SimultaneousWitness('found', q, constant, bounds, outcome.nodes)


def find_simultaneous_witness(x, y, pair: Pair, c: Fraction, Q: int) -> Optional[int]:
    """最小的 q ≤ Q 使 ‖qx‖ ≤ cq^{−i} 且 ‖qy‖ ≤ cq^{−j}"""
    for q in range(1, Q + 1):
        dx, _ = nearest_int_dist(x, q)
        dy, _ = nearest_int_dist(y, q)
        if compare(dx, PowerProduct.power(q, -pair.i) * c) <= 0 and \
                compare(dy, PowerProduct.power(q, -pair.j) * c) <= 0:
            return q
    return None


def find_dual_witness(x, y, pair: Pair, c: Fraction, Hmax: int) -> Optional[Tuple[int, int]]:
    """最大项 ≤ Hmax 内最小的 (a,b) 使 max{|a|^{1/i},|b|^{1/j}}·‖ax + by‖ ≤ c"""
    result = check_dual(x, y, pair, c, Hmax, bound='max')
    if result.passed:
        return None
    return int(result.witness['A']), -int(result.witness['B'])


def round_trip_sweep(pair: Pair, c: Fraction, trials: int = 1000, denominator: int = 50, seed: int = 0,
                     node_cap: int = DEFAULT_NODE_CAP) -> Dict[str, object]:
    """
    随机有理点 (x, y) ∈ [0,1)²（分母 ≤ denominator）上两个方向的反例转换

    有理点总有两种反例；每个找到的反例都必须转换成另一种形式下的反例，
    转换失败由 dual_from_simultaneous / simultaneous_from_dual 抛出 FalsificationError。
    """
    c = Fraction(c)
    rng = random.Random(seed)
    Q = denominator * denominator
    # (dx, 0) 总是对偶反例，其最大项 ≤ denominator^{1/min(i,j)}
    Hmax = PowerProduct.power(denominator, 1 / min(pair.i, pair.j)).ceil()
    counts = {'points': 0, 'dual_found': 0, 'simultaneous_found': 0, 'not_searched': 0}
    for _ in range(trials):
        dx, dy = rng.randint(1, denominator), rng.randint(1, denominator)
        x, y = Fraction(rng.randrange(dx), dx), Fraction(rng.randrange(dy), dy)
        counts['points'] += 1
        q0 = find_simultaneous_witness(x, y, pair, c, Q)
        if q0 is not None:
            dual = dual_from_simultaneous(q0, c, pair, x, y, node_cap)
            counts['dual_found' if dual.u is not None else 'not_searched'] += 1
        witness = find_dual_witness(x, y, pair, c, Hmax)
        if witness is not None:
            simul = simultaneous_from_dual(witness, c, pair, x, y, node_cap)
            counts['simultaneous_found' if simul.q is not None else 'not_searched'] += 1
    logger.info(f"转换往返 {pair}, c = {c}: {counts}")
    return {'pair': str(pair), 'c': str(c), 'denominator': denominator, 'seed': seed, **counts}
