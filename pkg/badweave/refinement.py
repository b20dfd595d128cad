"""
加细集合与质量分布
从构造树得到每个区间至少保留 R − [2R^{1−ε/2}] 个子区间的子树 M_n，
在其上按子区间个数均分权重，并检查 μ(I) ≤ a|I|^{1−ε/2}。
"""

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import mpmath

from badweave.construction import ConstructionTree, LevelCollection
from badweave.exact_arith import ClosedInterval, Magnitude, PowerProduct, compare, magnitude_bounds
from badweave.index_runs import IndexRuns
from utils.exceptions import EmptyCollectionError, FalsificationError, ValidationError
from utils.logger import get_logger

logger = get_logger(__name__)

STRATEGIES = ('random', 'survivors', 'avoid')


def branch_threshold(R: int, epsilon: Fraction) -> int:
    """[2R^{1−ε/2}]"""
    return (PowerProduct.power(R, 1 - Fraction(epsilon) / 2) * 2).floor()


@dataclass
class RefinementState:
    """
    M[(n, m)] 与倾倒集 D[(n, m)]，n ≤ m ≤ m_max；stable_from[n] 为稳定化指标 N(n)
    """

    R: int
    c1: Fraction
    epsilon: Fraction
    m_max: int
    threshold: int
    M: Dict[Tuple[int, int], IndexRuns] = field(default_factory=dict)
    dump: Dict[Tuple[int, int], IndexRuns] = field(default_factory=dict)
    stable_from: Dict[int, int] = field(default_factory=dict)
    stabilized: Dict[int, bool] = field(default_factory=dict)
    violations: List[Dict[str, object]] = field(default_factory=list)

    def final(self, n: int) -> IndexRuns:
        """M_n := M_{n,N(n)}"""
        return self.M[(n, self.stable_from[n])]

    def summary(self) -> List[Dict[str, object]]:
        rows = []
        for (n, m), runs in sorted(self.M.items()):
            rows.append({'n': n, 'm': m, 'M': runs.count, 'dump': self.dump.get((n, m), IndexRuns()).count})
        return rows


def refine_collections(tree: ConstructionTree, epsilon: Optional[Fraction] = None,
                       m_max: Optional[int] = None) -> RefinementState:
    """
    计算 M_{n,m} 与倾倒集 R_{n,m}

    对每个 m：先令 R_{m,m} 为 M_{m−1,m−1} 的子区间中不在 J_m 者，再自下而上
    把坏子区间 ≥ [2R^{1−ε/2}] 个的父区间并入上一层倾倒集；M_{n,m} 为
    J_n 中去掉倾倒集后仍与上一层嵌套的部分。
    """
    params = tree.params
    R = params.R
    epsilon = Fraction(epsilon) if epsilon is not None else params.epsilon
    m_max = tree.depth if m_max is None else m_max
    if m_max > tree.depth:
        raise ValidationError(f"m_max = {m_max} 超过树深 {tree.depth}")
    threshold = branch_threshold(R, epsilon)
    if threshold >= R:
        logger.warning(f"[2R^(1−ε/2)] = {threshold} ≥ R = {R}：不会发生倾倒")
    state = RefinementState(R, params.c1, epsilon, m_max, threshold)
    J = [level.runs for level in tree.levels]

    state.M[(0, 0)] = J[0]
    state.dump[(0, 0)] = IndexRuns()
    for m in range(1, m_max + 1):
        # 最深一层：M_{m−1,m−1} 的子区间中不在 J_m 中者
        children = state.M[(m - 1, m - 1)].children(R)
        dump = {m: children.difference(J[m])}
        for u in range(m - 1, -1, -1):
            bad = dump[u + 1].parents_with_at_least(R, threshold).intersection(state.M[(u, m - 1)])
            dump[u] = state.dump[(u, m - 1)].union(bad)
        # 自上而下：M_{n,m} = (M_{n,m−1} 的保留部分) 且嵌套于 M_{n−1,m}
        previous = IndexRuns()
        for n in range(0, m + 1):
            base = state.M[(n, m - 1)] if n <= m - 1 else J[m].intersection(state.M[(m - 1, m - 1)].children(R))
            kept = base.difference(dump[n]) if n < m else base
            if n > 0:
                kept = kept.intersection(previous.children(R))
            state.M[(n, m)] = kept
            state.dump[(n, m)] = dump[n]
            previous = kept
    _stabilize(state)
    _check_conditions(state, J)
    for n in range(m_max + 1):
        if not state.M[(n, m_max)]:
            logger.warning(f"M_{{{n},{m_max}}} 为空")
    return state


def _stabilize(state: RefinementState) -> None:
    for n in range(state.m_max + 1):
        final = state.M[(n, state.m_max)]
        start = state.m_max
        while start > n and state.M[(n, start - 1)] == final:
            start -= 1
        state.stable_from[n] = start
        state.stabilized[n] = start < state.m_max
        if not state.stabilized[n]:
            logger.info(f"M_{{{n},m}} 在 m ≤ {state.m_max} 内未稳定，取 m = {state.m_max}")


def _check_conditions(state: RefinementState, J: List[IndexRuns]) -> None:
    R, minimum = state.R, state.R - state.threshold
    for (n, m), runs in state.M.items():
        if not runs.issubset(J[n]):
            state.violations.append({'condition': 'C1', 'n': n, 'm': m})
        if n < m:
            lower = state.M[(n + 1, m)]
            if not lower.parents(R).issubset(runs):
                state.violations.append({'condition': 'C2', 'n': n, 'm': m})
            if minimum > 0:
                missing = runs.children(R).difference(lower)
                short = missing.parents_with_at_least(R, R - minimum + 1).intersection(runs)
                if short:
                    state.violations.append({'condition': 'C3', 'n': n, 'm': m, 'parents': short.count})
    if state.violations:
        raise FalsificationError("加细集合不满足嵌套或分支条件", {'violations': state.violations[:10]})


class MeasureTree:
    """
    加细树上的权重：μ(J₀) = 1/#M₀，μ(J_n) = μ(父区间)/父区间的子区间数
    """

    def __init__(self, R: int, c1: Fraction, epsilon: Fraction, levels: List[IndexRuns]):
        self.R = R
        self.c1 = Fraction(c1)
        self.epsilon = Fraction(epsilon)
        self.levels = levels
        self.weight = lru_cache(maxsize=1 << 18)(self._weight)

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def step(self, n: int) -> Fraction:
        """d_n = c₁R^{−n}"""
        return self.c1 / Fraction(self.R) ** n

    @property
    def holder_constant(self) -> PowerProduct:
        """a = 2c₁^{ε/2−1}R^{ε/2}"""
        half = self.epsilon / 2
        return PowerProduct.of(2, [(self.c1, half - 1), (Fraction(self.R), half)])

    def children_count(self, n: int, k: int) -> int:
        return self.levels[n + 1].count_in(k * self.R, (k + 1) * self.R)

    def _weight(self, n: int, k: int) -> Fraction:
        if k not in self.levels[n]:
            return Fraction(0)
        if n == 0:
            return Fraction(1, self.levels[0].count)
        parent = k // self.R
        return self.weight(n - 1, parent) / self.children_count(n - 1, parent)

    def level_mass(self, n: int) -> Fraction:
        """第 n 层权重和：上一层总和减去无子区间者的权重"""
        if n == 0:
            return sum((self.weight(0, k) for k in self.levels[0]), Fraction(0))
        childless = self.levels[n - 1].difference(self.levels[n].parents(self.R))
        return self.level_mass(n - 1) - sum((self.weight(n - 1, k) for k in childless), Fraction(0))

    def level_for(self, length: Fraction) -> int:
        """满足 d_{n+1} ≤ |I| < d_n 的 n+1（不超过树深）"""
        if length >= self.step(0):
            raise ValidationError(f"|I| 必须小于 d₀ = {self.step(0)}")
        n = 0
        while n + 1 <= self.depth and self.step(n + 1) > length:
            n += 1
        return min(n + 1, self.depth)

    def mass_upper(self, interval: ClosedInterval) -> Tuple[int, Fraction]:
        """
        μ(I) 的上界：与 I 相交的第 n+1 层区间权重之和

        Returns:
            (所用层号, 权重和)
        """
        level = self.level_for(interval.length)
        step = self.step(level)
        kmin = math.ceil(interval.lo / step) - 1
        kmax = math.floor(interval.hi / step)
        total = Fraction(0)
        for start, stop in self.levels[level].runs_in(kmin, kmax + 1):
            for k in range(start, stop):
                total += self.weight(level, k)
        return level, total

    def mass_estimate(self, interval: ClosedInterval) -> Fraction:
        """按同一层区间内均匀分布估计 μ(I)（用于经验指数）"""
        level = self.level_for(interval.length)
        step = self.step(level)
        kmin = math.floor(interval.lo / step)
        kmax = math.ceil(interval.hi / step) - 1
        total = Fraction(0)
        for start, stop in self.levels[level].runs_in(kmin, kmax + 1):
            for k in range(start, stop):
                overlap = min(interval.hi, (k + 1) * step) - max(interval.lo, k * step)
                if overlap > 0:
                    total += self.weight(level, k) * overlap / step
        return total


def assign_measure(state: RefinementState) -> MeasureTree:
    """
    在最终的 M_n 上赋权；先自下而上剪去无后代的分支，使每层权重和为 1

    Raises:
        EmptyCollectionError: M₀ 为空
    """
    levels = [state.final(n) for n in range(state.m_max + 1)]
    for n in range(state.m_max - 1, -1, -1):
        levels[n] = levels[n].intersection(levels[n + 1].parents(state.R))
    for n in range(1, state.m_max + 1):
        levels[n] = levels[n].intersection(levels[n - 1].children(state.R))
    if not levels[0]:
        raise EmptyCollectionError("加细后的 M₀ 为空，无法赋权", level=0)
    measure = MeasureTree(state.R, state.c1, state.epsilon, levels)
    logger.info(f"测度树: 各层区间数 {[lv.count for lv in levels]}")
    return measure


@dataclass
class MassBoundReport:
    windows: int
    violations: List[Dict[str, object]]
    min_exponent: Optional[str]
    holder_constant: str
    exponent: str

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> Dict[str, object]:
        return {'windows': self.windows, 'violations': self.violations, 'passed': self.passed,
                'min_exponent': self.min_exponent, 'holder_constant': self.holder_constant,
                'exponent': self.exponent}


def dyadic_windows(measure: MeasureTree) -> List[ClosedInterval]:
    """M₀ 最左区间的二进子窗口，长度从 d₀/2 递减到不小于 d_N/2"""
    base = measure.levels[0].first() * measure.step(0)
    d0, floor_length = measure.step(0), measure.step(measure.depth) / 2
    windows: List[ClosedInterval] = []
    e = 1
    while d0 / 2 ** e >= floor_length:
        length = d0 / 2 ** e
        windows.extend(ClosedInterval(base + j * length, base + (j + 1) * length) for j in range(2 ** e))
        e += 1
    return windows


def random_windows(measure: MeasureTree, count: int, seed: int) -> List[ClosedInterval]:
    rng = random.Random(seed)
    lo = measure.levels[0].first() * measure.step(0)
    hi = (measure.levels[0].last() + 1) * measure.step(0)
    scale = 1 << 20
    windows = []
    for _ in range(count):
        level = rng.randint(0, measure.depth)
        length = measure.step(level) * Fraction(rng.randint(1, scale - 1), scale)
        start = lo + (hi - lo - length) * Fraction(rng.randint(0, scale), scale)
        windows.append(ClosedInterval(start, start + length))
    return windows


def check_mass_bound(measure: MeasureTree, windows: Optional[List[ClosedInterval]] = None,
                     random_count: int = 10000, seed: int = 0) -> MassBoundReport:
    """
    对一族 |I| < d₀ 的窗口检查 μ(I) ≤ a|I|^{1−ε/2}

    Args:
        measure: 测度树
        windows: 指定窗口；缺省为全部二进子窗口加 random_count 个随机窗口
        random_count: 随机窗口个数
        seed: 随机种子

    Returns:
        MassBoundReport，附经验 Hölder 指数 min log μ(I)/log |I|
    """
    if windows is None:
        windows = dyadic_windows(measure) + random_windows(measure, random_count, seed)
    a = measure.holder_constant
    exponent = 1 - measure.epsilon / 2
    violations: List[Dict[str, object]] = []
    min_exponent = None
    with mpmath.workdps(30):
        for window in windows:
            level, mass = measure.mass_upper(window)
            if mass == 0:
                continue
            bound = a * PowerProduct.power(window.length, exponent)
            if compare(mass, bound) > 0:
                violations.append({'lo': str(window.lo), 'hi': str(window.hi), 'level': level,
                                   'mass': str(mass)})
            estimate = measure.mass_estimate(window)
            if 0 < estimate < 1:
                ratio = mpmath.log(mpmath.mpf(estimate.numerator) / estimate.denominator) / mpmath.log(
                    mpmath.mpf(window.length.numerator) / window.length.denominator)
                if min_exponent is None or ratio < min_exponent:
                    min_exponent = ratio
    logger.info(f"质量界检查: {len(windows)} 个窗口，违例 {len(violations)}")
    return MassBoundReport(len(windows), violations,
                           None if min_exponent is None else mpmath.nstr(min_exponent, 12),
                           str(a), str(exponent))


@dataclass
class AdversaryReport:
    trials: int
    choose: int
    strategy: str
    failures: Dict[int, int]
    capped: int = 0

    @property
    def violations(self) -> int:
        return sum(self.failures.values())

    def to_dict(self) -> Dict[str, object]:
        return {'trials': self.trials, 'choose': self.choose, 'strategy': self.strategy,
                'failures': {str(k): v for k, v in sorted(self.failures.items())},
                'violations': self.violations, 'capped': self.capped}


def ubiquity_adversary_test(tree: ConstructionTree, trials: int, epsilon: Optional[Fraction] = None,
                            seed: int = 0, strategy: str = 'random', max_nodes: int = 50000) -> AdversaryReport:
    """
    随机对手：每个节点选 [2R^{1−ε/2}] 个子区间组成 T_n，记录 T_n ∩ J_n = ∅ 的次数

    Args:
        tree: 构造树
        trials: 试验次数
        epsilon: ε，缺省取构造参数
        seed: 随机种子
        strategy: random（均匀）、survivors（优先存活子区间）、avoid（优先被移除的子区间）
        max_nodes: 每层节点数上限，超过时随机抽样并计入 capped
    """
    if strategy not in STRATEGIES:
        raise ValidationError(f"未知对手策略: {strategy}")
    params = tree.params
    R = params.R
    epsilon = Fraction(epsilon) if epsilon is not None else params.epsilon
    choose = min(branch_threshold(R, epsilon), R)
    rng = random.Random(seed)
    failures = {n: 0 for n in range(1, tree.depth + 1)}
    capped = 0
    roots = tree.levels[0].runs
    for _ in range(trials):
        nodes = [roots.nth(rng.randrange(roots.count))]
        for n in range(1, tree.depth + 1):
            survivors = tree.levels[n].runs
            chosen: List[int] = []
            for node in nodes:
                chosen.extend(_pick(node, R, choose, survivors, strategy, rng))
            if len(chosen) > max_nodes:
                chosen = rng.sample(chosen, max_nodes)
                capped += 1
            if not any(k in survivors for k in chosen):
                failures[n] += 1
            nodes = chosen
    report = AdversaryReport(trials, choose, strategy, failures, capped)
    logger.info(f"对手检验 ({strategy}): {trials} 次，失败 {report.violations}")
    return report


def _pick(node: int, R: int, choose: int, survivors: IndexRuns, strategy: str, rng: random.Random) -> List[int]:
    offsets = list(range(R))
    if choose >= R:
        return [node * R + r for r in offsets]
    if strategy == 'random':
        return [node * R + r for r in rng.sample(offsets, choose)]
    alive = [r for r in offsets if node * R + r in survivors]
    dead = [r for r in offsets if node * R + r not in survivors]
    rng.shuffle(alive)
    rng.shuffle(dead)
    ordered = alive + dead if strategy == 'survivors' else dead + alive
    return [node * R + r for r in ordered[:choose]]
