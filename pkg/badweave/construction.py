"""
嵌套区间构造
从 Θ = {θ} × [0,1] 出发逐层细分、裁剪并移除与 Δ(L) 相交的区间，
得到同时满足各权重对 badness 条件的点的认证区间。
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from badweave.exact_arith import (
    ClosedInterval,
    Magnitude,
    PowerProduct,
    ThetaSpec,
    certify_theta,
    compare,
    dyadic_floor,
    magnitude_bounds,
    parse_theta,
    sign_of_sum,
    to_decimal,
)
from badweave.index_runs import IndexRuns
from badweave.lines import (
    GENERIC,
    X_ONLY,
    Y_ONLY,
    FamilyIndex,
    Line,
    Pair,
    RemovalInterval,
    classify,
    delta_interval,
    enumerate_lines,
    enumerate_rationals,
    height,
    parse_pair,
    rational_delta,
)
from utils.exceptions import EmptyCollectionError, FalsificationError, ValidationError
from utils.logger import get_logger

logger = get_logger(__name__)

MODES = ('desk', 'full')
SCHEDULES = ('finite', 'countable')


# 参数 -------------------------------------------------------------------

@dataclass(frozen=True)
class Schedule:
    """
    权重对的嵌入层级：第 t 个权重对在层 n_s(t) = k_t + s·m_t 上工作，基数 R_t = R^{m_t}
    """

    kind: str
    m: Tuple[int, ...]
    k: Tuple[int, ...]

    def R_t(self, R: int, t: int) -> int:
        return R ** self.m[t]

    def level(self, t: int, s: int) -> int:
        return self.k[t] + s * self.m[t]

    def family_at(self, t: int, n: int) -> Optional[int]:
        """
        第 n → n+1 步对权重对 t 移除的族编号 s（移除 C_t(s)）

        n+1 不是 t 的嵌入层时返回 None：此时对应的族已在更早的步骤移除，
        嵌套保证重复移除不改变结果。
        """
        offset = n + 1 - self.k[t]
        if offset <= 0 or offset % self.m[t]:
            return None
        return offset // self.m[t] - 1

    def trims_at(self, t: int, n: int) -> bool:
        s = self.family_at(t, n)
        return s is not None and s >= 1

    def to_dict(self) -> Dict[str, object]:
        return {'kind': self.kind, 'm': list(self.m), 'k': list(self.k)}


@dataclass(frozen=True)
class PairParams:
    """单个权重对的常数"""

    index: int
    pair: Pair
    c1: Fraction
    c: Fraction
    trim: int

    @property
    def kind(self) -> str:
        return self.pair.kind

    def to_dict(self) -> Dict[str, object]:
        record: Dict[str, object] = {
            'index': self.index, 'pair': str(self.pair), 'kind': self.kind,
            'c1': str(self.c1), 'c': str(self.c), 'trim': self.trim,
        }
        if self.kind == GENERIC:
            record.update({'alpha': str(self.pair.alpha), 'lambda': str(self.pair.lam)})
        return record


@dataclass(frozen=True)
class Params:
    R: int
    theta: ThetaSpec
    pairs: Tuple[PairParams, ...]
    c1: Fraction
    epsilon: Fraction
    mode: str
    schedule: Schedule
    inputs: Dict[str, object] = field(default_factory=dict, compare=False, hash=False)

    @property
    def generic(self) -> Tuple[PairParams, ...]:
        return tuple(p for p in self.pairs if p.kind == GENERIC)

    def step(self, n: int) -> Fraction:
        """第 n 层区间长度 c₁R^{-n}"""
        return self.c1 / Fraction(self.R) ** n

    @property
    def branch_threshold(self) -> int:
        """[2R^{1−ε/2}]"""
        return (PowerProduct.power(self.R, 1 - self.epsilon / 2) * 2).floor()

    def to_dict(self) -> Dict[str, object]:
        return {
            'R': self.R,
            'theta': self.theta.to_dict(),
            'pairs': [p.to_dict() for p in self.pairs],
            'c1': str(self.c1),
            'epsilon': str(self.epsilon),
            'mode': self.mode,
            'schedule': self.schedule.to_dict(),
            'branch_threshold': self.branch_threshold,
            'viability': viability_report(self),
            'inputs': dict(self.inputs),
        }


def _c1_cap(pair: Pair, R: int) -> PowerProduct:
    # (1/4)·R^{−3i/j}
    return PowerProduct.power(R, -3 * pair.i / pair.j) * Fraction(1, 4)


def _smallest(*values: Magnitude) -> Magnitude:
    best = values[0]
    for v in values[1:]:
        if compare(v, best) < 0:
            best = v
    return best


def derive_schedule(pairs: Sequence[Pair], R: int, c1: Fraction, kind: str = 'finite',
                    truncation: Optional[int] = None) -> Schedule:
    """
    计算嵌入指数 m_t 与偏移 k_t

    可数调度：m₁ = 1，m_t = max{t, 1 + m_{t−1}}，k_t 为满足
    c₁R^{−k_t} ≤ (1/4)R^{−3i_t/j_t} 的最小非负整数；退化权重对沿用有限时钟。
    """
    if kind not in SCHEDULES:
        raise ValidationError(f"未知调度类型: {kind}")
    if kind == 'finite':
        return Schedule(kind, tuple(1 for _ in pairs), tuple(0 for _ in pairs))

    generic_count = sum(1 for p in pairs if p.kind == GENERIC)
    if truncation is not None and generic_count > truncation:
        raise ValidationError(f"可数调度截断 T = {truncation} 小于非退化权重对个数 {generic_count}")
    m: List[int] = []
    k: List[int] = []
    position, previous = 0, 0
    for pair in pairs:
        if pair.kind != GENERIC:
            m.append(1)
            k.append(0)
            continue
        position += 1
        m_t = 1 if position == 1 else max(position, 1 + previous)
        previous = m_t
        offset = 0
        cap = _c1_cap(pair, R)
        while compare(c1 / Fraction(R) ** offset, cap) > 0:
            offset += 1
        m.append(m_t)
        k.append(offset)
    return Schedule(kind, tuple(m), tuple(k))


def derive_params(pairs: Sequence[Union[Pair, str]], theta: ThetaSpec, R: int, mode: str = 'desk',
                  schedule: str = 'finite', truncation: Optional[int] = None,
                  epsilon: Optional[Fraction] = None, c1: Optional[Fraction] = None,
                  desk_trim: int = 0) -> Params:
    """
    推导构造常数

    Args:
        pairs: 权重对（Pair 或 "p/q,p'/q'" 字符串）
        theta: 已认证的 θ
        R: 细分基数，≥ 2
        mode: 'desk' 或 'full'；full 模式按 ⌈R^{1−α}⌉ 裁剪
        schedule: 'finite' 或 'countable'
        truncation: 可数调度截断 T
        epsilon: ε；缺省时 full 取 α_min²/4，desk 取 1/8
        c1: 覆盖 c₁，必须满足 c₁(t) ≤ (1/4)R^{−3i_t/j_t}
        desk_trim: desk 模式每端裁剪数

    Returns:
        Params
    """
    if not isinstance(theta, ThetaSpec):
        raise ValidationError("θ 未经认证：请使用 certify_theta")
    if not isinstance(R, int) or R < 2:
        raise ValidationError(f"R 必须是 ≥ 2 的整数: {R}")
    if mode not in MODES:
        raise ValidationError(f"未知模式: {mode}")
    pairs = [parse_pair(p) if isinstance(p, str) else p for p in pairs]
    if not pairs:
        raise ValidationError("至少需要一个权重对")
    generic = [p for p in pairs if p.kind == GENERIC]

    caps = {id(p): _c1_cap(p, R) for p in generic}
    if c1 is None:
        if not generic:
            c1 = Fraction(1, 4)
        elif schedule == 'countable':
            c1 = dyadic_floor(caps[id(generic[0])])
        else:
            c1 = min(dyadic_floor(cap) for cap in caps.values())
    c1 = Fraction(c1)
    if c1 <= 0:
        raise ValidationError(f"c₁ 必须为正: {c1}")
    if schedule == 'finite':
        for p in generic:
            if compare(c1, caps[id(p)]) > 0:
                raise ValidationError(f"c₁ = {c1} 不满足 c₁ ≤ (1/4)R^(-3i/j)，权重对 {p}")
    sched = derive_schedule(pairs, R, c1, schedule, truncation)

    if generic:
        alpha_min = min(p.alpha for p in generic)
        default_eps = alpha_min ** 2 / 4 if mode == 'full' else Fraction(1, 8)
    else:
        alpha_min, default_eps = None, Fraction(1, 8)
    epsilon = Fraction(epsilon) if epsilon is not None else default_eps
    if not 0 < epsilon < 1:
        raise ValidationError(f"ε 必须在 (0, 1) 内: {epsilon}")

    built: List[PairParams] = []
    for t, pair in enumerate(pairs):
        if pair.kind == X_ONLY:
            built.append(PairParams(t, pair, c1, Fraction(0), 0))
            continue
        if pair.kind == Y_ONLY:
            built.append(PairParams(t, pair, c1, c1 / (2 * R * R), 0))
            continue
        R_t = sched.R_t(R, t)
        c1_t = c1 / Fraction(R) ** sched.k[t]
        raw = PowerProduct.power(R_t, -1 - pair.alpha) * c1_t
        c_t = dyadic_floor(_smallest(raw, theta.c_theta, Fraction(1, 2)))
        if mode == 'full':
            if schedule == 'finite':
                trim = PowerProduct.power(R, 1 - alpha_min).ceil()
            else:
                trim = PowerProduct.power(R_t, 1 - pair.alpha).ceil()
        else:
            trim = int(desk_trim)
        built.append(PairParams(t, pair, c1_t, c_t, trim))

    inputs = {
        'pairs': [str(p) for p in pairs], 'theta': theta.source, 'R': R, 'mode': mode,
        'schedule': schedule, 'truncation': truncation, 'epsilon': str(epsilon),
        'c1': str(c1), 'desk_trim': int(desk_trim),
        'badness_Q': theta.certificate.Q, 'badness_denominator': theta.certificate.denominator_limit,
    }
    params = Params(R, theta, tuple(built), c1, epsilon, mode, sched, inputs)
    report = viability_report(params)
    failing = [name for name, ok in report.items() if not ok]
    if failing:
        logger.warning(f"R = {R} 时以下可行性条件不成立: {', '.join(failing)}")
    for p in built:
        logger.info(f"权重对 {p.pair}: c₁ = {p.c1}, c = {p.c}, trim = {p.trim}")
    return params


def params_from_inputs(inputs: Dict[str, object]) -> Params:
    """由 Params.inputs 记录重建参数"""
    theta = certify_theta(str(inputs['theta']), int(inputs.get('badness_Q', 10000)),
                          int(inputs.get('badness_denominator', 32)))
    return derive_params(list(inputs['pairs']), theta, int(inputs['R']), str(inputs['mode']),
                         str(inputs['schedule']), inputs.get('truncation'),
                         Fraction(str(inputs['epsilon'])), Fraction(str(inputs['c1'])),
                         int(inputs.get('desk_trim', 0)))


def viability_report(params: Params) -> Dict[str, bool]:
    """记录在当前 R 下各渐近条件是否成立"""
    R, eps = params.R, params.epsilon
    report: Dict[str, bool] = {}
    for p in params.generic:
        t, pair = p.index, p.pair
        R_t = params.schedule.R_t(R, t)
        alpha = pair.alpha
        report[f't{t}.trim_viable'] = compare(PowerProduct.power(R_t, alpha), 2) > 0
        report[f't{t}.eps_small'] = eps < alpha ** 2 / 2
        report[f't{t}.separation'] = compare(PowerProduct.power(R_t, alpha - eps), 8) >= 0
        report[f't{t}.concurrency_c1'] = compare(PowerProduct.power(R_t, pair.lam * pair.i) * (4 * p.c1), 1) <= 0
    root = PowerProduct.power(R, 1 - eps / 2)
    report['C(R)<4'] = compare(root, 2) > 0
    threshold = params.branch_threshold
    report['branching'] = compare(threshold, root * Fraction(5, 3)) >= 0
    # Σ_{k≥1} R^{−kε/2} = 1/(R^{ε/2} − 1) < 1/6 ⇔ R^{ε/2} > 7
    report['tail_sum'] = compare(PowerProduct.power(R, eps / 2), 7) > 0
    return report


# 区间集合 ---------------------------------------------------------------

@dataclass(frozen=True)
class LevelCollection:
    """
    第 n 层的闭区间集合，编号 k 表示 [k·step, (k+1)·step]
    """

    n: int
    step: Fraction
    runs: IndexRuns

    @property
    def count(self) -> int:
        return self.runs.count

    def __len__(self) -> int:
        return self.runs.count

    @property
    def is_empty(self) -> bool:
        return not self.runs

    def interval(self, k: int) -> ClosedInterval:
        return ClosedInterval(k * self.step, (k + 1) * self.step)

    def intervals(self) -> Iterator[ClosedInterval]:
        for k in self.runs:
            yield self.interval(k)

    def blocks(self) -> Iterator[Tuple[int, int, ClosedInterval]]:
        """每个连续段 (start, stop, 段的并)"""
        for start, stop in self.runs.runs():
            yield start, stop, ClosedInterval(start * self.step, stop * self.step)

    def hull(self) -> Optional[ClosedInterval]:
        if self.is_empty:
            return None
        return ClosedInterval(self.runs.first() * self.step, (self.runs.last() + 1) * self.step)

    def with_runs(self, runs: IndexRuns) -> 'LevelCollection':
        return LevelCollection(self.n, self.step, runs)


def init_level0(params: Params) -> LevelCollection:
    """J₀：从 y = 0 起的 [c₁^{-1}] 个长为 c₁ 的区间，尾部舍弃"""
    count = math.floor(1 / params.c1)
    return LevelCollection(0, params.c1, IndexRuns.from_range(0, count))


# 移除 -------------------------------------------------------------------

@dataclass(frozen=True)
class LineRemoval:
    """一个 Δ 在当前候选集合中去掉的区间数"""

    pair_index: int
    source: Union[Line, Fraction]
    family: Optional[FamilyIndex]
    height: Magnitude
    count: int
    first: int
    last: int
    bound: Optional[Magnitude] = None

    def to_row(self, level: int) -> List[object]:
        if isinstance(self.source, Line):
            line = f"{self.source.A},{self.source.B},{self.source.C}"
        else:
            line = f"{self.source.numerator}/{self.source.denominator}"
        fam = self.family
        return [level, self.pair_index, line, str(self.height), self.count,
                '' if fam is None else fam.l, '' if fam is None else fam.k,
                '' if self.bound is None else to_decimal(self.bound, 12)]


REMOVAL_HEADER = ['level', 'pair', 'line', 'H', 'count', 'l', 'k', 'bound']


@dataclass
class RemovalReport:
    level: int
    candidates: int
    trimmed: int
    removed: int
    survivors: int
    removals: List[LineRemoval] = field(default_factory=list)
    sealed: bool = False

    def per_pair(self) -> Dict[int, int]:
        totals: Dict[int, int] = {}
        for r in self.removals:
            totals[r.pair_index] = totals.get(r.pair_index, 0) + r.count
        return totals

    def to_dict(self) -> Dict[str, object]:
        return {
            'level': self.level, 'candidates': self.candidates, 'trimmed': self.trimmed,
            'removed': self.removed, 'survivors': self.survivors, 'sealed': self.sealed,
            'lines': len(self.removals), 'per_pair': {str(k): v for k, v in sorted(self.per_pair().items())},
        }


Source = Tuple[PairParams, RemovalInterval, Optional[FamilyIndex]]


def removal_sources(params: Params, n: int, window: ClosedInterval, workers: int = 1) -> List[Source]:
    """第 n → n+1 步的全部 Δ 区间（仅限与窗口相交者）"""
    sources: List[Source] = []
    for p in params.pairs:
        if p.kind == X_ONLY:
            continue
        if p.kind == Y_ONLY:
            for point in enumerate_rationals(params.R, n, window, p.c):
                sources.append((p, rational_delta(point, p.c), None))
            continue
        s = params.schedule.family_at(p.index, n)
        if s is None or s < 1:
            continue
        R_t = params.schedule.R_t(params.R, p.index)
        for line in enumerate_lines(p.pair, R_t, s, window, p.c, params.theta, workers):
            sources.append((p, delta_interval(line, p.pair, p.c, params.theta), classify(line, p.pair, R_t, s)))
    return sources


def line_removal_bound(p: PairParams, params: Params, H: Magnitude, step: Fraction) -> Magnitude:
    # |Δ|/|I| 的上界 2c₁(t)R_t^{−1−α_t}/(H·|I|)；有限模式即 2R^{n−α}/H
    R_t = params.schedule.R_t(params.R, p.index)
    return PowerProduct.power(R_t, -1 - p.pair.alpha) * (2 * p.c1 / step) / H


def _apply_removals(candidates: IndexRuns, step: Fraction, sources: List[Source], params: Params,
                    check_bounds: bool) -> Tuple[IndexRuns, List[LineRemoval]]:
    bad: List[Tuple[int, int]] = []
    removals: List[LineRemoval] = []
    for p, delta, family in sources:
        kmin, kmax = delta.index_range(step)
        count = candidates.count_in(kmin, kmax + 1)
        if not count:
            continue
        bad.append((kmin, kmax + 1))
        if isinstance(delta.source, Line):
            H = height(delta.source, p.pair)
            bound: Optional[Magnitude] = line_removal_bound(p, params, H, step) if check_bounds else None
        else:
            H = Fraction(delta.source.denominator ** 2)
            bound = Fraction(1) if check_bounds else None
        removal = LineRemoval(p.index, delta.source, family, H, count, kmin, kmax, bound)
        if bound is not None and count > 2 and compare(count - 2, bound) > 0:
            raise FalsificationError("单个 Δ 去掉的区间数超过上界", {
                'pair': str(p.pair), 'source': str(delta.source), 'count': count, 'bound': str(bound)})
        removals.append(removal)
    return candidates.difference(IndexRuns(bad)), removals


def _check_rational_separation(parents: LevelCollection, sources: List[Source], R: int) -> None:
    # 每个 J_n 至多与一个 Δ(p/q) 相交
    seen: Dict[int, Fraction] = {}
    for p, delta, _ in sources:
        if p.kind != Y_ONLY:
            continue
        kmin, kmax = delta.index_range(parents.step)
        for start, stop in parents.runs.runs_in(kmin, kmax + 1):
            for k in range(start, stop):
                if k in seen and seen[k] != delta.source:
                    raise FalsificationError("同一区间与两个 Δ(p/q) 相交", {
                        'level': parents.n, 'index': k, 'first': str(seen[k]), 'second': str(delta.source)})
                seen[k] = delta.source


def trimmed_children(level: LevelCollection, params: Params) -> IndexRuns:
    """I⁻_{n+1}：J_n 的子区间去掉各权重对两端裁剪后的候选集合"""
    children = level.runs.children(params.R)
    for p in params.generic:
        if p.trim > 0 and params.schedule.trims_at(p.index, level.n):
            size = params.schedule.R_t(params.R, p.index)
            children = children.difference(children.end_blocks(size, p.trim))
    return children


def build_level(level: LevelCollection, params: Params, workers: int = 1) -> Tuple[LevelCollection, RemovalReport]:
    """
    由 J_n 构造 J_{n+1}：细分、裁剪、移除

    Returns:
        (J_{n+1}, 移除报告)
    """
    R, n = params.R, level.n
    candidates = level.count * R
    children = trimmed_children(level, params)
    trimmed = candidates - children.count
    step = params.step(n + 1)
    nxt = LevelCollection(n + 1, step, children)
    removals: List[LineRemoval] = []
    window = nxt.hull()
    if window is not None:
        sources = removal_sources(params, n, window, workers)
        _check_rational_separation(level, sources, R)
        survivors, removals = _apply_removals(children, step, sources, params, check_bounds=True)
        nxt = nxt.with_runs(survivors)
    removed = children.count - nxt.count
    report = RemovalReport(n + 1, candidates, trimmed, removed, nxt.count, removals)
    logger.info(f"J_{n + 1}: 候选 {candidates}，裁剪 {trimmed}，移除 {removed}，剩余 {nxt.count}")
    return nxt, report


def seal_level(level: LevelCollection, params: Params, workers: int = 1) -> Tuple[LevelCollection, RemovalReport]:
    """
    不细分，直接用第 n → n+1 步的 Δ 过滤 J_n

    过滤后的区间避开高度 < R^n 的全部直线（有限模式）。
    """
    window = level.hull()
    if window is None:
        return level, RemovalReport(level.n, 0, 0, 0, 0, sealed=True)
    sources = removal_sources(params, level.n, window, workers)
    survivors, removals = _apply_removals(level.runs, level.step, sources, params, check_bounds=False)
    sealed = level.with_runs(survivors)
    report = RemovalReport(level.n, level.count, 0, level.count - sealed.count, sealed.count, removals, sealed=True)
    logger.info(f"封口 J_{level.n}: 移除 {report.removed}，剩余 {sealed.count}")
    return sealed, report


@dataclass
class ConstructionTree:
    params: Params
    levels: List[LevelCollection]
    reports: List[RemovalReport]
    first_empty: Optional[int] = None
    sealed: Optional[LevelCollection] = None
    seal_report: Optional[RemovalReport] = None

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def deepest(self) -> LevelCollection:
        return self.levels[-1]

    def level(self, n: int) -> LevelCollection:
        return self.levels[n]

    def check_nesting(self) -> bool:
        R = self.params.R
        for upper, lower in zip(self.levels, self.levels[1:]):
            if not lower.runs.parents(R).issubset(upper.runs):
                return False
        return self.sealed is None or self.sealed.runs.issubset(self.deepest.runs)


def run_construction(params: Params, depth: int, workers: int = 1, seal: bool = False) -> ConstructionTree:
    """
    构造 J₀, …, J_depth

    某层为空时停止并记录 first_empty，不抛出异常。
    """
    if depth < 1:
        raise ValidationError(f"深度必须 ≥ 1: {depth}")
    level = init_level0(params)
    tree = ConstructionTree(params, [level], [])
    logger.info(f"J_0: {level.count} 个长为 {params.c1} 的区间")
    for _ in range(depth):
        level, report = build_level(level, params, workers)
        tree.levels.append(level)
        tree.reports.append(report)
        if level.is_empty:
            tree.first_empty = level.n
            logger.warning(f"第 {level.n} 层为空，构造终止")
            break
    if seal and not tree.deepest.is_empty:
        tree.sealed, tree.seal_report = seal_level(tree.deepest, params, workers)
    return tree


# 证书 -------------------------------------------------------------------

def certified_height(params: Params, pair_params: PairParams, level: int, sealed: bool) -> Optional[int]:
    """
    第 level 层（封口后）区间已避开的高度上界

    Returns:
        整数 H*，所有高度 < H* 的直线（或 q² < H* 的有理点）都已处理；(1,0) 返回 None
    """
    reach = level + 1 if sealed else level
    if pair_params.kind == X_ONLY:
        return None
    if pair_params.kind == Y_ONLY:
        return params.R ** max(reach - 1, 0)
    t = pair_params.index
    s_max = (reach - params.schedule.k[t]) // params.schedule.m[t] - 1
    return params.schedule.R_t(params.R, t) ** max(s_max, 0)


@dataclass(frozen=True)
class PointCertificate:
    interval: ClosedInterval
    level: int
    sealed: bool
    params: Params

    @property
    def point(self) -> Fraction:
        return self.interval.midpoint

    def to_dict(self) -> Dict[str, object]:
        point = self.point
        pairs = []
        for p in self.params.pairs:
            bound = certified_height(self.params, p, self.level, self.sealed)
            pairs.append({**p.to_dict(), 'c_num': p.c.numerator, 'c_den': p.c.denominator,
                          'height_bound': bound})
        return {
            'kind': 'point_certificate',
            'theta': self.params.theta.to_dict(),
            'R': self.params.R,
            'c1': str(self.params.c1),
            'level': self.level,
            'sealed': self.sealed,
            'interval': self.interval.to_dict(),
            'point_num': point.numerator,
            'point_den': point.denominator,
            'point_approx': to_decimal(point),
            'pairs': pairs,
            'schedule': self.params.schedule.to_dict(),
        }


def extract_point(tree: ConstructionTree) -> PointCertificate:
    """取最深层（封口后优先）最左区间及其中点"""
    collection = tree.sealed if tree.sealed is not None else tree.deepest
    if collection.is_empty:
        raise EmptyCollectionError(f"第 {collection.n} 层为空，无法取点", level=collection.n)
    interval = collection.interval(collection.runs.first())
    return PointCertificate(interval, collection.n, tree.sealed is not None, tree.params)


def build_certificate(tree: ConstructionTree) -> Dict[str, object]:
    return extract_point(tree).to_dict()


@dataclass
class VerificationReport:
    passed: bool
    checks: List[Dict[str, object]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, object]:
        return {'passed': self.passed, 'checks': self.checks}


def verify_certificate(certificate: Dict[str, object], Hmax: Optional[int] = None,
                       Q: int = 10000) -> VerificationReport:
    """
    只依据证书内容复核取到的点

    对每个非退化权重对在证书给出的高度界内做对偶检查，并用对偶常数推出的
    同时逼近常数做 q ≤ Q 的扫描；(0,1) 权重对用 q² 低于其界的同时逼近检查。
    转换只沿“对偶 ⇒ 同时逼近”方向使用：扫描常数是 simultaneous_constant_from_dual(c)，
    不是由同时逼近常数推出对偶常数的正向界。
    """
    from badweave.transference import check_dual, check_simultaneous, simultaneous_constant_from_dual

    theta = parse_theta(str(certificate['theta']['source']))
    y = Fraction(int(certificate['point_num']), int(certificate['point_den']))
    interval = certificate['interval']
    lo = Fraction(interval['lo_num'], interval['lo_den'])
    hi = Fraction(interval['hi_num'], interval['hi_den'])
    if not lo <= y <= hi:
        raise ValidationError("证书中的点不在其区间内")

    report = VerificationReport(True)
    for entry in certificate['pairs']:
        pair = parse_pair(str(entry['pair']))
        c = Fraction(int(entry['c_num']), int(entry['c_den']))
        bound = entry.get('height_bound')
        if pair.kind == X_ONLY or bound is None:
            continue
        limit = bound
        if Hmax is not None:
            if Hmax > bound:
                logger.warning(f"Hmax = {Hmax} 超出证书对 {pair} 给出的高度界 {bound}，按 {bound} 检查")
            limit = min(Hmax, bound)
        if pair.kind == Y_ONLY:
            q_limit = math.isqrt(limit - 1) if limit > 1 else 0
            result = check_simultaneous(theta, y, pair, c, q_limit) if q_limit >= 1 else None
            checks = [('simultaneous', c, q_limit, result)]
        else:
            dual = check_dual(theta, y, pair, c, limit)
            transferred = simultaneous_constant_from_dual(c, pair)
            simul = check_simultaneous(theta, y, pair, transferred, Q)
            checks = [('dual', c, limit, dual), ('simultaneous', transferred, Q, simul)]
        for kind, constant, reach, result in checks:
            passed = result is None or result.passed
            report.checks.append({'pair': str(pair), 'kind': kind, 'constant': str(constant),
                                  'bound': reach, 'passed': passed,
                                  'witness': None if result is None else result.witness})
            report.passed = report.passed and passed
    logger.info(f"证书复核{'通过' if report.passed else '失败'}（{len(report.checks)} 项检查）")
    return report


# 计数与独立复核 -----------------------------------------------------------

def counting_report(tree: ConstructionTree) -> List[Dict[str, object]]:
    """
    逐层比较 #J_{n+1} 与 (R − 5dR^{1−ε})#J_n、#J_n 与 (R − R^{1−ε/2})^n

    仅当全部可行性条件成立时断言，否则只报告。
    """
    params = tree.params
    R, eps = params.R, params.epsilon
    d = max(len([p for p in params.pairs if p.kind != X_ONLY]), 1)
    asserted = all(viability_report(params).values())
    step_loss = PowerProduct.power(R, 1 - eps) * (5 * d)
    branch = PowerProduct.power(R, 1 - eps / 2)
    rows: List[Dict[str, object]] = []
    for report, parent, level in zip(tree.reports, tree.levels, tree.levels[1:]):
        n = level.n
        deficit = R * parent.count - level.count
        good_step = deficit <= 0 or compare(deficit, step_loss * parent.count) <= 0
        if parent.count == 0:
            good_step = False
        # (R − R^{1−ε/2})^n ≤ #J_n ⇔ R − R^{1−ε/2} − #J_n^{1/n} ≤ 0
        if level.count == 0:
            good_total = compare(Fraction(R), branch) <= 0
        else:
            sign = sign_of_sum([Fraction(R), branch, PowerProduct.power(level.count, Fraction(1, n))],
                                [1, -1, -1])
            good_total = None if sign is None else sign <= 0
        row = {
            'n': n, 'count': level.count, 'parent_count': parent.count,
            'ratio': str(Fraction(level.count, parent.count)) if parent.count else None,
            'trimmed': report.trimmed, 'removed': report.removed,
            'step_bound_holds': good_step, 'total_bound_holds': good_total, 'asserted': asserted,
        }
        rows.append(row)
        if asserted and (good_step is False or good_total is False):
            raise FalsificationError(f"第 {n} 层计数界不成立", row)
    return rows


def _naive_lines(pair: Pair, Hmax: int) -> Iterator[Line]:
    # 直接按定义逐个检查 (A, B, C)，不借助 enumerate_lines 的范围公式
    B = 1
    while compare(height((0, B), pair), Hmax) < 0:
        A = 0
        while compare(height((A, B), pair), Hmax) < 0:
            for signed in ((A, -A) if A else (0,)):
                for C in range(-B - abs(signed) - 1, 2 * B + abs(signed) + 2):
                    if math.gcd(signed, B, C) == 1:
                        yield Line(signed, B, C)
            A += 1
        B += 1


def _meets_collection(delta: RemovalInterval, collection: LevelCollection) -> Optional[int]:
    lo, hi = magnitude_bounds(delta.center)
    w_lo, w_hi = magnitude_bounds(delta.halfwidth)
    k_lo = math.floor((lo - w_hi) / collection.step) - 1
    k_hi = math.floor((hi + w_hi) / collection.step) + 1
    for start, stop in collection.runs.runs_in(k_lo, k_hi + 1):
        if delta.meets(start * collection.step, stop * collection.step):
            for k in range(start, stop):
                block = collection.interval(k)
                if delta.meets(block.lo, block.hi):
                    return k
    return None


def avoidance_oracle(collection: LevelCollection, params: Params,
                     Hmax: Union[int, Dict[int, int]]) -> List[Dict[str, object]]:
    """
    独立复核：对高度 < Hmax 的全部规范直线（及 q² < Hmax 的有理点）检查 Δ 与集合不交

    Returns:
        违例列表，每项给出直线和被碰到的区间编号
    """
    violations: List[Dict[str, object]] = []
    for p in params.pairs:
        limit = Hmax.get(p.index) if isinstance(Hmax, dict) else Hmax
        if p.kind == X_ONLY or not limit:
            continue
        if p.kind == Y_ONLY:
            deltas: Iterable[RemovalInterval] = (
                rational_delta(Fraction(a, q), p.c)
                for q in range(1, math.isqrt(limit - 1) + 1)
                for a in range(-1, q + 2) if math.gcd(a, q) == 1)
        else:
            deltas = (delta_interval(line, p.pair, p.c, params.theta) for line in _naive_lines(p.pair, limit))
        checked = 0
        for delta in deltas:
            checked += 1
            k = _meets_collection(delta, collection)
            if k is not None:
                violations.append({'pair': str(p.pair), 'source': str(delta.source), 'level': collection.n,
                                   'index': k})
        logger.info(f"独立复核 {p.pair}: 检查 {checked} 个 Δ，违例 {len(violations)}")
    return violations


# 序列化 -----------------------------------------------------------------

def tree_records(tree: ConstructionTree) -> Iterator[Dict[str, object]]:
    """
    JSON-lines 记录：首行为参数头，其后每个连续段一条记录

    段记录的 count 为段内区间数，parent 为父段在上一层中的序号。
    """
    certificate = None
    collection = tree.sealed if tree.sealed is not None else tree.deepest
    if not collection.is_empty:
        certificate = build_certificate(tree)
    yield {
        'kind': 'header',
        'params': tree.params.to_dict(),
        'depth': tree.depth,
        'first_empty': tree.first_empty,
        'reports': [r.to_dict() for r in tree.reports],
        'certificate': certificate,
    }
    R = tree.params.R
    previous: Optional[LevelCollection] = None
    extra = [('sealed', tree.sealed)] if tree.sealed is not None else []
    for kind, level in [('run', lv) for lv in tree.levels] + extra:
        parent_level = previous if kind == 'run' else None
        for start, stop, block in level.blocks():
            parent = None
            if parent_level is not None:
                parent = parent_level.runs.ordinal(start // R)
            elif kind == 'sealed':
                parent = tree.deepest.runs.ordinal(start)
            yield {'kind': kind, 'n': level.n, **block.to_dict(), 'count': stop - start, 'parent': parent}
        if kind == 'run':
            previous = level


@dataclass
class LoadedTree:
    header: Dict[str, object]
    levels: Dict[int, LevelCollection]
    sealed: Optional[LevelCollection] = None


def load_tree(records: Iterable[Dict[str, object]]) -> LoadedTree:
    """从 tree_records 的输出重建各层集合"""
    header: Optional[Dict[str, object]] = None
    runs: Dict[Tuple[str, int], List[Tuple[int, int]]] = {}
    steps: Dict[Tuple[str, int], Fraction] = {}
    for record in records:
        if record.get('kind') == 'header':
            header = record
            continue
        key = (str(record['kind']), int(record['n']))
        lo = Fraction(record['lo_num'], record['lo_den'])
        hi = Fraction(record['hi_num'], record['hi_den'])
        count = int(record['count'])
        step = (hi - lo) / count
        start = lo / step
        if start.denominator != 1:
            raise ValidationError(f"段端点不在第 {key[1]} 层网格上: {lo}")
        steps[key] = step
        runs.setdefault(key, []).append((int(start), int(start) + count))
    if header is None:
        raise ValidationError("树文件缺少参数头")
    c1 = Fraction(str(header['params']['c1']))
    R = int(header['params']['R'])
    levels: Dict[int, LevelCollection] = {}
    sealed = None
    for n in range(int(header['depth']) + 1):
        levels[n] = LevelCollection(n, c1 / Fraction(R) ** n, IndexRuns(runs.get(('run', n), [])))
    for (kind, n), ranges in runs.items():
        if kind == 'sealed':
            sealed = LevelCollection(n, steps[(kind, n)], IndexRuns(ranges))
    return LoadedTree(header, levels, sealed)
