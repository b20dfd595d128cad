"""
badweave 命令行入口
把配置接到构造、复核、几何扫描和转换检查上，输出证书、报告和作图数据
"""

import functools
import sys
from dataclasses import MISSING, asdict, dataclass, fields
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional

import click

from badweave.construction import (
    MODES,
    REMOVAL_HEADER,
    ConstructionTree,
    Params,
    avoidance_oracle,
    build_certificate,
    certified_height,
    counting_report,
    derive_params,
    load_tree,
    params_from_inputs,
    run_construction,
    tree_records,
    verify_certificate,
)
from badweave.exact_arith import certify_theta, to_decimal
from badweave.geometry import (
    COUNT_HEADER,
    FIGURE_HEADER,
    concurrency_sweep,
    count_table,
    figure_clouds,
    lemma2_sweep,
    pigeonhole_sweep,
    scan_type2,
)
from badweave.lines import GENERIC, Line, delta_interval, parse_pair, rational_delta
from badweave.refinement import assign_measure, check_mass_bound, refine_collections, ubiquity_adversary_test
from badweave.transference import round_trip_sweep
from utils.config_manager import ConfigManager
from utils.exceptions import (
    BadweaveError,
    ConfigError,
    EmptyCollectionError,
    FalsificationError,
    ValidationError,
)
from utils.file_utils import (
    ensure_directory,
    get_file_hash,
    read_json,
    read_jsonl,
    safe_filename,
    write_csv,
    write_json,
    write_jsonl,
)
from utils.logger import get_logger, run_log_path, setup_project_logging

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_FALSIFIED = 2
EXIT_EMPTY = 3
EXIT_CONFIG = 4

# RunConfig 字段在配置文件中的位置
SECTIONS = {
    'construction': ('pairs', 'theta', 'R', 'depth', 'epsilon', 'trim', 'desk_trim', 'schedule',
                     'truncation', 'c1', 'seal'),
    'verification': ('Q', 'Hmax', 'node_cap', 'badness_Q', 'badness_denominator'),
    'sweep': ('seed', 'trials', 'adversary_trials', 'windows', 'strategy', 'q_max',
              'transfer_trials', 'transfer_denominator', 'transfer_c'),
}


@dataclass
class RunConfig:
    """一次运行的全部设置：默认值 ← 配置文件 ← 命令行"""

    pairs: List[str]
    theta: str
    R: int
    depth: int
    epsilon: Optional[str]
    trim: str
    desk_trim: int
    schedule: str
    truncation: Optional[int]
    c1: Optional[str]
    seal: bool
    Q: int
    Hmax: int
    node_cap: int
    badness_Q: int
    badness_denominator: int
    seed: int
    trials: int
    adversary_trials: int
    windows: int
    strategy: str
    q_max: int
    transfer_trials: int
    transfer_denominator: int
    transfer_c: str
    workers: int = 1
    out: str = 'output'
    log_dir: str = ''
    log_level: str = 'INFO'

    @classmethod
    def from_manager(cls, manager: ConfigManager) -> 'RunConfig':
        values: Dict[str, Any] = {}
        for section, keys in SECTIONS.items():
            for key in keys:
                values[key] = manager.get(f"{section}.{key}")
        values.update({
            'workers': manager.get('runtime.workers'),
            'out': manager.get('output.dir'),
            'log_dir': manager.get('logging.dir'),
            'log_level': manager.get('logging.level'),
        })
        return cls.from_dict(values)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunConfig':
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError("未知配置项", key_path=key)
        missing = [f.name for f in fields(cls) if f.name not in data and f.default is MISSING]
        if missing:
            raise ConfigError("缺少配置项", key_path=missing[0])
        values = dict(data)
        values['pairs'] = [str(p) for p in values['pairs']]
        return cls(**values)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def override(self, **flags) -> 'RunConfig':
        """用非 None 的命令行参数覆盖"""
        record = self.to_dict()
        for key, value in flags.items():
            if value is None or (isinstance(value, tuple) and not value):
                continue
            record[key] = list(value) if isinstance(value, tuple) else value
        return RunConfig.from_dict(record)

    def build_params(self) -> Params:
        theta = certify_theta(str(self.theta), int(self.badness_Q), int(self.badness_denominator))
        trim = str(self.trim)
        if trim in MODES:
            mode, desk_trim = trim, int(self.desk_trim)
        elif trim.isdigit():
            mode, desk_trim = 'desk', int(trim)
        else:
            raise ConfigError(f"未知裁剪模式: {trim}", key_path='construction.trim')
        truncation = self.truncation if self.schedule == 'countable' else None
        return derive_params(self.pairs, theta, int(self.R), mode, str(self.schedule), truncation,
                             _fraction(self.epsilon, 'construction.epsilon'),
                             _fraction(self.c1, 'construction.c1'), desk_trim)


def _fraction(value, key_path: str) -> Optional[Fraction]:
    if value is None:
        return None
    try:
        return Fraction(str(value))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"无法解析为有理数: {value}", key_path=key_path)


def _out(run: RunConfig, name: str) -> str:
    return str(Path(ensure_directory(run.out)) / name)


def handle_errors(func):
    """把项目异常映射为退出码"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            status = func(*args, **kwargs)
        except ConfigError as e:
            click.echo(f"配置错误: {e}", err=True)
            status = EXIT_CONFIG
        except FalsificationError as e:
            click.echo(f"检查失败: {e}", err=True)
            logger.error(f"反例: {e.witness}")
            run = click.get_current_context().obj.get('run')
            if run is not None:
                write_json(_out(run, 'falsification.json'), {'message': str(e), 'witness': e.witness})
            status = EXIT_FALSIFIED
        except EmptyCollectionError as e:
            click.echo(f"集合为空: {e}", err=True)
            status = EXIT_EMPTY
        except ValidationError as e:
            click.echo(f"输入无效: {e}", err=True)
            status = EXIT_CONFIG
        except BadweaveError as e:
            logger.exception(f"运行失败: {e}")
            status = EXIT_UNEXPECTED
        except Exception as e:
            logger.exception(f"未预期的错误: {e}")
            status = EXIT_UNEXPECTED
        if status:
            click.get_current_context().exit(status)

    return wrapper


def _run(ctx: click.Context, **flags) -> RunConfig:
    run = ctx.obj['base'].override(**flags)
    ctx.obj['run'] = run
    return run


def _construct(run: RunConfig) -> ConstructionTree:
    params = run.build_params()
    return run_construction(params, int(run.depth), int(run.workers), bool(run.seal))


def _generic(tree: ConstructionTree) -> List[int]:
    return [p.index for p in tree.params.pairs if p.kind == GENERIC]


construction_options = [
    click.option('--pairs', multiple=True, help='权重对 "i,j"，可重复'),
    click.option('--theta', default=None, help='二次无理数 θ，如 "sqrt(2)"'),
    click.option('--R', 'R', type=int, default=None, help='细分基数'),
    click.option('--depth', type=int, default=None, help='构造深度'),
    click.option('--trim', default=None, help='desk | full | 每端裁剪数'),
    click.option('--epsilon', default=None, help='ε（有理数）'),
    click.option('--schedule', type=click.Choice(['finite', 'countable']), default=None),
    click.option('--truncation', type=int, default=None, help='可数调度截断 T'),
    click.option('--c1', default=None, help='覆盖 c₁'),
    click.option('--seal/--no-seal', default=None),
]


def with_construction_options(func):
    for option in reversed(construction_options):
        func = option(func)
    return func


@click.group()
@click.option('--config', 'config_file', type=click.Path(dir_okay=False), default=None, help='配置文件（YAML/JSON）')
@click.option('--log-dir', default=None, help='日志目录')
@click.option('--workers', type=int, default=None, help='并行进程数')
@click.option('--seed', type=int, default=None, help='随机扫描种子')
@click.option('--out', default=None, help='输出目录')
@click.pass_context
def cli(ctx, config_file, log_dir, workers, seed, out):
    """badweave：加权 badly approximable 点的构造与检查"""
    ctx.ensure_object(dict)
    try:
        manager = ConfigManager(config_file)
        base = RunConfig.from_manager(manager).override(log_dir=log_dir, workers=workers, seed=seed, out=out)
    except ConfigError as e:
        click.echo(f"配置错误: {e}", err=True)
        ctx.exit(EXIT_CONFIG)
    run_log = run_log_path(base.out, ctx.invoked_subcommand) if ctx.invoked_subcommand else None
    setup_project_logging(base.log_level, base.log_dir or None, run_log)
    ctx.obj['base'] = base


@cli.command()
@with_construction_options
@click.option('--oracle/--no-oracle', default=False, help='用独立枚举复核最深层')
@click.pass_context
@handle_errors
def construct(ctx, oracle, **flags):
    """构造 J₀ ⊇ … ⊇ J_depth，写出树、证书和移除记录"""
    run = _run(ctx, **flags)
    tree = _construct(run)
    tree_path = _out(run, 'tree.jsonl')
    write_jsonl(tree_path, tree_records(tree))
    rows = [removal.to_row(report.level) for report in tree.reports for removal in report.removals]
    if tree.seal_report is not None:
        rows.extend(removal.to_row(tree.seal_report.level) for removal in tree.seal_report.removals)
    write_csv(_out(run, 'removals.csv'), REMOVAL_HEADER, rows)
    if tree.first_empty is not None or (tree.sealed is not None and tree.sealed.is_empty):
        click.echo(f"第 {tree.first_empty if tree.first_empty is not None else tree.depth} 层为空")
        return EXIT_EMPTY

    certificate = build_certificate(tree)
    certificate['tree_sha256'] = get_file_hash(tree_path)
    write_json(_out(run, 'certificate.json'), certificate)
    click.echo(f"#J: {[level.count for level in tree.levels]}，点 ≈ {certificate['point_approx'][:20]}")

    if oracle:
        collection = tree.sealed if tree.sealed is not None else tree.deepest
        limits = {p.index: certified_height(tree.params, p, collection.n, tree.sealed is not None)
                  for p in tree.params.pairs}
        violations = avoidance_oracle(collection, tree.params, limits)
        if violations:
            raise FalsificationError("独立复核发现与 Δ 相交的区间", {'violations': violations[:20]})
        click.echo("独立复核通过")
    return EXIT_OK


@cli.command()
@click.option('--point-from', 'point_from', type=click.Path(exists=True, dir_okay=False), default=None)
@click.option('--certificate', 'certificate_file', type=click.Path(exists=True, dir_okay=False), default=None)
@click.option('--Hmax', 'Hmax', type=int, default=None)
@click.option('--Q', 'Q', type=int, default=None)
@click.option('--oracle/--no-oracle', default=False, help='同时复核树文件的最深层')
@click.pass_context
@handle_errors
def verify(ctx, point_from, certificate_file, Hmax, Q, oracle):
    """只依据证书（或树文件中的证书）复核取到的点"""
    run = _run(ctx, Hmax=Hmax, Q=Q)
    if (point_from is None) == (certificate_file is None):
        raise ConfigError("必须且只能给出 --point-from 或 --certificate 之一")
    if certificate_file is not None:
        certificate = read_json(certificate_file)
    else:
        loaded = load_tree(read_jsonl(point_from))
        certificate = loaded.header.get('certificate')
        if certificate is None:
            raise EmptyCollectionError("树文件中没有证书（最深层为空）")
        if oracle:
            params = params_from_inputs(loaded.header['params']['inputs'])
            sealed = loaded.sealed is not None
            collection = loaded.sealed if sealed else loaded.levels[int(loaded.header['depth'])]
            limits = {p.index: min(certified_height(params, p, collection.n, sealed) or 0, int(run.Hmax))
                      for p in params.pairs}
            violations = avoidance_oracle(collection, params, limits)
            if violations:
                raise FalsificationError("独立复核发现与 Δ 相交的区间", {'violations': violations[:20]})
    report = verify_certificate(certificate, int(run.Hmax), int(run.Q))
    write_json(_out(run, 'verification.json'), report.to_dict())
    click.echo(f"复核{'通过' if report.passed else '失败'}：{len(report.checks)} 项检查")
    return EXIT_OK if report.passed else EXIT_FALSIFIED


@cli.command('check-theorem4')
@with_construction_options
@click.option('--n-max', type=int, default=4)
@click.option('--l-max', type=int, default=1)
@click.option('--trials', type=int, default=None)
@click.pass_context
@handle_errors
def check_theorem4(ctx, n_max, l_max, trials, **flags):
    """随机窗口上的共点性扫描"""
    run = _run(ctx, trials=trials, **flags)
    params = run.build_params()
    summaries = []
    for p in params.generic:
        summaries.append(concurrency_sweep(p.pair, params.theta, params.R, p.c1, n_max, l_max,
                                           int(run.trials), int(run.seed) + p.index))
    write_json(_out(run, 'theorem4.json'), {'sweeps': summaries})
    violations = sum(len(s['violations']) for s in summaries)
    click.echo(f"共点性：{sum(s['checked'] for s in summaries)} 个窗口，违例 {violations}")
    return EXIT_FALSIFIED if violations else EXIT_OK


@cli.command('check-counts')
@with_construction_options
@click.pass_context
@handle_errors
def check_counts(ctx, **flags):
    """每个 J_{n−l} 的移除计数表与逐层计数比较"""
    run = _run(ctx, **flags)
    tree = _construct(run)
    rows = []
    for index in _generic(tree):
        for n in range(tree.depth):
            rows.extend(count_table(tree, index, n))
    write_csv(_out(run, 'counts.csv'), COUNT_HEADER, [[row[key] for key in COUNT_HEADER] for row in rows])
    levels = counting_report(tree)
    write_json(_out(run, 'counting.json'), {'levels': levels})
    click.echo(f"计数表 {len(rows)} 行，R^(1−ε) 界成立 {sum(1 for r in rows if r['aggregate_holds'])} 行")
    return EXIT_OK


@cli.command('check-prop1')
@with_construction_options
@click.pass_context
@handle_errors
def check_prop1(ctx, **flags):
    """对构造中的全部 Type 2 子区间搜索并验证 L₀"""
    run = _run(ctx, **flags)
    tree = _construct(run)
    records = []
    for index in _generic(tree):
        for n in range(tree.depth):
            records.extend(scan_type2(tree, index, n))
    write_jsonl(_out(run, 'prop1.jsonl'), records)
    found = [r for r in records if r['L0'] is not None]
    fallback = [r for r in found if r['L0']['status'] == 'fallback']
    click.echo(f"Type 2 子区间 {len(records)} 个，前提成立 {len(found)} 个，"
               f"Case A/B 验证 L₀ {len(found) - len(fallback)} 个，退回最小高度 {len(fallback)} 个")
    if fallback:
        raise FalsificationError("Case A/B 的构造没有给出 L₀", {'records': fallback[:20]})
    return EXIT_OK


@cli.command('check-lemma1')
@with_construction_options
@click.option('--q-max', type=int, default=None)
@click.option('--n-max', type=int, default=3)
@click.option('--trials', type=int, default=None)
@click.pass_context
@handle_errors
def check_lemma1(ctx, q_max, n_max, trials, **flags):
    """鸽笼直线扫描与两直线不等式扫描"""
    run = _run(ctx, q_max=q_max, trials=trials, **flags)
    params = run.build_params()
    results = []
    for p in params.generic:
        results.append({
            'pigeonhole': pigeonhole_sweep(params.theta, p.pair, int(run.q_max)),
            'two_lines': lemma2_sweep(p.pair, params.theta, params.R, n_max, trials=int(run.trials),
                                      seed=int(run.seed) + p.index),
        })
    write_json(_out(run, 'lemma1.json'), {'results': results})
    violations = sum(len(r['two_lines']['violations']) for r in results)
    click.echo(f"鸽笼扫描 {sum(r['pigeonhole']['points'] for r in results)} 个点全部成功，两直线不等式违例 {violations}")
    return EXIT_FALSIFIED if violations else EXIT_OK


@cli.command()
@with_construction_options
@click.option('--m-max', type=int, default=None)
@click.option('--strategy', type=click.Choice(['random', 'survivors', 'avoid']), default=None)
@click.option('--adversary-trials', type=int, default=None)
@click.pass_context
@handle_errors
def refine(ctx, m_max, strategy, adversary_trials, **flags):
    """计算 M_{n,m} 与倾倒集，并运行随机对手测试"""
    run = _run(ctx, strategy=strategy, adversary_trials=adversary_trials, **flags)
    tree = _construct(run)
    state = refine_collections(tree, m_max=m_max)
    adversary = ubiquity_adversary_test(tree, int(run.adversary_trials), seed=int(run.seed),
                                        strategy=str(run.strategy))
    write_json(_out(run, 'refinement.json'), {
        'collections': state.summary(),
        'stable_from': {str(n): m for n, m in sorted(state.stable_from.items())},
        'violations': state.violations,
        'adversary': adversary.to_dict(),
    })
    click.echo(f"加细 {len(state.M)} 个集合，对手失败 {adversary.violations} 次")
    return EXIT_OK


@cli.command()
@with_construction_options
@click.option('--windows', type=int, default=None)
@click.pass_context
@handle_errors
def measure(ctx, windows, **flags):
    """在加细树上赋权并检查 μ(I) ≤ a|I|^{1−ε/2}"""
    run = _run(ctx, windows=windows, **flags)
    tree = _construct(run)
    state = refine_collections(tree)
    mu = assign_measure(state)
    report = check_mass_bound(mu, random_count=int(run.windows), seed=int(run.seed))
    write_json(_out(run, 'measure.json'), {
        'levels': [level.count for level in mu.levels],
        'masses': [str(mu.level_mass(n)) for n in range(mu.depth + 1)],
        **report.to_dict(),
    })
    click.echo(f"质量界：{report.windows} 个窗口，违例 {len(report.violations)}，经验指数 {report.min_exponent}")
    return EXIT_OK if report.passed else EXIT_FALSIFIED


@cli.command()
@click.option('--pairs', multiple=True)
@click.option('--c', 'transfer_c', default=None, help='反例常数 c')
@click.option('--trials', 'transfer_trials', type=int, default=None)
@click.option('--denominator', 'transfer_denominator', type=int, default=None)
@click.pass_context
@handle_errors
def transfer(ctx, **flags):
    """随机有理点上对偶与同时逼近反例的相互转换"""
    run = _run(ctx, **flags)
    c = _fraction(run.transfer_c, 'sweep.transfer_c')
    results = []
    for text in run.pairs:
        pair = parse_pair(text)
        if pair.kind != GENERIC:
            continue
        results.append(round_trip_sweep(pair, c, int(run.transfer_trials), int(run.transfer_denominator),
                                        int(run.seed), int(run.node_cap)))
    write_json(_out(run, 'transfer.json'), {'results': results})
    click.echo(f"转换往返：{sum(r['points'] for r in results)} 个点")
    return EXIT_OK


@cli.command('emit-plot-data')
@with_construction_options
@click.pass_context
@handle_errors
def emit_plot_data(ctx, **flags):
    """写出每层移除的 Δ 区间和 Type 2 子区间的 F∩Λ 点云（CSV）"""
    run = _run(ctx, **flags)
    tree = _construct(run)
    params = tree.params
    rows = []
    reports = list(tree.reports) + ([tree.seal_report] if tree.seal_report is not None else [])
    for report in reports:
        for removal in report.removals:
            p = params.pairs[removal.pair_index]
            if isinstance(removal.source, Line):
                delta = delta_interval(removal.source, p.pair, p.c, params.theta)
            else:
                delta = rational_delta(removal.source, p.c)
            rows.append([report.level, str(p.pair), str(removal.source), to_decimal(delta.center, 20),
                         to_decimal(delta.halfwidth, 20), removal.first, removal.last, removal.count])
    write_csv(_out(run, 'removed_intervals.csv'),
              ['level', 'pair', 'source', 'center', 'halfwidth', 'first', 'last', 'count'], rows)
    clouds = 0
    for index in _generic(tree):
        for n in range(tree.depth):
            for cloud in figure_clouds(tree, index, n):
                record = cloud['record']
                name = safe_filename(f"figure_{index}_{n}_{record['l']}_{record['k']}_{record['j']}_{record['sub']}.csv")
                write_csv(_out(run, name), FIGURE_HEADER, cloud['rows'])
                clouds += 1
    click.echo(f"移除区间 {len(rows)} 个，点云 {clouds} 个")
    return EXIT_OK


def run_command(argv: Optional[List[str]] = None) -> int:
    """
    运行一条命令并返回退出码

    Args:
        argv: 命令行参数，缺省时读取 sys.argv

    Returns:
        退出码（用法错误按配置错误计）
    """
    try:
        status = cli.main(args=argv, obj={}, standalone_mode=False)
    except click.exceptions.Abort:
        return EXIT_UNEXPECTED
    except click.ClickException as e:
        e.show()
        return EXIT_CONFIG
    return status if isinstance(status, int) else EXIT_OK


def main():
    sys.exit(run_command())


if __name__ == '__main__':
    main()
