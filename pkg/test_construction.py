"""
构造测试：参数推导、逐层移除、独立复核与证书
"""

from fractions import Fraction

import pytest

from badweave.construction import (
    avoidance_oracle,
    build_certificate,
    build_level,
    certified_height,
    counting_report,
    derive_params,
    derive_schedule,
    extract_point,
    init_level0,
    load_tree,
    params_from_inputs,
    run_construction,
    seal_level,
    tree_records,
    verify_certificate,
    viability_report,
)
from badweave.exact_arith import PowerProduct, compare
from badweave.lines import Y_ONLY, parse_pair
from badweave.transference import simultaneous_constant_from_dual
from utils.exceptions import ValidationError

RANDOM_PAIRS = ['1/2,1/2', '1/3,2/3', '2/3,1/3', '1/4,3/4', '3/4,1/4', '1/5,4/5', '2/5,3/5', '3/5,2/5',
                '4/5,1/5', '1/6,5/6', '5/6,1/6', '2/7,5/7', '3/7,4/7', '4/7,3/7', '5/7,2/7', '1/8,7/8',
                '3/8,5/8', '5/8,3/8', '7/8,1/8', '4/9,5/9']


def test_desk_constants(desk_params):
    """c₁ = 2^{−14} = (1/4)·16^{−3}，c = 2^{−19}"""
    p = desk_params.pairs[0]
    assert desk_params.c1 == Fraction(1, 2 ** 14)
    assert p.c == Fraction(1, 2 ** 19)
    assert p.trim == 0
    assert desk_params.epsilon == Fraction(1, 8)
    assert desk_params.branch_threshold == 26


@pytest.mark.parametrize('text', RANDOM_PAIRS)
def test_derived_constants(theta, text):
    params = derive_params([text], theta, 16)
    p = params.pairs[0]
    pair = parse_pair(text)
    assert p.pair.alpha == pair.i * pair.j / 4
    assert p.pair.lam == 3 / pair.j
    assert compare(p.c1, PowerProduct.power(16, -3 * pair.i / pair.j) / 4) <= 0
    assert 0 < p.c <= theta.c_theta


def test_full_trimming_mode(theta):
    params = derive_params(['1/2,1/2'], theta, 16, mode='full')
    assert params.epsilon == Fraction(1, 1024)
    # ⌈16^{15/16}⌉
    assert params.pairs[0].trim == 14


def test_trim_viability_flips_at_two_to_one_over_alpha(theta):
    assert not viability_report(derive_params(['1/2,1/2'], theta, 2 ** 16))['t0.trim_viable']
    assert viability_report(derive_params(['1/2,1/2'], theta, 2 ** 16 + 1))['t0.trim_viable']


def test_derive_params_rejects(theta):
    with pytest.raises(ValidationError):
        derive_params(['1/2,1/2'], theta, 1)
    with pytest.raises(ValidationError):
        derive_params(['1/2,1/2'], theta, 16, c1=Fraction(1, 4))
    with pytest.raises(ValidationError):
        derive_params(['1/2,1/2'], theta.value, 16)
    with pytest.raises(ValidationError):
        derive_params([], theta, 16)


def test_desk_levels(desk_tree, desk_params):
    assert desk_tree.depth == 2
    assert desk_tree.first_empty is None
    assert desk_tree.check_nesting()
    assert desk_tree.levels[0].count == 2 ** 14
    # 第 0 → 1 步没有要移除的族
    assert desk_tree.reports[0].removed == 0
    assert desk_tree.levels[1].count == 16 * 2 ** 14
    report = desk_tree.reports[1]
    assert report.removed > 0
    assert desk_tree.levels[2].count == 16 * desk_tree.levels[1].count - report.removed


def test_per_line_removal_bound(desk_tree):
    for report in desk_tree.reports:
        for removal in report.removals:
            assert removal.bound is not None
            assert removal.count <= 2 or compare(removal.count - 2, removal.bound) <= 0


def test_deepest_level_avoids_certified_lines(desk_tree, desk_params):
    p = desk_params.pairs[0]
    limit = certified_height(desk_params, p, 2, sealed=False)
    assert limit == 16
    assert avoidance_oracle(desk_tree.deepest, desk_params, limit) == []


def test_sealing_extends_certified_height(sealed_tree, desk_params):
    p = desk_params.pairs[0]
    assert certified_height(desk_params, p, 2, sealed=True) == 256
    assert sealed_tree.sealed.runs.issubset(sealed_tree.deepest.runs)
    assert not sealed_tree.sealed.is_empty
    assert avoidance_oracle(sealed_tree.sealed, desk_params, 256) == []


def test_certificate_verifies_on_its_own(sealed_tree):
    certificate = build_certificate(sealed_tree)
    assert certificate['sealed'] is True
    assert certificate['pairs'][0]['height_bound'] == 256
    report = verify_certificate(certificate, Q=500)
    assert report.passed
    assert {check['kind'] for check in report.checks} == {'dual', 'simultaneous'}


def test_certificate_scan_uses_constant_derived_from_dual(sealed_tree):
    certificate = build_certificate(sealed_tree)
    entry = certificate['pairs'][0]
    c = Fraction(int(entry['c_num']), int(entry['c_den']))
    report = verify_certificate(certificate, Q=50)
    constants = {check['kind']: check['constant'] for check in report.checks}
    assert constants['dual'] == str(c)
    assert constants['simultaneous'] == str(simultaneous_constant_from_dual(c, parse_pair(str(entry['pair']))))


def test_tampered_certificate_fails(sealed_tree):
    certificate = build_certificate(sealed_tree)
    # 把点换成 Δ(L(0,1,0)) 的中心 0：对偶检查在 (A,B) = (0,1) 失败
    certificate['interval'] = {'lo_num': 0, 'lo_den': 1, 'hi_num': 1, 'hi_den': 2 ** 30}
    certificate['point_num'], certificate['point_den'] = 0, 1
    report = verify_certificate(certificate, Q=10)
    assert not report.passed


def test_tree_records_reload(desk_tree):
    loaded = load_tree(tree_records(desk_tree))
    for n, level in enumerate(desk_tree.levels):
        assert loaded.levels[n].runs == level.runs
    params = params_from_inputs(loaded.header['params']['inputs'])
    assert params.c1 == desk_tree.params.c1
    assert params.pairs[0].c == desk_tree.params.pairs[0].c


def test_counting_report_only_reports_at_desk_scale(desk_tree):
    rows = counting_report(desk_tree)
    assert [row['n'] for row in rows] == [1, 2]
    assert not any(row['asserted'] for row in rows)


def test_two_pairs_interleave(theta):
    params = derive_params(['1/2,1/2', '1/3,2/3'], theta, 16)
    tree = run_construction(params, 2)
    assert not tree.deepest.is_empty
    limits = {p.index: certified_height(params, p, 2, False) for p in params.pairs}
    assert avoidance_oracle(tree.deepest, params, limits) == []


def test_rational_points_remove_few_intervals(theta):
    params = derive_params(['1/2,1/2', '0,1'], theta, 16)
    tree = run_construction(params, 2)
    assert not tree.deepest.is_empty
    rational = [r for report in tree.reports for r in report.removals
                if params.pairs[r.pair_index].kind == Y_ONLY]
    assert rational
    assert all(r.count <= 3 for r in rational)
    limits = {p.index: certified_height(params, p, 2, False) for p in params.pairs}
    assert avoidance_oracle(tree.deepest, params, limits) == []


def test_run_construction_rejects_zero_depth(desk_params):
    with pytest.raises(ValidationError):
        run_construction(desk_params, 0)


@pytest.mark.slow
def test_depth_three_avoidance(deep_tree, desk_params):
    """深度 3：最深层非空，且避开全部高度 < 16² 的直线"""
    assert deep_tree.deepest.count >= 1
    assert deep_tree.check_nesting()
    limit = certified_height(desk_params, desk_params.pairs[0], 3, sealed=False)
    assert limit == 256
    assert avoidance_oracle(deep_tree.deepest, desk_params, limit) == []


def test_single_steps_match_the_tree(desk_tree, sealed_tree, desk_params):
    level0 = init_level0(desk_params)
    assert level0.runs == desk_tree.levels[0].runs
    assert level0.step == desk_params.c1
    level2, report = build_level(desk_tree.levels[1], desk_params)
    assert level2.runs == desk_tree.levels[2].runs
    assert report.removed == desk_tree.reports[1].removed
    sealed, seal_report = seal_level(desk_tree.deepest, desk_params)
    assert sealed.runs == sealed_tree.sealed.runs
    assert seal_report.sealed


def test_extract_point(sealed_tree):
    point = extract_point(sealed_tree)
    assert (point.level, point.sealed) == (2, True)
    assert point.interval.contains(point.point)
    assert point.point == point.interval.midpoint


def test_derive_schedule(half_pair):
    c1 = Fraction(1, 2 ** 14)
    finite = derive_schedule([half_pair], 16, c1)
    assert (finite.m, finite.k) == ((1,), (0,))
    pairs = [half_pair, parse_pair('0,1'), parse_pair('1/3,2/3')]
    countable = derive_schedule(pairs, 16, c1, 'countable', truncation=2)
    assert countable.m == (1, 1, 2)
    assert countable.k == (0, 0, 0)
    assert countable.level(2, 3) == 6
    with pytest.raises(ValidationError):
        derive_schedule(pairs, 16, c1, 'countable', truncation=1)
    with pytest.raises(ValidationError):
        derive_schedule(pairs, 16, c1, 'weekly')
