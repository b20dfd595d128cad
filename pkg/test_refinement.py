"""
加细集合、质量分布与随机对手测试
"""

from fractions import Fraction

import pytest

from badweave.exact_arith import ClosedInterval
from badweave.index_runs import IndexRuns
from badweave.refinement import (
    MeasureTree,
    assign_measure,
    branch_threshold,
    check_mass_bound,
    refine_collections,
    ubiquity_adversary_test,
)
from utils.exceptions import ValidationError


def test_branch_threshold():
    # [2·16^{15/16}] = [26.9]
    assert branch_threshold(16, Fraction(1, 8)) == 26
    assert branch_threshold(16, Fraction(1, 2)) == 16
    # [2·16^{9/16}] = [9.51]
    assert branch_threshold(16, Fraction(7, 8)) == 9


def test_no_dumping_at_desk_epsilon(desk_tree):
    """阈值 ≥ R 时不会倾倒，M_{n,m} 就是 J_n"""
    state = refine_collections(desk_tree)
    assert state.threshold == 26
    for (n, m), runs in state.M.items():
        assert runs == desk_tree.levels[n].runs
    assert state.violations == []
    assert all(state.final(n) == desk_tree.levels[n].runs for n in range(3))


def test_refine_rejects_m_max_beyond_depth(desk_tree):
    with pytest.raises(ValidationError):
        refine_collections(desk_tree, m_max=3)


def test_refinement_nests_with_smaller_threshold(desk_tree):
    state = refine_collections(desk_tree, epsilon=Fraction(7, 8))
    assert state.threshold == 9
    R = desk_tree.params.R
    for n in range(2):
        assert state.final(n + 1).parents(R).issubset(state.final(n))
        assert state.final(n).issubset(desk_tree.levels[n].runs)


def test_level_masses_are_one(desk_tree):
    measure = assign_measure(refine_collections(desk_tree))
    for n in range(measure.depth + 1):
        assert measure.level_mass(n) == 1


def test_weights_split_evenly():
    # 两个根，第一个有 2 个子区间，第二个有 1 个
    levels = [IndexRuns([(0, 2)]), IndexRuns([(0, 2), (4, 5)])]
    measure = MeasureTree(4, Fraction(1, 2), Fraction(1, 8), levels)
    assert measure.weight(0, 0) == Fraction(1, 2)
    assert measure.weight(1, 1) == Fraction(1, 4)
    assert measure.weight(1, 4) == Fraction(1, 2)
    assert measure.weight(1, 3) == 0
    assert measure.level_mass(1) == 1
    level, mass = measure.mass_upper(ClosedInterval(Fraction(1, 16), Fraction(3, 16)))
    assert level == 1
    assert mass == Fraction(1, 2)


def test_mass_bound_holds(desk_tree):
    measure = assign_measure(refine_collections(desk_tree))
    report = check_mass_bound(measure, random_count=300, seed=1)
    assert report.passed
    assert report.windows > 300


def test_mass_bound_rejects_long_windows(desk_tree):
    measure = assign_measure(refine_collections(desk_tree))
    with pytest.raises(ValidationError):
        check_mass_bound(measure, windows=[ClosedInterval(0, 1)])


def test_adversary_takes_every_child_when_threshold_exceeds_R(desk_tree):
    report = ubiquity_adversary_test(desk_tree, trials=20, seed=3, strategy='avoid')
    assert report.choose == 16
    assert report.violations == 0
    assert report.to_dict()['trials'] == 20


def test_adversary_rejects_unknown_strategy(desk_tree):
    with pytest.raises(ValidationError):
        ubiquity_adversary_test(desk_tree, trials=1, strategy='greedy')


@pytest.mark.slow
def test_mass_bound_depth_three(deep_tree):
    measure = assign_measure(refine_collections(deep_tree))
    assert all(measure.level_mass(n) == 1 for n in range(4))
    report = check_mass_bound(measure, random_count=10000, seed=7)
    assert report.passed
