"""
几何测试：交点、格 Λ(P)、共点性、鸽笼直线、图形 F、锥与 L₀ 搜索、计数

多数用例围绕 P = (2/5, 1/5)：它是 L(−2,1,1) 与 L(3,1,−1) 的交点，
|5θ − 2| = 5√2 − 7，所以 τ = 8、k = 0、R = 16 时 c₂ = 7 + 5√2。
"""

import math
from fractions import Fraction

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from badweave.exact_arith import ClosedInterval, PowerProduct, QuadraticSurd, compare
from badweave.geometry import (
    COUNT_HEADER,
    Line,
    RationalPoint,
    cone_membership,
    cone_spec,
    concurrency_check,
    concurrency_sweep,
    count_removed_oracle,
    count_table,
    counting_context,
    delta_membership,
    figure_clouds,
    figure_lattice_points,
    figure_membership,
    figure_spec,
    find_L0,
    intersect,
    lattice_plane,
    lemma2_check,
    lemma2_sweep,
    pigeonhole_line,
    pigeonhole_sweep,
    proposition_conditions,
    scan_type2,
)
from badweave.lines import height, parse_pair
from utils.exceptions import ValidationError

P = RationalPoint(2, 1, 5)
FIRST = Line(-2, 1, 1)
SECOND = Line(3, 1, -1)


def test_intersect():
    point = intersect(FIRST, SECOND)
    assert point == P
    assert point.t == -1
    assert point.on_line(FIRST) and point.on_line(SECOND)
    assert intersect(Line(1, 1, 0), Line(2, 1, 0)) == RationalPoint(0, 0, 1)
    assert intersect(Line(1, 1, 0), Line(1, 1, 1)) is None
    with pytest.raises(ValidationError):
        intersect(FIRST, FIRST)


@given(st.integers(-9, 9), st.integers(1, 9), st.integers(-9, 9),
       st.integers(-9, 9), st.integers(1, 9), st.integers(-9, 9))
def test_intersection_lies_on_both_lines(A1, B1, C1, A2, B2, C2):
    assume(math.gcd(A1, B1, C1) == 1 and math.gcd(A2, B2, C2) == 1)
    first, second = Line(A1, B1, C1), Line(A2, B2, C2)
    assume(first != second)
    point = intersect(first, second)
    if point is None:
        assert A1 * B2 == A2 * B1
        return
    assert point.on_line(first) and point.on_line(second)
    assert point.t * point.q == A1 * B2 - A2 * B1


def test_rational_point():
    assert RationalPoint.from_coordinates(Fraction(2, 5), Fraction(1, 5)) == P
    assert (P.x, P.y) == (Fraction(2, 5), Fraction(1, 5))
    assert P.theta_gap(QuadraticSurd(-1, 1, 1, 2)) == QuadraticSurd(-7, 5, 1, 2)
    with pytest.raises(ValidationError):
        RationalPoint(2, 2, 4)
    with pytest.raises(ValidationError):
        RationalPoint(1, 1, 0)


def test_lattice_plane():
    lattice = lattice_plane(P)
    assert (lattice.g, lattice.a_shift) == (1, 3)
    assert lattice.basis == ((5, 0), (3, 1))
    assert lattice.determinant == 5
    assert list(lattice.row(1, 5)) == [-2, 3]
    assert list(lattice.row(2, 5)) == [-4, 1]
    assert lattice.C_for(1, 2) == 0
    assert lattice.C_for(-2, 1) == 1
    with pytest.raises(ValidationError):
        lattice.C_for(1, 1)


@given(st.integers(-20, 20), st.integers(-20, 20), st.integers(1, 30))
def test_lattice_band_matches_brute_force(p, r, q):
    assume(math.gcd(p, r, q) == 1)
    lattice = lattice_plane(RationalPoint(p, r, q))
    assert lattice.determinant == q
    found = set(lattice.points_in_band(10, lambda B: 20))
    expected = {(A, B) for B in range(1, 11) for A in range(-20, 21) if (A * p - B * r) % q == 0}
    assert found == expected


def test_concurrency_check_verdicts(half_pair, theta):
    everything = concurrency_check(half_pair, 16, 1, 0, ClosedInterval(0, 1), theta)
    assert everything.status == 'violation'
    assert everything.witness['reason'] == 'triangle'

    single = concurrency_check(half_pair, 16, 1, 0, ClosedInterval(Fraction(17, 100), Fraction(18, 100)), theta)
    assert single.status == 'concurrent'
    assert single.lines == [FIRST]

    empty = concurrency_check(half_pair, 16, 1, 0, ClosedInterval(Fraction(95, 100), Fraction(96, 100)), theta)
    assert empty.status == 'empty'


def test_concurrency_check_window_length(half_pair, theta, desk_params):
    with pytest.raises(ValidationError):
        concurrency_check(half_pair, 16, 1, 0, ClosedInterval(0, 1), theta, desk_params.c1)


@pytest.mark.slow
def test_concurrency_sweep(half_pair, theta, desk_params):
    summary = concurrency_sweep(half_pair, theta, 16, desk_params.c1, n_max=4, l_max=1, trials=20, seed=11)
    assert summary['violations'] == []
    assert summary['checked'] == 20 * 2 * 4


def test_pigeonhole_line(half_pair, theta):
    line = pigeonhole_line(P, theta, half_pair)
    assert line == FIRST
    assert P.on_line(line)


def test_pigeonhole_line_integer_point(half_pair, theta):
    assert pigeonhole_line(RationalPoint(0, 3, 1), theta.value, half_pair, Fraction(1, 2)) == Line(0, 1, 3)


def test_pigeonhole_line_preconditions(half_pair, theta):
    with pytest.raises(ValidationError):
        pigeonhole_line(RationalPoint(0, 0, 1), theta, half_pair)
    with pytest.raises(ValidationError):
        pigeonhole_line(P, theta.value, half_pair)


def test_pigeonhole_sweep_small(half_pair, theta):
    summary = pigeonhole_sweep(theta, half_pair, 60)
    assert summary['cases'] >= 2
    assert summary['points'] >= 2 + 5


@pytest.mark.slow
@pytest.mark.parametrize('text', ['1/2,1/2', '1/3,2/3'])
def test_pigeonhole_sweep_full(theta, text):
    summary = pigeonhole_sweep(theta, parse_pair(text), 500)
    assert summary['points'] > 0


def test_lemma2_check(half_pair, theta):
    window = ClosedInterval(0, 1)
    assert lemma2_check(FIRST, SECOND, None, window, half_pair, 16, 1, 3, 16, theta) is True
    assert lemma2_check(FIRST, SECOND, P, window, half_pair, 16, 1, 3, 16, theta) is True
    # 窗口长于 τR^{−n}
    assert lemma2_check(FIRST, SECOND, None, window, half_pair, 16, 1, 3, 1, theta) is None
    # 高度 9 不低于 2^{k+1}R^{n−1} = 8
    assert lemma2_check(FIRST, SECOND, None, window, half_pair, 16, 1, 2, 16, theta) is None
    assert lemma2_check(Line(1, 1, 0), Line(1, 1, 1), None, window, half_pair, 16, 1, 3, 16, theta) is None
    with pytest.raises(ValidationError):
        lemma2_check(FIRST, SECOND, RationalPoint(1, 1, 5), window, half_pair, 16, 1, 3, 16, theta)


def test_lemma2_sweep(half_pair, theta):
    summary = lemma2_sweep(half_pair, theta, 16, n_max=2, trials=20, seed=5)
    assert summary['violations'] == []


def test_figure_spec(half_pair, theta):
    spec = figure_spec(P, theta, half_pair, 16, 0, 8)
    assert compare(spec.c2, QuadraticSurd(7, 5, 1, 2)) == 0
    # δ = √(5/2)/c₂ ≈ 0.1124
    assert compare(spec.delta, Fraction(11, 100)) > 0
    assert compare(spec.delta, Fraction(12, 100)) < 0
    assert spec.c3 is None
    assert compare(figure_spec(P, theta, half_pair, 16, 0, 8, l=1).c3, Fraction(1, 16 ** 17)) == 0
    with pytest.raises(ValidationError):
        figure_spec(P, theta, parse_pair('0,1'), 16, 0, 8)


def test_figure_lattice_points_match_brute_force(half_pair, theta):
    """F∩Λ：|A| < c₂^i B^i 且 0 < B < c₂^{j/i}，i = j = 1/2 时即 A² < c₂B、B < c₂"""
    spec = figure_spec(P, theta, half_pair, 16, 0, 8)
    points = figure_lattice_points(spec)
    expected = [(A, B) for B in range(1, 21) for A in range(-60, 61)
                if (2 * A - B) % 5 == 0 and compare(B, spec.c2) < 0 and compare(A * A, spec.c2 * B) < 0]
    assert points == expected
    assert points[:2] == [(-2, 1), (3, 1)]
    assert all(figure_membership(point, spec) for point in points)


def test_figure_l_is_inside_figure(half_pair, theta):
    spec = figure_spec(P, theta, half_pair, 16, 0, 8, l=1)
    assert set(figure_lattice_points(spec, 'F_l')) <= set(figure_lattice_points(spec, 'F'))
    with pytest.raises(ValidationError):
        figure_membership((1, 1), spec, 'G')


def test_cone_matches_direct_delta_check(half_pair, theta):
    """Y − Y₀ = (A/B − A₀/B₀)(θ − p/q)，所以锥判定与 Δ(L₀) 直接判定逐点一致"""
    c = Fraction(1, 64)
    lattice = lattice_plane(P)
    cone = cone_spec(FIRST, P, theta, half_pair, c)
    verdicts = []
    for A, B in lattice.points_in_band(14, lambda B: 30):
        inside = cone_membership((A, B), cone)
        assert inside == delta_membership((A, B), FIRST, lattice, theta, half_pair, c)
        verdicts.append(inside)
    assert any(verdicts) and not all(verdicts)
    assert cone_membership((-4, 2), cone)
    with pytest.raises(ValidationError):
        cone_spec(Line(0, 1, 0), P, theta, half_pair, c)


def test_proposition_conditions(half_pair, theta):
    spec = figure_spec(P, theta, half_pair, 16, 0, 8)
    conditions = proposition_conditions(spec, Fraction(1, 2))
    assert conditions == {'tau_large': True, 'delta_small': False}
    with pytest.raises(ValidationError):
        proposition_conditions(spec, Fraction(0))


def test_find_L0_not_applicable_for_small_q(half_pair, theta):
    result = find_L0(P, 8, half_pair, 16, 1, 0, Fraction(1, 2), theta, [FIRST, SECOND])
    assert result.status == 'not_applicable'
    assert result.conditions['delta_small'] is False
    assert not result.certified

    single = find_L0(P, 8, half_pair, 16, 1, 0, Fraction(1, 2), theta, [FIRST])
    assert single.conditions == {'lines': False}

    with pytest.raises(ValidationError):
        find_L0(P, 8, half_pair, 16, 1, 0, Fraction(1, 2), theta, [FIRST, Line(0, 1, 0)])


# c = 21、k = 3、τ = cR/2^k = 42 时 c₂ = 42(7 + 5√2)，δ ≈ 0.00268 ≤ c₄ ≈ 0.00276；
# σδq^j ≈ 0.135 < 1，落在 Case B，鸽笼直线就是 L(−2,1,1)
def _find_at_p(half_pair, theta):
    return find_L0(P, 42, half_pair, 16, 1, 3, Fraction(21), theta, [FIRST, SECOND])


@pytest.mark.slow
def test_find_L0_case_b_certifies_pigeonhole_line(half_pair, theta):
    result = _find_at_p(half_pair, theta)
    assert all(result.conditions.values())
    assert result.status == 'certified' and result.certified
    assert (result.case, result.route) == ('B', 'case_b')
    assert result.line == FIRST
    assert result.exceptional == [] and result.rejected == []
    assert compare(height(result.line, half_pair), 16) < 0
    assert result.points > 1000
    assert result.to_dict()['route'] == 'case_b'


@pytest.mark.slow
def test_find_L0_reports_fallback_route(half_pair, theta, mocker):
    mocker.patch('badweave.geometry.pigeonhole_line', side_effect=ValidationError('不可用'))
    result = _find_at_p(half_pair, theta)
    assert result.status == 'fallback'
    assert not result.certified and result.found
    assert result.route == 'fallback'
    assert result.line == FIRST


def test_counting_context(half_pair):
    c1, epsilon = Fraction(1, 2 ** 14), Fraction(1, 8)
    case_a = counting_context(half_pair, 16, 1, 0, 0, c1, epsilon)
    assert case_a.case == 'A'
    assert case_a.d == 1
    # τ = 4c₁R^{ε−α}
    assert compare(case_a.tau, PowerProduct.of(Fraction(1, 4096), [(16, Fraction(1, 16))])) == 0
    lo, hi = case_a.K_bounds
    assert 28 < lo and hi < 29

    case_b = counting_context(half_pair, 16, 1, 0, 4, c1, epsilon)
    assert case_b.case == 'B'
    # ⌈11.31/3.68⌉
    assert case_b.d == 4


def test_count_table(desk_tree):
    assert count_table(desk_tree, 0, 0) == []
    rows = count_table(desk_tree, 0, 1)
    assert rows
    for row in rows:
        assert set(row) == set(COUNT_HEADER)
        assert (row['n'], row['l']) == (1, 0)
        assert 0 <= row['count'] <= 16
        assert row['type1'] + row['type2'] == row['d']


def test_count_removed_oracle_rejects(desk_tree):
    with pytest.raises(ValidationError):
        count_removed_oracle(desk_tree, 0, 0, 0, 0, 0)
    with pytest.raises(ValidationError):
        count_removed_oracle(desk_tree, 3, 1, 0, 0, 0)


def test_type2_scan_records(desk_tree):
    records = scan_type2(desk_tree, 0, 1, run_find=False)
    for record in records:
        assert record['case'] in ('A', 'B')
        assert len(record['lines']) >= 2
        assert record['lemma2'] is not False
    assert scan_type2(desk_tree, 0, 0) == []
    assert len(figure_clouds(desk_tree, 0, 1)) == len(records)


def test_type2_scan_runs_L0_search(desk_tree, half_pair):
    for record in scan_type2(desk_tree, 0, 1):
        found = record['L0']
        if not all(record['conditions'].values()):
            assert found is None
            continue
        if found['status'] == 'not_applicable':
            continue
        assert found['status'] == 'certified'
        assert found['route'] in ('case_a', 'case_b')
        line = Line(**found['line'])
        assert all(isinstance(value, int) for value in found['line'].values())
        assert compare(height(line, half_pair), 16 ** record['n']) < 0
