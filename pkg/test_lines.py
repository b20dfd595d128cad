"""
直线族测试：规范化、高度、Δ 区间、族编号与枚举
"""

import math
from fractions import Fraction

import pytest

from badweave.exact_arith import ClosedInterval, PowerProduct, QuadraticSurd, compare
from badweave.lines import (
    GENERIC,
    X_ONLY,
    Y_ONLY,
    FamilyIndex,
    Line,
    Pair,
    classify,
    delta_interval,
    enumerate_lines,
    enumerate_rationals,
    height,
    line_record,
    normalize,
    parse_pair,
    rational_delta,
)
from utils.exceptions import ValidationError


def _brute_force_lines(pair, R, n, window, c, theta):
    """按定义逐个检查 (A, B, C)：高度在 [R^{n−1}, R^n) 且 Δ 与窗口相交"""
    found = []
    for B in range(1, 8):
        for A in range(-20, 21):
            H = height((A, B), pair)
            if compare(H, Fraction(R) ** (n - 1)) < 0 or compare(H, Fraction(R) ** n) >= 0:
                continue
            for C in range(-30, 31):
                if math.gcd(A, B, C) != 1:
                    continue
                line = Line(A, B, C)
                if delta_interval(line, pair, c, theta).meets(window.lo, window.hi):
                    found.append(line)
    return sorted(found, key=lambda line: line.sort_key)


def test_parse_pair():
    pair = parse_pair('1/3, 2/3')
    assert pair == Pair(Fraction(1, 3), Fraction(2, 3))
    assert pair.kind == GENERIC
    assert str(pair) == '1/3,2/3'
    assert parse_pair('1,0').kind == X_ONLY
    assert parse_pair('0,1').kind == Y_ONLY


@pytest.mark.parametrize('text', ['1/2,1/3', '1/2', 'a,b', '-1/2,3/2'])
def test_parse_pair_rejects(text):
    with pytest.raises(ValidationError):
        parse_pair(text)


def test_pair_constants(half_pair):
    assert half_pair.alpha == Fraction(1, 16)
    assert half_pair.lam == 6
    with pytest.raises(ValidationError):
        parse_pair('1,0').lam


def test_normalize():
    assert normalize(2, -4, 6) == Line(-1, 2, -3)
    assert normalize(3, 3, 0) == Line(1, 1, 0)
    with pytest.raises(ValidationError, match='vertical line'):
        normalize(1, 0, 1)
    with pytest.raises(ValidationError):
        Line(2, 4, 6)


def test_height(half_pair):
    assert compare(height(Line(-2, 1, 1), half_pair), 4) == 0
    assert compare(height((1, 2), half_pair), 8) == 0
    assert compare(height((0, 3), half_pair), 27) == 0
    third = parse_pair('1/3,2/3')
    # 2·max(1, 2^{3/2}) = 2^{5/2}
    assert compare(height((1, 2), third), PowerProduct.power(2, Fraction(5, 2))) == 0
    with pytest.raises(ValidationError):
        height((1, 1), parse_pair('1,0'))


def test_classify(half_pair):
    assert classify(Line(-2, 1, 1), half_pair, 16, 1) == FamilyIndex(1, 0, 2)
    assert classify(Line(0, 1, 0), half_pair, 16, 1) == FamilyIndex(1, 0, 0)
    assert classify(Line(-2, 1, 1), half_pair, 16, 2) is None
    with pytest.raises(ValidationError):
        classify(Line(-2, 1, 1), half_pair, 16, 0)


def test_delta_interval(half_pair, theta):
    delta = delta_interval(Line(-2, 1, 1), half_pair, Fraction(1, 64), theta)
    assert delta.center == QuadraticSurd(3, -2, 1, 2)
    assert delta.halfwidth == Fraction(1, 256)
    assert delta.index_range(Fraction(1, 100)) == (16, 17)
    assert delta.meets(Fraction(17, 100), Fraction(18, 100))
    assert not delta.meets(Fraction(18, 100), Fraction(19, 100))


def test_rational_delta():
    delta = rational_delta(Fraction(1, 3), Fraction(1, 8))
    assert delta.halfwidth == Fraction(1, 72)
    assert delta.contains(Fraction(1, 3) + Fraction(1, 72))
    assert not delta.contains(Fraction(1, 3) + Fraction(1, 71))


@pytest.mark.parametrize('n, window, c', [
    (1, ClosedInterval(0, 1), Fraction(0)),
    (2, ClosedInterval(Fraction(1, 4), Fraction(1, 2)), Fraction(0)),
    (2, ClosedInterval(Fraction(1, 4), Fraction(1, 2)), Fraction(1, 64)),
])
def test_enumerate_lines_matches_brute_force(half_pair, theta, n, window, c):
    lines = enumerate_lines(half_pair, 16, n, window, c, theta)
    assert lines == _brute_force_lines(half_pair, 16, n, window, c, theta)
    assert all(classify(line, half_pair, 16, n) is not None for line in lines)


def test_enumerate_lines_parallel_matches_serial(half_pair, theta):
    window = ClosedInterval(0, 1)
    serial = enumerate_lines(half_pair, 16, 2, window, Fraction(1, 64), theta)
    parallel = enumerate_lines(half_pair, 16, 2, window, Fraction(1, 64), theta, workers=2)
    assert sorted(parallel, key=lambda line: line.sort_key) == serial


def test_enumerate_lines_rejects_bad_input(theta):
    window = ClosedInterval(0, 1)
    with pytest.raises(ValidationError):
        enumerate_lines(parse_pair('0,1'), 16, 1, window, 0, theta)
    with pytest.raises(ValidationError):
        enumerate_lines(parse_pair('1/2,1/2'), 16, 1, window, Fraction(3, 4), theta)
    assert enumerate_lines(parse_pair('1/2,1/2'), 16, 0, window, 0, theta) == []


def test_enumerate_rationals():
    points = enumerate_rationals(16, 1, ClosedInterval(0, 1), Fraction(0))
    assert points == [Fraction(0), Fraction(1), Fraction(1, 2), Fraction(1, 3), Fraction(2, 3)]


def test_line_record(half_pair):
    record = line_record(Line(-2, 1, 1), half_pair, R=16)
    assert record['H_exact'] is True
    assert (record['H_num'], record['H_den']) == (4, 1)
    assert (record['n'], record['l'], record['k']) == (1, 0, 2)
