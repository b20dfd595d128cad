"""
精确算术测试：二次无理数、有理指数幂积与 θ 的认证
"""

import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from badweave.exact_arith import (
    ClosedInterval,
    PowerProduct,
    RationalExponentPower,
    QuadraticSurd,
    badness_lower_bound,
    certify_theta,
    cmp_power,
    compare,
    dyadic_floor,
    farey_floor,
    floor_sum_div,
    magnitude_bounds,
    nearest_int_dist,
    parse_theta,
    sign_of_sum,
)
from utils.exceptions import ArithmeticDomainError, ValidationError

SQRT2_MINUS_1 = QuadraticSurd(-1, 1, 1, 2)


def test_surd_folds_to_fraction():
    """b = 0 或根号下为完全平方时得到 Fraction"""
    assert QuadraticSurd.of(2, 0, 1, 5) == Fraction(2)
    assert QuadraticSurd.of(0, 1, 1, 4) == Fraction(2)
    assert QuadraticSurd.of(3, 3, 6, 2) == QuadraticSurd(1, 1, 2, 2)


def test_surd_rejects_mixed_radicands():
    with pytest.raises(ArithmeticDomainError):
        QuadraticSurd(0, 1, 1, 2) + QuadraticSurd(0, 1, 1, 3)


def test_surd_floor_and_sign():
    assert math.floor(QuadraticSurd(0, 1, 1, 2)) == 1
    assert math.floor(QuadraticSurd(0, -1, 1, 2)) == -2
    assert QuadraticSurd(-7, 5, 1, 2).sign() == 1
    assert QuadraticSurd(7, -5, 1, 2).sign() == -1


@given(st.integers(-50, 50), st.integers(-50, 50).filter(bool), st.integers(1, 20))
def test_conjugate_product_is_rational(a, b, c):
    x = QuadraticSurd.of(a, b, c, 2)
    assert x * x.conjugate() == Fraction(a * a - 2 * b * b, c * c)


@given(st.integers(-200, 200), st.integers(-200, 200).filter(bool), st.integers(1, 30))
def test_floor_brackets_value(a, b, c):
    x = QuadraticSurd.of(a, b, c, 3)
    f = math.floor(x)
    assert f <= x < f + 1


def test_parse_theta():
    assert parse_theta('sqrt(2)') == SQRT2_MINUS_1
    assert parse_theta('1+sqrt(2)') == SQRT2_MINUS_1
    assert parse_theta('1/2') == Fraction(1, 2)
    with pytest.raises(ValidationError):
        parse_theta('pi')


def test_certify_theta(theta):
    """√2 − 1 的 badness 常数向下取到分母 ≤ 32 后为 1/3"""
    assert theta.value == SQRT2_MINUS_1
    assert theta.c_theta == Fraction(1, 3)
    assert theta.certificate.period == (2,)


def test_certify_theta_rejects_rationals():
    with pytest.raises(ValidationError, match='badly approximable irrational'):
        certify_theta('1/2')


def test_power_product_compare():
    root2 = PowerProduct.power(2, Fraction(1, 2))
    assert compare(root2, Fraction(141421, 100000)) == 1
    assert compare(root2, Fraction(141422, 100000)) == -1
    assert compare(root2 ** 2, 2) == 0
    assert (root2 ** 2).simplify() == Fraction(2)
    assert compare(PowerProduct.power(8, Fraction(1, 3)), 2) == 0
    assert compare(0, root2) == -1


def test_power_product_rejects_irrational_power_of_surd():
    x = PowerProduct.of(QuadraticSurd(1, 1, 1, 2))
    with pytest.raises(ArithmeticDomainError):
        x ** Fraction(1, 2)


def test_power_product_floor_and_ceil():
    assert PowerProduct.power(10, Fraction(1, 2)).floor() == 3
    assert PowerProduct.power(10, Fraction(1, 2)).ceil() == 4
    assert PowerProduct.power(16, Fraction(1, 4)).ceil() == 2


def test_bounds_bracket_value():
    lo, hi = magnitude_bounds(PowerProduct.power(2, Fraction(1, 2)))
    assert lo * lo <= 2 <= hi * hi


def test_floor_sum_div():
    assert floor_sum_div(Fraction(1, 3), Fraction(1, 6), Fraction(1, 4)) == 2
    # √2 − 1 + 2^{1/2}·(1/4) ≈ 0.7678
    assert floor_sum_div(SQRT2_MINUS_1, PowerProduct.power(2, Fraction(1, 2)) * Fraction(1, 4),
                         Fraction(1, 10)) == 7


def test_sign_of_sum():
    root2 = PowerProduct.power(2, Fraction(1, 2))
    assert sign_of_sum([root2, Fraction(1)], [1, -1]) == 1
    assert sign_of_sum([root2, Fraction(3, 2)], [1, -1]) == -1


def test_nearest_int_dist():
    dist, nearest = nearest_int_dist(SQRT2_MINUS_1, 5)
    assert nearest == 2
    assert dist == QuadraticSurd(-7, 5, 1, 2)
    with pytest.raises(ValidationError):
        nearest_int_dist(SQRT2_MINUS_1, 0)


def test_dyadic_and_farey_floor():
    assert dyadic_floor(Fraction(3, 10)) == Fraction(1, 4)
    assert dyadic_floor(Fraction(1, 4)) == Fraction(1, 4)
    assert farey_floor(Fraction(1, 2), 3) == Fraction(1, 3)
    assert farey_floor(SQRT2_MINUS_1, 5) == Fraction(2, 5)


def test_closed_interval():
    interval = ClosedInterval(Fraction(1, 4), Fraction(3, 4))
    assert interval.length == Fraction(1, 2)
    assert interval.midpoint == Fraction(1, 2)
    assert interval.contains(SQRT2_MINUS_1)
    assert interval.to_dict() == {'lo_num': 1, 'lo_den': 4, 'hi_num': 3, 'hi_den': 4}
    with pytest.raises(ValidationError):
        ClosedInterval(Fraction(1), Fraction(0))


def test_cmp_power():
    assert cmp_power(RationalExponentPower(2, Fraction(1, 2)), RationalExponentPower(4, Fraction(1, 4))) == 0
    assert cmp_power(RationalExponentPower(3, Fraction(1, 2)), RationalExponentPower(2, Fraction(1, 2))) == 1
    # 16^{15/16} < 14 < 16^{19/20}
    assert cmp_power(RationalExponentPower(16, Fraction(15, 16)), PowerProduct.of(14)) == -1
    assert cmp_power(RationalExponentPower(16, Fraction(19, 20)), PowerProduct.of(14)) == 1
    with pytest.raises(ArithmeticDomainError):
        RationalExponentPower(0, 1)


def test_badness_lower_bound():
    certificate = badness_lower_bound(SQRT2_MINUS_1, Q=1000)
    assert certificate.c == Fraction(1, 3)
    assert certificate.period == (2,)
    assert certificate.a_max == 2
    golden = badness_lower_bound(QuadraticSurd(-1, 1, 2, 5), Q=200)
    assert golden.period == (1,)
    assert 0 < golden.c < Fraction(2, 5)
    with pytest.raises(ValidationError):
        badness_lower_bound(Fraction(1, 2))
    with pytest.raises(ValidationError):
        badness_lower_bound(SQRT2_MINUS_1, i=0)
