"""
对偶/同时逼近检查与转换定理测试
"""

from fractions import Fraction

import pytest

from badweave.exact_arith import QuadraticSurd, compare
from badweave.transference import (
    TransferenceProblem,
    bound_products,
    check_dual,
    check_simultaneous,
    dual_constant,
    dual_from_simultaneous,
    find_dual_witness,
    find_simultaneous_witness,
    round_trip_sweep,
    simultaneous_constant,
    simultaneous_constant_from_dual,
    simultaneous_from_dual,
    transfer_bounds,
    transfer_witness_search,
)
from badweave.lines import parse_pair
from utils.exceptions import ValidationError

C = Fraction(1, 100)
SEVENTH = Fraction(1, 7)


def _one_dimensional(primal=(3,)):
    # ‖q/3‖ ≤ 1/10，|q| ≤ 3
    return TransferenceProblem(((Fraction(1, 3),),), (Fraction(1, 10),), (Fraction(3),), primal)


def test_check_simultaneous_fails_at_origin(half_pair):
    result = check_simultaneous(0, 0, half_pair, C, 1)
    assert not result.passed
    assert result.witness['q'] == 1


def test_check_simultaneous_fails_at_rational_point(half_pair):
    result = check_simultaneous(SEVENTH, SEVENTH, half_pair, C, 10)
    assert not result.passed
    assert result.witness['q'] <= 7
    assert find_simultaneous_witness(SEVENTH, SEVENTH, half_pair, C, 10) == 7


def test_check_simultaneous_rejects(half_pair):
    with pytest.raises(ValidationError):
        check_simultaneous(0, 0, half_pair, 0, 5)
    with pytest.raises(ValidationError):
        check_simultaneous(0, 0, half_pair, C, 0)


def test_check_dual_fails_at_origin(half_pair):
    result = check_dual(0, 0, half_pair, C, 10)
    assert not result.passed
    assert result.witness['B'] == 0 and abs(result.witness['A']) == 1


def test_check_dual_surd_point(half_pair):
    theta = QuadraticSurd(-1, 1, 1, 2)
    # A = B 时 Aθ − Bθ = 0
    result = check_dual(theta, theta, half_pair, C, 10)
    assert not result.passed
    assert result.witness['A'] == result.witness['B']


def test_check_dual_rejects(half_pair):
    with pytest.raises(ValidationError):
        check_dual(0, 0, parse_pair('1,0'), C, 10)
    with pytest.raises(ValidationError):
        check_dual(0, 0, half_pair, C, 10, bound='box')


def test_constants(half_pair):
    assert compare(dual_constant(C, half_pair), Fraction(8, 25)) == 0
    assert compare(simultaneous_constant(Fraction(1, 4), half_pair), 4) == 0
    assert compare(simultaneous_constant_from_dual(1, half_pair), Fraction(1, 1024)) == 0


def test_transfer_bounds_one_dimensional():
    problem = _one_dimensional()
    bounds = transfer_bounds(problem)
    assert compare(bounds.D[0], Fraction(1, 10)) == 0
    assert compare(bounds.U[0], 3) == 0
    assert all(compare(v, Fraction(3, 10)) == 0 for v in bound_products(problem, bounds))
    outcome = transfer_witness_search(problem, bounds)
    assert outcome.status == 'found'
    assert outcome.u == (3,)
    assert outcome.nodes == 3


def test_transfer_search_respects_node_cap():
    problem = _one_dimensional()
    outcome = transfer_witness_search(problem, transfer_bounds(problem), node_cap=1)
    assert outcome.status == 'not_searched'
    assert outcome.u is None


def test_transfer_rejects():
    with pytest.raises(ValidationError):
        transfer_bounds(TransferenceProblem(((SEVENTH,),), (Fraction(2),), (Fraction(1),)))
    problem = _one_dimensional(primal=(1,))
    with pytest.raises(ValidationError):
        transfer_witness_search(problem, transfer_bounds(problem))
    with pytest.raises(ValidationError):
        TransferenceProblem(((SEVENTH,), (SEVENTH, SEVENTH)), (C, C), (Fraction(1),))


def test_dual_from_simultaneous(half_pair):
    dual = dual_from_simultaneous(7, C, half_pair, SEVENTH, SEVENTH)
    assert dual.status == 'found'
    assert dual.u == (1, -1)
    record = dual.to_dict()
    assert (record['A'], record['B']) == (1, 1)
    with pytest.raises(ValidationError):
        dual_from_simultaneous(3, C, half_pair, SEVENTH, SEVENTH)
    with pytest.raises(ValidationError):
        dual_from_simultaneous(7, Fraction(1, 2), half_pair, SEVENTH, SEVENTH)


def test_simultaneous_from_dual(half_pair):
    simul = simultaneous_from_dual((1, -1), C, half_pair, SEVENTH, SEVENTH)
    assert simul.status == 'found'
    assert simul.q is not None
    with pytest.raises(ValidationError):
        simultaneous_from_dual((0, 0), C, half_pair, SEVENTH, SEVENTH)
    with pytest.raises(ValidationError):
        simultaneous_from_dual((1, 0), C, half_pair, SEVENTH, SEVENTH)


def test_round_trip_sweep_small(half_pair):
    summary = round_trip_sweep(half_pair, C, trials=30, denominator=10, seed=2)
    assert summary['points'] == 30
    assert summary['dual_found'] > 0
    assert summary['simultaneous_found'] > 0


@pytest.mark.slow
def test_round_trip_sweep_unequal_weights():
    summary = round_trip_sweep(parse_pair('1/3,2/3'), C, trials=200, denominator=20, seed=4)
    assert summary['points'] == 200


def test_find_dual_witness(half_pair):
    assert find_dual_witness(0, 0, half_pair, C, 4) in {(1, 0), (-1, 0)}
    # (a,b) = (1,−1) 使 ‖x − y‖ = 0，最大项为 1
    assert find_dual_witness(SEVENTH, SEVENTH, half_pair, C, 4) == (1, -1)
