"""
测试共用夹具：认证后的 θ = √2 − 1、桌面规模参数（R = 16，权重对 (1/2,1/2)）和构造树
"""

import pytest

from badweave.construction import derive_params, run_construction
from badweave.exact_arith import certify_theta
from badweave.lines import parse_pair


@pytest.fixture(scope='session')
def theta():
    return certify_theta('sqrt(2)')


@pytest.fixture(scope='session')
def half_pair():
    return parse_pair('1/2,1/2')


@pytest.fixture(scope='session')
def desk_params(theta):
    return derive_params(['1/2,1/2'], theta, 16)


@pytest.fixture(scope='session')
def desk_tree(desk_params):
    return run_construction(desk_params, 2)


@pytest.fixture(scope='session')
def sealed_tree(desk_params):
    return run_construction(desk_params, 2, seal=True)


@pytest.fixture(scope='session')
def deep_tree(desk_params):
    # 仅供 slow 测试使用
    return run_construction(desk_params, 3)
