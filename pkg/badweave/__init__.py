"""
badweave
在竖直线 x = θ 上构造同时属于多个加权 Bad(i,j) 的点，并给出可独立复核的证书
"""

from badweave.construction import build_certificate, derive_params, run_construction, verify_certificate
from badweave.exact_arith import PowerProduct, QuadraticSurd, certify_theta, compare
from badweave.lines import Line, Pair, enumerate_lines, parse_pair

__version__ = "0.1.0"

__all__ = [
    'Line',
    'Pair',
    'PowerProduct',
    'QuadraticSurd',
    'build_certificate',
    'certify_theta',
    'compare',
    'derive_params',
    'enumerate_lines',
    'parse_pair',
    'run_construction',
    'verify_certificate',
]
