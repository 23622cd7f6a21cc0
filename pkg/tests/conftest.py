import numpy as np
import pytest

from ctlp.coeff import CLPInstance, PiecewiseFn1D, PiecewiseFn2D, PolyPiece
from ctlp.instances import volterra


def step1d(bps, values):
    """Piecewise-constant function with the given breakpoints and levels."""
    return PiecewiseFn1D(tuple(bps), tuple(PolyPiece((v,)) for v in values))


def scalar_instance(a=1.0, c=1.0, B=1.0, K=1.0, T=1.0):
    f = PiecewiseFn1D.constant
    return CLPInstance(T, 1, 1, (f(T, a),), (f(T, c),), ((f(T, B),),), ((PiecewiseFn2D.constant(T, K),),))


@pytest.fixture
def vol():
    return volterra(1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
