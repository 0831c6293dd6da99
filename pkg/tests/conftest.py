import numpy as np
import pytest

from sbpgreen.operators import Grid, build_first, build_second


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def second_op(variant, n, ell=1.0):
    return build_second(variant, Grid(n, ell))


def first_op(variant, n, ell=1.0):
    return build_first(variant, Grid(n, ell))
