import math

import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given, strategies as st

from ura_sim.special import gammainc_lower, gammainc_upper


def erlang_cdf(k, x):
    return 1.0 - math.exp(-x) * math.fsum(x**i / math.factorial(i) for i in range(k))


@pytest.mark.parametrize("k", [1, 2, 3, 4, 7, 12])
@pytest.mark.parametrize("x", [1e-4, 0.1, 1.0, 3.0, 10.0, 40.0])
def test_integer_shape_matches_erlang(k, x):
    assert gammainc_lower(k, x) == pytest.approx(erlang_cdf(k, x), rel=1e-12, abs=1e-15)


def test_erlang_4_at_1():
    expected = 1 - math.exp(-1) * (1 + 1 + 0.5 + 1 / 6)
    assert abs(gammainc_lower(4, 1.0) - expected) < 1e-15
    assert gammainc_lower(4, 1.0) == pytest.approx(0.0189882, abs=1e-7)


@given(st.floats(0.05, 200), st.floats(0, 500))
def test_matches_scipy(s, x):
    assert gammainc_lower(s, x) == pytest.approx(sp.gammainc(s, x), rel=1e-11, abs=1e-14)
    assert gammainc_upper(s, x) == pytest.approx(sp.gammaincc(s, x), rel=1e-10, abs=1e-14)


def test_edges():
    assert gammainc_lower(3, 0.0) == 0.0
    assert gammainc_lower(3, math.inf) == 1.0
    assert gammainc_upper(3, 0.0) == 1.0
    with pytest.raises(ValueError):
        gammainc_lower(0, 1.0)
    with pytest.raises(ValueError):
        gammainc_lower(1, -1.0)


def test_monotone_in_x():
    xs = np.logspace(-6, 3, 400)
    vals = [gammainc_lower(4, x) for x in xs]
    assert np.all(np.diff(vals) >= 0)
