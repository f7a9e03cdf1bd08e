import math

import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given, settings, strategies as st

from leakywire.specfun import (
    EULER_GAMMA, LN2, VARSIGMA, bessel_k0, cos_2pi, k0_square_moment, principal_log, principal_sqrt,
)


def test_constants():
    assert EULER_GAMMA == 0.5772156649015329
    assert VARSIGMA == pytest.approx((LN2 - EULER_GAMMA) / (2 * math.pi), abs=1e-16)
    assert VARSIGMA == pytest.approx(0.0184510737771718, abs=1e-15)


@pytest.mark.parametrize("x, want", [(1.0, 0.42102443824070834), (10.0, 1.7780062316167652e-5)])
def test_k0_spot_values(x, want):
    assert bessel_k0(x) == pytest.approx(want, rel=1e-13)


def test_k0_small_argument_limit():
    x = 1e-8
    assert abs(bessel_k0(x) + math.log(x) - 2 * math.pi * VARSIGMA) <= 1e-7


def test_k0_matches_scipy_across_branches():
    x = np.geomspace(1e-6, 700.0, 2000)
    x = np.concatenate([x, [2.0, 2.0 + 1e-12, 25.0, 25.0 - 1e-12]])
    rel = np.abs(bessel_k0(x) / sp.k0(x) - 1.0)
    assert rel.max() < 1e-12


def test_k0_domain():
    with pytest.raises(ValueError):
        bessel_k0(0.0)
    with pytest.raises(ValueError):
        bessel_k0(-1.0)
    assert bessel_k0(800.0) == 0.0 or bessel_k0(800.0) < 1e-300


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-5, 300.0), st.floats(1e-3, 5.0))
def test_k0_positive_decreasing(x, h):
    a, b = bessel_k0(x), bessel_k0(x + h)
    assert a > 0 and b >= 0 and b < a


def test_principal_sqrt_examples():
    assert principal_sqrt(4) == 2
    assert principal_sqrt(2j) == pytest.approx(1 + 1j, abs=1e-15)
    up, down = principal_sqrt(-1 + 1e-6j), principal_sqrt(-1 - 1e-6j)
    assert up.real > 0 and down.real > 0
    assert up.imag == pytest.approx(1.0, abs=1e-6) and down.imag == pytest.approx(-1.0, abs=1e-6)


def test_principal_sqrt_on_cut_rejected():
    with pytest.raises(ValueError):
        principal_sqrt(-1.0)


def test_principal_log_examples():
    assert principal_log(1) == 0
    assert principal_log(math.e) == pytest.approx(1.0, abs=1e-15)
    assert principal_log(1j) == pytest.approx(1j * math.pi / 2, abs=1e-15)
    with pytest.raises(ValueError):
        principal_log(0.0)


def test_cos_2pi_exact_on_quarters():
    assert cos_2pi(0.25) == 0.0
    assert cos_2pi(0.5) == -1.0
    x = np.linspace(-3, 3, 101)
    assert np.allclose(cos_2pi(x), np.cos(2 * np.pi * x), atol=1e-14)


@pytest.mark.parametrize("a, want", [(1.0, 0.5), (2.0, 0.125), (0.5, 2.0)])
def test_k0_square_moment(a, want):
    assert k0_square_moment(a) == pytest.approx(want, abs=1e-10)
