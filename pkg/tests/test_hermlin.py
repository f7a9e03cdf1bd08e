import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from leakywire.errors import BorderlineEigenvalueError
from leakywire.hermlin import (
    Bracket, HermitianMatrix, brent_root, eigvals_hermitian, inertia, negative_count,
    smallest_singular_value,
)
from leakywire.specfun import VARSIGMA


def random_hermitian(n, seed, complex_=True):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + (1j * rng.normal(size=(n, n)) if complex_ else 0)
    return (a + a.conj().T) / 2


@pytest.mark.parametrize("method", ["lapack", "ql"])
def test_eigvals_small(method):
    w = eigvals_hermitian(HermitianMatrix.from_dense([[2.0, 1.0], [1.0, 2.0]]), method)
    assert np.allclose(w, [1.0, 3.0], atol=1e-14)
    assert np.allclose(eigvals_hermitian(HermitianMatrix.from_dense(np.eye(5)), method), np.ones(5))


@pytest.mark.parametrize("seed", range(4))
def test_eigvals_trace_and_routes_agree(seed):
    a = random_hermitian(8, seed)
    m = HermitianMatrix.from_dense(a)
    w_l, w_q = eigvals_hermitian(m, "lapack"), eigvals_hermitian(m, "ql")
    assert abs(w_l.sum() - np.trace(a).real) <= 1e-10
    assert abs(w_q.sum() - np.trace(a).real) <= 1e-10
    assert np.abs(w_l - w_q).max() <= 1e-10


def test_ql_on_real_and_banded():
    a = random_hermitian(12, 9, complex_=False)
    m = HermitianMatrix.from_dense(a)
    assert np.allclose(eigvals_hermitian(m, "ql"), np.linalg.eigvalsh(a), atol=1e-11)
    t = np.diag(np.arange(6.0)) + np.diag(np.full(5, 0.5), 1) + np.diag(np.full(5, 0.5), -1)
    mb = HermitianMatrix.from_dense(t, bandwidth=1)
    assert mb.bandwidth == 1
    assert np.allclose(eigvals_hermitian(mb, "ql"), eigvals_hermitian(mb), atol=1e-12)


def test_band_storage_roundtrip():
    a = random_hermitian(7, 2)
    m = HermitianMatrix.from_dense(a)
    assert np.abs(m.dense() - a).max() <= 1e-15
    v = np.arange(7.0)
    assert np.allclose(m.matvec(v), a @ v, atol=1e-13)
    assert np.allclose(m.diagonal, np.diag(a).real)
    assert m.norm_bound() >= np.abs(np.linalg.eigvalsh(a)).max() - 1e-12


def test_not_hermitian_rejected():
    with pytest.raises(ValueError):
        HermitianMatrix.from_dense([[1.0, 2.0], [0.0, 1.0]])


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (6, 6), elements=st.floats(-5, 5)), st.floats(-10, 10))
def test_shift_law(a, s):
    a = (a + a.T) / 2
    m = HermitianMatrix.from_dense(a)
    w = eigvals_hermitian(m)
    ws = eigvals_hermitian(m.plus_diagonal(np.full(6, s)))
    assert np.abs(ws - (w + s)).max() <= 1e-10
    assert np.abs(eigvals_hermitian(m.plus_diagonal(np.full(6, s)), "ql") - (w + s)).max() <= 1e-10


def test_negative_count_examples():
    assert negative_count(HermitianMatrix.from_dense(np.diag([-1.0, 0.5, 2.0]))) == 1
    assert negative_count(HermitianMatrix.from_dense(-np.eye(3))) == 3


@pytest.mark.parametrize("seed", range(5))
def test_negative_count_matches_eigvals(seed):
    m = HermitianMatrix.from_dense(random_hermitian(10, seed))
    assert negative_count(m) == int(np.count_nonzero(eigvals_hermitian(m) < 0))


def test_borderline_reported():
    m = HermitianMatrix.from_dense(np.diag([-1.0, 1e-15, 2.0]))
    assert inertia(m) == (1, 1)
    with pytest.raises(BorderlineEigenvalueError):
        negative_count(m, strict=True)
    assert negative_count(m) == 1


def test_smallest_singular_value_examples():
    assert smallest_singular_value(np.diag([3.0, 1e-3])) == pytest.approx(1e-3, rel=1e-12)
    q, _ = np.linalg.qr(np.random.default_rng(0).normal(size=(4, 4)) + 1j)
    assert smallest_singular_value(q) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_smallest_singular_value_gram_oracle(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    assert abs(smallest_singular_value(a) - smallest_singular_value(a, "gram")) <= 1e-9


def test_brent_examples():
    assert brent_root(lambda x: x * x - 2, Bracket(1, 2), 1e-12) == pytest.approx(math.sqrt(2), abs=1e-10)
    assert brent_root(math.cos, Bracket(1, 2), 1e-12) == pytest.approx(math.pi / 2, abs=1e-10)
    f = lambda lam: math.log(-lam) / (4 * math.pi) - VARSIGMA
    want = -4 * math.exp(-2 * 0.5772156649015329)
    assert brent_root(f, Bracket(-2, -0.5), 1e-13) == pytest.approx(want, abs=1e-10)


def test_brent_requires_sign_change():
    with pytest.raises(ValueError):
        brent_root(lambda x: x * x + 1, Bracket(-1, 1), 1e-12)
    with pytest.raises(ValueError):
        Bracket(1.0, 1.0)
