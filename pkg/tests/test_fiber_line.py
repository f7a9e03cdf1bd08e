import math

import numpy as np
import pytest

from leakywire import coupling as cp
from leakywire.errors import ThresholdError
from leakywire.fiber_line import (
    ComplexifiedQuery, LineFiberQuery, alpha_line, assemble_A_line, check_truncation,
    complexified_bound_probe, counting_function, diagonal_floor, discrete_spectrum,
    embedded_kernel_search, gauge_k, hs_norm_identity, reconstruct_field, xi,
)
from leakywire.specfun import EULER_GAMMA, VARSIGMA, bessel_k0

XI0 = -4 * math.exp(-2 * EULER_GAMMA)


def test_xi_values():
    assert xi(0.0) == pytest.approx(XI0, abs=1e-15)
    assert xi(0.0) == pytest.approx(-1.2609470067, abs=1e-9)
    assert abs(xi(10.0)) < 1e-20 and xi(10.0) < 0
    assert xi(0.1) == pytest.approx(-0.3588, abs=1e-4)
    for a in (-0.2, 0.0, 0.3):
        assert xi(a + 0.1) == pytest.approx(xi(a) * math.exp(-0.4 * math.pi), rel=1e-14)


def test_xi_is_root_of_alpha0():
    assert alpha_line(0, xi(0.0), 0.0) == pytest.approx(0.0, abs=1e-15)


def test_alpha_line_examples():
    # (n+k)^2 - lam = 1
    assert alpha_line(2, 3.0, 0.0) == pytest.approx(-VARSIGMA, abs=1e-16)
    for a in (-0.1, 0.05, 0.2):
        for k in (0.0, 0.3):
            assert alpha_line(0, xi(a) + k * k, k) == pytest.approx(-a, abs=1e-13)
    with pytest.raises(ThresholdError):
        alpha_line(1, 1.0, 0.0)


def test_gauge():
    assert gauge_k(0.5) == -0.5
    with pytest.raises(ValueError):
        gauge_k(0.6)


def test_assemble_constant_and_cosine():
    q = LineFiberQuery(0.0, cp.constant(0.2), N=4)
    a = assemble_A_line(q, -1.0).dense()
    assert np.allclose(a, np.diag(alpha_line(q.modes, -1.0, 0.0) + 0.2), atol=1e-15)
    assert a[4, 4] == pytest.approx(-VARSIGMA + 0.2, abs=1e-15)
    q = LineFiberQuery(0.1, cp.trigonometric(0.0, [0.3]), N=4)
    a = assemble_A_line(q, -1.0).dense()
    assert np.allclose(np.diag(a, 1), 0.15) and np.allclose(np.diag(a), alpha_line(q.modes, -1.0, 0.1))


def test_assemble_rejects_threshold():
    q = LineFiberQuery(0.0, cp.constant(0.0), N=4)
    with pytest.raises(ThresholdError):
        assemble_A_line(q, 1.0 + 1e-8)


@pytest.mark.parametrize("lam, want", [(-2.0, 0), (-0.5, 1), (-0.01, 3)])
def test_counting_function(lam, want):
    assert counting_function(LineFiberQuery(0.0, cp.constant(0.0), N=64), lam) == want


def test_constant_spectrum_and_multiplicity():
    ms = [m for m in discrete_spectrum(LineFiberQuery(0.0, cp.constant(0.0), N=64)) if not m.near_threshold]
    assert [m.multiplicity for m in ms] == [1, 2]
    assert ms[0].lam == pytest.approx(XI0, abs=1e-8)
    assert ms[1].lam == pytest.approx(XI0 + 1, abs=1e-8)
    assert ms[0].coeffs.shape[1] == 1 and ms[1].coeffs.shape[1] == 2
    for m in ms:
        assert np.allclose(np.linalg.norm(m.coeffs, axis=0), 1.0, atol=1e-12)
        assert m.residual < 1e-8


def test_single_mode_alpha_01():
    ms = discrete_spectrum(LineFiberQuery(0.25, cp.constant(0.1), N=64))
    assert len(ms) == 1
    assert ms[0].lam == pytest.approx(xi(0.1) + 0.0625, abs=1e-8)
    assert ms[0].lam == pytest.approx(-0.2964, abs=1e-4)


def test_sandwich_modulated():
    s = cp.trigonometric(0.1, [0.05])
    lam1 = discrete_spectrum(LineFiberQuery(0.0, s, N=64))[0].lam
    assert xi(0.05) <= lam1 <= xi(0.1)


def test_gauge_consistency():
    s = cp.trigonometric(0.1, [0.1], [0.05])
    a = [m.lam for m in discrete_spectrum(LineFiberQuery(0.5, s, N=64))]
    b = [m.lam for m in discrete_spectrum(LineFiberQuery(-0.5, s, N=64))]
    assert np.allclose(a, b, atol=1e-12)


def test_k_symmetry_real_sigma():
    s = cp.trigonometric(0.05, [0.15, 0.05])
    a = [m.lam for m in discrete_spectrum(LineFiberQuery(0.2, s, N=64))]
    b = [m.lam for m in discrete_spectrum(LineFiberQuery(-0.2, s, N=64))]
    assert np.allclose(a, b, atol=1e-8)


def test_truncation_converges():
    assert check_truncation(LineFiberQuery(0.1, cp.trigonometric(0.25, [0.2]), N=64)) < 1e-9


def test_embedded_examples():
    found = embedded_kernel_search(LineFiberQuery(0.25, cp.constant(0.0), N=128), (0.29, 0.31))
    assert len(found) == 1
    m = found[0]
    assert m.lam == pytest.approx(XI0 + 1.5625, abs=1e-8)
    assert abs(m.coefficient(1)) == pytest.approx(1.0, abs=1e-12)
    assert embedded_kernel_search(LineFiberQuery(0.0, cp.constant(0.0), N=64), (0.5, 0.99)) == []
    assert embedded_kernel_search(LineFiberQuery(0.0, cp.constant(0.0), N=64), (1.01, 1.2)) == []


def test_embedded_generic_empty_is_valid():
    out = embedded_kernel_search(LineFiberQuery(0.23, cp.trigonometric(0.1, [0.1]), N=32), (0.4, 0.45))
    assert isinstance(out, list)


def test_embedded_window_validation():
    q = LineFiberQuery(0.25, cp.constant(0.0), N=16)
    with pytest.raises(ValueError):
        embedded_kernel_search(q, (0.0, 0.3))
    with pytest.raises(ThresholdError):
        embedded_kernel_search(q, (0.5625, 0.6))


def test_field_ground_mode():
    m = discrete_spectrum(LineFiberQuery(0.0, cp.constant(0.0), N=32))[0]
    ys = np.array([0.3, 1.0, 2.5])
    u0 = reconstruct_field(m, [(0.0, y) for y in ys])
    u1 = reconstruct_field(m, [(1.3, y) for y in ys])
    assert np.allclose(u0, u1, atol=1e-14)
    prof = bessel_k0(math.sqrt(-m.lam) * ys)
    assert np.allclose(u0 / prof, (u0 / prof)[0], rtol=1e-10)


def test_field_boundary_value_and_decay():
    m = discrete_spectrum(LineFiberQuery(0.2, cp.trigonometric(0.1, [0.1]), N=32))[0]
    x = 0.7
    f = sum(m.coefficient(n) * np.exp(1j * n * x) for n in m.modes) / math.sqrt(2 * math.pi)
    # -u/log|y| - f decays like C/log|y|; check that law and its limit
    ys = (1e-6, 1e-9, 1e-12)
    err = [-reconstruct_field(m, [(x, y)])[0] / math.log(y) - f for y in ys]
    scaled = [e * math.log(y) for e, y in zip(err, ys)]
    assert abs(scaled[2] - scaled[1]) <= 1e-3 * abs(scaled[1])
    s_n = np.sqrt((m.modes + m.k) ** 2 - m.lam)
    c = np.sum(m.coeffs[:, 0] * np.exp(1j * m.modes * x) * (np.log(s_n / 2) + EULER_GAMMA)) / math.sqrt(2 * math.pi)
    assert abs(scaled[2] - c) <= 1e-6
    assert abs(err[0]) <= abs(c) / 13.8 + 1e-6
    assert abs(err[2]) < abs(err[1]) < abs(err[0])
    rate = 0.99 * math.sqrt(m.k ** 2 - m.lam)
    ys = np.array([5.0, 7.0, 10.0])
    us = np.abs(reconstruct_field(m, [(x, t) for t in ys]))
    c = us[0] * math.exp(rate * 5.0)
    assert np.all(us <= c * np.exp(-rate * ys) * (1 + 1e-9))


def test_complexified_probe():
    c = ComplexifiedQuery(0.5, 0.25, 0.02, (1e2, 1e3, 1e4))
    s = [v for _, v in complexified_bound_probe(c, cp.trigonometric(0.1, [0.05]), 128)]
    assert all(b >= a for a, b in zip(s, s[1:]))
    assert min(v / math.log1p(e) for v, e in zip(s, c.etas)) >= 0.05


def test_complexified_diagonal_floor():
    c = ComplexifiedQuery(0.5, 0.25, 0.02, (1e2, 1e3, 1e4))
    s = [v for _, v in complexified_bound_probe(c, cp.constant(0.0), 64)]
    floor = diagonal_floor(c, 64)
    assert all(a >= b for a, b in zip(s, floor))
    assert all(b >= a for a, b in zip(s, s[1:]))


def test_complexified_strip_validation():
    with pytest.raises(ValueError):
        ComplexifiedQuery(0.5, 0.25, 0.1, (1.0,))
    with pytest.raises(ValueError):
        ComplexifiedQuery(0.5, 0.0, 0.01, (1.0,))


def test_hs_norm():
    closed, quad = hs_norm_identity(1.0, 0.0)
    ref = 1 / math.tanh(math.pi) / 4
    assert closed == pytest.approx(ref, abs=1e-8)
    assert quad == pytest.approx(ref, abs=1e-4)


def test_hs_norm_symmetry_and_decay():
    a, _ = hs_norm_identity(1.0, 0.5)
    b, _ = hs_norm_identity(1.0, -0.5)
    assert a == pytest.approx(b, rel=1e-12)
    vals = [hs_norm_identity(s, 0.1)[0] for s in (1.0, 10.0, 100.0, 1e4)]
    assert all(y < x for x, y in zip(vals, vals[1:])) and vals[-1] < 1e-2
