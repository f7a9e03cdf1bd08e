import math

import numpy as np
import pytest

from leakywire import bands as bs
from leakywire import coupling as cp
from leakywire.errors import ConvergenceError
from leakywire.fiber_grating import GratingSymbolContext, lambda_const
from leakywire.fiber_line import LineFiberQuery, discrete_spectrum, xi

XI0 = xi(0.0)


@pytest.fixture(scope="module")
def const_line():
    return bs.sweep("line", cp.constant(0.0), bs.KGrid.line(201), bs.SolverParams(N=64))


def test_constant_line_curves(const_line):
    k = np.array(const_line.kgrid.points)
    c = const_line.curves
    assert np.abs(c[0] - (XI0 + k ** 2)).max() <= 1e-8
    # second and third sorted curves are xi(0) + (1 -+ |k|)^2 where below k^2
    for s in const_line.solutions:
        kk = abs(s.k)
        want = sorted(v for v in (XI0 + (1 - kk) ** 2, XI0 + (1 + kk) ** 2) if v < kk * kk - 1e-6)
        ok = [v for v, f in zip(s.values[1:], s.flags[1:]) if f == "ok"]
        assert np.allclose(ok, want[: len(ok)], atol=1e-8)
    assert not bs.check_invariants(const_line)


def test_constant_line_no_gaps(const_line):
    rep = bs.detect_gaps(const_line)
    assert rep.gaps == ()
    assert len(rep.union) == 1
    assert rep.union[0][0] == pytest.approx(XI0, abs=1e-8) and rep.union[0][1] == 0.0


def test_grating_path_curve():
    ctx = GratingSymbolContext()
    grid = bs.KGrid.path([(-0.5, 0.25), (0.5, 0.25)], per_segment=9)
    b = bs.sweep("grating", cp.constant(0.0), grid, bs.SolverParams(N=32))
    lam = lambda_const(0.0, 0.25, ctx)
    k1 = np.array([p[0] for p in grid.points])
    assert np.abs(b.curves[0] - (lam + k1 ** 2)).max() <= 1e-8


def test_single_point_grid_matches_fiber():
    s = cp.trigonometric(0.1, [0.1])
    b = bs.sweep("line", s, bs.KGrid.from_scalars([0.17]), bs.SolverParams(N=64))
    want = [m.lam for m in discrete_spectrum(LineFiberQuery(0.17, s, N=64)) for _ in range(m.multiplicity)]
    assert np.allclose(b.solutions[0].values, want, atol=0)


def test_sweep_thread_independent():
    s = cp.trigonometric(0.25, [0.2])
    g = bs.KGrid.line(21)
    a = bs.sweep("line", s, g, bs.SolverParams(N=32, threads=1))
    b = bs.sweep("line", s, g, bs.SolverParams(N=32, threads=4))
    assert a.solutions == b.solutions


def test_k_symmetry():
    b = bs.sweep("line", cp.trigonometric(0.1, [0.15, 0.05]), bs.KGrid.line(21), bs.SolverParams(N=32))
    c = b.curves[0]
    assert np.abs(c - c[::-1]).max() <= 1e-8


def test_gaps_two_bands():
    union, gaps = bs.gaps_from_ranges([(-2.0, -1.5), (-1.0, -0.5)], 1e-12)
    assert union == [(-2.0, -1.5), (-1.0, -0.5)]
    assert gaps == [(-1.5, -1.0), (-0.5, 0.0)]
    assert bs.merge_intervals([(0, 1), (0.5, 2), (3, 4)], 0) == [(0, 2), (3, 4)]


def test_modulated_gap_stability_small():
    s = cp.trigonometric(0.25, [0.2])
    a = bs.detect_gaps(bs.sweep("line", s, bs.KGrid.line(51), bs.SolverParams(N=32)))
    b = bs.detect_gaps(bs.sweep("line", s, bs.KGrid.line(101), bs.SolverParams(N=64)))
    assert len(a.gaps) == len(b.gaps)
    assert np.allclose(np.ravel(a.gaps), np.ravel(b.gaps), atol=1e-5)


def test_refine_constant_converges_first_doubling():
    b = bs.sweep("line", cp.constant(0.05), bs.KGrid.line(5), bs.SolverParams(N=8))
    r = bs.refine(b)
    assert r.converged is True and r.params.N == 16


def test_refine_from_tiny_N():
    s = cp.trigonometric(0.1, [0.2])
    b = bs.sweep("line", s, bs.KGrid.line(3), bs.SolverParams(N=2))
    r = bs.refine(b, tol=1e-8, max_doublings=6)
    assert r.converged
    ref = bs.sweep("line", s, r.kgrid, bs.SolverParams(N=64))
    assert np.nanmax(np.abs(r.curves[0] - ref.curves[0])) <= 1e-8


def test_refine_nonconverged_policy():
    s = cp.trigonometric(0.1, [0.2])
    b = bs.sweep("line", s, bs.KGrid.line(3), bs.SolverParams(N=2))
    with pytest.raises(ConvergenceError):
        bs.refine(b, tol=1e-15, max_doublings=1)
    r = bs.refine(b, tol=1e-15, max_doublings=1, strict=False)
    assert r.converged is False
    with pytest.raises(ConvergenceError):
        bs.detect_gaps(r)


def test_kgrid_shapes():
    g = bs.KGrid.product(3, 4)
    assert len(g) == 12 and g.dimension == 2
    f = bs.KGrid.line(5).refine()
    assert len(f) == 9 and np.allclose(f.points, np.linspace(-0.5, 0.5, 9))
    assert list(bs.KGrid.line(5).coarse_positions()) == [0, 2, 4, 6, 8]


def test_model_grid_mismatch():
    with pytest.raises(ValueError):
        bs.sweep("grating", cp.constant(0.0), bs.KGrid.line(3))
