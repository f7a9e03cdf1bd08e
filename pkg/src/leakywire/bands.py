"""Quasimomentum sweeps, band curves and the gap report.

The spectrum of the full operator is the union over k of the fiber
spectra, so each band is the range of one sorted eigenvalue curve
lambda_j(k). Curves are matched by sorted index at every k; crossings make
them kinked but leave the union unchanged.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import optimize

from .branches import GuidedMode
from .coupling import CouplingFunction
from .errors import ConvergenceError, InvariantViolation
from .fiber_grating import GratingFiberQuery, GratingSymbolContext, discrete_spectrum_grating
from .fiber_line import LineFiberQuery, discrete_spectrum, xi

log = logging.getLogger(__name__)

MODELS = ("line", "grating")
MAX_DOUBLINGS = 4


@dataclass(frozen=True)
class SolverParams:
    N: int = 128
    lambda_tol: float = 1e-9
    threshold_margin: float = 1e-6
    term_tol: float = 1e-14
    threads: int = 1


@dataclass(frozen=True)
class KGrid:
    """Quasimomentum sample points.

    ``kind`` is ``"line"`` (scalars), ``"path"`` (a polyline of pairs,
    sampled as given) or ``"product"`` (the tensor grid ``axes[0] x axes[1]``,
    stored in row-major order).
    """

    kind: str
    points: tuple
    axes: tuple = ()

    @classmethod
    def line(cls, n: int = 201) -> "KGrid":
        return cls("line", tuple(float(k) for k in np.linspace(-0.5, 0.5, n)))

    @classmethod
    def from_scalars(cls, ks: Sequence[float]) -> "KGrid":
        return cls("line", tuple(float(k) for k in ks))

    @classmethod
    def path(cls, vertices: Sequence[Sequence[float]], per_segment: int = 0) -> "KGrid":
        """Polyline through ``vertices``; ``per_segment`` extra points on each leg."""
        v = [tuple(map(float, p)) for p in vertices]
        pts = [v[0]]
        for a, b in zip(v[:-1], v[1:]):
            for s in np.linspace(0.0, 1.0, per_segment + 2)[1:]:
                pts.append((a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])))
        return cls("path", tuple(pts))

    @classmethod
    def product(cls, n1: int = 41, n2: int = 41) -> "KGrid":
        a1 = tuple(float(k) for k in np.linspace(-0.5, 0.5, n1))
        a2 = tuple(float(k) for k in np.linspace(-0.5, 0.5, n2))
        return cls("product", tuple((x, y) for x in a1 for y in a2), (a1, a2))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def dimension(self) -> int:
        return 1 if self.kind == "line" else 2

    def refine(self) -> "KGrid":
        """Insert midpoints; old points stay at even positions."""
        if self.kind == "product":
            axes = tuple(_midpoints(a) for a in self.axes)
            return KGrid("product", tuple((x, y) for x in axes[0] for y in axes[1]), axes)
        return KGrid(self.kind, _midpoints(self.points))

    def coarse_positions(self) -> np.ndarray:
        """Indices in ``self.refine()`` of the points of ``self``."""
        if self.kind == "product":
            n1, n2 = (len(a) for a in self.axes)
            m2 = 2 * n2 - 1
            return np.array([2 * i * m2 + 2 * j for i in range(n1) for j in range(n2)])
        return 2 * np.arange(len(self.points))


def _midpoints(pts: Sequence) -> tuple:
    out = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        if isinstance(a, tuple):
            out.append((0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])))
        else:
            out.append(0.5 * (a + b))
        out.append(b)
    return tuple(out)


@dataclass(frozen=True)
class KSolution:
    """Fiber spectrum at one k: eigenvalues repeated by multiplicity."""

    k: float | tuple[float, float]
    threshold: float
    values: tuple[float, ...]
    flags: tuple[str, ...]


@dataclass(frozen=True)
class BandStructure:
    model: str
    sigma: CouplingFunction
    kgrid: KGrid
    solutions: tuple[KSolution, ...]
    params: SolverParams
    converged: bool | None = None

    @property
    def N_used(self) -> int:
        return self.params.N

    @property
    def threshold(self) -> np.ndarray:
        return np.array([s.threshold for s in self.solutions])

    @property
    def band_count(self) -> int:
        return max((len(s.values) for s in self.solutions), default=0)

    @property
    def curves(self) -> dict[int, np.ndarray]:
        """band index -> values aligned with the grid, NaN where absent."""
        out = {}
        for j in range(self.band_count):
            out[j] = np.array([s.values[j] if j < len(s.values) else math.nan for s in self.solutions])
        return out


class _Solver:
    """Fiber solve at a single k for a fixed model and coupling."""

    def __init__(self, model: str, sigma: CouplingFunction, params: SolverParams):
        if model not in MODELS:
            raise ValueError(f"unknown model {model!r}")
        self.model, self.sigma, self.params = model, sigma, params
        self.ctx = GratingSymbolContext(term_tol=params.term_tol) if model == "grating" else None

    def modes(self, k) -> list[GuidedMode]:
        p = self.params
        try:
            if self.model == "line":
                q = LineFiberQuery(float(k), self.sigma, p.N, p.lambda_tol, p.threshold_margin)
                return discrete_spectrum(q)
            q = GratingFiberQuery(tuple(k), self.sigma, p.N, p.lambda_tol, p.threshold_margin)
            return discrete_spectrum_grating(q, self.ctx)
        except Exception as exc:
            raise type(exc)(f"fiber solve failed at k={k}: {exc}") from exc

    def __call__(self, k) -> KSolution:
        ms = self.modes(k)
        vals, flags = [], []
        for m in ms:
            for _ in range(m.multiplicity):
                vals.append(m.lam)
                flags.append("near_threshold" if m.near_threshold else "ok")
        order = np.argsort(vals, kind="stable")
        thr = float(k) ** 2 if self.model == "line" else k[0] ** 2 + k[1] ** 2
        return KSolution(k, thr, tuple(vals[i] for i in order), tuple(flags[i] for i in order))

    def value(self, k, j: int) -> float:
        s = self(k)
        return s.values[j] if j < len(s.values) else s.threshold


def sweep(model: str, sigma: CouplingFunction, kgrid: KGrid, params: SolverParams = SolverParams()) -> BandStructure:
    """Fiber spectra over the grid, in grid order whatever the thread count."""
    if len(kgrid) == 0:
        raise ValueError("empty quasimomentum grid")
    if (model == "line") != (kgrid.dimension == 1):
        raise ValueError(f"{model} model needs a {'scalar' if model == 'line' else 'pair'} grid")
    solver = _Solver(model, sigma, params)
    if params.threads > 1:
        with ThreadPoolExecutor(max_workers=params.threads) as pool:
            sols = tuple(pool.map(solver, kgrid.points))
    else:
        sols = tuple(map(solver, kgrid.points))
    return BandStructure(model, sigma, kgrid, sols, params)


def check_invariants(b: BandStructure) -> list[str]:
    """Violations of the structural band invariants (empty when clean)."""
    bad = []
    margin = b.params.threshold_margin
    for s in b.solutions:
        ok = [v for v, f in zip(s.values, s.flags) if f == "ok"]
        if any(v >= s.threshold - margin for v in ok):
            bad.append(f"value above threshold - margin at k={s.k}")
        if list(s.values) != sorted(s.values):
            bad.append(f"unsorted values at k={s.k}")
        if not s.values:
            bad.append(f"no eigenvalue at k={s.k}")
        if b.model == "line":
            # sigma >= ess-inf sigma caps the count by the constant-coupling one
            base = xi(b.sigma.ess_inf - 1e-9)
            k = float(s.k)
            n = np.arange(-b.params.N, b.params.N + 1)
            if len(s.values) > int(np.count_nonzero(base + (n + k) ** 2 <= k * k)):
                bad.append(f"more eigenvalues than the ess-inf comparison allows at k={s.k}")
    return bad


# --- gap report ----------------------------------------------------------


@dataclass(frozen=True)
class GapReport:
    union: tuple[tuple[float, float], ...]
    gaps: tuple[tuple[float, float], ...]
    converged: bool | None
    band_ranges: tuple[tuple[float, float], ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "union": [list(u) for u in self.union],
            "gaps": [list(g) for g in self.gaps],
            "gap_count": len(self.gaps),
            "band_ranges": [list(r) for r in self.band_ranges],
            "converged": self.converged,
        }


def _refined_extremum(b: BandStructure, solver: _Solver, j: int, i: int, sign: float, start: float) -> float:
    """Polish min (sign=+1) or max (sign=-1) of curve j near grid index i."""
    pts = b.kgrid.points
    tol = b.params.lambda_tol
    if b.kgrid.kind == "product":
        a1, a2 = b.kgrid.axes
        n2 = len(a2)
        i1, i2 = divmod(i, n2)
        lo = (a1[max(i1 - 1, 0)], a2[max(i2 - 1, 0)])
        hi = (a1[min(i1 + 1, len(a1) - 1)], a2[min(i2 + 1, n2 - 1)])

        def f(x):
            k = (min(max(x[0], lo[0]), hi[0]), min(max(x[1], lo[1]), hi[1]))
            return sign * solver.value(k, j)

        res = optimize.minimize(
            f, np.array(pts[i]), method="Nelder-Mead", options={"xatol": 1e-7, "fatol": tol, "maxiter": 200}
        )
        val = float(res.fun)
    else:
        if i == 0 or i == len(pts) - 1:
            return start
        if b.kgrid.kind == "line":
            kf = lambda t: t
            lo, hi = pts[i - 1], pts[i + 1]
        else:
            p0, p1, p2 = pts[i - 1], pts[i], pts[i + 1]
            # piecewise linear through three neighbours, t in [-1, 1]
            kf = lambda t: tuple(p1[c] + t * ((p2[c] - p1[c]) if t > 0 else (p1[c] - p0[c])) for c in range(2))
            lo, hi = -1.0, 1.0
        res = optimize.minimize_scalar(
            lambda t: sign * solver.value(kf(t), j), bounds=(lo, hi), method="bounded", options={"xatol": 1e-9}
        )
        val = float(res.fun)
    return min(sign * start, val) * sign


def band_ranges(b: BandStructure, refine_extrema: bool = True) -> list[tuple[float, float]]:
    """[min, max] of every sorted curve over the zone.

    A curve missing at some k has been absorbed by the threshold there, so
    its range extends up to that threshold.
    """
    solver = _Solver(b.model, b.sigma, b.params) if refine_extrema else None
    out = []
    for j, c in b.curves.items():
        finite = np.isfinite(c)
        flagged = np.array([j < len(s.flags) and s.flags[j] == "near_threshold" for s in b.solutions])
        regular = finite & ~flagged
        if not regular.any():
            out.append((float(np.nanmin(c)), float(np.nanmax(c))))
            continue
        cr = np.where(regular, c, np.nan)
        i_lo, i_hi = int(np.nanargmin(cr)), int(np.nanargmax(cr))
        lo, hi = float(cr[i_lo]), float(cr[i_hi])
        if refine_extrema:
            if _interior(regular, i_lo, b.kgrid):
                lo = _refined_extremum(b, solver, j, i_lo, 1.0, lo)
            if _interior(regular, i_hi, b.kgrid):
                hi = _refined_extremum(b, solver, j, i_hi, -1.0, hi)
        if not regular.all():
            hi = max(hi, float(b.threshold[~regular].min()))
        out.append((lo, hi))
    return out


def _interior(regular: np.ndarray, i: int, kgrid: KGrid) -> bool:
    if kgrid.kind == "product":
        a1, a2 = kgrid.axes
        n2 = len(a2)
        i1, i2 = divmod(i, n2)
        nbr = [(i1 + d1) * n2 + (i2 + d2) for d1 in (-1, 0, 1) for d2 in (-1, 0, 1)
               if 0 <= i1 + d1 < len(a1) and 0 <= i2 + d2 < n2]
        return all(regular[q] for q in nbr)
    return 0 < i < len(regular) - 1 and regular[i - 1] and regular[i + 1]


def merge_intervals(intervals: Sequence[tuple[float, float]], tol: float) -> list[tuple[float, float]]:
    merged: list[list[float]] = []
    for lo, hi in sorted(intervals):
        if merged and lo <= merged[-1][1] + tol:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [(a, b) for a, b in merged]


def gaps_from_ranges(ranges: Sequence[tuple[float, float]], tol: float) -> tuple[list, list]:
    """Union of the negative parts of the ranges and the gaps below 0."""
    neg = [(lo, min(hi, 0.0)) for lo, hi in ranges if lo < 0.0]
    union = merge_intervals(neg, tol)
    gaps = [(a[1], b[0]) for a, b in zip(union[:-1], union[1:])]
    if union and union[-1][1] < -tol:
        gaps.append((union[-1][1], 0.0))
    return union, gaps


def detect_gaps(b: BandStructure, refine_extrema: bool = True) -> GapReport:
    """Negative spectrum as a union of closed intervals, and its gaps.

    Raises ``ConvergenceError`` for a structure that ``refine`` marked as
    not converged; an unrefined structure (``converged is None``) passes.
    """
    if b.converged is False:
        raise ConvergenceError("band structure did not converge under refinement")
    ranges = band_ranges(b, refine_extrema)
    union, gaps = gaps_from_ranges(ranges, 10.0 * b.params.lambda_tol)
    if not union:
        raise InvariantViolation("empty negative spectrum")
    return GapReport(tuple(union), tuple(gaps), b.converged, tuple(ranges))


def curve_movement(coarse: BandStructure, fine: BandStructure) -> float:
    """Largest change of any curve value at the points shared by both grids."""
    pos = coarse.kgrid.coarse_positions()
    worst = 0.0
    for s, i in zip(coarse.solutions, pos):
        t = fine.solutions[int(i)]
        a = [v for v, f in zip(s.values, s.flags) if f == "ok"]
        c = [v for v, f in zip(t.values, t.flags) if f == "ok"]
        if len(a) != len(c):
            return math.inf
        worst = max(worst, max((abs(x - y) for x, y in zip(a, c)), default=0.0))
    return worst


def refine(b: BandStructure, tol: float | None = None, max_doublings: int = MAX_DOUBLINGS, strict: bool = True) -> BandStructure:
    """Double N and the grid density until the curves stop moving.

    Returns the finest structure with ``converged`` set. Raises
    ``ConvergenceError`` after ``max_doublings`` unless ``strict`` is off,
    in which case the result carries ``converged=False``.
    """
    tol = b.params.lambda_tol if tol is None else tol
    cur = b
    for step in range(max_doublings):
        params = replace(cur.params, N=2 * cur.params.N)
        nxt = sweep(cur.model, cur.sigma, cur.kgrid.refine(), params)
        move = curve_movement(cur, nxt)
        log.info("refinement %d: N=%d, %d points, movement %.3e", step + 1, params.N, len(nxt.kgrid), move)
        if move <= tol:
            return replace(nxt, converged=True)
        cur = nxt
    if strict:
        raise ConvergenceError(f"curves still moving after {max_doublings} doublings")
    return replace(cur, converged=False)
