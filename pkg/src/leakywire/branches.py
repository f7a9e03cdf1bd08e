"""Eigenvalue search shared by both fiber models.

A fiber family is a Hermitian matrix function

    A(lam) = diag(symbol(lam)) + S,

where ``S`` is the (lam-independent) coupling matrix and every diagonal
entry is strictly decreasing in ``lam``. Then every eigenvalue branch
``mu_j(lam)`` of ``A`` is strictly decreasing, the eigenvalues of the fiber
operator are the zero crossings of these branches, and the number of them
below ``lam`` equals the number of negative eigenvalues of ``A(lam)``.

The search isolates crossings by bisecting on that count, then runs Brent
on the relevant branch, clusters coincident roots and reads the kernel off
the banded eigensolver.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BorderlineEigenvalueError, InvariantViolation
from .hermlin import Bracket, HermitianMatrix, brent_root, eigh_index, eigvals_index, inertia

log = logging.getLogger(__name__)

ISOLATION_WIDTH = 1e-4
CLUSTER_FACTOR = 10.0
_RETRIES = 6


@dataclass(frozen=True)
class GuidedMode:
    """Eigenvalue of a fiber operator with its boundary-value coefficients.

    ``coeffs`` has one column per independent kernel vector and one row per
    entry of ``modes``; each column has unit norm. Modes flagged
    ``near_threshold`` were detected by the count but lie within the
    exclusion margin, so ``lam`` is the threshold itself and ``coeffs`` is
    empty.
    """

    lam: float
    k: float | tuple[float, float]
    modes: np.ndarray
    coeffs: np.ndarray
    residual: float
    multiplicity: int
    near_threshold: bool = False
    embedded: bool = False

    def coefficient(self, n: int, column: int = 0) -> complex:
        hit = np.nonzero(self.modes == n)[0]
        if hit.size == 0:
            return 0j
        return complex(self.coeffs[hit[0], column])


@dataclass
class Family:
    """A(lam) = diag(symbol(lam)) + coupling on the Fourier modes ``modes``."""

    modes: np.ndarray
    coupling: HermitianMatrix
    symbol: Callable[[float], np.ndarray]
    lambda_tol: float
    evaluations: int = field(default=0, compare=False)

    def assemble(self, lam: float) -> HermitianMatrix:
        self.evaluations += 1
        return self.coupling.plus_diagonal(self.symbol(lam))

    def branch(self, lam: float, j: int) -> float:
        """The (0-based) j-th smallest eigenvalue of A(lam)."""
        return float(eigvals_index(self.assemble(lam), j, j)[0])

    def count(self, lam: float, strict: bool = False) -> int:
        """Number of negative eigenvalues of A(lam).

        A borderline eigenvalue means ``lam`` sits on an eigenvalue of the
        fiber operator to working precision; the count is then taken a
        little lower, at ``lam - delta``, with ``delta`` growing from
        ``lambda_tol``.
        """
        delta = self.lambda_tol
        at = lam
        for _ in range(_RETRIES):
            neg, border = inertia(self.assemble(at))
            if not border:
                return neg
            if strict:
                raise BorderlineEigenvalueError(f"borderline eigenvalue of A at lambda={at!r}")
            at = lam - delta
            delta *= 10.0
        raise BorderlineEigenvalueError(f"count at lambda={lam!r} stays borderline after shifts")

    def restricted(self, keep: np.ndarray, symbol: Callable[[float], np.ndarray]) -> "Family":
        """Family on the sub-collection of modes selected by the boolean mask."""
        sub = self.coupling.dense()[np.ix_(keep, keep)]
        coupling = HermitianMatrix.from_dense(sub, bandwidth=self.coupling.bandwidth)
        return Family(self.modes[keep], coupling, symbol, self.lambda_tol)


@dataclass(frozen=True)
class Root:
    lam: float
    multiplicity: int
    vectors: np.ndarray
    residual: float


def _isolate(fam: Family, lo: float, hi: float, c_lo: int, c_hi: int) -> list[tuple[float, float, int, int]]:
    out = []
    stack = [(lo, hi, c_lo, c_hi)]
    while stack:
        a, b, ca, cb = stack.pop()
        if cb == ca:
            continue
        if cb < ca:
            raise InvariantViolation(f"count decreased on [{a}, {b}]: {ca} -> {cb}")
        if cb - ca == 1 or b - a <= ISOLATION_WIDTH:
            out.append((a, b, ca, cb))
            continue
        mid = 0.5 * (a + b)
        cm = fam.count(mid)
        stack.append((mid, b, cm, cb))
        stack.append((a, mid, ca, cm))
    out.sort()
    return out


def _branch_root(fam: Family, j: int, a: float, b: float, tol: float) -> float:
    f = lambda lam: fam.branch(lam, j)
    fa = f(a)
    if fa <= 0.0:
        # the count at ``a`` was taken at a shifted point; the crossing is at a
        if fa > -1e-9:
            return a
        raise InvariantViolation(f"branch {j} already negative at {a}")
    return brent_root(f, Bracket(a, b), tol)


def normalize_columns(v: np.ndarray) -> np.ndarray:
    """Unit columns with the largest-magnitude entry real and positive."""
    v = np.array(v, dtype=complex)
    for c in range(v.shape[1]):
        col = v[:, c]
        col /= np.linalg.norm(col)
        big = int(np.argmax(np.abs(col)))
        col *= abs(col[big]) / col[big]
        v[:, c] = col
    return v


def roots_between(fam: Family, lo: float, hi: float, c_lo: int | None = None, c_hi: int | None = None) -> list[Root]:
    """All zero crossings of eigenvalue branches of A on (lo, hi].

    Roots closer than ``10 * lambda_tol`` are merged into one eigenvalue
    whose multiplicity is confirmed by the count on both sides.
    """
    tol = fam.lambda_tol
    c_lo = fam.count(lo) if c_lo is None else c_lo
    c_hi = fam.count(hi) if c_hi is None else c_hi
    raw: list[float] = []
    for a, b, ca, cb in _isolate(fam, lo, hi, c_lo, c_hi):
        for j in range(ca, cb):
            raw.append(_branch_root(fam, j, a, b, tol))
    raw.sort()
    clusters: list[list[float]] = []
    for r in raw:
        if clusters and r - clusters[-1][-1] <= CLUSTER_FACTOR * tol:
            clusters[-1].append(r)
        else:
            clusters.append([r])
    roots = []
    for cl in clusters:
        lc = 0.5 * (cl[0] + cl[-1])
        # branches flatten like 1/|lam| far down, so the probe widens with |lam|
        w = 0.5 * (cl[-1] - cl[0]) + 5.0 * tol + 1e-8 * abs(lc)
        below = fam.count(max(lc - w, lo))
        above = fam.count(min(lc + w, hi))
        mult = above - below
        if mult != len(cl):
            # a neighbouring crossing inside the probe window would explain it
            raise InvariantViolation(
                f"multiplicity mismatch at lambda={lc:.12g}: {len(cl)} roots, count jump {mult}"
            )
        vals, vecs = eigh_index(fam.assemble(lc), below, above - 1)
        roots.append(Root(lc, mult, normalize_columns(vecs), float(np.abs(vals).max())))
    return roots


def limit_count(fam: Family, diverging: np.ndarray, symbol_at_threshold: Callable[[], np.ndarray]) -> int:
    """lim count(lam) as lam rises to the threshold.

    The diverging diagonal entries tend to minus infinity; each contributes
    one negative eigenvalue and the rest of A tends to its restriction to
    the remaining modes (Schur complement with a vanishing correction).
    """
    keep = ~diverging
    n_div = int(np.count_nonzero(diverging))
    if not keep.any():
        return n_div
    sub = fam.coupling.dense()[np.ix_(keep, keep)]
    m = HermitianMatrix.from_dense(sub, bandwidth=fam.coupling.bandwidth).plus_diagonal(symbol_at_threshold())
    neg, _ = inertia(m)
    return n_div + neg


def discrete_search(
    fam: Family,
    lower: float,
    threshold: float,
    margin: float,
    diverging: np.ndarray,
    symbol_at_threshold: Callable[[], np.ndarray],
    k,
) -> list[GuidedMode]:
    """All eigenvalues below ``threshold - margin`` plus near-threshold flags."""
    top = threshold - margin
    if not lower < top:
        raise InvariantViolation(f"lower bound {lower} not below search ceiling {top}")
    c_lo = fam.count(lower)
    if c_lo != 0:
        raise InvariantViolation(f"A not positive definite at the lower bound {lower}")
    c_top = fam.count(top)
    roots = roots_between(fam, lower, top, 0, c_top)
    modes = [
        GuidedMode(r.lam, k, fam.modes.copy(), r.vectors, r.residual, r.multiplicity)
        for r in roots
    ]
    flagged = limit_count(fam, diverging, symbol_at_threshold) - c_top
    if flagged < 0:
        raise InvariantViolation("limit count below the count at the margin")
    if flagged:
        log.info("%d eigenvalue(s) within the threshold margin at k=%s", flagged, k)
        modes.append(
            GuidedMode(
                threshold,
                k,
                fam.modes.copy(),
                np.zeros((fam.modes.size, 0), dtype=complex),
                float("nan"),
                flagged,
                near_threshold=True,
            )
        )
    if not modes:
        raise InvariantViolation(f"no eigenvalue below the threshold at k={k}")
    return modes


def split_window(lo: float, hi: float, cuts: Sequence[float], margin: float) -> list[tuple[float, float]]:
    """Sub-intervals of (lo, hi) keeping ``margin`` away from each cut."""
    pieces = []
    edges = [lo] + sorted(c for c in cuts if lo < c < hi) + [hi]
    for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        a2 = a + margin if i > 0 else a
        b2 = b - margin if i < len(edges) - 2 else b
        if a2 < b2:
            pieces.append((a2, b2))
    return pieces


def embedded_search(
    fam: Family,
    window: tuple[float, float],
    open_mask: Callable[[float], np.ndarray],
    closed_symbol: Callable[[np.ndarray], Callable[[float], np.ndarray]],
    cuts: Sequence[float],
    margin: float,
    kernel_tol: float,
    k,
) -> list[GuidedMode]:
    """Eigenvalues inside (window) above the lowest threshold.

    On each sub-window between consecutive thresholds the set of closed
    modes is fixed. Roots of the closed-mode restriction are candidates;
    a candidate is an eigenvalue when some vector in its kernel is also
    annihilated by the open-closed coupling block, which is the condition
    that the open coefficients vanish.
    """
    out = []
    dense_s = fam.coupling.dense()
    for a, b in split_window(window[0], window[1], cuts, margin):
        opened = open_mask(0.5 * (a + b))
        closed = ~opened
        if not closed.any():
            continue
        sub = fam.restricted(closed, closed_symbol(closed))
        block = dense_s[np.ix_(opened, closed)]
        for r in roots_between(sub, a, b):
            f = r.vectors
            if block.size:
                u, s, vh = np.linalg.svd(block @ f)
                s_full = np.zeros(f.shape[1])
                s_full[: s.size] = s
                null = vh.conj().T[:, s_full <= kernel_tol]
                if null.shape[1] == 0:
                    continue
                f = normalize_columns(f @ null)
            coeffs = np.zeros((fam.modes.size, f.shape[1]), dtype=complex)
            coeffs[closed] = f
            out.append(
                GuidedMode(r.lam, k, fam.modes.copy(), coeffs, r.residual, f.shape[1], embedded=True)
            )
    return out
