"""Hermitian eigenvalues, inertia counts, singular values and bracketed roots.

Matrices of the fiber problems are Hermitian and banded (the coupling has
finite degree), so ``HermitianMatrix`` stores only the upper band in the
LAPACK layout: ``band[bw + i - j, j] = A[i, j]`` for ``i <= j``, with the
diagonal in the last row.

Two eigenvalue routes exist. ``method="lapack"`` calls the banded LAPACK
driver and is what every solver uses. ``method="ql"`` embeds the complex
Hermitian matrix as a real symmetric one of twice the size, reduces it to
tridiagonal form by Householder reflections and runs implicit-shift QL;
it is slow and serves as an independent reference in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import linalg, optimize

from .errors import BorderlineEigenvalueError, ConvergenceError

HERMITIAN_TOL = 1e-12
BORDERLINE_TOL = 1e-12
QL_MAX_SWEEPS = 60
BRENT_MAXITER = 200


class HermitianMatrix:
    """Hermitian matrix in upper-band storage, shape ``(bw + 1, n)``."""

    __slots__ = ("band",)

    def __init__(self, band: np.ndarray):
        band = np.asarray(band)
        if band.ndim != 2 or band.shape[0] < 1:
            raise ValueError("band must be a 2-d array with at least one row")
        if not np.all(np.isfinite(band)):
            raise ValueError("matrix entries must be finite")
        diag = band[-1]
        if np.iscomplexobj(diag):
            scale = max(1.0, float(np.abs(band).max()))
            if np.abs(diag.imag).max() > HERMITIAN_TOL * scale:
                raise ValueError("diagonal of a Hermitian matrix must be real")
        self.band = band

    @property
    def size(self) -> int:
        return self.band.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.band.shape[0] - 1

    @property
    def diagonal(self) -> np.ndarray:
        return self.band[-1].real

    @classmethod
    def from_dense(cls, a, bandwidth: int | None = None) -> "HermitianMatrix":
        a = np.asarray(a)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("matrix must be square")
        scale = max(1.0, float(np.abs(a).max())) if a.size else 1.0
        if np.abs(a - a.conj().T).max(initial=0.0) > HERMITIAN_TOL * scale:
            raise ValueError("matrix is not Hermitian")
        n = a.shape[0]
        if bandwidth is None:
            nz = np.nonzero(np.abs(np.triu(a)) > 0)
            bandwidth = int((nz[1] - nz[0]).max(initial=0))
        bw = min(bandwidth, max(n - 1, 0))
        band = np.zeros((bw + 1, n), dtype=a.dtype if np.iscomplexobj(a) else float)
        for d in range(bw + 1):
            band[bw - d, d:] = np.diagonal(a, d)
        if np.iscomplexobj(band):
            band[-1] = band[-1].real
        return cls(band)

    def dense(self) -> np.ndarray:
        n, bw = self.size, self.bandwidth
        a = np.zeros((n, n), dtype=self.band.dtype)
        for d in range(1, bw + 1):
            i = np.arange(n - d)
            a[i, i + d] = self.band[bw - d, d:]
        a = a + a.conj().T
        a[np.arange(n), np.arange(n)] = self.band[-1].real
        return a

    def plus_diagonal(self, d) -> "HermitianMatrix":
        """A + diag(d); the off-diagonal bands are shared, not copied."""
        d = np.asarray(d, dtype=float)
        if d.shape != (self.size,):
            raise ValueError("diagonal length mismatch")
        band = np.empty_like(self.band)
        band[:-1] = self.band[:-1]
        band[-1] = self.band[-1] + d
        return HermitianMatrix(band)

    def norm_bound(self) -> float:
        """Gershgorin bound on the spectral radius (max absolute row sum)."""
        n, bw = self.size, self.bandwidth
        rows = np.abs(self.band[-1]).astype(float)
        for d in range(1, bw + 1):
            off = np.abs(self.band[bw - d, d:])
            rows[:-d] += off
            rows[d:] += off
        return float(rows.max(initial=0.0))

    def matvec(self, v) -> np.ndarray:
        v = np.asarray(v)
        n, bw = self.size, self.bandwidth
        out = (self.band[-1].real * v).astype(np.result_type(self.band, v))
        for d in range(1, bw + 1):
            up = self.band[bw - d, d:]
            out[:-d] = out[:-d] + up * v[d:]
            out[d:] = out[d:] + np.conj(up) * v[:-d]
        return out


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"bracket needs lo < hi, got ({self.lo}, {self.hi})")

    @property
    def width(self) -> float:
        return self.hi - self.lo


def eigvals_hermitian(m: HermitianMatrix, method: str = "lapack") -> np.ndarray:
    """All eigenvalues in ascending order."""
    if method == "lapack":
        return linalg.eigvals_banded(m.band, lower=False, check_finite=False)
    if method == "ql":
        return _eigvals_ql(m.dense())
    raise ValueError(f"unknown method {method!r}")


def eigvals_index(m: HermitianMatrix, lo: int, hi: int) -> np.ndarray:
    """Eigenvalues with ascending indices lo..hi inclusive (0-based)."""
    return linalg.eigvals_banded(
        m.band, lower=False, select="i", select_range=(lo, hi), check_finite=False
    )


def eigh_index(m: HermitianMatrix, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs with indices lo..hi inclusive; vectors are columns."""
    return linalg.eig_banded(
        m.band, lower=False, select="i", select_range=(lo, hi), check_finite=False
    )


def inertia(m: HermitianMatrix, tol: float = BORDERLINE_TOL) -> tuple[int, int]:
    """Return ``(negative, borderline)`` eigenvalue counts.

    ``negative`` counts eigenvalues strictly below ``-tol * ||M||``;
    ``borderline`` counts those within ``tol * ||M||`` of zero, whose
    sign the arithmetic cannot settle.
    """
    nb = m.norm_bound()
    eps = tol * max(nb, 1.0)
    w = linalg.eigvals_banded(
        m.band, lower=False, select="v", select_range=(-nb - 1.0, eps), check_finite=False
    )
    neg = int(np.count_nonzero(w < -eps))
    return neg, int(w.size) - neg


def negative_count(m: HermitianMatrix, tol: float = BORDERLINE_TOL, strict: bool = False) -> int:
    """Number of eigenvalues < 0.

    Borderline eigenvalues count by their computed sign. With
    ``strict=True`` they raise ``BorderlineEigenvalueError`` instead.
    """
    neg, border = inertia(m, tol)
    if border:
        if strict:
            raise BorderlineEigenvalueError(f"{border} eigenvalue(s) within {tol:g}*norm of zero")
        nb = m.norm_bound()
        w = linalg.eigvals_banded(
            m.band,
            lower=False,
            select="v",
            select_range=(-nb - 1.0, 0.0),
            check_finite=False,
        )
        return int(np.count_nonzero(w < 0.0))
    return neg


def smallest_singular_value(a, method: str = "svd") -> float:
    """Smallest singular value of a general square matrix.

    ``method="gram"`` takes the square root of the smallest eigenvalue of
    ``a^H a`` through the QL route; it loses half the digits near zero
    and exists as a cross-check.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    if method == "svd":
        try:
            s = np.linalg.svd(a, compute_uv=False)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(str(exc)) from exc
        return float(s[-1])
    if method == "gram":
        w = _eigvals_ql(a.conj().T @ a)
        return math.sqrt(max(float(w[0]), 0.0))
    raise ValueError(f"unknown method {method!r}")


def brent_root(f: Callable[[float], float], b: Bracket, tol: float) -> float:
    """Root of ``f`` inside the bracket to absolute width ``tol``.

    Raises ``ValueError`` without a sign change and ``ConvergenceError``
    when 200 iterations do not suffice.
    """
    flo, fhi = f(b.lo), f(b.hi)
    if flo == 0.0:
        return b.lo
    if fhi == 0.0:
        return b.hi
    if math.copysign(1.0, flo) == math.copysign(1.0, fhi):
        raise ValueError(f"no sign change on [{b.lo}, {b.hi}]: f = {flo:.3e}, {fhi:.3e}")
    try:
        return optimize.brentq(f, b.lo, b.hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=BRENT_MAXITER)
    except RuntimeError as exc:
        raise ConvergenceError(str(exc)) from exc


# --- reference route: real embedding, Householder, implicit QL -------------


def real_embedding(a: np.ndarray) -> np.ndarray:
    """[[Re A, -Im A], [Im A, Re A]]; each eigenvalue of A appears twice."""
    a = np.asarray(a)
    if not np.iscomplexobj(a):
        return np.asarray(a, dtype=float)
    re, im = a.real, a.imag
    return np.block([[re, -im], [im, re]])


def tridiagonalize(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Householder reduction of a real symmetric matrix.

    Returns ``(d, e)`` with the diagonal and the subdiagonal (``e[0]`` unused
    and zero, ``e[i]`` couples rows ``i-1`` and ``i``).
    """
    a = np.array(s, dtype=float)
    n = a.shape[0]
    e = np.zeros(n)
    for k in range(n - 2):
        x = a[k + 1 :, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x.copy()
        v[0] -= alpha
        vn = v @ v
        if vn == 0.0:
            e[k + 1] = x[0]
            continue
        sub = a[k + 1 :, k + 1 :]
        # two-sided update H S H with H = I - 2 v v^T / (v^T v)
        p = sub @ v * (2.0 / vn)
        kk = (v @ p) / vn
        q = p - kk * v
        sub -= np.outer(v, q) + np.outer(q, v)
        a[k + 1 :, k + 1 :] = sub
        e[k + 1] = alpha
    if n >= 2:
        # no reflection touches the last column pair
        e[n - 1] = a[n - 1, n - 2]
    return np.diag(a).copy(), e


def tridiagonal_ql(d: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Eigenvalues of a symmetric tridiagonal matrix by implicit-shift QL."""
    d = np.array(d, dtype=float)
    n = d.size
    e = np.append(np.array(e[1:], dtype=float), 0.0)
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= np.finfo(float).eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > QL_MAX_SWEEPS:
                raise ConvergenceError("implicit QL did not converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.sort(d)


def _eigvals_ql(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    scale = max(1.0, float(np.abs(a).max())) if a.size else 1.0
    if np.abs(a - a.conj().T).max(initial=0.0) > HERMITIAN_TOL * scale:
        raise ValueError("matrix is not Hermitian")
    if a.shape[0] == 0:
        return np.zeros(0)
    w = tridiagonal_ql(*tridiagonalize(real_embedding(a)))
    if not np.iscomplexobj(a):
        return w
    lo, hi = w[0::2], w[1::2]
    norm = max(float(np.abs(w).max()), 1.0)
    if np.abs(hi - lo).max() > 1e-9 * norm:
        raise ConvergenceError("real embedding produced unpaired eigenvalues")
    return 0.5 * (lo + hi)
