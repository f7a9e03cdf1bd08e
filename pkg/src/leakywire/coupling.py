"""The 2 pi-periodic coupling sigma as a trigonometric polynomial.

Fourier coefficients follow the unitary convention

    f_n = (2 pi)^(-1/2) * integral_T f(x) exp(-i n x) dx,

so a constant ``sigma == a`` has ``coeffs[0] == sqrt(2 pi) * a``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import optimize

from .hermlin import HermitianMatrix

log = logging.getLogger(__name__)

SQRT_2PI = math.sqrt(2.0 * math.pi)
BOUND_GRID = 4096
_SYMMETRY_TOL = 1e-12
_RESIDUE_TOL = 1e-10


@dataclass(frozen=True)
class CouplingFunction:
    """Real trigonometric polynomial sigma(x) = sum_m c_m e^{imx} / sqrt(2 pi).

    ``coeffs[m + max_index]`` holds the coefficient of mode ``m``. The mean
    and the essential bounds are filled in on construction; the bounds are
    located on a 4096-point grid and then polished by a bounded scalar
    search around the grid extremum.
    """

    coeffs: np.ndarray
    max_index: int
    mean: float = field(init=False)
    ess_inf: float = field(init=False)
    ess_sup: float = field(init=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size != 2 * self.max_index + 1:
            raise ValueError("coeffs must have length 2 * max_index + 1")
        if not np.all(np.isfinite(c)):
            raise ValueError("coupling coefficients must be finite")
        scale = max(1.0, float(np.abs(c).max()))
        if np.abs(c - c[::-1].conj()).max() > _SYMMETRY_TOL * scale:
            raise ValueError("coupling coefficients violate c_{-m} = conj(c_m); sigma must be real")
        c = 0.5 * (c + c[::-1].conj())
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "mean", float(c[self.max_index].real) / SQRT_2PI)
        lo, hi = self._extrema()
        object.__setattr__(self, "ess_inf", lo)
        object.__setattr__(self, "ess_sup", hi)

    def coeff(self, m: int) -> complex:
        if abs(m) > self.max_index:
            return 0j
        return complex(self.coeffs[m + self.max_index])

    @property
    def is_constant(self) -> bool:
        M = self.max_index
        return bool(np.all(self.coeffs[:M] == 0) and np.all(self.coeffs[M + 1 :] == 0))

    def _extrema(self) -> tuple[float, float]:
        if self.is_constant:
            return self.mean, self.mean
        x = np.linspace(-math.pi, math.pi, BOUND_GRID, endpoint=False)
        v = evaluate(self, x)
        h = 2.0 * math.pi / BOUND_GRID
        out = []
        for sign, j in ((1.0, int(np.argmin(v))), (-1.0, int(np.argmax(v)))):
            res = optimize.minimize_scalar(
                lambda t: sign * evaluate(self, t),
                bounds=(x[j] - h, x[j] + h),
                method="bounded",
                options={"xatol": 1e-12},
            )
            out.append(min(sign * v[j], float(res.fun)) * sign)
        return out[0], out[1]


def from_fourier(coeffs: Mapping[int, complex]) -> CouplingFunction:
    """Build a coupling from a ``{mode: coefficient}`` map.

    Missing modes are zero. The map must be Hermitian-symmetric,
    ``coeffs[-m] == conj(coeffs[m])`` to within 1e-12.
    """
    if not coeffs:
        raise ValueError("empty coefficient map")
    M = max(abs(int(m)) for m in coeffs)
    c = np.zeros(2 * M + 1, dtype=complex)
    for m, v in coeffs.items():
        c[int(m) + M] = complex(v)
    return CouplingFunction(c, M)


def constant(value: float) -> CouplingFunction:
    return from_fourier({0: SQRT_2PI * float(value)})


def trigonometric(mean: float, cos: Sequence[float] = (), sin: Sequence[float] = ()) -> CouplingFunction:
    """sigma(x) = mean + sum_m cos[m-1] cos(m x) + sin[m-1] sin(m x)."""
    coeffs = {0: SQRT_2PI * float(mean)}
    half = SQRT_2PI / 2.0
    for m in range(1, max(len(cos), len(sin)) + 1):
        a = float(cos[m - 1]) if m <= len(cos) else 0.0
        b = float(sin[m - 1]) if m <= len(sin) else 0.0
        # a cos + b sin = ((a - ib) e^{imx} + (a + ib) e^{-imx}) / 2
        coeffs[m] = half * complex(a, -b)
        coeffs[-m] = half * complex(a, b)
    return from_fourier(coeffs)


def from_samples(samples: Sequence[float]) -> CouplingFunction:
    """Coupling from 2^p real samples at x_j = -pi + 2 pi j / L.

    Modes up to ``L/2 - 1`` are kept. Content above the Nyquist mode
    aliases onto lower modes (the samples cannot tell them apart); a
    non-zero Nyquist mode itself is rejected because it has no real
    Hermitian-symmetric representation with ``M = L/2 - 1``.
    """
    v = np.asarray(samples, dtype=float)
    L = v.size
    if v.ndim != 1 or L < 8 or L & (L - 1):
        raise ValueError(f"sample count must be a power of two >= 8, got {L}")
    if not np.all(np.isfinite(v)):
        raise ValueError("samples must be finite")
    raw = np.fft.fft(v)
    M = L // 2 - 1
    scale = max(1.0, float(np.abs(v).max()))
    if abs(raw[L // 2]) / L > 1e-12 * scale:
        raise ValueError("samples carry a non-zero Nyquist mode; use more samples")
    m = np.arange(-M, M + 1)
    # x_0 = -pi contributes the (-1)^m phase
    c = SQRT_2PI / L * np.where(m % 2 == 0, 1.0, -1.0) * raw[m % L]
    return CouplingFunction(c, M)


def evaluate(sigma: CouplingFunction, x):
    """Point values of sigma; accepts scalars or arrays."""
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)):
        raise ValueError("evaluation points must be finite")
    M = sigma.max_index
    m = np.arange(-M, M + 1)
    val = np.exp(1j * np.multiply.outer(xa, m)) @ sigma.coeffs / SQRT_2PI
    resid = np.max(np.abs(val.imag)) if val.size else 0.0
    if resid > _RESIDUE_TOL * max(1.0, float(np.abs(sigma.coeffs).max())):
        raise ArithmeticError(f"imaginary residue {resid:.3e} in coupling evaluation")
    if xa.ndim == 0:
        return float(val.real)
    return val.real


def multiplication_matrix(sigma: CouplingFunction, N: int) -> HermitianMatrix:
    """Matrix of f -> sigma f on modes -N..N, entry (n, m) = c_{n-m} / sqrt(2 pi).

    The matrix is banded with half-bandwidth ``min(M, 2N)``.
    """
    n = 2 * N + 1
    M = sigma.max_index
    if N < M:
        log.warning("truncation N=%d below coupling degree M=%d; high coupling modes cut", N, M)
    bw = min(M, n - 1)
    real = bool(np.all(sigma.coeffs.imag == 0.0))
    band = np.zeros((bw + 1, n), dtype=float if real else complex)
    for d in range(bw + 1):
        # upper band d holds entry (i, i+d) = c_{-d} / sqrt(2 pi) at column i+d
        val = sigma.coeff(-d) / SQRT_2PI
        band[bw - d, d:] = val.real if real else val
    return HermitianMatrix(band)
