"""Branch-correct elementary functions, K0, and the constants used everywhere.

All functions accept Python scalars or numpy arrays. Scalars in give
scalars out.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, DomainError

EULER_GAMMA = 0.5772156649015329
LN2 = 0.6931471805599453
# (ln 2 + psi(1)) / (2 pi), the additive constant of the line symbol
VARSIGMA = (LN2 - EULER_GAMMA) / (2.0 * math.pi)

_K0_SERIES_MAX = 2.0
_K0_ASYMPTOTIC_MIN = 25.0
_K0_ASYMPTOTIC_TERMS = 24
_K0_SERIES_TERMS = 30
_CF_MAXIT = 400
_CF_EPS = 1e-17


def _k0_series(x: np.ndarray) -> np.ndarray:
    """Ascending series K0 = -(ln(x/2) + gamma) I0 + sum H_k (x^2/4)^k / (k!)^2."""
    t = 0.25 * x * x
    term = np.ones_like(x)
    i0 = np.ones_like(x)
    acc = np.zeros_like(x)
    harmonic = 0.0
    for k in range(1, _K0_SERIES_TERMS):
        term = term * t / (k * k)
        harmonic += 1.0 / k
        i0 = i0 + term
        acc = acc + harmonic * term
        if np.all(harmonic * term < 1e-18 * np.abs(acc)):
            break
    return -(np.log(0.5 * x) + EULER_GAMMA) * i0 + acc


def _k0_steed(x: np.ndarray) -> np.ndarray:
    # Steed's continued fraction (Temme CF2) for order zero; valid for x >= 2.
    s_out = np.empty_like(x)
    idx = np.arange(x.size)
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25
    q = np.full_like(x, a1)
    c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _CF_MAXIT):
        a -= 2.0 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        dels = q * delh
        s = s + dels
        done = np.abs(dels) < _CF_EPS * np.abs(s)
        if done.any():
            s_out[idx[done]] = s[done]
            keep = ~done
            if not keep.any():
                break
            idx, b, d, delh, q1, q2, q, s = (v[keep] for v in (idx, b, d, delh, q1, q2, q, s))
    else:
        raise ConvergenceError("K0 continued fraction did not converge")
    # exp(-x) folded into the log to stay finite until true underflow
    return np.exp(-x + 0.5 * np.log(math.pi / (2.0 * x)) - np.log(s_out))


def _k0_asymptotic(x: np.ndarray) -> np.ndarray:
    # Hankel expansion; at x >= 25 the terms shrink below 1e-17 well before
    # they start to grow
    u = 1.0 / (8.0 * x)
    term = np.ones_like(x)
    acc = np.ones_like(x)
    for k in range(1, _K0_ASYMPTOTIC_TERMS):
        term = term * (-(2 * k - 1) ** 2) * u / k
        acc = acc + term
    return np.exp(-x + 0.5 * np.log(math.pi / (2.0 * x))) * acc


def bessel_k0(x):
    """Macdonald function K0 for positive real arguments.

    Uses the ascending series for ``x <= 2``, Steed's continued fraction
    on ``(2, 25)`` and the Hankel asymptotic expansion from 25 on. Relative accuracy is about 1e-15 on ``[1e-6, 700]``;
    the result underflows to 0 past ``x ~ 745``.

    Raises
    ------
    DomainError
        If any argument is non-positive or not finite.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError("bessel_k0 requires finite x > 0")
    flat = np.atleast_1d(arr).ravel()
    out = np.empty_like(flat)
    small = flat <= _K0_SERIES_MAX
    if small.any():
        out[small] = _k0_series(flat[small])
    far = flat >= _K0_ASYMPTOTIC_MIN
    if far.any():
        out[far] = _k0_asymptotic(flat[far])
    mid = ~small & ~far
    if mid.any():
        out[mid] = _k0_steed(flat[mid])
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def _on_cut(z: np.ndarray) -> np.ndarray:
    return (z.imag == 0.0) & (z.real <= 0.0)


def principal_sqrt(z):
    """Square root with Re > 0, defined off the closed negative real axis."""
    if np.isscalar(z):
        zc = complex(z)
        if zc.imag == 0.0 and zc.real <= 0.0:
            raise DomainError(f"principal_sqrt undefined on (-inf, 0]: {z!r}")
        return cmath.sqrt(zc)
    arr = np.asarray(z, dtype=complex)
    if np.any(_on_cut(arr)):
        raise DomainError("principal_sqrt undefined on (-inf, 0]")
    return np.sqrt(arr)


def principal_log(z):
    """Logarithm with imaginary part in (-pi, pi), off the closed negative axis."""
    if np.isscalar(z):
        zc = complex(z)
        if zc.imag == 0.0 and zc.real <= 0.0:
            raise DomainError(f"principal_log undefined on (-inf, 0]: {z!r}")
        return cmath.log(zc)
    arr = np.asarray(z, dtype=complex)
    if np.any(_on_cut(arr)):
        raise DomainError("principal_log undefined on (-inf, 0]")
    return np.log(arr)


def cos_2pi(x):
    """cos(2 pi x) with exact zeros at quarter-integers.

    Reducing the argument first keeps e.g. ``cos_2pi(0.25)`` at exactly 0,
    which matters when the result multiplies a term that should vanish.
    """
    r = np.abs(np.asarray(x, dtype=float))
    r = r - np.round(r)
    r = np.abs(r)
    out = np.where(
        r <= 0.125,
        np.cos(2.0 * math.pi * r),
        np.where(r <= 0.375, np.sin(2.0 * math.pi * (0.25 - r)), -np.cos(2.0 * math.pi * (0.5 - r))),
    )
    if np.ndim(x) == 0:
        return float(out)
    return out


def k0_square_moment(a: float = 1.0) -> float:
    """Integral of K0(a r)^2 r over (0, inf), by adaptive quadrature.

    The exact value is ``1 / (2 a^2)``; this routine does not use it.
    """
    if not a > 0:
        raise DomainError("scale must be positive")

    def f(r):
        return bessel_k0(a * r) ** 2 * r

    # the log^2 singularity at 0 and the exponential tail are split off
    head, _ = integrate.quad(f, 0.0, 1.0 / a, epsabs=1e-14, epsrel=1e-13, limit=200)
    tail, _ = integrate.quad(f, 1.0 / a, np.inf, epsabs=1e-14, epsrel=1e-13, limit=200)
    return head + tail
