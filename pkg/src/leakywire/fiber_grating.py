"""Planar grating of parallel wires, spaced 2 pi apart.

The diagonal symbol is built from the strip point-interaction function

    t(z, k2) = log(-z)/(4 pi) - varsigma - (1/pi) sum_j cos(2 pi j k2) K0(2 pi j sqrt(-z))

(image form, z < 0), which continues to z < k2^2 through the renormalized
mode sum

    t(z, k2) = t(-1, 0) - (1/(4 pi)) sum_n [((n+k2)^2 - z)^(-1/2) - (n^2 + 1)^(-1/2)].

At k = (k1, k2) the fiber operator has an eigenvalue lam below k1^2 + k2^2
exactly when A(lam, k) = diag(t(lam - (n+k1)^2, k2)) + sigma has a kernel.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import branches
from .branches import Family, GuidedMode
from .coupling import CouplingFunction, multiplication_matrix
from .errors import DomainError, InvariantViolation, ThresholdError
from .fiber_line import gauge_k
from .hermlin import Bracket, HermitianMatrix, brent_root, eigvals_index
from .specfun import VARSIGMA, bessel_k0, cos_2pi

log = logging.getLogger(__name__)

FOUR_PI = 4.0 * math.pi
TWO_PI = 2.0 * math.pi
IMAGE_SWITCH = -0.05
# K0(x) < 3e-23 beyond this argument; such image terms are dropped outright
_K0_NEGLIGIBLE = 50.0


@dataclass(frozen=True)
class GratingSymbolContext:
    """Evaluation policy for t(z, k2).

    ``anchor`` is t(-1, 0) from the image form, computed once. ``k2`` may be
    left as ``None`` for a context shared across transverse quasimomenta;
    the anchor does not depend on it.
    """

    k2: float | None = None
    image_cutoff: int = 200
    mode_cutoff: int = 4000
    term_tol: float = 1e-14
    anchor: float = field(init=False)

    def __post_init__(self):
        if self.k2 is not None:
            object.__setattr__(self, "k2", gauge_k(self.k2))
        if self.image_cutoff < 1 or self.mode_cutoff < 1 or not self.term_tol > 0:
            raise ValueError("cutoffs must be positive integers and term_tol positive")
        object.__setattr__(self, "anchor", float(t_image(-1.0, 0.0, self.term_tol, self.image_cutoff)))

    def check_k2(self, k2: float) -> None:
        if self.k2 is not None and self.k2 != gauge_k(k2):
            raise ValueError(f"context built for k2={self.k2}, queried at {k2}")


def image_terms(
    s, k2: float, term_tol: float = 1e-14, image_cutoff: int = 200, negligible: float = _K0_NEGLIGIBLE
) -> np.ndarray:
    """sum_j cos(2 pi j k2) K0(2 pi j s) for s > 0, vectorized over s.

    Summation stops at the first j whose term bound K0(2 pi j s_min) drops
    below ``term_tol``; the neglected tail is below that bound times
    r / (1 - r) with r = exp(-2 pi s_min). Terms with argument beyond
    ``negligible`` are skipped without evaluating K0.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s <= 0):
        raise DomainError("image sum needs sqrt(-z) > 0")
    out = np.zeros_like(s)
    s_min = float(s.min())
    for j in range(1, image_cutoff + 1):
        arg = TWO_PI * j * s
        live = arg < negligible
        if not live.any():
            break
        vals = bessel_k0(arg[live])
        c = float(cos_2pi(j * k2))
        if c != 0.0:
            out[live] += c * vals
        # the largest K0 sits at s_min, which is always live here
        if vals.max() < term_tol:
            break
    else:
        r = math.exp(-TWO_PI * s_min)
        if bessel_k0(TWO_PI * image_cutoff * s_min) * r / (1 - r) > term_tol:
            log.warning("image sum truncated at J=%d above term_tol", image_cutoff)
    return out


def t_image(z, k2: float, term_tol: float = 1e-14, image_cutoff: int = 200):
    """Image form of t(z, k2); requires z < 0."""
    za = np.asarray(z, dtype=float)
    if np.any(za >= 0):
        raise DomainError("image form needs z < 0")
    s = np.sqrt(-np.atleast_1d(za))
    val = np.log(-np.atleast_1d(za)) / FOUR_PI - VARSIGMA - image_terms(s, k2, term_tol, image_cutoff) / math.pi
    return float(val[0]) if za.ndim == 0 else val.reshape(za.shape)


def _pair_tail(X: float, k: float, z: float) -> float:
    # -int_X^inf [ (x+k)^2-z )^-1/2 + ((x-k)^2-z)^-1/2 - 2 (x^2+1)^-1/2 ] dx
    # = -[F_k(X) + F_-k(X) - 2 asinh X] with F_k(x) = log(x + k + sqrt((x+k)^2 - z))
    den_root = math.sqrt(X * X + 1.0)
    den = X + den_root
    total = 0.0
    for s in (k, -k):
        root = math.sqrt((X + s) ** 2 - z)
        diff = s + (2.0 * s * X + s * s - z - 1.0) / (root + den_root)
        total += math.log1p(diff / den)
    return -total


def t_renormalized(z: float, k2: float, ctx: GratingSymbolContext) -> float:
    """Renormalized mode-sum form of t(z, k2); valid for z < k2^2.

    Modes are summed in symmetric pairs (n, -n) up to ``mode_cutoff``; the
    remainder is replaced by the integral of the pair term from
    ``mode_cutoff + 1/2``, whose midpoint error is O(mode_cutoff^-4).
    """
    z = float(z)
    if not z < k2 * k2:
        raise DomainError(f"renormalized form needs z < k2^2, got z={z}")
    L = ctx.mode_cutoff
    n = np.arange(1, L + 1, dtype=float)
    pairs = 1.0 / np.sqrt((n + k2) ** 2 - z) + 1.0 / np.sqrt((n - k2) ** 2 - z) - 2.0 / np.sqrt(n * n + 1.0)
    # add the small terms first
    total = float(np.sum(pairs[::-1])) + _pair_tail(L + 0.5, k2, z)
    total += 1.0 / math.sqrt(k2 * k2 - z) - 1.0
    return ctx.anchor - total / FOUR_PI


def t_eval(z, k2: float, ctx: GratingSymbolContext):
    """t(z, k2) by the image form for z < -0.05 and the mode sum above."""
    za = np.asarray(z, dtype=float)
    flat = np.atleast_1d(za).ravel()
    if np.any(flat >= k2 * k2):
        raise DomainError("t(z, k2) needs z < k2^2")
    out = np.empty_like(flat)
    img = flat < IMAGE_SWITCH
    if img.any():
        out[img] = t_image(flat[img], k2, ctx.term_tol, ctx.image_cutoff)
    for i in np.nonzero(~img)[0]:
        out[i] = t_renormalized(flat[i], k2, ctx)
    return float(out[0]) if za.ndim == 0 else out.reshape(za.shape)


def lambda_const(alpha: float, k2: float, ctx: GratingSymbolContext) -> float:
    """Unique z < k2^2 with t(z, k2) + alpha = 0."""
    k2 = gauge_k(k2)
    f = lambda z: t_eval(z, k2, ctx) + alpha
    top = k2 * k2
    lo = min(top - 1.0, -1.0)
    for _ in range(400):
        if f(lo) > 0:
            break
        lo = 2.0 * lo - 1.0
    else:
        raise InvariantViolation("t + alpha never positive; lower bracket not found")
    h = 1.0
    while top - h < top and not f(top - h) < 0:
        h *= 0.1
    if not top - h < top:
        raise InvariantViolation("t + alpha never negative below k2^2")
    hi = top - h
    return brent_root(f, Bracket(lo, hi), 1e-15 * max(1.0, abs(lo)))


def alpha_grating(n, lam: float, k: tuple[float, float], ctx: GratingSymbolContext):
    """t(k2^2 - |Delta|, k2) with Delta = (n + k1)^2 + k2^2 - lam."""
    k1, k2 = k
    nn = np.asarray(n, dtype=float)
    delta = (nn + k1) ** 2 + k2 * k2 - lam
    if np.any(delta == 0.0):
        raise ThresholdError(f"lambda={lam} on a threshold of the grating")
    return t_eval(k2 * k2 - np.abs(delta), k2, ctx)


def symbol_deviation(n, lam: float, k: tuple[float, float], ctx: GratingSymbolContext, method: str = "direct"):
    """alpha_grating minus the single-wire symbol on closed modes.

    ``direct`` returns the image terms -(1/pi) sum_j cos(2 pi j k2)
    K0(2 pi j sqrt((n+k1)^2 - lam)) without forming the difference, so the
    exponentially small values keep their relative precision.
    """
    k1, k2 = k
    nn = np.atleast_1d(np.asarray(n, dtype=float))
    gap = (nn + k1) ** 2 - lam
    if np.any(gap <= 0):
        raise ThresholdError("deviation defined for closed modes only")
    if method == "direct":
        # term_tol far below the smallest deviation that is ever fitted
        val = -image_terms(np.sqrt(gap), k2, 1e-300, ctx.image_cutoff, negligible=740.0) / math.pi
    elif method == "difference":
        line = np.log(gap) / FOUR_PI - VARSIGMA
        val = alpha_grating(nn, lam, k, ctx) - line
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(val[0]) if np.ndim(n) == 0 else val


def tunneling_slope(lam: float, k: tuple[float, float], ctx: GratingSymbolContext, nmax: int = 5) -> float:
    """Least-squares slope of log|deviation| against |n| for n = +-1..+-nmax."""
    n = np.array([s * m for m in range(1, nmax + 1) for s in (1, -1)])
    dev = symbol_deviation(n, lam, k, ctx)
    return float(np.polyfit(np.abs(n), np.log(np.abs(dev)), 1)[0])


def tj_norm(j: int, z: float) -> float:
    """Norm of the j-th inter-wire coupling, K0(2 pi j sqrt(-z)) / (2 pi)."""
    if j < 1 or not z < 0:
        raise DomainError("tj_norm needs j >= 1 and z < 0")
    return bessel_k0(TWO_PI * j * math.sqrt(-z)) / TWO_PI


# --- strip field ---------------------------------------------------------


def psi_field(x2: float, y: float, z: float, k2: float, ctx: GratingSymbolContext, method: str = "mode") -> complex:
    """Quasi-periodic field of a point interaction in the strip.

    ``mode``: (1/2) sum_n e^{i n x2} exp(-s_n |y|) / s_n with
    s_n = sqrt((n+k2)^2 - z); needs y != 0.
    ``image``: sum_m e^{-i k2 (x2 + 2 pi m)} K0(sqrt(-z) rho_m) with
    rho_m = |(x2 + 2 pi m, y)|; needs z < 0.
    """
    if x2 == 0.0 and y == 0.0:
        raise DomainError("psi is singular at the origin")
    if not z < k2 * k2:
        raise DomainError("psi needs z < k2^2")
    ay = abs(y)
    if method == "mode":
        if ay == 0.0:
            raise DomainError("mode sum does not converge absolutely on y = 0; use the image form")
        # e^{-s|y|}/s < term_tol once s > log(1/term_tol)/|y|
        s_cut = (math.log(1.0 / ctx.term_tol) + 5.0) / ay + math.sqrt(abs(z)) + 1.0
        M = int(math.ceil(s_cut + abs(k2))) + 1
        n = np.arange(-M, M + 1)
        s = np.sqrt((n + k2) ** 2 - z)
        terms = np.exp(1j * n * x2 - s * ay) / s
        order = np.argsort(-np.abs(terms))[::-1]
        return complex(0.5 * np.sum(terms[order]))
    if method == "image":
        if not z < 0:
            raise DomainError("image form needs z < 0")
        a = math.sqrt(-z)
        out = 0j
        m = 0
        reach = _K0_NEGLIGIBLE / a
        while True:
            hit = False
            for mm in ((0,) if m == 0 else (m, -m)):
                t = x2 + TWO_PI * mm
                r = math.hypot(t, y)
                if a * r < _K0_NEGLIGIBLE:
                    out += np.exp(-1j * k2 * t) * bessel_k0(a * r)
                    hit = True
            if not hit and TWO_PI * m > reach + abs(x2):
                break
            m += 1
        return complex(out)
    raise ValueError(f"unknown method {method!r}")


# --- grating fiber -------------------------------------------------------


@dataclass(frozen=True)
class GratingFiberQuery:
    k: tuple[float, float]
    sigma: CouplingFunction
    N: int = 128
    lambda_tol: float = 1e-9
    threshold_margin: float = 1e-6
    modes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        try:
            k1, k2 = self.k
        except (TypeError, ValueError):
            raise ValueError("grating quasimomentum must be a pair (k1, k2)") from None
        object.__setattr__(self, "k", (gauge_k(k1), gauge_k(k2)))
        if self.N < self.sigma.max_index:
            raise ValueError(f"N={self.N} below coupling degree {self.sigma.max_index}")
        if not (self.lambda_tol > 0 and self.threshold_margin > 0):
            raise ValueError("tolerances must be positive")
        object.__setattr__(self, "modes", np.arange(-self.N, self.N + 1))

    @property
    def threshold(self) -> float:
        k1, k2 = self.k
        return k1 * k1 + k2 * k2


def threshold_distance(q: GratingFiberQuery, lam: float) -> float:
    """Distance from lam to {|n + k|^2 : n in Z^2} over the retained n1 and nearby n2."""
    k1, k2 = q.k
    a = (q.modes + k1) ** 2
    reach = math.sqrt(max(lam, 0.0)) + 2.0
    n2 = np.arange(-int(reach) - 1, int(reach) + 2)
    b = (n2 + k2) ** 2
    return float(np.abs(a[:, None] + b[None, :] - lam).min())


def _family(q: GratingFiberQuery, ctx: GratingSymbolContext) -> Family:
    ctx.check_k2(q.k[1])
    S = multiplication_matrix(q.sigma, q.N)
    modes, k = q.modes, q.k
    return Family(modes, S, lambda lam: alpha_grating(modes, lam, k, ctx), q.lambda_tol)


def assemble_A_grating(q: GratingFiberQuery, lam: float, ctx: GratingSymbolContext) -> HermitianMatrix:
    if threshold_distance(q, lam) < q.threshold_margin:
        raise ThresholdError(f"lambda={lam} within {q.threshold_margin:g} of a threshold")
    return _family(q, ctx).assemble(lam)


def counting_function_grating(q: GratingFiberQuery, lam: float, ctx: GratingSymbolContext) -> int:
    if not lam < q.threshold - q.threshold_margin:
        raise ThresholdError("counting needs lambda below k1^2 + k2^2 - margin")
    return _family(q, ctx).count(lam)


def lower_bound_grating(q: GratingFiberQuery, ctx: GratingSymbolContext, fam: Family | None = None) -> float:
    # diag entries are >= t(lam - k1^2, k2) below threshold, so A > 0 while
    # t(lam - k1^2, k2) + s_min > 0, i.e. lam < lambda_const(s_min, k2) + k1^2
    fam = fam or _family(q, ctx)
    s_min = float(eigvals_index(fam.coupling, 0, 0)[0])
    base = lambda_const(s_min, q.k[1], ctx)
    return q.k[0] ** 2 + base - 1e-3 * abs(base) - 1e-12


def discrete_spectrum_grating(q: GratingFiberQuery, ctx: GratingSymbolContext) -> list[GuidedMode]:
    """Eigenvalues below k1^2 + k2^2, ascending, with near-threshold flags."""
    fam = _family(q, ctx)
    k1 = q.k[0]
    div = np.abs(np.abs(q.modes + k1) - abs(k1)) == 0.0
    keep_modes = q.modes[~div]
    return branches.discrete_search(
        fam,
        lower_bound_grating(q, ctx, fam),
        q.threshold,
        q.threshold_margin,
        div,
        lambda: alpha_grating(keep_modes, q.threshold, q.k, ctx),
        q.k,
    )


def reconstruct_field_grating(m: GuidedMode, points, ctx: GratingSymbolContext, column: int = 0) -> np.ndarray:
    """u(x1, x2, y) = sum_n f_n e^{i n x1} psi(x2, y, lam - (n+k1)^2, k2) / sqrt(2 pi).

    ``points`` holds ``(x1, x2, y)`` triples off the wires.
    """
    if m.near_threshold:
        raise ValueError("near-threshold modes carry no coefficients")
    k1, k2 = m.k
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    f = m.coeffs[:, column]
    live = np.nonzero(np.abs(f) > 1e-15)[0]
    out = np.zeros(len(pts), dtype=complex)
    for i, (x1, x2, y) in enumerate(pts):
        acc = 0j
        for j in live:
            n = m.modes[j]
            z = m.lam - (n + k1) ** 2
            method = "image" if z < 0 and abs(y) < 0.5 else "mode"
            acc += f[j] * np.exp(1j * n * x1) * psi_field(x2, y, z, k2, ctx, method)
        out[i] = acc / math.sqrt(TWO_PI)
    return out
