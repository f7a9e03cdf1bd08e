"""Single straight wire with a 2 pi-periodic coupling.

At quasimomentum k the fiber operator H(k) has an eigenvalue lam below the
threshold k^2 exactly when the boundary operator

    A(lam, k) = diag(alpha_n(lam, k)) + sigma,
    alpha_n(lam, k) = log|(n + k)^2 - lam| / (4 pi) - varsigma,

has a kernel. For constant sigma = a the eigenvalues are
xi(a) + (n + k)^2 with xi(a) = -4 exp(-4 pi a - 2 gamma).
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from . import branches
from .branches import Family, GuidedMode
from .coupling import CouplingFunction, multiplication_matrix
from .errors import ConvergenceError, DomainError, ThresholdError
from .hermlin import HermitianMatrix, eigvals_index, smallest_singular_value
from .specfun import EULER_GAMMA, VARSIGMA, bessel_k0, k0_square_moment, principal_log

log = logging.getLogger(__name__)

FOUR_PI = 4.0 * math.pi
_COLLISION = 1e-300


def xi(alpha: float) -> float:
    """Eigenvalue shift xi(a) = -4 exp(-4 pi a - 2 gamma) of a constant coupling."""
    return -4.0 * math.exp(-FOUR_PI * alpha - 2.0 * EULER_GAMMA)


def gauge_k(k: float) -> float:
    """Map k = 1/2 to the equivalent -1/2; reject anything outside [-1/2, 1/2]."""
    k = float(k)
    if not -0.5 <= k <= 0.5:
        raise ValueError(f"quasimomentum {k} outside [-1/2, 1/2)")
    return -0.5 if k == 0.5 else k


@dataclass(frozen=True)
class LineFiberQuery:
    k: float
    sigma: CouplingFunction
    N: int = 128
    lambda_tol: float = 1e-9
    threshold_margin: float = 1e-6
    modes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "k", gauge_k(self.k))
        if self.N < self.sigma.max_index:
            raise ValueError(f"N={self.N} below coupling degree {self.sigma.max_index}")
        if not (self.lambda_tol > 0 and self.threshold_margin > 0):
            raise ValueError("tolerances must be positive")
        object.__setattr__(self, "modes", np.arange(-self.N, self.N + 1))

    @property
    def threshold(self) -> float:
        return self.k * self.k


def alpha_line(n, lam: float, k: float):
    """Diagonal symbol log|(n+k)^2 - lam| / (4 pi) - varsigma, vectorized over n."""
    gap = np.abs((np.asarray(n, dtype=float) + k) ** 2 - lam)
    if np.any(gap < _COLLISION):
        raise ThresholdError(f"lambda={lam} on a threshold (n+k)^2")
    out = np.log(gap) / FOUR_PI - VARSIGMA
    return float(out) if np.ndim(out) == 0 else out


def threshold_distance(q: LineFiberQuery, lam: float) -> float:
    return float(np.abs((q.modes + q.k) ** 2 - lam).min())


def _family(q: LineFiberQuery) -> Family:
    S = multiplication_matrix(q.sigma, q.N)
    modes, k = q.modes, q.k
    return Family(modes, S, lambda lam: alpha_line(modes, lam, k), q.lambda_tol)


def assemble_A_line(q: LineFiberQuery, lam: float) -> HermitianMatrix:
    if threshold_distance(q, lam) < q.threshold_margin:
        raise ThresholdError(f"lambda={lam} within {q.threshold_margin:g} of a threshold")
    return _family(q).assemble(lam)


def counting_function(q: LineFiberQuery, lam: float) -> int:
    """Number of eigenvalues of the truncated H(k) below lam."""
    if not lam < q.threshold - q.threshold_margin:
        raise ThresholdError("counting needs lambda below k^2 - margin")
    return _family(q).count(lam)


def lower_bound(q: LineFiberQuery, fam: Family | None = None) -> float:
    # A(lam) >= diag(alpha_n) + s_min and alpha_n >= alpha_0 below k^2,
    # so A > 0 as long as alpha_0(lam) + s_min > 0, i.e. lam < xi(s_min) + k^2
    fam = fam or _family(q)
    s_min = float(eigvals_index(fam.coupling, 0, 0)[0])
    return q.threshold + xi(s_min) * (1.0 + 1e-3) - 1e-12


def _diverging(q: LineFiberQuery) -> np.ndarray:
    return np.abs(np.abs(q.modes + q.k) - abs(q.k)) == 0.0


def discrete_spectrum(q: LineFiberQuery) -> list[GuidedMode]:
    """Eigenvalues of the truncated fiber operator below k^2, ascending.

    Raises ``InvariantViolation`` when nothing is found, which would
    contradict the existence of a guided mode for every k.
    """
    fam = _family(q)
    div = _diverging(q)
    keep_modes = q.modes[~div]
    return branches.discrete_search(
        fam,
        lower_bound(q, fam),
        q.threshold,
        q.threshold_margin,
        div,
        lambda: alpha_line(keep_modes, q.threshold, q.k),
        q.k,
    )


def embedded_kernel_search(
    q: LineFiberQuery, lambda_window: tuple[float, float], kernel_tol: float = 1e-8
) -> list[GuidedMode]:
    """Eigenvalues above k^2 whose coefficients vanish on every open mode.

    Thresholds inside the window split it into pieces, each kept
    ``threshold_margin`` away from the threshold; the window ends must
    themselves clear every threshold by the margin.
    """
    lo, hi = map(float, lambda_window)
    if not q.threshold < lo < hi:
        raise ValueError("window must lie above k^2 and be non-empty")
    for end in (lo, hi):
        if threshold_distance(q, end) < q.threshold_margin:
            raise ThresholdError(f"window end {end} touches a threshold")
    fam = _family(q)
    modes, k = q.modes, q.k
    cuts = np.unique((modes + k) ** 2)

    def open_mask(lam):
        return (modes + k) ** 2 < lam

    def closed_symbol(mask):
        sub = modes[mask]
        return lambda lam: alpha_line(sub, lam, k)

    return branches.embedded_search(
        fam, (lo, hi), open_mask, closed_symbol, cuts, q.threshold_margin, kernel_tol, k
    )


def check_truncation(q: LineFiberQuery) -> float:
    """Largest eigenvalue change between N and 2N (below-threshold modes)."""
    a = [m.lam for m in discrete_spectrum(q) if not m.near_threshold]
    q2 = LineFiberQuery(q.k, q.sigma, 2 * q.N, q.lambda_tol, q.threshold_margin)
    b = [m.lam for m in discrete_spectrum(q2) if not m.near_threshold]
    if len(a) != len(b):
        return math.inf
    return float(max((abs(x - y) for x, y in zip(a, b)), default=0.0))


def reconstruct_field(m: GuidedMode, grid: Sequence[tuple[float, float]], column: int = 0) -> np.ndarray:
    """u(x, y) = sum_n f_n e^{inx} K0(sqrt((n+k)^2 - lam) |y|) / sqrt(2 pi).

    ``grid`` holds ``(x, |y|)`` pairs with ``|y| > 0``. Only modes with a
    non-zero coefficient enter, so embedded modes are fine as long as their
    support is closed.
    """
    if m.near_threshold:
        raise ValueError("near-threshold modes carry no coefficients")
    pts = np.asarray(grid, dtype=float).reshape(-1, 2)
    y = np.abs(pts[:, 1])
    if np.any(y == 0.0):
        raise DomainError("field is logarithmically singular on the wire (y = 0)")
    f = m.coeffs[:, column]
    live = np.abs(f) > 0.0
    n = m.modes[live]
    s2 = (n + m.k) ** 2 - m.lam
    if np.any(s2 <= 0.0):
        raise ThresholdError("a supported mode is open at this energy")
    s = np.sqrt(s2)
    phase = np.exp(1j * np.outer(pts[:, 0], n))
    radial = bessel_k0(np.outer(y, s))
    return (phase * radial) @ f[live] / math.sqrt(2.0 * math.pi)


# --- complexified quasimomentum ------------------------------------------


@dataclass(frozen=True)
class ComplexifiedQuery:
    lam: float
    k: float
    delta: float
    etas: tuple[float, ...]

    def __post_init__(self):
        if self.k == 0.0:
            raise ValueError("complexification needs k != 0")
        if not 0.0 < self.delta < abs(self.k):
            raise ValueError("delta must lie in (0, |k|)")
        e = tuple(float(t) for t in self.etas)
        if not all(t > 0 for t in e) or list(e) != sorted(e):
            raise ValueError("etas must be positive and increasing")
        object.__setattr__(self, "etas", e)
        # (n + kappa)^2 = lam has the roots kappa = -n +- sqrt(lam)
        if self.lam >= 0:
            r = math.sqrt(self.lam)
            for root in (r, -r):
                frac = (root - self.k) - round(root - self.k)
                if abs(frac) <= self.delta:
                    raise ValueError("strip around k meets a threshold crossing")


def complex_symbol(modes: np.ndarray, lam: float, mu: complex) -> np.ndarray:
    """Analytic extension of alpha_n(lam, .) to complex quasimomentum mu.

    On closed modes this is log((n+mu)^2 - lam), on open modes
    log(lam - (n+mu)^2); both agree with log|(n+k)^2 - lam| at real mu = k
    and stay off the branch cut inside the strip.
    """
    w = (modes + mu) ** 2 - lam
    closed = (modes + mu.real) ** 2 > lam
    arg = np.where(closed, w, -w)
    if np.any((arg.imag == 0.0) & (arg.real <= 0.0)):
        raise DomainError("complexified symbol hit the branch cut")
    return principal_log(arg) / FOUR_PI - VARSIGMA


def analytic_constant(c: ComplexifiedQuery, N: int, samples: int = 201) -> float:
    """Estimate of C1 with |(n+mu)^2 - lam| >= C1 (1 + |Im mu|)^2 on the strip.

    The infimum is taken over |n| <= N + 2, a grid of real parts across the
    strip and the probed imaginary parts together with 0.
    """
    n = np.arange(-N - 2, N + 3)[:, None, None]
    kap = np.linspace(c.k - c.delta, c.k + c.delta, samples)[None, :, None]
    eta = np.array((0.0,) + c.etas)[None, None, :]
    mu = kap + 1j * eta
    ratio = np.abs((n + mu) ** 2 - c.lam) / (1.0 + eta) ** 2
    return float(ratio.min())


def complexified_bound_probe(
    c: ComplexifiedQuery, sigma: CouplingFunction, N: int
) -> list[tuple[float, float]]:
    """Smallest singular value of A(lam, k + i eta) for each probed eta."""
    modes = np.arange(-N, N + 1)
    S = multiplication_matrix(sigma, N).dense().astype(complex)
    out = []
    for eta in c.etas:
        mu = complex(c.k, eta)
        a = S.copy()
        a[np.diag_indices_from(a)] += complex_symbol(modes, c.lam, mu)
        out.append((eta, smallest_singular_value(a)))
    return out


def diagonal_floor(c: ComplexifiedQuery, N: int) -> list[float]:
    """Lower bound log(1+eta)/(2 pi) - (varsigma - log(C1)/(4 pi)) on the diagonal part."""
    c1 = analytic_constant(c, N)
    return [math.log1p(eta) / (2.0 * math.pi) - (VARSIGMA - math.log(c1) / FOUR_PI) for eta in c.etas]


# --- Hilbert-Schmidt norm of the trace of the free resolvent -------------


def hs_norm_identity(a: float, k: float, n_cut: int = 1000, tol: float = 1e-8) -> tuple[float, float]:
    """Squared HS norm of gamma R0(-a, k), by two independent routes.

    ``closed_form`` sums (1/2pi) sum_n ((n+k)^2 + a)^(-1) int K0^2 r dr, with
    the modes beyond ``n_cut`` replaced by an integral whose midpoint error
    is bounded and checked against ``tol``. ``kernel_quadrature``
    integrates the squared modulus of the periodized free resolvent kernel
    over one period cell.
    """
    if not a > 0:
        raise DomainError("a must be positive")
    return _hs_closed(a, k, n_cut, tol), _hs_kernel(a, k)


def _hs_closed(a: float, k: float, n_cut: int, tol: float) -> float:
    n = np.arange(-n_cut, n_cut + 1)
    head = float(np.sum(1.0 / ((n + k) ** 2 + a)))
    ra = math.sqrt(a)
    X = n_cut + 0.5
    tail = 0.0
    bound = 0.0
    for s in (k, -k):
        # sum_{m > n_cut} 1/((m+s)^2+a) ~ int_X^inf dx/((x+s)^2+a)
        tail += (0.5 * math.pi - math.atan((X + s) / ra)) / ra
        bound += 2.0 * (X + s) / ((X + s) ** 2 + a) ** 2 / 24.0
    if bound > tol:
        raise ConvergenceError(f"tail bound {bound:.2e} exceeds {tol:.2e}; raise n_cut")
    return (head + tail) * k0_square_moment() / (2.0 * math.pi)


def _hs_kernel(a: float, k: float, r_max: float | None = None) -> float:
    ra = math.sqrt(a)
    r_max = r_max or 45.0 / ra
    m = np.arange(-24, 25)
    shift = 2.0 * math.pi * m

    def g2(theta, r):
        # |G|^2 with G = sum_m e^{-ik(theta + 2 pi m)} e^{-sqrt(a) rho_m} / (4 pi rho_m)
        t = theta + shift
        rho = np.sqrt(t * t + r * r)
        g = np.sum(np.exp(-1j * k * t - ra * rho) / rho) / FOUR_PI
        return g.real**2 + g.imag**2

    def polar(rho, phi):
        # half-disk around the singularity, rho * rho_weight keeps it smooth
        theta, r = rho * math.cos(phi), rho * math.sin(phi)
        return g2(theta, r) * r * rho

    inner, _ = integrate.dblquad(polar, 0.0, math.pi, 0.0, math.pi, epsabs=1e-11, epsrel=1e-10)
    outer, _ = integrate.dblquad(
        lambda r, theta: g2(theta, r) * r,
        -math.pi,
        math.pi,
        lambda theta: math.sqrt(max(math.pi**2 - theta * theta, 0.0)),
        r_max,
        epsabs=1e-11,
        epsrel=1e-10,
    )
    return 4.0 * math.pi**2 * (inner + outer)
