"""Self-verification suite: closed forms, inequalities and dual routes.

Each check returns a ``CheckResult``; ``run_all`` executes them in order.
Reference numbers come from closed forms evaluated here (xi, coth), never
from the solver under test.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import coupling as cp
from .fiber_grating import (
    GratingFiberQuery,
    GratingSymbolContext,
    discrete_spectrum_grating,
    lambda_const,
    psi_field,
    t_eval,
    t_image,
    t_renormalized,
    tunneling_slope,
)
from .fiber_line import (
    ComplexifiedQuery,
    LineFiberQuery,
    complexified_bound_probe,
    discrete_spectrum,
    embedded_kernel_search,
    hs_norm_identity,
    xi,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {self.name:<32s} measured={self.measured:.3e}  tol={self.tolerance:.1e}  {self.detail}"


def _expanded(modes) -> list[float]:
    return sorted(m.lam for m in modes for _ in range(m.multiplicity))


def constant_line_oracle(alpha: float, k: float, reach: int = 64) -> list[float]:
    n = np.arange(-reach, reach + 1)
    vals = xi(alpha) + (n + k) ** 2
    return sorted(float(v) for v in vals if v < k * k)


def check_constant_line() -> CheckResult:
    t0 = time.perf_counter()
    worst = 0.0
    bad = []
    for alpha in (-0.1, 0.0, 0.1):
        for k in (0.0, 0.25, -0.5):
            got = _expanded(discrete_spectrum(LineFiberQuery(k, cp.constant(alpha), N=64)))
            want = constant_line_oracle(alpha, k)
            if len(got) != len(want):
                bad.append(f"count at alpha={alpha}, k={k}: {len(got)} vs {len(want)}")
                worst = math.inf
                continue
            worst = max(worst, max(abs(a - b) for a, b in zip(got, want)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and dt <= 10.0 and not bad
    return CheckResult("1 constant coupling (line)", ok, worst, 1e-8, f"runtime {dt:.2f}s; " + "; ".join(bad))


def check_multiplicity() -> CheckResult:
    ms = [m for m in discrete_spectrum(LineFiberQuery(0.0, cp.constant(0.0), N=64)) if not m.near_threshold]
    want = [(xi(0.0), 1), (xi(0.0) + 1.0, 2)]
    got = [(m.lam, m.multiplicity) for m in ms]
    ok = len(got) == 2 and [g[1] for g in got] == [1, 2]
    err = max((abs(g[0] - w[0]) for g, w in zip(got, want)), default=math.inf) if ok else math.inf
    ok = ok and err <= 1e-6
    return CheckResult("2 multiplicities (1, 2)", ok, err, 1e-6, f"found {[(round(a, 7), b) for a, b in got]}")


def check_t_dual() -> CheckResult:
    t0 = time.perf_counter()
    ctx = GratingSymbolContext()
    worst = 0.0
    for k2 in np.linspace(-0.5, 0.5, 11):
        for z in np.linspace(-10.0, -0.05, 50):
            worst = max(worst, abs(t_renormalized(z, k2, ctx) - t_image(z, k2)))
    dt = time.perf_counter() - t0
    return CheckResult("3 t dual representation", worst <= 1e-9 and dt <= 30.0, worst, 1e-9, f"runtime {dt:.2f}s")


def check_constant_grating() -> CheckResult:
    ctx = GratingSymbolContext()
    lam0 = lambda_const(0.0, 0.0, ctx)
    resid = abs(t_eval(lam0, 0.0, ctx))
    got = _expanded(m for m in discrete_spectrum_grating(GratingFiberQuery((0.0, 0.0), cp.constant(0.0), N=64), ctx)
                    if not m.near_threshold)
    n = np.arange(-64, 65)
    want = sorted(float(v) for v in lam0 + n**2.0 if v < 0.0)
    err = max((abs(a - b) for a, b in zip(got, want)), default=0.0) if len(got) == len(want) else math.inf
    ok = err <= 1e-7 and resid <= 1e-10 and abs(lam0 + 1.263) <= 1e-3
    return CheckResult("4 constant coupling (grating)", ok, err, 1e-7, f"lambda(0,0)={lam0:.10f}, |t|={resid:.1e}")


def random_couplings(count: int = 10, seed: int = 20240601) -> list[cp.CouplingFunction]:
    """Real trigonometric polynomials of degree <= 3 with coefficients in [-0.2, 0.2]."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        deg = int(rng.integers(1, 4))
        out.append(cp.trigonometric(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2, deg), rng.uniform(-0.2, 0.2, deg)))
    return out


def check_inequalities(seed: int = 20240601, N: int = 64) -> CheckResult:
    rng = np.random.default_rng(seed + 1)
    ctx = GratingSymbolContext()
    worst = -math.inf
    fails = []
    slack = 1e-9
    for i, sigma in enumerate(random_couplings(seed=seed)):
        for _ in range(5):
            k = float(rng.uniform(-0.5, 0.5))
            lam1 = discrete_spectrum(LineFiberQuery(k, sigma, N=N))[0].lam
            upper = xi(sigma.mean) + k * k
            lower = xi(sigma.ess_inf) + k * k
            v = max(lam1 - upper, lower - lam1)
            worst = max(worst, v)
            if v > slack:
                fails.append(f"line sigma#{i} k={k:.3f}")
            kk = (float(rng.uniform(-0.5, 0.5)), float(rng.uniform(-0.5, 0.5)))
            lam1 = discrete_spectrum_grating(GratingFiberQuery(kk, sigma, N=N), ctx)[0].lam
            upper = lambda_const(sigma.mean, kk[1], ctx) + kk[0] ** 2
            lower = lambda_const(sigma.ess_inf, kk[1], ctx) + kk[0] ** 2
            v = max(lam1 - upper, lower - lam1)
            worst = max(worst, v)
            if v > slack:
                fails.append(f"grating sigma#{i} k={kk}")
    return CheckResult("5 trial and sandwich bounds", not fails, worst, slack,
                       "largest signed violation; " + (", ".join(fails) or "100 cases clean"))


def check_psi_dual(seed: int = 7) -> CheckResult:
    rng = np.random.default_rng(seed)
    ctx = GratingSymbolContext()
    worst = 0.0
    for _ in range(20):
        x2 = rng.uniform(-math.pi, math.pi)
        y = rng.uniform(0.05, 2.0) * rng.choice((-1.0, 1.0))
        z = rng.uniform(-4.0, -0.5)
        k2 = rng.uniform(-0.5, 0.5)
        worst = max(worst, abs(psi_field(x2, y, z, k2, ctx, "mode") - psi_field(x2, y, z, k2, ctx, "image")))
    return CheckResult("6 psi dual representation", worst <= 1e-9, worst, 1e-9, "20 points")


def check_hs_norm() -> CheckResult:
    closed, quad = hs_norm_identity(1.0, 0.0)
    ref = 1.0 / math.tanh(math.pi) / 4.0
    err = max(abs(closed - quad), abs(closed - ref), abs(quad - ref))
    return CheckResult("7 Hilbert-Schmidt identity", err <= 1e-4, err, 1e-4,
                       f"closed={closed:.8f} quadrature={quad:.8f} coth(pi)/4={ref:.8f}")


def check_tunneling() -> CheckResult:
    slope = tunneling_slope(-0.5, (0.3, 0.25), GratingSymbolContext())
    return CheckResult("8 tunneling decay slope", slope <= -6.0, slope, -6.0, "|n| = 1..5, both signs")


def check_complexified() -> CheckResult:
    c = ComplexifiedQuery(0.5, 0.25, 0.02, (1e2, 1e3, 1e4))
    pairs = complexified_bound_probe(c, cp.trigonometric(0.1, [0.05]), 128)
    s = [p[1] for p in pairs]
    ratios = [p[1] / math.log1p(p[0]) for p in pairs]
    ok = min(ratios) >= 0.05 and all(b >= a for a, b in zip(s, s[1:]))
    return CheckResult("9 complexified resolvent bound", ok, min(ratios), 0.05,
                       "s_min=" + ", ".join(f"{v:.4f}" for v in s) + "; ratio=" + ", ".join(f"{r:.4f}" for r in ratios))


def check_embedded() -> CheckResult:
    q = LineFiberQuery(0.25, cp.constant(0.0), N=128)
    found = embedded_kernel_search(q, (0.29, 0.31))
    want = xi(0.0) + 1.25**2
    if len(found) != 1 or found[0].multiplicity != 1:
        return CheckResult("10 embedded eigenvalue", False, math.inf, 1e-6, f"found {len(found)} modes")
    m = found[0]
    f = m.coeffs[:, 0]
    one = int(np.nonzero(m.modes == 1)[0][0])
    others = float(np.abs(np.delete(f, one)).max())
    err = abs(m.lam - want)
    ok = err <= 1e-6 and others <= 1e-12 and abs(abs(f[one]) - 1.0) <= 1e-12
    return CheckResult("10 embedded eigenvalue", ok, err, 1e-6,
                       f"lambda={m.lam:.10f}, |f_1|={abs(f[one]):.15f}, off-support max={others:.1e}")


CHECKS: tuple[Callable[[], CheckResult], ...] = (
    check_constant_line,
    check_multiplicity,
    check_t_dual,
    check_constant_grating,
    check_inequalities,
    check_psi_dual,
    check_hs_norm,
    check_tunneling,
    check_complexified,
    check_embedded,
)


def run_all() -> list[CheckResult]:
    out = []
    for check in CHECKS:
        try:
            out.append(check())
        except Exception as exc:  # a crash is a failed check, not a crashed suite
            out.append(CheckResult(check.__name__, False, math.nan, math.nan, f"{type(exc).__name__}: {exc}"))
    return out
