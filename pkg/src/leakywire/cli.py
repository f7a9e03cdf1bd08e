"""Command-line front end.

    leakywire bands   --config run.json [--threads 8] [--csv out.csv] [--json gaps.json]
    leakywire fiber   --config run.json [--k 0.25] [--window 0.29 0.31]
    leakywire tvalues --z -1 -0.5 --k2 0 0.25
    leakywire modes   --config run.json
    leakywire verify

Exit status: 0 on success, 1 when an invariant check fails, 2 for bad input.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import sys
from typing import Sequence

import numpy as np

from . import bands as bs
from .config import ConfigError, RunConfig, parse_config
from .errors import ConvergenceError, DomainError, InvariantViolation, ThresholdError
from .fiber_grating import (
    GratingFiberQuery,
    GratingSymbolContext,
    discrete_spectrum_grating,
    reconstruct_field_grating,
    t_image,
    t_renormalized,
)
from .fiber_line import LineFiberQuery, discrete_spectrum, embedded_kernel_search, reconstruct_field

log = logging.getLogger("leakywire")

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG = 0, 1, 2


def fmt(x: float) -> str:
    return "%.17g" % x


def _load(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([f"config: cannot read {path}: {exc.strerror}"]) from None
    return parse_config(text)


def bands_csv(b: bs.BandStructure) -> str:
    out = io.StringIO()
    grating = b.model == "grating"
    out.write("k1,k2,band_index,lambda,threshold,flag\n" if grating else "k,band_index,lambda,threshold,flag\n")
    for s in b.solutions:
        kcols = f"{fmt(s.k[0])},{fmt(s.k[1])}" if grating else fmt(s.k)
        for j, (v, f) in enumerate(zip(s.values, s.flags)):
            out.write(f"{kcols},{j},{fmt(v)},{fmt(s.threshold)},{f}\n")
    return out.getvalue()


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _mode_json(m) -> dict:
    d = {
        "lambda": m.lam,
        "multiplicity": m.multiplicity,
        "near_threshold": m.near_threshold,
        "embedded": m.embedded,
        "residual": None if math.isnan(m.residual) else m.residual,
    }
    cols = []
    for c in range(m.coeffs.shape[1]):
        col = m.coeffs[:, c]
        keep = np.nonzero(np.abs(col) > 1e-12)[0]
        cols.append([[int(m.modes[i]), float(col[i].real), float(col[i].imag)] for i in keep])
    d["coefficients"] = cols
    return d


def cmd_bands(args, cfg: RunConfig) -> int:
    threads = args.threads if args.threads is not None else cfg.threads
    b = bs.sweep(cfg.model, cfg.coupling, cfg.kgrid, cfg.solver_params(threads))
    bad = bs.check_invariants(b)
    report = bs.detect_gaps(b)
    csv_path = args.csv or cfg.outputs.get("csv", "bands.csv")
    json_path = args.json or cfg.outputs.get("json", "gaps.json")
    _write(csv_path, bands_csv(b))
    doc = {
        "model": cfg.model,
        "N": cfg.N,
        "k_points": len(cfg.kgrid),
        "k_kind": cfg.kgrid.kind,
        "lambda_tol": cfg.lambda_tol,
        "threshold_margin": cfg.threshold_margin,
        "invariant_violations": bad,
        **report.to_dict(),
    }
    _write(json_path, json.dumps(doc, indent=2) + "\n")
    for v in bad:
        log.error("invariant: %s", v)
    return EXIT_INVARIANT if bad else EXIT_OK


def _single_k(cfg: RunConfig, override):
    if override is not None:
        k = override[0] if cfg.model == "line" else tuple(override)
        if cfg.model == "line" and len(override) != 1 or cfg.model == "grating" and len(override) != 2:
            raise ConfigError([f"--k: {cfg.model} model needs {1 if cfg.model == 'line' else 2} value(s)"])
        return k
    if cfg.k is not None:
        return cfg.k
    return cfg.kgrid.points[0]


def _fiber_modes(cfg: RunConfig, k):
    if cfg.model == "line":
        q = LineFiberQuery(k, cfg.coupling, cfg.N, cfg.lambda_tol, cfg.threshold_margin)
        return q, discrete_spectrum(q), None
    ctx = GratingSymbolContext(term_tol=cfg.term_tol)
    q = GratingFiberQuery(k, cfg.coupling, cfg.N, cfg.lambda_tol, cfg.threshold_margin)
    return q, discrete_spectrum_grating(q, ctx), ctx


def cmd_fiber(args, cfg: RunConfig) -> int:
    k = _single_k(cfg, args.k)
    q, modes, _ = _fiber_modes(cfg, k)
    window = tuple(args.window) if args.window else cfg.window
    embedded = []
    if window is not None:
        if cfg.model != "line":
            raise ConfigError(["window: embedded search is available for the line model only"])
        embedded = embedded_kernel_search(q, window)
    doc = {
        "model": cfg.model,
        "k": list(q.k) if isinstance(q.k, tuple) else q.k,
        "threshold": q.threshold,
        "N": cfg.N,
        "discrete": [_mode_json(m) for m in modes],
        "embedded": [_mode_json(m) for m in embedded],
        "window": list(window) if window else None,
    }
    _write(args.json or cfg.outputs.get("json"), json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def cmd_modes(args, cfg: RunConfig) -> int:
    k = _single_k(cfg, args.k)
    _, modes, ctx = _fiber_modes(cfg, k)
    regular = [m for m in modes if not m.near_threshold]
    idx = cfg.field_spec.get("band_index", 0)
    if idx >= len(regular):
        raise ConfigError([f"field.band_index: only {len(regular)} resolved mode(s) at k={k}"])
    m = regular[idx]
    xs = cfg.field_spec.get("x", [0.0])
    ys = cfg.field_spec.get("y", [0.5, 1.0, 2.0])
    out = io.StringIO()
    if cfg.model == "line":
        pts = [(x, y) for x in xs for y in ys]
        u = reconstruct_field(m, pts)
        out.write("x,y,re,im,abs\n")
        for (x, y), v in zip(pts, u):
            out.write(f"{fmt(x)},{fmt(y)},{fmt(v.real)},{fmt(v.imag)},{fmt(abs(v))}\n")
    else:
        x2s = cfg.field_spec.get("x2", [0.0])
        pts = [(x, x2, y) for x in xs for x2 in x2s for y in ys]
        u = reconstruct_field_grating(m, pts, ctx)
        out.write("x1,x2,y,re,im,abs\n")
        for (x, x2, y), v in zip(pts, u):
            out.write(f"{fmt(x)},{fmt(x2)},{fmt(y)},{fmt(v.real)},{fmt(v.imag)},{fmt(abs(v))}\n")
    _write(args.csv or cfg.outputs.get("csv"), out.getvalue())
    return EXIT_OK


def cmd_tvalues(args) -> int:
    ctx = GratingSymbolContext(term_tol=args.term_tol, mode_cutoff=args.mode_cutoff)
    out = io.StringIO()
    out.write("z,k2,t_image,t_renormalized,discrepancy\n")
    for k2 in args.k2:
        for z in args.z:
            if not z < k2 * k2:
                raise DomainError(f"z={z} must lie below k2^2={k2 * k2}")
            ren = t_renormalized(z, k2, ctx)
            img = t_image(z, k2, ctx.term_tol, ctx.image_cutoff) if z < 0 else math.nan
            out.write(f"{fmt(z)},{fmt(k2)},{fmt(img)},{fmt(ren)},{fmt(abs(img - ren))}\n")
    _write(args.csv, out.getvalue())
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_all

    results = run_all()
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="leakywire", description="Guided modes and bands of periodic leaky wires.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bands", help="band curves (CSV) and gap report (JSON)")
    b.add_argument("--config", required=True)
    b.add_argument("--threads", type=int, default=None, help="worker threads; overrides the config")
    b.add_argument("--csv", help="curve CSV path ('-' for stdout)")
    b.add_argument("--json", help="gap report path ('-' for stdout)")

    f = sub.add_parser("fiber", help="discrete and embedded spectrum at one k (JSON)")
    f.add_argument("--config", required=True)
    f.add_argument("--k", type=float, nargs="+", help="quasimomentum (one value, or two for the grating)")
    f.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"), help="embedded search window")
    f.add_argument("--json", help="output path (default stdout)")

    m = sub.add_parser("modes", help="field samples of one guided mode (CSV)")
    m.add_argument("--config", required=True)
    m.add_argument("--k", type=float, nargs="+")
    m.add_argument("--csv", help="output path (default stdout)")

    t = sub.add_parser("tvalues", help="t(z, k2) in both representations (CSV)")
    t.add_argument("--z", type=float, nargs="+", required=True)
    t.add_argument("--k2", type=float, nargs="+", default=[0.0])
    t.add_argument("--term-tol", type=float, default=1e-14)
    t.add_argument("--mode-cutoff", type=int, default=4000)
    t.add_argument("--csv", help="output path (default stdout)")

    sub.add_parser("verify", help="run the self-verification suite")
    return p


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "tvalues":
            return cmd_tvalues(args)
        if args.command == "verify":
            return cmd_verify(args)
        cfg = _load(args.config)
        return {"bands": cmd_bands, "fiber": cmd_fiber, "modes": cmd_modes}[args.command](args, cfg)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except (ThresholdError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvariantViolation, ConvergenceError, ArithmeticError) as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
