"""JSON run configuration.

Schema (all keys except ``model`` and ``coupling`` optional)::

    {
      "model": "line" | "grating",
      "coupling": {"type": "constant", "value": 0.1}
                | {"type": "fourier", "coeffs": {"0": 0.25, "1": [0.1, 0.0], "-1": [0.1, 0.0]}}
                | {"type": "samples", "values": [...]}           # 2^p values on [-pi, pi)
                | {"type": "trig", "mean": 0.25, "cos": [0.2], "sin": []},
      "k_spec": 201 | [k, ...] | {"grid": 201}                   # line
              | {"product": [41, 41]} | {"path": [[k1, k2], ...], "per_segment": 10}
              | [[k1, k2], ...],                                  # grating
      "N": 128,
      "lambda_tol": 1e-9, "term_tol": 1e-14, "threshold_margin": 1e-6,
      "threads": 1 | "auto",
      "outputs": {"csv": "bands.csv", "json": "gaps.json"},
      "k": 0.25 | [k1, k2],                                       # fiber / modes
      "window": [lo, hi],                                         # fiber, embedded search
      "field": {"band_index": 0, "x": [...], "y": [...], "x2": [...]}   # modes
    }

Fourier coefficients follow the unitary convention, so a constant ``a``
has ``coeffs["0"] == sqrt(2 pi) a``. Complex values are ``[re, im]``.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Any

from . import coupling as cp
from .bands import KGrid, SolverParams

DEFAULTS = {"N": 128, "lambda_tol": 1e-9, "term_tol": 1e-14, "threshold_margin": 1e-6}
LINE_GRID = 201
GRATING_GRID = (41, 41)
_TOP_KEYS = {
    "model", "coupling", "k_spec", "N", "lambda_tol", "term_tol", "threshold_margin",
    "threads", "outputs", "k", "window", "field",
}


class ConfigError(ValueError):
    """Schema violations; ``errors`` lists every offending field."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid config:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class RunConfig:
    model: str
    coupling: cp.CouplingFunction
    coupling_spec: dict
    kgrid: KGrid
    N: int = 128
    lambda_tol: float = 1e-9
    term_tol: float = 1e-14
    threshold_margin: float = 1e-6
    threads: int = 1
    outputs: dict = field(default_factory=dict)
    k: Any = None
    window: tuple[float, float] | None = None
    field_spec: dict = field(default_factory=dict)

    def solver_params(self, threads: int | None = None) -> SolverParams:
        return SolverParams(self.N, self.lambda_tol, self.threshold_margin, self.term_tol,
                            self.threads if threads is None else threads)


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _complex(v, where: str, errors: list[str]) -> complex | None:
    if _is_number(v):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(_is_number(t) for t in v):
        return complex(v[0], v[1])
    errors.append(f"{where}: expected a number or [re, im], got {v!r}")
    return None


def _parse_coupling(spec, errors: list[str]) -> cp.CouplingFunction | None:
    if not isinstance(spec, dict):
        errors.append("coupling: expected an object with a 'type' field")
        return None
    kind = spec.get("type")
    n_err = len(errors)
    try:
        if kind == "constant":
            v = spec.get("value")
            if not _is_number(v):
                errors.append("coupling.value: expected a finite number")
                return None
            return cp.constant(v)
        if kind == "fourier":
            raw = spec.get("coeffs")
            if not isinstance(raw, dict) or not raw:
                errors.append("coupling.coeffs: expected a non-empty {mode: value} object")
                return None
            coeffs = {}
            for key, v in raw.items():
                try:
                    m = int(key)
                except (TypeError, ValueError):
                    errors.append(f"coupling.coeffs: mode key {key!r} is not an integer")
                    continue
                c = _complex(v, f"coupling.coeffs[{key}]", errors)
                if c is not None:
                    coeffs[m] = c
            if len(errors) > n_err:
                return None
            return cp.from_fourier(coeffs)
        if kind == "samples":
            vals = spec.get("values")
            if not isinstance(vals, list) or not all(_is_number(v) for v in vals):
                errors.append("coupling.values: expected a list of finite numbers")
                return None
            n = len(vals)
            if n < 8 or n & (n - 1):
                errors.append(f"coupling.values: length {n} is not a power of two >= 8")
                return None
            return cp.from_samples(vals)
        if kind == "trig":
            mean = spec.get("mean", 0.0)
            cos = spec.get("cos", [])
            sin = spec.get("sin", [])
            ok = _is_number(mean)
            if not ok:
                errors.append("coupling.mean: expected a finite number")
            for name, arr in (("cos", cos), ("sin", sin)):
                if not isinstance(arr, list) or not all(_is_number(v) for v in arr):
                    errors.append(f"coupling.{name}: expected a list of finite numbers")
                    ok = False
            return cp.trigonometric(mean, cos, sin) if ok else None
    except ValueError as exc:
        errors.append(f"coupling: {exc}")
        return None
    errors.append(f"coupling.type: expected constant|fourier|samples|trig, got {kind!r}")
    return None


def _grid_size(v, where: str, errors: list[str]) -> int | None:
    if isinstance(v, int) and not isinstance(v, bool) and v >= 1:
        return v
    errors.append(f"{where}: expected a positive integer, got {v!r}")
    return None


def _in_zone(k) -> bool:
    return _is_number(k) and -0.5 <= k <= 0.5


def _pair(v) -> bool:
    return isinstance(v, (list, tuple)) and len(v) == 2 and all(_in_zone(t) for t in v)


def _parse_kgrid(model: str, spec, errors: list[str]) -> KGrid | None:
    if model == "line":
        if spec is None:
            return KGrid.line(LINE_GRID)
        if isinstance(spec, dict) and set(spec) == {"grid"}:
            n = _grid_size(spec["grid"], "k_spec.grid", errors)
            return KGrid.line(n) if n else None
        if isinstance(spec, int) and not isinstance(spec, bool):
            n = _grid_size(spec, "k_spec", errors)
            return KGrid.line(n) if n else None
        if _is_number(spec):
            spec = [spec]
        if isinstance(spec, list) and spec and all(_in_zone(k) for k in spec):
            return KGrid.from_scalars(spec)
        errors.append("k_spec: line model needs a grid size, {'grid': n} or a list of k in [-1/2, 1/2]")
        return None
    if spec is None:
        return KGrid.product(*GRATING_GRID)
    if isinstance(spec, dict) and "product" in spec:
        p = spec["product"]
        if isinstance(p, list) and len(p) == 2:
            n1 = _grid_size(p[0], "k_spec.product[0]", errors)
            n2 = _grid_size(p[1], "k_spec.product[1]", errors)
            return KGrid.product(n1, n2) if n1 and n2 else None
        errors.append("k_spec.product: expected [n1, n2]")
        return None
    if isinstance(spec, dict) and "path" in spec:
        verts = spec["path"]
        per = spec.get("per_segment", 0)
        if not isinstance(per, int) or isinstance(per, bool) or per < 0:
            errors.append("k_spec.per_segment: expected a non-negative integer")
            return None
        if isinstance(verts, list) and verts and all(_pair(v) for v in verts):
            return KGrid.path(verts, per)
        errors.append("k_spec.path: expected a list of [k1, k2] pairs in [-1/2, 1/2]^2")
        return None
    if isinstance(spec, list) and spec and all(_pair(v) for v in spec):
        return KGrid.path(spec)
    errors.append("k_spec: grating model needs {'product': [n1, n2]}, {'path': [...]} or a list of [k1, k2] pairs")
    return None


def parse_config(text: str) -> RunConfig:
    """Validate a JSON document; every schema violation is reported at once."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"malformed JSON: {exc}"]) from None
    if not isinstance(doc, dict):
        raise ConfigError(["top level: expected a JSON object"])
    errors: list[str] = []
    for key in sorted(set(doc) - _TOP_KEYS):
        errors.append(f"{key}: unknown field")
    model = doc.get("model")
    if model not in ("line", "grating"):
        errors.append(f"model: expected 'line' or 'grating', got {model!r}")
    if "coupling" not in doc:
        errors.append("coupling: required field missing")
        sigma = None
    else:
        sigma = _parse_coupling(doc["coupling"], errors)
    kgrid = _parse_kgrid(model, doc.get("k_spec"), errors) if model in ("line", "grating") else None

    vals = {}
    N = doc.get("N", DEFAULTS["N"])
    if not (isinstance(N, int) and not isinstance(N, bool) and N >= 1):
        errors.append(f"N: expected a positive integer, got {N!r}")
    elif sigma is not None and N < sigma.max_index:
        errors.append(f"N: {N} is below the coupling degree {sigma.max_index}")
    vals["N"] = N
    for key in ("lambda_tol", "term_tol", "threshold_margin"):
        v = doc.get(key, DEFAULTS[key])
        if not (_is_number(v) and v > 0):
            errors.append(f"{key}: expected a positive number, got {v!r}")
        vals[key] = v

    threads = doc.get("threads", 1)
    if threads == "auto":
        threads = os.cpu_count() or 1
    elif not (isinstance(threads, int) and not isinstance(threads, bool) and threads >= 1):
        errors.append(f"threads: expected a positive integer or 'auto', got {threads!r}")

    outputs = doc.get("outputs", {})
    if not isinstance(outputs, dict) or not all(isinstance(v, str) for v in outputs.values()):
        errors.append("outputs: expected an object of file paths")
        outputs = {}
    bad_out = set(outputs) - {"csv", "json"}
    if bad_out:
        errors.append(f"outputs: unknown keys {sorted(bad_out)}")

    k = doc.get("k")
    if k is not None:
        if model == "line" and not _in_zone(k):
            errors.append("k: line model needs a number in [-1/2, 1/2]")
        if model == "grating" and not _pair(k):
            errors.append("k: grating model needs a pair [k1, k2] in [-1/2, 1/2]^2")
    window = doc.get("window")
    if window is not None:
        if not (isinstance(window, list) and len(window) == 2 and all(_is_number(w) for w in window)
                and window[0] < window[1]):
            errors.append("window: expected [lo, hi] with lo < hi")
        elif model == "grating":
            errors.append("window: embedded search is available for the line model only")
    fspec = doc.get("field", {})
    if not isinstance(fspec, dict):
        errors.append("field: expected an object")
        fspec = {}
    else:
        for key in ("x", "y", "x2"):
            if key in fspec and not (isinstance(fspec[key], list) and all(_is_number(v) for v in fspec[key])):
                errors.append(f"field.{key}: expected a list of numbers")
        if "band_index" in fspec and not (isinstance(fspec["band_index"], int) and fspec["band_index"] >= 0):
            errors.append("field.band_index: expected a non-negative integer")

    if errors:
        raise ConfigError(errors)
    return RunConfig(
        model=model,
        coupling=sigma,
        coupling_spec=doc["coupling"],
        kgrid=kgrid,
        threads=threads,
        outputs=dict(outputs),
        k=tuple(k) if isinstance(k, list) else k,
        window=tuple(window) if window else None,
        field_spec=dict(fspec),
        **vals,
    )
