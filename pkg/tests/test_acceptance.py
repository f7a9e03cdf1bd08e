"""Acceptance criteria, each at its stated tolerance.

Criteria 1-10 are the self-verification checks; 11-13 exercise the sweep
and the command line.
"""

import filecmp
import json
import shutil
import subprocess
import sys
import time

import numpy as np
import pytest

from leakywire import bands as bs
from leakywire import coupling as cp
from leakywire.cli import run
from leakywire.verify import CHECKS


@pytest.mark.parametrize("check", CHECKS, ids=[c.__name__ for c in CHECKS])
def test_verify_check(check, record_property):
    res = check()
    record_property("criterion", res.name)
    print(res.line())
    assert res.passed, res.line()


def test_gap_report_stability(record_property):
    record_property("criterion", "11 gap-report stability")
    sigma = cp.trigonometric(0.25, [0.2])
    t0 = time.perf_counter()
    coarse = bs.detect_gaps(bs.sweep("line", sigma, bs.KGrid.line(201), bs.SolverParams(N=128)))
    fine = bs.detect_gaps(bs.sweep("line", sigma, bs.KGrid.line(401), bs.SolverParams(N=256)))
    dt = time.perf_counter() - t0
    print(f"coarse gaps {coarse.gaps}, fine gaps {fine.gaps}, runtime {dt:.1f}s")
    assert coarse.union and coarse.union[0][0] < 0
    assert len(coarse.gaps) == len(fine.gaps)
    assert np.abs(np.array(coarse.gaps) - np.array(fine.gaps)).max(initial=0.0) <= 1e-5
    assert dt <= 120.0


def test_thread_determinism(tmp_path, record_property):
    record_property("criterion", "12 thread determinism")
    cfg = tmp_path / "mod.json"
    cfg.write_text(json.dumps({"model": "line", "coupling": {"type": "trig", "mean": 0.25, "cos": [0.2]}}))
    outs = []
    for threads in (1, 8):
        out = tmp_path / f"bands_{threads}.csv"
        assert run(["bands", "--config", str(cfg), "--threads", str(threads),
                    "--csv", str(out), "--json", str(tmp_path / f"gaps_{threads}.json")]) == 0
        outs.append(out)
    assert filecmp.cmp(outs[0], outs[1], shallow=False)
    assert outs[0].read_bytes() == outs[1].read_bytes()


def test_verify_subcommand(record_property):
    record_property("criterion", "13 verify subcommand")
    exe = shutil.which("leakywire")
    cmd = [exe, "verify"] if exe else [sys.executable, "-m", "leakywire.cli", "verify"]
    t0 = time.perf_counter()
    proc = subprocess.run(cmd, capture_output=True, text=True, timeout=300)
    dt = time.perf_counter() - t0
    print(proc.stdout)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert proc.stdout.count("PASS") == 10
    assert dt <= 300.0
