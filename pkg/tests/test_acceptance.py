"""Acceptance criteria, one test and one printed PASS/FAIL line each.

Thresholds are pinned here; every multi-level criterion runs a bundled
scenario (see ``moutard_lab/scenarios_data``) through the same pipeline the
CLI uses.  Run alone with ``pytest tests/test_acceptance.py -v``.
"""
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from moutard_lab import (build_field, constant_field, identity_field, make_grid, omega,
                         omega_hat, solve_gauge, solve_system2, solve_system3, transform_prop1,
                         transform_theorem1)
from moutard_lab.grid import sup_norm
from moutard_lab.scenarios import builtin
from moutard_lab.verify import order_estimate, run_levels

from conftest import ACCEPTANCE_LINES

DATA = Path(__file__).parent / "data"


def report(number, title, ok, detail):
    line = f"criterion {number} {'PASS' if ok else 'FAIL'} {title}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def metric(levels, name):
    return [lv.metrics[name] for lv in levels]


def orders(values):
    return [order_estimate(a, b) for a, b in zip(values, values[1:])]


def fmt(values):
    return "[" + ", ".join("%.3g" % v for v in values) + "]"


def within(values, lo, hi=math.inf):
    return all(lo <= v <= hi for v in values)  # NaN compares False


def timed_levels(name):
    t0 = time.perf_counter()
    levels = run_levels(builtin(name))
    return levels, time.perf_counter() - t0


def test_criterion_1_scalar_covariance():
    levels, seconds = timed_levels("theorem1-scalar-exact")
    assert [lv.n for lv in levels] == [65, 129, 257]
    r2, r3 = metric(levels, "residual_psi_t"), metric(levels, "residual_psi_plus_t")
    o2, o3 = orders(r2), orders(r3)
    ok = (within(o2, 1.6, 2.4) and within(o3, 1.6, 2.4) and r2[-1] <= 1e-4 and r3[-1] <= 1e-4
          and seconds <= 10)
    report(1, "scalar covariance", ok,
           f"psi_t residual {fmt(r2)} orders {fmt(o2)}; psi+_t residual {fmt(r3)} orders "
           f"{fmt(o3)}; need order 2.0 +- 0.4, n=257 <= 1e-4, runtime {seconds:.1f}s <= 10s")


def test_criterion_2_matrix_covariance():
    sc = builtin("theorem1-matrix-neumann")
    assert sc.N == 2 and sc.pompeiu_mode == "direct" and sc.sizes[-1] == 129
    levels, seconds = timed_levels("theorem1-matrix-neumann")
    r2, r3 = metric(levels, "residual_psi_t"), metric(levels, "residual_psi_plus_t")
    o2, o3 = orders(r2), orders(r3)
    ok = (within(o2, 0.8) and within(o3, 0.8) and r2[-1] <= 1e-2 and r3[-1] <= 1e-2
          and seconds <= 60)
    report(2, "matrix covariance", ok,
           f"psi_t {fmt(r2)} orders {fmt(o2)}; psi+_t {fmt(r3)} orders {fmt(o3)}; "
           f"need order >= 0.8, n=129 <= 1e-2, runtime {seconds:.1f}s <= 60s")


def test_criterion_3_pivot_annihilation():
    g = make_grid(-1, 1, -1, 1, 65, 65)
    B = build_field(g, 2, {"kind": "gaussian-bump", "matrix": [[0.05, 0.025], ["-0.015j", 0.04]],
                           "sigma": 0.3})
    F = solve_system2(B, identity_field(g, 2))
    Fp = solve_system3(B, identity_field(g, 2))
    W = omega(F, Fp, C0=10j)
    t1 = transform_theorem1(B, F, Fp, F, Fp, W, W, W)
    A = constant_field(g, 0.05 * np.array([[1, 2], [0.5, -1]]))
    G = solve_gauge(A)
    Wh = omega_hat(G, Fp, constant=[[3, 0], [0, 2]])
    p1 = transform_prop1(A, G, Fp, G, Wh, Wh)
    vals = [sup_norm(t1.psi_t), sup_norm(t1.psi_plus_t), sup_norm(p1.psi_t)]
    report(3, "pivot annihilation", max(vals) <= 1e-12,
           f"sup norms (two-sided psi, two-sided psi+, one-sided psi) {fmt(vals)} <= 1e-12")


def test_criterion_4_potential_well_defined():
    levels = run_levels(builtin("potential-exact"))
    assert levels[-1].n == 129
    path, skew = metric(levels, "path_defect"), metric(levels, "skew_real_defect")
    integ = metric(levels, "integrability_defect")
    op, os_ = orders(path), orders(skew)
    ok = (path[-1] <= 1e-3 and skew[-1] <= 1e-3 and within(op, 1.6, 2.4)
          and within(os_, 1.6, 2.4) and max(integ) <= 1e-10)
    report(4, "potential well-definedness", ok,
           f"path_defect {fmt(path)} orders {fmt(op)}; skew_real_defect {fmt(skew)} orders "
           f"{fmt(os_)}; integrability {fmt(integ)}; need n=129 <= 1e-3, order 2.0 +- 0.4, "
           f"integrability <= 1e-10")


def test_criterion_5_prop1_covariance():
    levels = run_levels(builtin("prop1-identity"))
    assert [lv.n for lv in levels] == [65, 129, 257]
    res, rt = metric(levels, "residual_psi_t"), metric(levels, "omega_hat_roundtrip")
    o_res, o_rt = orders(res), orders(rt)
    report(5, "one-sided covariance", within(o_res, 0.8) and within(o_rt, 0.8),
           f"residual {fmt(res)} orders {fmt(o_res)}; omega_hat round trip {fmt(rt)} orders "
           f"{fmt(o_rt)}; need order >= 0.8")


def test_criterion_6_gauge_reduction():
    levels = run_levels(builtin("gauge-reduction"))
    red = metric(levels, "reduced_residual")
    bound = [2 * (i + f) for i, f in zip(metric(levels, "input_residual"),
                                         metric(levels, "gauge_floor"))]
    ok = all(r <= b for r, b in zip(red, bound))
    report(6, "gauge reduction", ok,
           f"reduced residual {fmt(red)} vs 2 x (input + floor) {fmt(bound)} at n="
           f"{[lv.n for lv in levels]}")


def test_criterion_7_gauge_factor_identity():
    levels = run_levels(builtin("remark-shifted-lambda"))
    res = metric(levels, "remark_residual")
    clean = [lv.flags["g_clean_off_singular"] for lv in levels]
    o = orders(res)
    report(7, "gauge factor identity", within(o, 0.8) and all(clean),
           f"residual {fmt(res)} orders {fmt(o)} (need >= 0.8); g clean off singular set "
           f"{clean}")


def test_criterion_8_disk_identity():
    levels = run_levels(builtin("pompeiu-disk"))
    assert [lv.n for lv in levels] == [129, 257]
    err = metric(levels, "disk_error")
    ok = err[0] <= 5e-2 and err[1] <= 0.5 * err[0]
    report(8, "Pompeiu disk identity", ok,
           f"max |T chi - zbar| on |z| <= 0.7: {fmt(err)}; need n=129 <= 5e-2 and n=257 "
           f"<= half of it")


def _cli(name, sub, out_dir):
    exe = [sys.executable, "-m", "moutard_lab.cli"]
    return subprocess.run(exe + [sub, "--config", str(DATA / name), "--out-dir", str(out_dir)],
                          capture_output=True, text=True)


def test_criterion_9_cli_golden(tmp_path):
    expected = {"pass.json": 0, "threshold.json": 1, "malformed.json": 2, "singular.json": 3}
    got = {name: _cli(name, "demo-theorem1", tmp_path / name).returncode for name in expected}
    one_line = all(_cli(n, "demo-theorem1", tmp_path / "again").stderr.count("\n") == 1
                   for n in expected if expected[n])
    a, b = tmp_path / "a", tmp_path / "b"
    _cli("pass.json", "demo-theorem1", a)
    _cli("pass.json", "demo-theorem1", b)
    files = sorted(p.name for p in a.iterdir())
    identical = files == sorted(p.name for p in b.iterdir()) and all(
        (a / f).read_bytes() == (b / f).read_bytes() for f in files)
    has_mfield = any(f.endswith(".mfield") for f in files) and any(f.endswith(".csv")
                                                                   for f in files)
    ok = got == expected and identical and one_line and has_mfield
    report(9, "CLI golden runs", ok,
           f"exit codes {got} (want {expected}); outputs bit-identical across runs: "
           f"{identical} ({len(files)} files); one-line diagnostics: {one_line}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
