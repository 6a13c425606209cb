import io
import math
import os
import re
import subprocess
import sys
from pathlib import Path

import pytest

from moutard_lab import cli, fieldio

DATA = Path(__file__).parent / "data"
REASON = re.compile(r"^moutard-lab: exit=(\d) reason=([a-z-]+) \S")


def run(name, out_dir, sub="demo-theorem1", extra=()):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run([sub, "--config", str(DATA / name), "--out-dir", str(out_dir), *extra],
                   out, err)
    return code, out.getvalue(), err.getvalue()


def test_pass_exit_zero(tmp_path):
    code, out, err = run("pass.json", tmp_path)
    assert code == 0 and err == ""
    assert "PASS " in out and "FAIL " not in out
    for name in ("golden.csv", "golden-convergence.csv", "golden-b_t.ppm",
                 "golden-b_t.ppm.txt", "golden-psi_t.mfield"):
        assert (tmp_path / name).is_file()
    header = (tmp_path / "golden.csv").read_text().splitlines()[0]
    assert header == "scenario,grid,residual_sup,residual_l2,min_abs_det,max_cond"


def test_threshold_exit_one(tmp_path):
    code, out, err = run("threshold.json", tmp_path)
    assert code == 1
    m = REASON.match(err)
    assert m and m.groups() == ("1", "threshold-failed")
    assert err.count("\n") == 1


def test_malformed_exit_two(tmp_path):
    code, _, err = run("malformed.json", tmp_path)
    assert code == 2 and REASON.match(err).group(2) == "config-error"


def test_singular_exit_three(tmp_path):
    code, _, err = run("singular.json", tmp_path)
    assert code == 3
    assert REASON.match(err).group(2) == "singular-omega"
    assert "n=33" in err


@pytest.mark.parametrize("problem", ["missing", "not-json", "wrong-kind"])
def test_other_config_errors(tmp_path, problem):
    if problem == "missing":
        path = tmp_path / "nope.json"
    elif problem == "not-json":
        path = tmp_path / "bad.json"
        path.write_text("{ spec: 1")
    else:
        path = DATA / "pass.json"
    sub = "demo-gauge" if problem == "wrong-kind" else "demo-theorem1"
    out, err = io.StringIO(), io.StringIO()
    assert cli.run([sub, "--config", str(path), "--out-dir", str(tmp_path)], out, err) == 2


def test_deterministic_outputs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("pass.json", a)[0] == 0
    assert run("pass.json", b, extra=("--threads", "1"))[0] == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_convergence_subcommand(tmp_path):
    code, out, _ = run("pass.json", tmp_path, sub="convergence")
    assert code == 0 and "order=" in out


def test_dump_field(tmp_path):
    code, out, _ = run("dump.json", tmp_path, sub="dump-field")
    assert code == 0
    f = fieldio.read_field(tmp_path / "bump.mfield")
    assert f.n == 2 and f.grid.nx == 9
    assert f.at(4, 4)[0, 1] == pytest.approx(0.01j * math.exp(-0.2), rel=1e-12)


def test_threads_env_validation(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "many")
    assert run("pass.json", tmp_path)[0] == 2
    monkeypatch.setenv(cli.THREADS_ENV, "1")
    assert run("pass.json", tmp_path)[0] == 0


def test_console_script(tmp_path):
    env = dict(os.environ)
    r = subprocess.run([sys.executable, "-m", "moutard_lab.cli", "demo-theorem1", "--config",
                        str(DATA / "singular.json"), "--out-dir", str(tmp_path)],
                       capture_output=True, text=True, env=env)
    assert r.returncode == 3
    assert REASON.match(r.stderr)
