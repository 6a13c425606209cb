"""``moutard-lab <subcommand> --config <path> [--out-dir DIR] [--threads K]``.

Exit codes: 0 all acceptance thresholds pass, 1 a threshold failed,
2 configuration error, 3 numerical refusal (singular potential or gauge
factor, non-contraction, non-convergence).  Failures print one line
``moutard-lab: exit=<code> reason=<slug> <message>`` on stderr.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import json
import os
import sys
from pathlib import Path

from scipy import fft as sfft
from threadpoolctl import threadpool_limits

from . import fieldio, heatmap
from .errors import ConfigError, MoutardLabError, NumericalRefusal
from .grid import Grid, build_field
from .scenarios import evaluate_checks, load_scenario, scenario_from_config
from .seeds import write_history_csv
from .verify import StudyError, check_sizes, rows_from_levels, run_levels, write_convergence_csv

DEMOS = {
    "demo-theorem1": "theorem1",
    "demo-prop1": "prop1",
    "demo-gauge": "gauge",
    "demo-remark": "remark",
}
SUBCOMMANDS = tuple(DEMOS) + ("convergence", "dump-field")
THREADS_ENV = "MOUTARD_LAB_THREADS"


class ThresholdFailure(MoutardLabError):
    reason = "threshold-failed"


def _parser():
    p = argparse.ArgumentParser(prog="moutard-lab", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, help="scenario JSON file")
    p.add_argument("--out-dir", default=".", help="directory for CSV / MFIELD / PPM outputs")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (fallback: ${THREADS_ENV})")
    return p


def _threads(arg):
    if arg is not None:
        return arg
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from exc
    return None


def write_report_csv(path, rows) -> None:
    cols = ["scenario", "grid", "residual_sup", "residual_l2", "min_abs_det", "max_cond"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([r["scenario"], r["grid"]] + ["%.17g" % r[c] for c in cols[2:]])


def _read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc


def _dump_field(cfg_path, out_dir: Path, out):
    cfg = _read_json(cfg_path)
    if not isinstance(cfg, dict) or cfg.get("spec") != 1:
        raise ConfigError("config must be an object declaring \"spec\": 1")
    try:
        x0, x1, y0, y1 = cfg.get("domain", (-1, 1, -1, 1))
        sizes = cfg["sizes"]
        builder = cfg["builder"]
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"dump-field config needs domain, sizes and builder: {exc}") from exc
    n = cfg.get("N", 1)
    if not isinstance(sizes, list) or len(sizes) != 1:
        raise ConfigError("dump-field takes exactly one grid size")
    grid = Grid(float(x0), float(x1), float(y0), float(y1), int(sizes[0]), int(sizes[0]))
    field = build_field(grid, int(n), builder)
    target = out_dir / cfg.get("outputs", {}).get("mfield", f"{cfg.get('name', 'field')}.mfield")
    fieldio.write_field(target, field)
    print(f"wrote {target}", file=out)
    return 0


def _write_outputs(sc, levels, rows, out_dir: Path, out):
    outputs = sc.outputs
    reports = [r for lv in levels for r in lv.reports]
    if reports:
        path = out_dir / outputs.get("csv", f"{sc.name}.csv")
        write_report_csv(path, reports)
        print(f"wrote {path}", file=out)
    if rows is not None and len(levels) > 1:
        path = out_dir / outputs.get("convergence_csv", f"{sc.name}-convergence.csv")
        write_convergence_csv(path, rows)
        print(f"wrote {path}", file=out)
    finest = levels[-1]
    if "histories" in outputs:
        for name, hist in finest.histories.items():
            path = out_dir / f"{outputs['histories']}-{name}.csv"
            write_history_csv(path, hist)
    for key, writer in (("heatmap", "ppm"), ("mfield", "mfield")):
        spec = outputs.get(key)
        if spec is None:
            continue
        if not isinstance(spec, dict) or "field" not in spec or "path" not in spec:
            raise ConfigError(f"outputs.{key} needs 'field' and 'path'")
        name = spec["field"]
        if name not in finest.fields:
            raise ConfigError(f"outputs.{key}: unknown field {name!r}; "
                              f"available {sorted(finest.fields)}")
        path = out_dir / spec["path"]
        if writer == "ppm":
            heatmap.write_ppm(path, finest.fields[name], name)
        else:
            fieldio.write_field(path, finest.fields[name])
        print(f"wrote {path}", file=out)


def _scenario_command(sub, cfg_path, out_dir: Path, out):
    sc = load_scenario(cfg_path)
    if sub in DEMOS and sc.kind != DEMOS[sub]:
        raise ConfigError(f"{sub} needs a scenario of kind {DEMOS[sub]!r}, got {sc.kind!r}")
    if sub == "convergence" or len(sc.sizes) > 1:
        check_sizes(sc.sizes)
    levels = run_levels(sc)
    rows = rows_from_levels(sc.name, levels)
    _write_outputs(sc, levels, rows, out_dir, out)
    for r in rows:
        order = "" if r.order_est is None else " order=%.3f" % r.order_est
        print(f"{r.scenario} n={r.n} {r.metric}={r.value:.6g}{order}", file=out)
    outcomes = evaluate_checks(sc, levels)
    failed = [o for o in outcomes if not o.passed]
    for o in outcomes:
        print(("PASS " if o.passed else "FAIL ") + o.detail, file=out)
    if failed:
        raise ThresholdFailure(f"{len(failed)} acceptance threshold(s) failed: "
                               + "; ".join(o.detail for o in failed))
    return 0


def _classify(exc):
    if isinstance(exc, ConfigError):
        return 2, "config-error"
    if isinstance(exc, NumericalRefusal):
        return 3, exc.reason
    return 1, getattr(exc, "reason", "error")


def run(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    args = _parser().parse_args(argv)
    try:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        threads = _threads(args.threads)
        if threads is not None and threads < 1:
            raise ConfigError("--threads must be >= 1")
        with contextlib.ExitStack() as stack:
            if threads is not None:
                stack.enter_context(threadpool_limits(limits=threads))
                stack.enter_context(sfft.set_workers(threads))
            if args.subcommand == "dump-field":
                return _dump_field(args.config, out_dir, out)
            return _scenario_command(args.subcommand, args.config, out_dir, out)
    except StudyError as exc:
        (code, reason), message = _classify(exc.cause), str(exc)
    except ConfigError as exc:
        code, reason, message = 2, "config-error", str(exc)
    except NumericalRefusal as exc:
        code, reason, message = 3, exc.reason, str(exc)
    except ThresholdFailure as exc:
        code, reason, message = 1, exc.reason, str(exc)
    message = " ".join(message.split())
    print(f"moutard-lab: exit={code} reason={reason} {message}", file=err)
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":  # pragma: no cover
    main()
