"""Declarative experiments: JSON scenario configs and their per-level pipelines.

A scenario names a ``kind`` (which pipeline to run), a domain, the matrix
size ``N``, grid sizes, and a ``fields`` table where every entry is either
``{"builder": {...}}`` or a solve directive such as
``{"solve": "system2", "B": "B", "H": {"kind": "identity"}}``.  See
``scenarios_data/`` for the bundled configs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .builders import as_builder, parse_matrix
from .cauchy import PompeiuPlan
from .errors import ConfigError
from .grid import Grid, MatrixField, StencilMask, build_field, dbar, norms
from .moutard import (DEFAULT_COND_MAX, gauge_reduce, remark_check, transform_prop1,
                      transform_theorem1)
from .potential import integrability_defect, omega, omega_hat
from .seeds import (IterationSettings, solve_gauge, solve_lambda, solve_system1,
                    solve_system2, solve_system3)
from .verify import residual

SCHEMA_VERSION = 1
KINDS = ("theorem1", "prop1", "gauge", "remark", "potential", "pompeiu-disk", "dbar-accuracy")
SOLVERS = {
    "system1": ("A", "B", "H"),
    "system2": ("B", "H"),
    "system3": ("B", "H"),
    "gauge": ("A",),
    "lambda": ("A", "FPlus"),
}


@dataclass(frozen=True)
class Check:
    """One acceptance threshold on a metric or a boolean flag."""

    metric: Optional[str] = None
    flag: Optional[str] = None
    order_min: Optional[float] = None
    order_max: Optional[float] = None
    value_max: Optional[float] = None
    at: str = "finest"  # "finest" or "all": levels where value_max applies
    ratio_max: Optional[float] = None  # value(fine) / value(coarse), every refinement

    @classmethod
    def from_config(cls, cfg):
        if not isinstance(cfg, dict):
            raise ConfigError(f"acceptance entry must be an object: {cfg!r}")
        unknown = set(cfg) - {"metric", "flag", "order_min", "order_max", "value_max", "at",
                              "ratio_max"}
        if unknown:
            raise ConfigError(f"unknown acceptance keys {sorted(unknown)}")
        if (cfg.get("metric") is None) == (cfg.get("flag") is None):
            raise ConfigError("acceptance entry needs exactly one of 'metric' or 'flag'")
        if cfg.get("at", "finest") not in ("finest", "all"):
            raise ConfigError("acceptance 'at' must be 'finest' or 'all'")
        num = {}
        for k in ("order_min", "order_max", "value_max", "ratio_max"):
            if cfg.get(k) is not None:
                num[k] = _number(cfg[k], k)
        return cls(metric=cfg.get("metric"), flag=cfg.get("flag"), at=cfg.get("at", "finest"),
                   **num)


def _number(value, what) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{what} must be a number, got {value!r}")
    return float(value)


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    kind: str
    domain: tuple
    N: int
    sizes: tuple
    fields: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    settings: IterationSettings = IterationSettings()
    cond_max: float = DEFAULT_COND_MAX
    pompeiu_mode: str = "fast-convolution"
    singular_cell_rule: str = "zero"
    margin: int = 2
    inset: float = 0.0
    acceptance: tuple = ()
    outputs: dict = field(default_factory=dict)

    def grid(self, n: int) -> Grid:
        x0, x1, y0, y1 = self.domain
        return Grid(x0, x1, y0, y1, n, n)

    def plan(self, grid: Grid) -> PompeiuPlan:
        return PompeiuPlan(grid, self.pompeiu_mode, self.singular_cell_rule)

    def region(self, grid: Grid) -> np.ndarray:
        """Interior nodes (``margin``) that are also ``inset`` away from the boundary."""
        mask = StencilMask(self.margin).array(grid)
        if self.inset > 0:
            z = grid.z
            d = np.minimum.reduce([z.real - grid.x0, grid.x1 - z.real,
                                   z.imag - grid.y0, grid.y1 - z.imag])
            mask &= d >= self.inset - 1e-12
        return mask

    def constant(self, key, default=0.0):
        return self.constants.get(key, default)


def _field_spec_ok(name, spec):
    if not isinstance(spec, dict):
        raise ConfigError(f"field {name!r} must be an object")
    has_b, has_s = "builder" in spec, "solve" in spec
    if has_b == has_s:
        raise ConfigError(f"field {name!r} needs exactly one of 'builder' or 'solve'")
    if has_s:
        kind = spec["solve"]
        if kind not in SOLVERS:
            raise ConfigError(f"field {name!r}: unknown solver {kind!r}; expected {sorted(SOLVERS)}")
        missing = [a for a in SOLVERS[kind] if a not in spec]
        if missing:
            raise ConfigError(f"field {name!r}: solver {kind!r} needs {missing}")
    else:
        as_builder(spec["builder"])


def scenario_from_config(cfg: dict) -> Scenario:
    if not isinstance(cfg, dict):
        raise ConfigError("scenario config must be a JSON object")
    if cfg.get("spec") != SCHEMA_VERSION:
        raise ConfigError(f"config must declare \"spec\": {SCHEMA_VERSION}")
    try:
        name = str(cfg["name"])
        kind = cfg["kind"]
        domain = tuple(_number(v, "domain bound") for v in cfg.get("domain", (-1, 1, -1, 1)))
        N = cfg.get("N", 1)
        sizes = cfg["sizes"]
    except KeyError as exc:
        raise ConfigError(f"config is missing {exc.args[0]!r}") from exc
    if kind not in KINDS:
        raise ConfigError(f"unknown scenario kind {kind!r}; expected one of {KINDS}")
    if len(domain) != 4:
        raise ConfigError("domain must be [x0, x1, y0, y1]")
    if isinstance(N, bool) or not isinstance(N, int) or N < 1:
        raise ConfigError("N must be a positive integer")
    if not isinstance(sizes, list) or not sizes or not all(
            isinstance(s, int) and not isinstance(s, bool) for s in sizes):
        raise ConfigError("sizes must be a non-empty list of integers")
    fields = cfg.get("fields", {})
    if not isinstance(fields, dict):
        raise ConfigError("fields must be an object")
    for k, spec in fields.items():
        _field_spec_ok(k, spec)
    it = cfg.get("iteration", {})
    try:
        settings = IterationSettings(**it)
    except TypeError as exc:
        raise ConfigError(f"bad iteration settings: {exc}") from exc
    pomp = cfg.get("pompeiu", {})
    region = cfg.get("region", {})
    acc = tuple(Check.from_config(c) for c in cfg.get("acceptance", []))
    scenario = Scenario(
        name=name, kind=kind, domain=domain, N=N, sizes=tuple(sizes), fields=dict(fields),
        constants=dict(cfg.get("constants", {})), settings=settings,
        cond_max=_number(cfg.get("cond_max", DEFAULT_COND_MAX), "cond_max"),
        pompeiu_mode=pomp.get("mode", "fast-convolution"),
        singular_cell_rule=pomp.get("singular_cell_rule", "zero"),
        margin=int(region.get("margin", 2)), inset=_number(region.get("inset", 0.0), "inset"),
        acceptance=acc, outputs=dict(cfg.get("outputs", {})))
    # surface grid / plan configuration errors before any computation
    g = scenario.grid(scenario.sizes[0])
    scenario.plan(g)
    StencilMask(scenario.margin)
    return scenario


def load_scenario(path) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return scenario_from_config(cfg)


def builtin_names() -> list:
    root = resources.files("moutard_lab") / "scenarios_data"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def builtin_config(name: str) -> dict:
    path = resources.files("moutard_lab") / "scenarios_data" / f"{name}.json"
    if not path.is_file():
        raise ConfigError(f"no bundled scenario named {name!r}")
    return json.loads(path.read_text(encoding="utf-8"))


def builtin(name: str, **overrides) -> Scenario:
    cfg = builtin_config(name)
    cfg.update(overrides)
    return scenario_from_config(cfg)


class _Fields:
    """Resolves the ``fields`` table at one grid level, memoised."""

    def __init__(self, scenario: Scenario, grid: Grid, plan: PompeiuPlan):
        self.scenario = scenario
        self.grid = grid
        self.plan = plan
        self.cache = {}
        self.histories = {}
        self._stack = []

    def has(self, name) -> bool:
        return name in self.scenario.fields

    def get(self, name, default=None) -> MatrixField:
        if name in self.cache:
            return self.cache[name]
        if name not in self.scenario.fields:
            if default is not None:
                return self._inline(default)
            raise ConfigError(f"scenario {self.scenario.name!r} does not define field {name!r}")
        if name in self._stack:
            raise ConfigError(f"circular field reference through {name!r}")
        self._stack.append(name)
        try:
            value = self._resolve(name, self.scenario.fields[name])
        finally:
            self._stack.pop()
        self.cache[name] = value
        return value

    def _inline(self, ref):
        if isinstance(ref, str):
            return self.get(ref)
        if isinstance(ref, dict) and "builder" in ref:
            return build_field(self.grid, self.scenario.N, ref["builder"])
        return build_field(self.grid, self.scenario.N, ref)

    def _resolve(self, name, spec):
        if "builder" in spec:
            return build_field(self.grid, self.scenario.N, spec["builder"])
        kind = spec["solve"]
        args = {a: self._inline(spec[a]) for a in SOLVERS[kind]}
        st = self.scenario.settings
        hist = []
        self.histories[name] = hist
        if kind == "system2":
            return solve_system2(args["B"], args["H"], st, self.plan, hist)
        if kind == "system3":
            return solve_system3(args["B"], args["H"], st, self.plan, hist)
        if kind == "system1":
            return solve_system1(args["A"], args["B"], args["H"], st, self.plan, hist)
        if kind == "gauge":
            return solve_gauge(args["A"], st, self.plan, hist, self.scenario.cond_max)
        lam = solve_lambda(args["A"], args["FPlus"], st, self.plan, hist)
        if "shift" in spec:
            if np.any(args["A"].data != 0):
                raise ConfigError("lambda 'shift' adds a constant, which only solves the "
                                  "lambda equation when A = 0")
            lam = MatrixField(lam.grid, lam.data + parse_matrix(spec["shift"], self.scenario.N))
        return lam


@dataclass(eq=False)
class LevelResult:
    n: int
    h: float
    metrics: dict
    flags: dict = field(default_factory=dict)
    reports: list = field(default_factory=list)
    fields: dict = field(default_factory=dict)
    histories: dict = field(default_factory=dict)


def _imag_constant(value, n):
    """Constant given as real ``c`` means ``i c I``; matrices are taken as is."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return 1j * float(value) * np.eye(n)
    return parse_matrix(value, n)


def _report_row(scenario, grid, label, rep, inv=None):
    return {
        "scenario": f"{scenario.name}:{label}",
        "grid": grid.nx,
        "residual_sup": rep.sup,
        "residual_l2": rep.l2,
        "min_abs_det": float("nan") if inv is None else inv.min_abs_det,
        "max_cond": float("nan") if inv is None else inv.max_cond,
    }


def _basepoint(scenario, grid):
    bp = scenario.constants.get("basepoint")
    if bp is None:
        return grid.center_index
    if not (isinstance(bp, list) and len(bp) == 2):
        raise ConfigError("basepoint must be [i, j] as fractions of the grid extent")
    # fractions of the extent keep the basepoint on the same physical node across levels
    return (int(round(float(bp[0]) * (grid.nx - 1))), int(round(float(bp[1]) * (grid.ny - 1))))


def _run_theorem1(sc, grid, fx, region):
    B, F, Fp, Psi, Pp = (fx.get(k) for k in ("B", "F", "FPlus", "Psi", "PsiPlus"))
    bp = _basepoint(sc, grid)
    W = omega(F, Fp, bp, _imag_constant(sc.constant("c", 10.0), sc.N))
    Wpsi = omega(Psi, Fp, bp, _imag_constant(sc.constant("omega_psi", 0.0), sc.N))
    Wfp = omega(F, Pp, bp, _imag_constant(sc.constant("omega_psi_plus", 0.0), sc.N))
    res = transform_theorem1(B, F, Fp, Psi, Pp, W, Wpsi, Wfp, sc.cond_max)
    r2 = residual("sys2", region, Psi=res.psi_t, B=res.b_t)
    r3 = residual("sys3", region, PsiPlus=res.psi_plus_t, B=res.b_t)
    metrics = {
        "residual_psi_t": r2.sup,
        "residual_psi_plus_t": r3.sup,
        "path_defect": max(W.path_defect, Wpsi.path_defect, Wfp.path_defect),
        "integrability_defect": integrability_defect(F, Fp),
    }
    reports = [_report_row(sc, grid, "psi_t", r2, res.invertibility),
               _report_row(sc, grid, "psi_plus_t", r3, res.invertibility)]
    fields = {"psi_t": res.psi_t, "psi_plus_t": res.psi_plus_t, "b_t": res.b_t,
              "omega_FF": W.omega}
    return metrics, {}, reports, fields


def _run_prop1(sc, grid, fx, region, plan):
    A, F, Fp, Psi = (fx.get(k) for k in ("A", "F", "FPlus", "Psi"))
    Wh = omega_hat(F, Fp, plan, sc.constants.get("kappa"))
    Whpsi = omega_hat(Psi, Fp, plan, sc.constants.get("kappa_psi"))
    res = transform_prop1(A, F, Fp, Psi, Wh, Whpsi, sc.cond_max)
    r6 = residual("sys6", region, Psi=res.psi_t, A=res.a_t)
    rt = norms(dbar(Wh) - Fp @ F, region)["sup"]
    metrics = {"residual_psi_t": r6.sup, "omega_hat_roundtrip": rt}
    reports = [_report_row(sc, grid, "psi_t", r6, res.invertibility)]
    return metrics, {}, reports, {"psi_t": res.psi_t, "a_t": res.a_t, "omega_hat_FF": Wh}


def _run_gauge(sc, grid, fx, region, plan):
    A, B, Psi = fx.get("A"), fx.get("B"), fx.get("Psi")
    g = fx.get("g") if fx.has("g") else solve_gauge(A, sc.settings, plan, None, sc.cond_max)
    res = gauge_reduce(A, B, Psi, g, sc.cond_max)
    r1 = residual("sys1", region, Psi=Psi, A=A, B=B)
    floor = norms(dbar(g) + A @ g, region)["sup"]
    r2 = residual("sys2", region, Psi=res.psi_t, B=res.b_t)
    metrics = {
        "input_residual": r1.sup,
        "gauge_floor": floor,
        "reduced_residual": r2.sup,
        "gauge_ratio": r2.sup / (r1.sup + floor) if (r1.sup + floor) > 0 else 0.0,
    }
    reports = [_report_row(sc, grid, "input", r1),
               _report_row(sc, grid, "reduced", r2, res.invertibility)]
    return metrics, {}, reports, {"psi_t": res.psi_t, "b_t": res.b_t, "g": g}


def _run_remark(sc, grid, fx, region, plan):
    A, F, Fp, Psi, Lam = (fx.get(k) for k in ("A", "F", "FPlus", "Psi", "Lambda"))
    Wh = omega_hat(F, Fp, plan, sc.constants.get("kappa"))
    res = remark_check(A, F, Fp, Psi, Wh, Lam, sc.cond_max,
                       float(sc.constant("exclusion_radius", 0.0)), region)
    metrics = {"remark_residual": res.residual}
    flags = {
        "g_clean_off_singular": res.invertible.clean_on(res.region),
        "omega_hat_clean": res.omega_hat_report.clean,
    }
    row = {"scenario": f"{sc.name}:remark", "grid": grid.nx, "residual_sup": res.residual,
           "residual_l2": res.residual_l2, "min_abs_det": res.invertible.min_abs_det,
           "max_cond": res.invertible.max_cond}
    return metrics, flags, [row], {"g": res.g, "a_t": res.a_t, "omega_hat_FF": Wh}


def _run_potential(sc, grid, fx, region):
    Phi, Pp = fx.get("Phi"), fx.get("PhiPlus")
    W = omega(Phi, Pp, _basepoint(sc, grid), _imag_constant(sc.constant("c", 0.0), sc.N))
    metrics = {
        "path_defect": W.path_defect,
        "skew_real_defect": W.skew_real_defect,
        "integrability_defect": integrability_defect(Phi, Pp),
    }
    return metrics, {}, [], {"omega": W.omega}


def _run_pompeiu_disk(sc, grid, fx, region, plan):
    radius = float(sc.constant("radius", 1.0))
    probe = float(sc.constant("eval_radius", 0.7))
    if sc.N != 1:
        raise ConfigError("pompeiu-disk runs with N = 1")
    chi = build_field(grid, 1, {"kind": "indicator-disk", "radius": radius})
    t = plan.apply(chi)
    z = grid.z
    inside = np.abs(z) <= probe
    err = float(np.abs(t.data[:, :, 0, 0] - np.conj(z))[inside].max())
    return {"disk_error": err}, {}, [], {"T_chi": t}


def _run_dbar_accuracy(sc, grid, fx, region):
    f, df = fx.get("f"), fx.get("df")
    err = norms(dbar(f) - df, region)["sup"]
    return {"dbar_error": err}, {}, [], {"dbar_f": dbar(f)}


def run_level(scenario: Scenario, n: int) -> LevelResult:
    grid = scenario.grid(n)
    plan = scenario.plan(grid)
    fx = _Fields(scenario, grid, plan)
    region = scenario.region(grid)
    k = scenario.kind
    if k == "theorem1":
        out = _run_theorem1(scenario, grid, fx, region)
    elif k == "prop1":
        out = _run_prop1(scenario, grid, fx, region, plan)
    elif k == "gauge":
        out = _run_gauge(scenario, grid, fx, region, plan)
    elif k == "remark":
        out = _run_remark(scenario, grid, fx, region, plan)
    elif k == "potential":
        out = _run_potential(scenario, grid, fx, region)
    elif k == "pompeiu-disk":
        out = _run_pompeiu_disk(scenario, grid, fx, region, plan)
    else:
        out = _run_dbar_accuracy(scenario, grid, fx, region)
    metrics, flags, reports, fields = out
    fields = {**fx.cache, **fields}
    return LevelResult(n, max(grid.hx, grid.hy), metrics, flags, reports, fields, fx.histories)


@dataclass(frozen=True)
class CheckOutcome:
    check: Check
    passed: bool
    detail: str


def evaluate_checks(scenario: Scenario, levels: list) -> list:
    """Evaluate every acceptance threshold against the per-level results."""
    out = []
    for chk in scenario.acceptance:
        if chk.flag is not None:
            vals = [lv.flags.get(chk.flag) for lv in levels]
            if any(v is None for v in vals):
                out.append(CheckOutcome(chk, False, f"flag {chk.flag!r} not produced"))
                continue
            out.append(CheckOutcome(chk, all(vals), f"{chk.flag}={vals}"))
            continue
        vals = [lv.metrics.get(chk.metric) for lv in levels]
        if any(v is None for v in vals):
            out.append(CheckOutcome(chk, False, f"metric {chk.metric!r} not produced"))
            continue
        ok = True
        parts = [f"{chk.metric}=" + ",".join("%.3g" % v for v in vals)]
        if chk.value_max is not None:
            scope = vals if chk.at == "all" else vals[-1:]
            ok &= all(v <= chk.value_max for v in scope)
        if chk.order_min is not None or chk.order_max is not None or chk.ratio_max is not None:
            if len(vals) < 2:
                ok = False
                parts.append("needs >= 2 levels")
            else:
                from .verify import order_estimate

                orders = [order_estimate(a, b) for a, b in zip(vals, vals[1:])]
                parts.append("orders=" + ",".join("%.3g" % o for o in orders))
                if chk.order_min is not None:
                    ok &= all(o >= chk.order_min for o in orders)
                if chk.order_max is not None:
                    ok &= all(o <= chk.order_max for o in orders)
                if chk.ratio_max is not None:
                    ok &= all(b <= chk.ratio_max * a for a, b in zip(vals, vals[1:]))
        out.append(CheckOutcome(chk, bool(ok), " ".join(parts)))
    return out

