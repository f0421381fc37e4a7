"""Config-driven experiment runner emitting CSV artifacts.

A run is described by one JSON document.  The ``kind`` field selects
the engine:

* ``stationary1d``     shooting solve, profile CSV with the flux c
* ``critical``         critical-value report for a potential
* ``evolve1d-oracle``  explicit 1D march, profile CSV
* ``evolve2d``         FEM evolution, snapshot CSVs + L1 series
* ``currents``         FEM evolution recording J_L / J_R time series
* ``gap-sweep``        current vs boundary gap, one CSV row per a

Every run writes ``manifest.json`` listing the normalized config, its
SHA-256 hash, the output files and headline numbers.  Outputs are
deterministic: fixed iteration orders, no timestamps, 17-digit floats.
"""

import concurrent.futures
import dataclasses
import hashlib
import json
import os

import numpy as np

from .errors import EngineError, ValidationError
from .fem2d import (AssemblyContext, BoundarySpec, Dirichlet, StepperConfig,
                    ZeroFlux, apply_dirichlet, evolve)
from .mesh2d import BoundaryTag, build_structured
from .observables import TimeSeries, boundary_current, l1_norm, record, write_series_csv
from .oracle1d import fd_evolve_1d, write_profile_csv
from .potential import Potential
from .stationary1d import critical_values, solve_bvp, stationary_current

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config",
           "run_experiment", "gap_sweep"]

KINDS = ("stationary1d", "critical", "evolve1d-oracle", "evolve2d",
         "currents", "gap-sweep")

_LEFT = (BoundaryTag.GAMMA4, BoundaryTag.GAMMA5)


class ConfigError(ValidationError):
    """Invalid experiment config; ``path`` locates the offending field."""

    def __init__(self, path, message):
        super().__init__(f"config.{path}: {message}" if path else f"config: {message}")
        self.path = path


@dataclasses.dataclass
class ExperimentConfig:
    """Validated, normalized experiment description."""

    kind: str
    potential: str
    out_dir: str = "."
    # stationary1d / evolve1d-oracle
    u0: float = None
    u1: float = None
    tol: float = 1e-8
    grid_n: int = 1001
    nx: int = 400
    # 2D evolution
    initial: str = None
    boundary: dict = None
    mesh_n: int = None
    dt: float = None
    t_end: float = None
    snapshot_times: tuple = ()
    steady_tol: float = None
    diffusion_scale: float = 1.0
    # gap sweep
    a_start: float = 0.0
    a_stop: float = 3.0
    da: float = 0.05
    t_final: float = 2.5
    u_base: float = 0.5
    jobs: int = 1

    def as_dict(self):
        allowed = _ALLOWED_KEYS[self.kind]
        out = {}
        for f in dataclasses.fields(self):
            val = getattr(self, f.name)
            if val is None or f.name not in allowed:
                continue
            if f.name == "boundary":
                val = {tag.name.replace("GAMMA", "Gamma"): (
                    {"dirichlet": c.value} if isinstance(c, Dirichlet) else "zero-flux")
                    for tag, c in sorted(val.items(), key=lambda kv: kv[0].value)}
            if f.name == "snapshot_times":
                val = list(val)
            out[f.name] = val
        return out


def config_digest(cfg):
    """SHA-256 of the canonical JSON form of a config."""
    canon = json.dumps(cfg.as_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Parsing and validation

def _typed(raw, key, types, caster=None):
    val = raw[key]
    if isinstance(val, bool) or not isinstance(val, types):
        wanted = types[0].__name__ if isinstance(types, tuple) else types.__name__
        raise ConfigError(key, f"expected {wanted}, got {val!r}")
    return caster(val) if caster else val


def _require(raw, key, types, caster=None):
    if key not in raw:
        raise ConfigError(key, "required field is missing")
    return _typed(raw, key, types, caster)


def _optional(raw, key, types, default, caster=None):
    if key not in raw or raw[key] is None:
        return default
    return _typed(raw, key, types, caster)


def _positive(key, value):
    if not value > 0.0:
        raise ConfigError(key, f"must be positive, got {value}")
    return value


def _parse_boundary(raw_map):
    if not isinstance(raw_map, dict) or not raw_map:
        raise ConfigError("boundary", "expected a non-empty map Gamma1..Gamma5")
    by_name = {f"Gamma{t.value}": t for t in BoundaryTag}
    out = {}
    for key, val in raw_map.items():
        tag = by_name.get(key)
        if tag is None:
            raise ConfigError(f"boundary.{key}",
                              f"unknown segment; expected one of {sorted(by_name)}")
        if val == "zero-flux":
            out[tag] = ZeroFlux()
        elif isinstance(val, dict) and set(val) == {"dirichlet"}:
            v = val["dirichlet"]
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
                raise ConfigError(f"boundary.{key}.dirichlet",
                                  f"expected a positive number, got {v!r}")
            out[tag] = Dirichlet(float(v))
        else:
            raise ConfigError(f"boundary.{key}",
                              'expected "zero-flux" or {"dirichlet": value}')
    missing = [f"Gamma{t.value}" for t in BoundaryTag if t not in out]
    if missing:
        raise ConfigError("boundary", f"missing segments: {', '.join(missing)}")
    return out


def _parse_expr(raw, key, dim):
    text = _require(raw, key, str)
    try:
        return Potential.from_expression(text, dim=dim), text
    except (ValueError, TypeError) as exc:
        raise ConfigError(key, str(exc)) from None


_ALLOWED_KEYS = {
    "stationary1d": {"kind", "potential", "out_dir", "u0", "u1", "tol", "grid_n"},
    "critical": {"kind", "potential", "out_dir"},
    "evolve1d-oracle": {"kind", "potential", "out_dir", "u0", "u1", "initial",
                        "nx", "dt", "t_end"},
    "evolve2d": {"kind", "potential", "out_dir", "initial", "boundary", "mesh_n",
                 "dt", "t_end", "snapshot_times", "steady_tol", "diffusion_scale"},
    "currents": {"kind", "potential", "out_dir", "initial", "boundary", "mesh_n",
                 "dt", "t_end", "snapshot_times", "steady_tol", "diffusion_scale"},
    "gap-sweep": {"kind", "potential", "out_dir", "a_start", "a_stop", "da",
                  "t_final", "u_base", "mesh_n", "dt", "jobs"},
}


def parse_config(raw):
    """Validate a raw dict (parsed JSON) into an ``ExperimentConfig``."""
    if not isinstance(raw, dict):
        raise ConfigError("", f"expected a JSON object, got {type(raw).__name__}")
    kind = _require(raw, "kind", str)
    if kind not in KINDS:
        raise ConfigError("kind", f"unknown kind {kind!r}; expected one of {KINDS}")
    unknown = set(raw) - _ALLOWED_KEYS[kind]
    if unknown:
        raise ConfigError(sorted(unknown)[0], f"unknown field for kind {kind!r}")
    out_dir = _optional(raw, "out_dir", str, ".")
    cfg = ExperimentConfig(kind=kind, potential="", out_dir=out_dir)

    if kind in ("stationary1d", "critical", "evolve1d-oracle", "gap-sweep"):
        pot, text = _parse_expr(raw, "potential", dim=1)
    else:
        pot, text = _parse_expr(raw, "potential", dim=2)
    cfg.potential = text

    if kind == "stationary1d":
        cfg.u0 = _positive("u0", _require(raw, "u0", (int, float), float))
        cfg.u1 = _positive("u1", _require(raw, "u1", (int, float), float))
        cfg.tol = _positive("tol", _optional(raw, "tol", (int, float), 1e-8, float))
        cfg.grid_n = _optional(raw, "grid_n", int, 1001)
        if cfg.grid_n < 5:
            raise ConfigError("grid_n", f"too few points ({cfg.grid_n})")
    elif kind == "evolve1d-oracle":
        cfg.u0 = _positive("u0", _require(raw, "u0", (int, float), float))
        cfg.u1 = _positive("u1", _require(raw, "u1", (int, float), float))
        _parse_expr(raw, "initial", dim=1)
        cfg.initial = raw["initial"]
        cfg.nx = _optional(raw, "nx", int, 400)
        if cfg.nx < 4:
            raise ConfigError("nx", f"too few cells ({cfg.nx})")
        cfg.dt = _positive("dt", _optional(raw, "dt", (int, float), 1e-4, float))
        cfg.t_end = _positive("t_end", _require(raw, "t_end", (int, float), float))
    elif kind in ("evolve2d", "currents"):
        _parse_expr(raw, "initial", dim=2)
        cfg.initial = raw["initial"]
        cfg.boundary = _parse_boundary(_require(raw, "boundary", dict))
        cfg.mesh_n = _optional(raw, "mesh_n", int, 100)
        cfg.dt = _positive("dt", _optional(raw, "dt", (int, float), 1e-3, float))
        cfg.t_end = _positive("t_end", _require(raw, "t_end", (int, float), float))
        times = _optional(raw, "snapshot_times", list, [])
        for i, t in enumerate(times):
            if isinstance(t, bool) or not isinstance(t, (int, float)) or t < 0:
                raise ConfigError(f"snapshot_times[{i}]",
                                  f"expected a nonnegative number, got {t!r}")
        cfg.snapshot_times = tuple(float(t) for t in times)
        st = _optional(raw, "steady_tol", (int, float), None, float)
        cfg.steady_tol = _positive("steady_tol", st) if st is not None else None
        cfg.diffusion_scale = _positive(
            "diffusion_scale",
            _optional(raw, "diffusion_scale", (int, float), 1.0, float))
        if kind == "currents":
            bc = BoundarySpec(cfg.boundary)
            if not bc.is_dirichlet(BoundaryTag.GAMMA2):
                raise ConfigError("boundary.Gamma2",
                                  "currents runs need a Dirichlet right contact")
            if not any(bc.is_dirichlet(t) for t in _LEFT):
                raise ConfigError("boundary.Gamma4",
                                  "currents runs need a Dirichlet left contact")
    elif kind == "gap-sweep":
        cfg.a_start = float(_optional(raw, "a_start", (int, float), 0.0, float))
        cfg.a_stop = float(_optional(raw, "a_stop", (int, float), 3.0, float))
        cfg.da = _positive("da", _optional(raw, "da", (int, float), 0.05, float))
        if cfg.a_stop < cfg.a_start:
            raise ConfigError("a_stop", f"empty range [{cfg.a_start}, {cfg.a_stop}]")
        cfg.t_final = _positive("t_final",
                                _optional(raw, "t_final", (int, float), 2.5, float))
        cfg.u_base = _positive("u_base",
                               _optional(raw, "u_base", (int, float), 0.5, float))
        cfg.mesh_n = _optional(raw, "mesh_n", int, 50)
        cfg.dt = _positive("dt", _optional(raw, "dt", (int, float), 2e-3, float))
        cfg.jobs = _optional(raw, "jobs", int, 1)
        if cfg.jobs < 1:
            raise ConfigError("jobs", f"must be >= 1, got {cfg.jobs}")
        crit = critical_values(pot)
        lo = cfg.u_base + cfg.a_start
        if lo <= crit.u0_crit or cfg.u_base <= crit.u1_crit:
            raise ConfigError("u_base",
                              "sweep data must be supercritical on both sides: "
                              f"u0 >= {lo} vs crit {crit.u0_crit:.4g}, "
                              f"u1 = {cfg.u_base} vs crit {crit.u1_crit:.4g}")
    if cfg.mesh_n is not None and (cfg.mesh_n < 2 or cfg.mesh_n % 2):
        raise ConfigError("mesh_n", f"must be an even integer >= 2, got {cfg.mesh_n}")
    return cfg


def load_config(path):
    """Read and validate a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"not valid JSON ({exc})") from None
    return parse_config(raw)


# ---------------------------------------------------------------------------
# Output helpers

def _fmt(x):
    return f"{float(x):.17g}"


def _write_rows(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _write_snapshot(mesh, values, path):
    rows = ((_fmt(p[0]), _fmt(p[1]), _fmt(u))
            for p, u in zip(mesh.points, values))
    _write_rows(path, "x1,x2,u", rows)


def _write_manifest(cfg, out_dir, outputs, results):
    manifest = {
        "config": cfg.as_dict(),
        "config_sha256": config_digest(cfg),
        "outputs": [os.path.basename(p) for p in outputs],
        "results": results,
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# ---------------------------------------------------------------------------
# Runners

def _run_stationary(cfg, out_dir):
    v = Potential.from_expression(cfg.potential, dim=1)
    grid = np.linspace(0.0, 1.0, cfg.grid_n)
    profile = solve_bvp((cfg.u0, cfg.u1), v, tol=cfg.tol, grid=grid)
    path = os.path.join(out_dir, "stationary_profile.csv")
    profile.write_csv(path)
    results = {"c": profile.c, "current": stationary_current(profile)}
    return [path], results


def _run_critical(cfg, out_dir):
    v = Potential.from_expression(cfg.potential, dim=1)
    crit = critical_values(v)
    path = os.path.join(out_dir, "critical_values.csv")
    rows = [(name, _fmt(val)) for name, val in (
        ("u0_crit", crit.u0_crit), ("u1_crit", crit.u1_crit),
        ("v_max", crit.v_max), ("x_max", crit.x_max),
        ("v0", crit.v0), ("v1", crit.v1))]
    _write_rows(path, "name,value", rows)
    results = {"u0_crit": crit.u0_crit, "u1_crit": crit.u1_crit}
    return [path], results


def _run_oracle(cfg, out_dir):
    v = Potential.from_expression(cfg.potential, dim=1)
    u_init = Potential.from_expression(cfg.initial, dim=1)
    grid = fd_evolve_1d(u_init.value, cfg.u0, cfg.u1, v, cfg.nx, cfg.dt, cfg.t_end)
    path = os.path.join(out_dir, "oracle_profile.csv")
    c = write_profile_csv(grid, v, path)
    results = {"c_estimate": c, "final_rate": grid.final_rate}
    return [path], results


def _snapshot_name(t):
    return f"snapshot_t{t:g}.csv"


def _try_asymptote(cfg, bc, out_dir):
    """Stationary 1D profile for x2-homogeneous contact layouts.

    Written when the potential is a function of x1 alone, the left
    contact (Gamma4 and Gamma5) carries one Dirichlet value, the right
    contact is Dirichlet and the walls are zero-flux; skipped silently
    otherwise or when the stationary theory does not cover the data.
    """
    left = [bc.value(t) for t in _LEFT]
    right = bc.value(BoundaryTag.GAMMA2)
    if left[0] is None or right is None or left[0] != left[1]:
        return None, None
    for tag in (BoundaryTag.GAMMA1, BoundaryTag.GAMMA3):
        if bc.is_dirichlet(tag):
            return None, None
    try:
        v = Potential.from_expression(cfg.potential, dim=1)
    except ValueError:  # parse failure or a potential that needs x2
        return None, None
    try:
        profile = solve_bvp((left[0], right), v)
    except (ValidationError, EngineError):
        return None, None
    path = os.path.join(out_dir, "asymptote.csv")
    profile.write_csv(path)
    return path, profile.c


def _run_evolve2d(cfg, out_dir, with_currents):
    mesh = build_structured(cfg.mesh_n)
    v = Potential.from_expression(cfg.potential, dim=2)
    bc = BoundarySpec(cfg.boundary)
    u_expr = Potential.from_expression(cfg.initial, dim=2)
    u_in = apply_dirichlet(
        mesh, bc, np.asarray(u_expr.value(mesh.points[:, 0], mesh.points[:, 1]),
                             dtype=float))
    ctx = AssemblyContext(mesh, v, cfg.diffusion_scale)

    l1 = TimeSeries("l1")
    record(l1, 0.0, l1_norm(mesh, u_in))
    hooks = [lambda step, t, u_new, u_prev: record(l1, t, l1_norm(mesh, u_new))]
    series = {}
    if with_currents:
        left_tags = [t for t in _LEFT if bc.is_dirichlet(t)]
        series["J_L"] = TimeSeries("J_L")
        series["J_R"] = TimeSeries("J_R")

        def current_hook(step, t, u_new, u_prev):
            record(series["J_L"], t, boundary_current(
                mesh, u_new, u_prev, v, cfg.dt, left_tags, bc, context=ctx))
            record(series["J_R"], t, boundary_current(
                mesh, u_new, u_prev, v, cfg.dt, [BoundaryTag.GAMMA2], bc, context=ctx))

        hooks.append(current_hook)

    stepper = StepperConfig(dt=cfg.dt, t_end=cfg.t_end,
                            snapshot_times=cfg.snapshot_times,
                            steady_tol=cfg.steady_tol,
                            diffusion_scale=cfg.diffusion_scale)
    traj = evolve(mesh, u_in, v, bc, stepper, hooks=hooks, context=ctx)

    outputs = []
    for t, field in traj.snapshots:
        path = os.path.join(out_dir, _snapshot_name(t))
        _write_snapshot(mesh, field.values, path)
        outputs.append(path)
    l1_path = os.path.join(out_dir, "l1_series.csv")
    write_series_csv(l1, l1_path)
    outputs.append(l1_path)
    results = {
        "n_steps": traj.n_steps,
        "final_l1": l1.values[-1],
        "steady_step": traj.steady_step,
        "steady_time": traj.steady_time,
    }
    asym_path, c_asym = _try_asymptote(cfg, bc, out_dir)
    if asym_path is not None:
        outputs.append(asym_path)
        results["c_asymptotic"] = c_asym
    if with_currents:
        for key, name in (("J_L", "current_left.csv"), ("J_R", "current_right.csv")):
            path = os.path.join(out_dir, name)
            write_series_csv(series[key], path)
            outputs.append(path)
        results["J_L_final"] = series["J_L"].values[-1]
        results["J_R_final"] = series["J_R"].values[-1]
    return outputs, results


# ---------------------------------------------------------------------------
# Gap sweep

def _sweep_row(args):
    (a, potential, u_base, mesh_n, dt, t_final, diffusion_scale) = args
    u0 = u_base + a
    mesh = build_structured(mesh_n)
    v = Potential.from_expression(potential, dim=2)
    bc = BoundarySpec({
        BoundaryTag.GAMMA1: ZeroFlux(),
        BoundaryTag.GAMMA2: Dirichlet(u_base),
        BoundaryTag.GAMMA3: ZeroFlux(),
        BoundaryTag.GAMMA4: Dirichlet(u0),
        BoundaryTag.GAMMA5: Dirichlet(u0),
    })
    x1 = mesh.points[:, 0]
    u_in = u_base + a * (1.0 - x1)
    ctx = AssemblyContext(mesh, v, diffusion_scale)
    n_steps = int(round(t_final / dt))
    last = {}

    def hook(step, t, u_new, u_prev):
        if step == n_steps:
            last["J_L"] = boundary_current(mesh, u_new, u_prev, v, dt,
                                           list(_LEFT), bc, context=ctx)
            last["J_R"] = boundary_current(mesh, u_new, u_prev, v, dt,
                                           [BoundaryTag.GAMMA2], bc, context=ctx)

    try:
        evolve(mesh, u_in, v, bc,
               StepperConfig(dt=dt, t_end=t_final, diffusion_scale=diffusion_scale),
               hooks=[hook], context=ctx)
        jl, jr = last["J_L"], last["J_R"]
        return (a, 0.5 * (jl + jr), jl, jr, abs(jl - jr), "ok")
    except EngineError as exc:
        msg = f"failed: {type(exc).__name__}: {exc}".replace(",", ";").replace("\n", " ")
        return (a, float("nan"), float("nan"), float("nan"), float("nan"), msg)


def gap_sweep(cfg, out_dir=None):
    """Run the current-vs-gap sweep and write ``gap_sweep.csv``.

    One row per a in [a_start, a_stop] at spacing da; each row evolves
    the device to t_final and reports the mean of J_L and J_R plus
    their discrepancy.  Failed rows are recorded and the sweep
    continues.  Rows are independent and run in ``jobs`` processes.
    """
    out_dir = out_dir or cfg.out_dir
    n_rows = int(round((cfg.a_stop - cfg.a_start) / cfg.da)) + 1
    a_values = [cfg.a_start + i * cfg.da for i in range(n_rows)]
    args = [(a, cfg.potential, cfg.u_base, cfg.mesh_n, cfg.dt, cfg.t_final,
             cfg.diffusion_scale) for a in a_values]
    if cfg.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(_sweep_row, args))
    else:
        rows = [_sweep_row(arg) for arg in args]
    path = os.path.join(out_dir, "gap_sweep.csv")
    _write_rows(path, "a,J_asymptotic,J_left,J_right,discrepancy,status",
                ([_fmt(r[0]), _fmt(r[1]), _fmt(r[2]), _fmt(r[3]), _fmt(r[4]), r[5]]
                 for r in rows))
    ok = [r for r in rows if r[5] == "ok"]
    results = {"rows": n_rows, "failed": n_rows - len(ok)}
    if ok:
        results["J_first"] = ok[0][1]
        results["J_last"] = ok[-1][1]
    return [path], results


# ---------------------------------------------------------------------------
# Dispatch

def run_experiment(cfg):
    """Execute a validated config; returns the list of written files.

    The run manifest (``manifest.json``) is always written last and
    lists every other output with the config hash.
    """
    out_dir = cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    if cfg.kind == "stationary1d":
        outputs, results = _run_stationary(cfg, out_dir)
    elif cfg.kind == "critical":
        outputs, results = _run_critical(cfg, out_dir)
    elif cfg.kind == "evolve1d-oracle":
        outputs, results = _run_oracle(cfg, out_dir)
    elif cfg.kind == "evolve2d":
        outputs, results = _run_evolve2d(cfg, out_dir, with_currents=False)
    elif cfg.kind == "currents":
        outputs, results = _run_evolve2d(cfg, out_dir, with_currents=True)
    elif cfg.kind == "gap-sweep":
        outputs, results = gap_sweep(cfg, out_dir)
    else:  # unreachable after parse_config
        raise ConfigError("kind", f"unknown kind {cfg.kind!r}")
    outputs.append(_write_manifest(cfg, out_dir, outputs, results))
    return outputs
