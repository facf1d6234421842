"""Command line entry point: ``nehari <subcommand> [--config file.toml] ...``.

Every run writes into its own directory ``<out>/<UTC timestamp>-<hash>``
where the hash is taken over the fully resolved configuration.  Results go
to ``result.json`` (no timing fields, so identical inputs give identical
bytes), tables to CSV and the resolved configuration, library versions and
wall time to ``manifest.json``.

Exit codes: 0 success, 2 hypothesis violation or failed validator,
3 non-convergence, 4 bad configuration.
"""
from __future__ import annotations

import argparse
import copy
import csv
import datetime as _dt
import hashlib
import json
import logging
import platform
import sys
import time
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from . import validate as val
from .affine import AffineFunctional, AffineParams, SphereQuadrature
from .errors import ConfigurationError, HypothesisViolation, NehariError
from .fibering import fibering_profile, solve_t_c, solve_t_nehari
from .functionals import BrezisNirenberg, ConcaveConvex, Kirchhoff, PQGeneral, Semilinear
from .mesh import Grid, laplacian_eigenbasis
from .nonlinearity import from_dict
from .solver import SolverOptions, ground_state, minimax_sequence, sweep_c

__all__ = ["main", "run", "load_config", "resolve_config", "build_model",
           "load_field", "store_field", "EXIT_OK", "EXIT_HYPOTHESIS",
           "EXIT_NOT_CONVERGED", "EXIT_CONFIG"]

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_HYPOTHESIS = 2
EXIT_NOT_CONVERGED = 3
EXIT_CONFIG = 4

SUBCOMMANDS = ("solve", "sweep", "minimax", "fibering", "validate", "oracle")

DEFAULTS = {
    "problem": {
        "model": "semilinear",
        "nonlinearity": {"kind": "pure_power", "r": 4.0},
    },
    "grid": {"dim": 1, "n": 256},
    "c": [1.0],
    "solver": {"residual_tol": 1e-6, "energy_tol": 1e-8, "max_iter": 5000,
               "seed": 0, "multistart": 5},
    "affine": {"p": 2.0, "m": 64, "eps_floor": 1e-10},
    "minimax": {"n": 5},
    "fibering": {"field": None, "t_min": 1e-3, "t_max": 1e3, "points": 200},
    "validate": {"ray_samples": 8, "S_est": None},
    "oracle": {"tol": 1e-10},
}

_MODEL_KEYS = {
    "semilinear": (),
    "concave_convex": ("q",),
    "brezis_nirenberg": ("N", "two_star"),
    "pq_general": ("p", "q", "r", "k0", "k1", "eps"),
    "kirchhoff": ("p", "theta", "eps"),
    "affine": (),
}


# ---------------------------------------------------------------- config


def load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from None


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "nonlinearity":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def resolve_config(raw: dict | None = None, *, seed=None, grid_n=None, c=None) -> dict:
    """Defaults, then the file, then command-line overrides."""
    raw = raw or {}
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise ConfigurationError(f"unknown config sections: {sorted(unknown)}")
    cfg = _merge(DEFAULTS, raw)
    if seed is not None:
        cfg["solver"]["seed"] = int(seed)
    if grid_n is not None:
        cfg["grid"]["n"] = int(grid_n)
    if c is not None:
        cfg["c"] = c
    if not isinstance(cfg["c"], list):
        cfg["c"] = [cfg["c"]]
    try:
        cfg["c"] = [float(x) for x in cfg["c"]]
    except (TypeError, ValueError):
        raise ConfigurationError(f"c must be a number or a list of numbers, got {cfg['c']!r}") from None
    model = cfg["problem"].get("model")
    if model not in _MODEL_KEYS:
        raise ConfigurationError(f"unknown model {model!r}; choose from {sorted(_MODEL_KEYS)}")
    extra = set(cfg["problem"]) - {"model", "nonlinearity"} - set(_MODEL_KEYS[model])
    if extra:
        raise ConfigurationError(f"parameters {sorted(extra)} do not apply to model {model!r}")
    return cfg


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:10]


def solver_options(cfg: dict) -> SolverOptions:
    s = cfg["solver"]
    try:
        return SolverOptions(residual_tol=float(s["residual_tol"]),
                             energy_tol=float(s["energy_tol"]),
                             max_iter=int(s["max_iter"]), seed=int(s["seed"]),
                             multistart=int(s["multistart"]))
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigurationError(f"bad solver options: {exc}") from None


def build_grid_from(cfg: dict) -> Grid:
    try:
        return Grid(int(cfg["grid"]["dim"]), int(cfg["grid"]["n"]))
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigurationError(f"bad grid: {exc}") from None


def build_model(cfg: dict):
    grid = build_grid_from(cfg)
    prob = cfg["problem"]
    kind = prob["model"]
    params = {k: prob[k] for k in _MODEL_KEYS[kind] if k in prob}
    try:
        if kind == "brezis_nirenberg":
            if "N" in params:
                params["N"] = int(params["N"])
            return BrezisNirenberg(grid, **params)
        if kind == "pq_general":
            return PQGeneral(grid, **{k: float(v) for k, v in params.items()})
        nonlin = from_dict(prob["nonlinearity"])
        if kind == "semilinear":
            return Semilinear(grid, nonlin)
        if kind == "concave_convex":
            return ConcaveConvex(grid, nonlin, float(params["q"]))
        if kind == "kirchhoff":
            return Kirchhoff(grid, nonlin=nonlin, **{k: float(v) for k, v in params.items()})
        a = cfg["affine"]
        return AffineFunctional(grid, nonlin, AffineParams(p=float(a["p"]), eps_floor=float(a["eps_floor"])),
                                SphereQuadrature(int(a["m"])))
    except (TypeError, KeyError) as exc:
        raise ConfigurationError(f"bad parameters for model {kind!r}: {exc}") from None


# ---------------------------------------------------------------- fields


def store_field(path, grid: Grid, u) -> None:
    u = grid.check_field(u)
    with open(path, "w") as fh:
        fh.write(f"# dim={grid.dim} n={grid.n}\n")
        for v in u:
            fh.write("%.17g\n" % v)


def read_field_header(path) -> tuple[int, int]:
    with open(path) as fh:
        head = fh.readline().strip()
    try:
        parts = dict(p.split("=") for p in head.lstrip("#").split())
        return int(parts["dim"]), int(parts["n"])
    except (ValueError, KeyError):
        raise ConfigurationError(f"{path}: header must look like '# dim=1 n=256'") from None


def load_field(path, grid: Grid | None = None):
    """Read a field; with ``grid`` given, a dim/n mismatch is a configuration error."""
    try:
        dim, n = read_field_header(path)
    except FileNotFoundError:
        raise ConfigurationError(f"field file not found: {path}") from None
    stored = Grid(dim, n)
    if grid is not None and (grid.dim, grid.n) != (dim, n):
        raise ConfigurationError(
            f"{path} holds a dim={dim} n={n} field but the grid is dim={grid.dim} n={grid.n}")
    values = np.loadtxt(path, comments="#", dtype=float, ndmin=1)
    return stored.check_field(values) if grid is None else grid.check_field(values)


# ---------------------------------------------------------------- output


class RunDir:
    def __init__(self, base, cfg: dict, command: str):
        stamp = _dt.datetime.now(_dt.timezone.utc).strftime("%Y%m%dT%H%M%SZ")
        name = f"{stamp}-{config_hash({'command': command, **cfg})}"
        path = Path(base) / name
        k = 1
        while path.exists():
            path = Path(base) / f"{name}-{k}"
            k += 1
        path.mkdir(parents=True)
        self.path = path

    def json(self, name: str, obj) -> Path:
        p = self.path / name
        p.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")
        return p

    def csv(self, name: str, header, rows) -> Path:
        p = self.path / name
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(x) for x in r])
        return p


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, (set, frozenset)):
        return sorted(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x)}")


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return "%.17g" % x
    return x


def _versions() -> dict:
    import scipy

    return {"nehari": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


# ---------------------------------------------------------------- commands


def _level(model, cfg):
    return None if model.path == "direct" else cfg["c"][0]


def _cmd_solve(cfg, out: RunDir) -> int:
    model = build_model(cfg)
    res = ground_state(model, _level(model, cfg), solver_options(cfg))
    out.json("result.json", res.summary())
    store_field(out.path / "field.csv", model.grid, res.u)
    out.csv("trace.csv", ["iteration", "value", "residual"],
            [(i, v, r) for i, (v, r) in enumerate(res.trace)])
    print(f"lambda={res.lam} level={res.level:.12g} residual={res.residual:.3e} "
          f"iterations={res.iterations} converged={res.converged}")
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def _cmd_sweep(cfg, out: RunDir) -> int:
    model = build_model(cfg)
    if model.path == "direct":
        raise ConfigurationError(f"{model.kind} has no level parameter to sweep")
    rows = sweep_c(model, cfg["c"], solver_options(cfg))
    out.csv("sweep.csv", ["c", "lambda_1c", "residual", "converged"],
            [(r["c"], r["lambda_1c"], r["residual"], r["converged"]) for r in rows])
    out.json("result.json", {"rows": rows})
    for r in rows:
        print(f"c={r['c']:g} lambda_1c={r['lambda_1c']:.10g} converged={r['converged']}")
    return EXIT_OK if all(r["converged"] for r in rows) else EXIT_NOT_CONVERGED


def _cmd_minimax(cfg, out: RunDir) -> int:
    model = build_model(cfg)
    n = int(cfg["minimax"]["n"])
    seq = minimax_sequence(model, _level(model, cfg), n, solver_options(cfg))
    out.csv("minimax.csv", ["n", "value", "inner_iterations"],
            [(e.n, e.value, e.inner_iterations) for e in seq])
    out.json("result.json", {"estimates": [
        {"n": e.n, "value": e.value, "subspace_dim": e.subspace_dim,
         "inner_iterations": e.inner_iterations} for e in seq]})
    for e in seq:
        print(f"n={e.n} value={e.value:.10g}")
    return EXIT_OK


def _cmd_fibering(cfg, out: RunDir) -> int:
    model = build_model(cfg)
    fcfg = cfg["fibering"]
    if fcfg.get("field"):
        u = load_field(fcfg["field"], model.grid)
    else:
        u = laplacian_eigenbasis(model.grid, 1)[0][1]
    ts = np.logspace(np.log10(float(fcfg["t_min"])), np.log10(float(fcfg["t_max"])),
                     int(fcfg["points"]))
    if model.path == "direct":
        prof = fibering_profile(model, u, None, ts)
        res = solve_t_nehari(model, u)
    else:
        c = cfg["c"][0]
        prof = fibering_profile(model, u, c, ts)
        res = solve_t_c(model, u, c)
    out.csv("fibering.csv", ["t", "value", "derivative"], prof.tolist())
    out.json("result.json", {"t": res.t, "kind": res.kind, "residual": res.residual,
                             "bracket": list(res.bracket), "flags": sorted(res.flags)})
    print(f"t={res.t:.15g} kind={res.kind} flags={sorted(res.flags)}")
    return EXIT_OK


def _validation_battery(cfg, model) -> list:
    vcfg = cfg["validate"]
    reports = []
    nonlin = getattr(model, "nonlin", None)
    c = cfg["c"][0]
    orient = "increasing" if c > 0 else "decreasing"
    if nonlin is not None:
        reports.append(val.check_scalar_condition(nonlin, "f1"))
        if model.kind in ("semilinear", "brezis_nirenberg"):
            reports.append(val.check_scalar_condition(nonlin, "f2", {"orientation": orient}))
    if model.path == "ngrq":
        reports.append(val.check_ray_shape(model, 1 if c > 0 else -1,
                                           int(vcfg["ray_samples"]), seed=cfg["solver"]["seed"]))
        reports.append(val.check_h1(model, c, int(vcfg["ray_samples"]), seed=cfg["solver"]["seed"]))
        reports.append(val.check_f3_coercivity(model, seed=cfg["solver"]["seed"]))
    else:
        reports.append(val.check_h1(model, None, int(vcfg["ray_samples"]), seed=cfg["solver"]["seed"]))
    if model.kind == "pq_general":
        reports.extend(val.check_A_conditions(model.p, model.q, model.r, model.k0, model.k1))
    if model.kind == "brezis_nirenberg" and model.N >= 3:
        S = vcfg.get("S_est")
        S = float(S) if S is not None else val.estimate_sobolev_constant(model.grid, model.two_star)
        max_j, ok = val.bn_threshold(model.N, S, c)
        reports.append(val.ValidationReport(
            "BN-threshold", val.PASS if ok else val.FAIL, 1,
            None if ok else {"c": c, "threshold": S ** (model.N / 2) / model.N, "max_j": max_j},
            f"S_est={S:.6g}, max_j={max_j:.6g}"))
    return reports


def _cmd_validate(cfg, out: RunDir) -> int:
    model = build_model(cfg)
    reports = _validation_battery(cfg, model)
    out.json("result.json", {"reports": [r.to_dict() for r in reports]})
    print(f"{'hypothesis':<16}{'verdict':<14}{'samples':>8}  notes")
    for r in reports:
        print(f"{r.hypothesis:<16}{r.verdict:<14}{r.samples:>8}  {r.notes}")
    return EXIT_HYPOTHESIS if any(r.verdict == val.FAIL for r in reports) else EXIT_OK


def _cmd_oracle(cfg, out: RunDir) -> int:
    model = build_model(cfg)
    if model.kind != "semilinear" or model.grid.dim != 1:
        raise ConfigurationError("the shooting oracle covers the 1-D semilinear model only")
    c = cfg["c"][0]
    res = val.prescribed_energy_oracle_1d(model.nonlin, c, float(cfg["oracle"]["tol"]))
    payload = {"verdict": res.verdict, "lambda": res.lam, "notes": res.notes}
    if res.branch is not None:
        payload.update(slope=res.branch.slope, energy=res.branch.energy)
        store_field(out.path / "field.csv", model.grid, res.branch.on_grid(model.grid))
    out.json("result.json", payload)
    print(f"verdict={res.verdict} lambda={res.lam:.12g}")
    return EXIT_OK if res.verdict == val.PASS else EXIT_HYPOTHESIS


_COMMANDS = {"solve": _cmd_solve, "sweep": _cmd_sweep, "minimax": _cmd_minimax,
             "fibering": _cmd_fibering, "validate": _cmd_validate, "oracle": _cmd_oracle}


def run(subcommand: str, cfg: dict, out_base="runs") -> tuple[int, Path | None]:
    """Execute one subcommand on a resolved config; returns (exit code, run dir)."""
    if subcommand not in _COMMANDS:
        raise ConfigurationError(f"unknown subcommand {subcommand!r}")
    t0 = time.perf_counter()
    out = RunDir(out_base, cfg, subcommand)
    try:
        code = _COMMANDS[subcommand](cfg, out)
    finally:
        out.json("manifest.json", {"command": subcommand, "config": cfg,
                                   "seed": cfg["solver"]["seed"], "versions": _versions(),
                                   "wall_time_s": time.perf_counter() - t0})
    return code, out.path


def _parse_c(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad level list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nehari", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="TOML configuration file")
    ap.add_argument("--out", default="runs", help="base directory for run outputs")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--grid-n", type=int, dest="grid_n")
    ap.add_argument("--c", type=_parse_c, help="level or comma separated levels")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        raw = load_config(args.config) if args.config else {}
        cfg = resolve_config(raw, seed=args.seed, grid_n=args.grid_n, c=args.c)
        code, path = run(args.subcommand, cfg, args.out)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HypothesisViolation as exc:
        print(f"hypothesis violation: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except NehariError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    print(f"output: {path}")
    return code


if __name__ == "__main__":
    sys.exit(main())
