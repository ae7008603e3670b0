"""Command-line entry point.

Exit codes: 0 when every requested check passes, 2 when a check fails
(numbers are still written), 1 on usage or configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import platform
import sys
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, is_dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .geometry import Geometry, geometry_from_mapping, load_geometry

WORKER_ENV = "ACBOUNDARY_MAX_WORKERS"
DEFAULT_GEOM = "disk:R=1"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    seed: int | None = None
    versions: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    @contextmanager
    def stage(self, name):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = time.perf_counter() - t0

    @property
    def passed(self) -> bool:
        return all(bool(v) for v in self.checks.values())


def _versions() -> dict:
    import scipy
    return {"acboundary": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


# Output ----------------------------------------------------------------------

def _plain(obj):
    if is_dataclass(obj) and not isinstance(obj, type):
        return _plain(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Geometry):
        return obj.key
    return obj


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def emit(records, fmt: str, path, manifest: RunManifest | dict | None = None,
         columns=None) -> None:
    """Write homogeneous records as CSV or as a JSON object {manifest, records}."""
    records = [_plain(r) for r in records]
    if columns is None:
        columns = list(records[0]) if records else []
    if any(list(r) != list(columns) for r in records):
        raise ValueError("records are not homogeneous")
    path = Path(path)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for r in records:
                w.writerow([_fmt(r[c]) for c in columns])
    elif fmt == "json":
        with open(path, "w") as fh:
            json.dump({"manifest": _plain(manifest) if manifest is not None else {},
                       "records": records}, fh, indent=1)
            fh.write("\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def _format_for(path, default="csv") -> str:
    suffix = Path(path).suffix.lower()
    return {".json": "json", ".csv": "csv"}.get(suffix, default)


def _sidecar(path) -> Path:
    return Path(path).with_suffix(".json")


# Argument helpers ------------------------------------------------------------

def _parse_geom(spec: str | None, default: str) -> Geometry:
    spec = spec or default
    p = Path(spec)
    if p.suffix in (".toml", ".cfg", ".txt") or os.sep in spec:
        if not p.is_file():
            raise UsageError(f"geometry file not found: {spec}")
        try:
            return load_geometry(p)
        except Exception as exc:  # malformed file
            raise UsageError(f"malformed geometry config {spec}: {exc}") from exc
    kind, _, rest = spec.partition(":")
    cfg = {"kind": kind}
    for item in filter(None, rest.split(",")):
        k, sep, v = item.partition("=")
        if not sep:
            raise UsageError(f"bad geometry parameter {item!r}")
        cfg[k.strip()] = _number(v.strip())
    try:
        return geometry_from_mapping(cfg)
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"invalid geometry {spec!r}: {exc}") from exc


def _number(v: str):
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    return v


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc


def _check_eps(values):
    for e in values:
        if not 0.0 < e < 1.0:
            raise UsageError(f"eps must lie in (0, 1), got {e}")


def _workers(requested: int) -> int:
    cap = os.environ.get(WORKER_ENV)
    n = max(1, requested)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError as exc:
            raise UsageError(f"{WORKER_ENV} must be an integer") from exc
    return n


def _validate(args):
    if getattr(args, "eps", None) is not None:
        _check_eps([args.eps])
    if getattr(args, "eps_list", None) is not None:
        args.eps_list = _float_list(args.eps_list)
        _check_eps(args.eps_list)
        if not args.eps_list:
            raise UsageError("empty eps list")
    if getattr(args, "omega", None) is not None and args.omega <= 5:
        raise UsageError("omega must exceed 5")
    if getattr(args, "alpha", None) is not None and not 0 < args.alpha < 1:
        raise UsageError("alpha must lie in (0, 1)")
    if getattr(args, "divisor", None) is not None and args.divisor < 20:
        raise UsageError("divisor must be at least 20 (h <= eps/20)")
    for name in ("tmax", "n", "tol", "newton_tol", "trials"):
        v = getattr(args, name, None)
        if v is not None and not v > 0:
            raise UsageError(f"--{name.replace('_', '-')} must be positive")


# Subcommands -----------------------------------------------------------------

def cmd_profiles(args, man):
    from .mesh import Grid
    from .profiles import CutoffProfile, eval_heteroclinic, residual_R_omega

    eps, omega = args.eps, args.omega
    prof = CutoffProfile(eps, omega)
    T = args.tmax if args.tmax else 1.2 * prof.support[1]
    grid = Grid.covering(0.0, T, eps / args.divisor)
    with man.stage("profiles"):
        s = grid.t / eps
        R = residual_R_omega(eps, omega, grid)
        cols = {"t": grid.t, "g": eval_heteroclinic(s), "gbar": prof(s),
                "gdot": eval_heteroclinic(s, 1), "R_omega": R.values}
    man.checks["R_omega_constant_finite"] = bool(np.isfinite(R.meta["C"]))
    man.flags.append(f"C_R={R.meta['C']:.6g}")
    keys = list(cols)
    recs = [dict(zip(keys, row)) for row in zip(*cols.values())]
    emit(recs, "csv", args.out, columns=keys)
    return man


def cmd_ode(args, man):
    from .halfline_ode import RhsSpec, solve_halfline, verify_decay

    with man.stage("solve"):
        p = solve_halfline(RhsSpec.library(args.rhs), args.tmax, args.n)
    rate, C, _ = verify_decay(p)
    man.checks["substitution_residual<=1e-8"] = bool(p.residual <= 1e-8)
    man.flags += [f"residual={p.residual:.3e}", f"boundary_slope={p.boundary_slope:.12g}",
                  f"decay_rate={rate:.4g}"]
    idx = np.arange(0, p.t.size, max(1, args.stride))
    keys = ["t", "F", "dF", "d2F"]
    recs = [dict(zip(keys, r)) for r in zip(p.t[idx], p.F[idx], p.dF[idx], p.d2F[idx])]
    emit(recs, "csv", args.out, columns=keys)
    return man


def cmd_solve(args, man):
    from .minimizer import SolveConfig, minimize, residual_floor

    geom = _parse_geom(args.geom, DEFAULT_GEOM)
    cfg = SolveConfig(args.eps, geom, divisor=args.divisor, newton_tol=args.newton_tol,
                      init=args.init)
    with man.stage("solve"):
        sol = minimize(cfg)
    full = np.zeros_like(sol.u.values)
    full[sol.disc.free] = sol.disc.residual(sol.u.values)
    man.flags += sol.flags
    man.checks["nontrivial"] = not sol.trivial
    tol = max(args.newton_tol, residual_floor(args.eps, sol.u.grid.h))
    man.checks["residual<=newton_tol"] = bool(sol.residual <= tol)
    keys = ["t", "u", "residual"]
    emit([dict(zip(keys, r)) for r in zip(sol.t, sol.u.values, full)], "csv", args.out,
         columns=keys)
    side = {"energy": sol.energy, "iterations": sol.iterations, "residual": sol.residual,
            "trivial": sol.trivial, "flags": sol.flags, "geometry": geom.key, "eps": args.eps}
    emit([side], "json", _sidecar(args.out), man)
    return man


def cmd_neumann(args, man):
    from .neumann import fit_expansion, neumann_sweep, _BASIS

    geom = _parse_geom(args.geom, DEFAULT_GEOM)
    with man.stage("sweep"):
        recs = neumann_sweep(geom, args.eps_list, args.divisor, args.levels,
                             args.newton_tol, _workers(args.workers))
    rows = [r.as_dict() for r in recs]
    if len(recs) >= 4:
        with man.stage("fit"):
            fit = fit_expansion(recs, geom.curvature_data())
        # residual after subtracting the model terms one at a time
        for row, r in zip(rows, sorted(recs, key=lambda r: -r.eps)):
            acc = r.leading_removed
            row["resid_after_inv_eps"] = acc
            for term in fit.terms:
                acc -= fit.coefficients[term] * float(_BASIS[term](np.array(r.eps)))
                row[f"resid_after_{term}"] = acc
        if fit.order0_rel_error is not None:
            man.checks["order0_within_3pct"] = fit.order0_rel_error <= 0.03
            man.checks["residual_slope>=0.9"] = fit.residual_slope >= 0.9
        elif fit.best_rel_error is not None:
            man.checks["eps_coefficient_within_5pct"] = fit.best_rel_error <= 0.05
            man.checks["residual_slope>=1.8"] = fit.residual_slope >= 1.8
    else:
        fit = None
        if args.fit:
            raise UsageError("--fit needs at least 4 eps values")
    if args.fit:
        man.config["sweep"] = rows
        emit([fit.as_dict()], "json", args.out, man)
    else:
        emit(rows, _format_for(args.out), args.out, man)
    return man


def cmd_expansion(args, man):
    from .asymptotics import (ExpansionSpec, residual_order, solve_extrapolated,
                              w_rhs_disambiguation)

    geom = _parse_geom(args.geom, DEFAULT_GEOM)
    try:
        spec = ExpansionSpec.for_geometry(geom, args.order, args.omega, args.w_rhs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    with man.stage("solves"):
        sols = [solve_extrapolated(geom, e, args.divisor, args.levels) for e in args.eps_list]
    with man.stage("norms"):
        rep = residual_order(spec, sols, args.alpha)
        out = rep.as_dict()
        if args.order == 1 and spec.H0 != 0:
            d = w_rhs_disambiguation(geom, sols, args.alpha, args.omega)
            out["w_rhs_orders"] = d["orders"]
            out["w_rhs_operative"] = d["operative"]
    man.checks[f"order>={rep.target:.1f}"] = rep.passed
    emit([out], "json", args.out, man)
    return man


def cmd_schauder(args, man):
    from .mesh import Grid
    from .operators import HolderNorm, InvertibilityFailure, assemble_L, schauder_constant

    geom = _parse_geom(args.geom, DEFAULT_GEOM)
    rows = []
    with man.stage("sweep"):
        for e in sorted(args.eps_list, reverse=True):
            T = min(geom.domain_length, 30.0 * e)
            grid = Grid.covering(0.0, T, e / args.divisor)
            op = assemble_L(geom, e, grid, args.omega, right_bc="dirichlet",
                            divisor=args.divisor)
            try:
                est = schauder_constant(op, HolderNorm(2, args.alpha, e, seed=args.seed),
                                        args.trials, args.seed)
                rows.append({"eps": e, "K_est": est.K_est,
                             "top_eigenvalue": est.top_eigenvalue, "nonsingular": True})
            except InvertibilityFailure:
                rows.append({"eps": e, "K_est": math.nan, "top_eigenvalue": 0.0,
                             "nonsingular": False})
    K = [r["K_est"] for r in rows]
    man.checks["nonsingular"] = all(r["nonsingular"] for r in rows)
    man.checks["K_variation<=2"] = bool(np.all(np.isfinite(K)) and max(K) <= 2 * min(K))
    emit(rows, _format_for(args.out, "json"), args.out, man)
    return man


def cmd_match(args, man):
    from .pasting import NoSignChange, match_sphere

    with man.stage("bisection"):
        try:
            res = match_sphere(args.n, args.eps, args.tol, args.delta, args.divisor)
        except NoSignChange as exc:
            man.flags.append(str(exc))
            man.checks["sign_change"] = False
            emit([], "json", args.out, man)
            return man
    man.checks["|C+|<=tol"] = abs(res.C_plus) <= args.tol
    man.checks["C-=-C+"] = abs(res.C_plus + res.C_minus) <= max(args.tol, 1e-8)
    emit([res.as_dict()], "json", args.out, man)
    return man


def cmd_project(args, man):
    from .pasting import projection_test

    geom = _parse_geom(args.geom, "slab:L=1")
    amps = _float_list(args.amps) if args.amps else None
    with man.stage("projection"):
        try:
            out = projection_test(geom, args.eps, args.beta, amps, args.omega, args.divisor)
        except ValueError as exc:
            man.flags.append(str(exc))
            man.checks["C1_pasting"] = False
            emit([], "json", args.out, man)
            return man
    if "ratio" in out:
        man.checks["linear_ratio_within_1pct"] = abs(out["ratio"] / out["amp_ratio"] - 1) <= 0.01
        man.flags.append(f"winner={out['winner']}")
        man.config["summary"] = {k: out[k] for k in ("ratio", "constant", "winner", "sign")}
    emit([r.as_dict() for r in out["records"]], "json", args.out, man)
    return man


def cmd_geometry(args, man):
    geom = _parse_geom(args.geom, DEFAULT_GEOM)
    d = geom.describe()
    if args.out:
        emit([d], "json", args.out, man)
    else:
        print(json.dumps(_plain(d), indent=1))
    return man


# Parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="acboundary", description="Allen-Cahn boundary-layer experiments")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out_required=True, eps=False, eps_list=False, geom=False):
        sp.add_argument("--out", required=out_required)
        sp.add_argument("--dry-run", action="store_true", help="print the resolved plan only")
        sp.add_argument("--seed", type=int, default=0)
        if eps:
            sp.add_argument("--eps", type=float, required=True)
        if eps_list:
            sp.add_argument("--eps-list", default="0.1,0.05,0.025,0.0125")
        if geom:
            sp.add_argument("--geom", help="config file or inline kind:key=value,...")
        return sp

    sp = common(sub.add_parser("profiles"), eps=True)
    sp.add_argument("--omega", type=float, default=6.0)
    sp.add_argument("--divisor", type=float, default=20.0)
    sp.add_argument("--tmax", type=float, default=None)
    sp.set_defaults(func=cmd_profiles)

    sp = common(sub.add_parser("ode"))
    sp.add_argument("--rhs", choices=["g", "gdot", "tgdot", "t_times_gdot", "zero"], default="gdot")
    sp.add_argument("--tmax", type=float, default=40.0)
    sp.add_argument("--n", type=int, default=100_000)
    sp.add_argument("--stride", type=int, default=1)
    sp.set_defaults(func=cmd_ode)

    sp = common(sub.add_parser("solve"), eps=True, geom=True)
    sp.add_argument("--divisor", type=float, default=20.0)
    sp.add_argument("--newton-tol", type=float, default=1e-10)
    sp.add_argument("--init", choices=["heteroclinic", "ones"], default="heteroclinic")
    sp.set_defaults(func=cmd_solve)

    sp = common(sub.add_parser("neumann-sweep"), eps_list=True, geom=True)
    sp.add_argument("--divisor", type=float, default=20.0)
    sp.add_argument("--levels", type=int, default=2)
    sp.add_argument("--newton-tol", type=float, default=1e-11)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--fit", action="store_true", help="emit the FitReport as JSON")
    sp.set_defaults(func=cmd_neumann)

    sp = common(sub.add_parser("expansion-residual"), eps_list=True, geom=True)
    sp.add_argument("--order", type=int, choices=[0, 1, 2], required=True)
    sp.add_argument("--alpha", type=float, default=0.5)
    sp.add_argument("--omega", type=float, default=6.0)
    sp.add_argument("--w-rhs", choices=["gdot", "g"], default="gdot")
    sp.add_argument("--divisor", type=float, default=20.0)
    sp.add_argument("--levels", type=int, default=2)
    sp.set_defaults(func=cmd_expansion)

    sp = common(sub.add_parser("schauder-sweep"), eps_list=True, geom=True)
    sp.add_argument("--alpha", type=float, default=0.5)
    sp.add_argument("--omega", type=float, default=6.0)
    sp.add_argument("--divisor", type=float, default=20.0)
    sp.add_argument("--trials", type=int, default=64)
    sp.set_defaults(func=cmd_schauder)

    sp = common(sub.add_parser("match-sphere"))
    sp.add_argument("--n", type=int, choices=[2, 3], default=2)
    sp.add_argument("--eps", type=float, default=0.05)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--delta", type=float, default=0.02)
    sp.add_argument("--divisor", type=float, default=40.0)
    sp.set_defaults(func=cmd_match)

    sp = common(sub.add_parser("project"), eps=True, geom=True)
    sp.add_argument("--beta", type=float, default=0.5)
    sp.add_argument("--amps", default=None, help="comma-separated amplitudes")
    sp.add_argument("--omega", type=float, default=6.0)
    sp.add_argument("--divisor", type=float, default=40.0)
    sp.set_defaults(func=cmd_project)

    sp = common(sub.add_parser("geometry"), out_required=False, geom=True)
    sp.add_argument("--describe", action="store_true", default=True)
    sp.set_defaults(func=cmd_geometry)
    return p


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _validate(args)
        config = {k: v for k, v in vars(args).items() if k not in ("func",)}
        man = RunManifest(args.command, config, args.seed, _versions())
        if args.dry_run:
            if getattr(args, "geom", None) is not None or args.command in ("solve", "geometry"):
                config["resolved_geometry"] = _parse_geom(getattr(args, "geom", None),
                                                          DEFAULT_GEOM).describe()
            print(json.dumps(_plain({"plan": config}), indent=1))
            return 0
        man = args.func(args, man)
    except UsageError as exc:
        print(f"acboundary: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"acboundary: error: {exc}", file=sys.stderr)
        return 1
    for name, ok in man.checks.items():
        print(f"{name}: {'PASS' if ok else 'FAIL'}", file=sys.stderr)
    return 0 if man.passed else 2


def main() -> None:
    sys.exit(run())
