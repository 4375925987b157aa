"""Command line front end.

Subcommands: ``estimate`` (constants over a refinement ladder), ``verify``
(estimate plus randomized inequality suites), ``kernel`` (kernel dimension
and unique continuation checks for deformation forms), ``report``
(re-render a stored report.json), ``list`` (registered shapes and
inequality ids).

Experiments are described in a TOML file; see the README for the schema.
Identical config and seed produce a byte-identical report.json except for
the timestamp field in the header.  The exit code is 0 exactly when every
check in the report passed; otherwise the first failing check is named on
stderr.  GUENTERLAB_THREADS caps how many runs execute concurrently.
"""

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import tomli

from . import geometry as geo
from . import kernels as ker
from . import registry as reg
from . import spectra as spec
from . import verify as ver
from .errors import AmbiguousKernel, ConfigError, GuenterLabError

_EXPERIMENT_KEYS = {"seed", "levels", "p", "n_samples", "out"}
_RUN_KEYS = {"id", "shape", "params", "regions", "cylinder", "constant", "p"}
_REGION_KEYS = {"kind", "predicate", "axis", "op", "value", "coords"}
_CYLINDER_KEYS = {"interval", "layers"}
_PREDICATES = ("left", "right", "boundary")
_OPS = ("<", ">", "abs<")

# ids whose right-hand side is a deformation form; these get kernel checks
_DEF_IDS = frozenset({
    "KornI", "KornII", "PK_domain", "FK_domain",
    "KornI_surf", "KornII_surf", "PK_surface", "FK_surface",
    "CylK_F", "CylK_P0", "CylFlatK_F", "CylFlatK_P0",
})

_DEFAULTS = {"seed": 0, "levels": 3, "p": 2.0, "n_samples": 100,
             "out": "results"}


def _reject_unknown(table, allowed, where):
    extra = sorted(set(table) - allowed)
    if extra:
        raise ConfigError(f"unknown key {extra[0]!r} in {where} "
                          f"(allowed: {', '.join(sorted(allowed))})")


def _check_type(value, types, where):
    if not isinstance(value, types):
        names = types.__name__ if isinstance(types, type) else \
            "/".join(t.__name__ for t in types)
        raise ConfigError(f"{where} must be {names}, got {type(value).__name__}")
    return value


def load_config(path):
    """Parse and validate a TOML experiment file.

    Returns the effective config with all defaults filled in, so the
    report header echoes exactly what ran.  Any unrecognized key is a
    hard ConfigError naming the key and its table.
    """
    raw = Path(path).read_bytes()
    try:
        data = tomli.loads(raw.decode("utf-8"))
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    _reject_unknown(data, {"experiment", "run"}, "top level")

    exp = data.get("experiment", {})
    _check_type(exp, dict, "[experiment]")
    _reject_unknown(exp, _EXPERIMENT_KEYS, "[experiment]")
    cfg = dict(_DEFAULTS)
    cfg.update(exp)
    _check_type(cfg["seed"], int, "experiment.seed")
    _check_type(cfg["levels"], int, "experiment.levels")
    if cfg["levels"] < 1:
        raise ConfigError("experiment.levels must be at least 1")
    _check_type(cfg["p"], (int, float), "experiment.p")
    _check_type(cfg["n_samples"], int, "experiment.n_samples")
    _check_type(cfg["out"], str, "experiment.out")

    runs = data.get("run", [])
    _check_type(runs, list, "[[run]]")
    if not runs:
        raise ConfigError("config declares no [[run]] tables; nothing to do")
    known = set(reg.registered_ids())
    shapes = set(geo.registered_shapes())
    out_runs = []
    for i, run in enumerate(runs):
        where = f"[[run]] #{i + 1}"
        _check_type(run, dict, where)
        _reject_unknown(run, _RUN_KEYS, where)
        if "id" not in run or "shape" not in run:
            raise ConfigError(f"{where} needs both 'id' and 'shape'")
        if run["id"] not in known:
            raise ConfigError(f"{where}: unknown inequality id {run['id']!r}")
        if run["shape"] not in shapes:
            raise ConfigError(f"{where}: unknown shape {run['shape']!r} "
                              f"(known: {', '.join(sorted(shapes))})")
        r = {"id": run["id"], "shape": run["shape"],
             "params": dict(run.get("params", {})),
             "regions": {}, "cylinder": None,
             "constant": run.get("constant"),
             "p": float(run.get("p", cfg["p"]))}
        _check_type(r["params"], dict, f"{where}.params")
        for name, rt in run.get("regions", {}).items():
            _check_type(rt, dict, f"{where}.regions.{name}")
            _reject_unknown(rt, _REGION_KEYS, f"{where}.regions.{name}")
            r["regions"][name] = _validate_region(rt, f"{where}.regions.{name}")
        if "cylinder" in run:
            ct = _check_type(run["cylinder"], dict, f"{where}.cylinder")
            _reject_unknown(ct, _CYLINDER_KEYS, f"{where}.cylinder")
            iv = ct.get("interval", [0.0, 1.0])
            if not (isinstance(iv, list) and len(iv) == 2):
                raise ConfigError(f"{where}.cylinder.interval must be [a, b]")
            r["cylinder"] = {"interval": [float(iv[0]), float(iv[1])],
                             "layers": int(ct.get("layers", 4))}
        if r["constant"] is not None:
            r["constant"] = float(r["constant"])
        out_runs.append(r)
    cfg["run"] = out_runs
    return cfg


def _validate_region(rt, where):
    kind = rt.get("kind", "boundary-part")
    if kind not in ("boundary-part", "subdomain", "point"):
        raise ConfigError(f"{where}: kind must be boundary-part, subdomain, "
                          f"or point")
    out = {"kind": kind}
    if kind == "point":
        coords = rt.get("coords")
        if not isinstance(coords, list) or not coords:
            raise ConfigError(f"{where}: point regions need coords = [..]")
        out["coords"] = [float(c) for c in coords]
        return out
    if "predicate" in rt:
        if rt["predicate"] not in _PREDICATES:
            raise ConfigError(f"{where}: predicate must be one of "
                              f"{', '.join(_PREDICATES)}")
        out["predicate"] = rt["predicate"]
        return out
    if not {"axis", "op", "value"} <= set(rt):
        raise ConfigError(f"{where}: give either a named predicate or all "
                          f"of axis, op, value")
    if rt["op"] not in _OPS:
        raise ConfigError(f"{where}: op must be one of {', '.join(_OPS)}")
    out.update(axis=int(rt["axis"]), op=rt["op"], value=float(rt["value"]))
    return out


def _region_predicate(rspec, mesh):
    pts = mesh.nodes if mesh.kind == "grid" else mesh.vertices
    if "coords" in rspec:
        target = np.asarray(rspec["coords"], dtype=float)
        i0 = int(np.argmin(np.sum((pts - target) ** 2, axis=1)))
        hit = pts[i0]
        return lambda p: bool(np.allclose(p, hit, rtol=0, atol=1e-12))
    if rspec.get("predicate") == "left":
        lo = pts[:, 0].min()
        return lambda p: bool(p[0] < lo + 1e-12)
    if rspec.get("predicate") == "right":
        hi = pts[:, 0].max()
        return lambda p: bool(p[0] > hi - 1e-12)
    if rspec.get("predicate") == "boundary":
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        return lambda p: bool(np.any(p < lo + 1e-12) or np.any(p > hi - 1e-12))
    axis, op, value = rspec["axis"], rspec["op"], rspec["value"]
    if op == "<":
        return lambda p: bool(p[axis] < value)
    if op == ">":
        return lambda p: bool(p[axis] > value)
    return lambda p: bool(abs(p[axis]) < value)


def build_run_mesh(run, level):
    """Carrier and regions for one run at a ladder level.

    Cylinders refine the base shape and keep the layer count; regions are
    marked on the base and extruded, and the base region is returned too
    so kernel checks can work per layer.
    """
    params = geo.refine_params(run["shape"], run["params"], level) \
        if level else dict(run["params"])
    base = geo.build_mesh(run["shape"], **params)
    regions = {}
    for name, rspec in run["regions"].items():
        regions[name] = geo.mark_region(base, _region_predicate(rspec, base),
                                        rspec["kind"])
    base_regions = dict(regions)
    mesh = base
    if run["cylinder"] is not None:
        mesh = geo.extrude_cylinder(base, tuple(run["cylinder"]["interval"]),
                                    run["cylinder"]["layers"])
        regions = {name: geo.extrude_region(mesh, r)
                   for name, r in regions.items()}
    return mesh, regions, base, base_regions


def _kernel_check(run, base, base_regions):
    """Nullspace of the deformation form on the run's base carrier.

    Grids should see the rigid motions, spheres the tangential rotations;
    classification failures (AmbiguousKernel) are reported, not raised.
    When the run has a region, the kernel must have full rank on it
    (unique continuation), which is what makes the constrained problems
    positive definite.
    """
    try:
        if base.kind == "grid":
            A = spec.assemble_quadratic_form("stiffness_def", base).matrix
            B = spec.assemble_quadratic_form("vec_mass", base).matrix
            kb = ker.nullspace(A, B, carrier=base, n_components=base.dim)
        else:
            A = spec.assemble_quadratic_form("stiffness_surface_def", base).matrix
            B = spec.assemble_quadratic_form("vec_mass", base).matrix
            T = spec.tangential_reduction(base)
            red = ker.nullspace((T.T @ A @ T).tocsr(), (T.T @ B @ T).tocsr(),
                                carrier=base, n_components=2)
            kb = ker.KernelBasis(carrier=base, vectors=T @ red.vectors,
                                 values=red.values, n_components=base.dim,
                                 cut=red.cut, gap=red.gap,
                                 lambda_ref=red.lambda_ref)
    except AmbiguousKernel as exc:
        return {"passed": False, "error": str(exc),
                "mesh": geo.mesh_descriptor(base)}
    result = {"dimension": kb.dimension, "gap": kb.gap, "cut": kb.cut,
              "mesh": geo.mesh_descriptor(base),
              "uc_rank": None, "uc_region": None, "passed": kb.dimension > 0}
    region = None
    for name in ("G0", "M0"):
        if name in base_regions:
            region = base_regions[name]
            result["uc_region"] = name
            break
    if region is not None and kb.dimension > 0:
        rep = ker.unique_continuation_check(kb, region)
        result["uc_rank"] = rep.rank
        result["passed"] = rep.passed
    return result


def _estimate_level(run, mesh, regions, seed):
    if run["p"] != 2.0 or run["id"] == "Sup_P":
        bound = spec.quotient_lower_bound(run["id"], mesh, regions=regions,
                                          p=run["p"], seed=seed)
        return {"id": run["id"], "C": bound, "lambda_min": None,
                "residual": None, "mesh": geo.mesh_descriptor(mesh),
                "p": run["p"], "method": "sampled-quotient",
                "n_nodes": mesh.n_nodes}, bound
    est = spec.estimate_constant(run["id"], mesh, regions=regions)
    payload = json.loads(est.to_json())
    payload["method"] = "eigen"
    payload["n_nodes"] = mesh.n_nodes
    return payload, est.C


def run_one(index, run, cfg, command, out_dir, quiet):
    """Execute one run of the ladder; returns its report fragment."""
    label = f"{index:02d}_{run['id']}_{run['shape']}"
    seed = cfg["seed"] + index
    levels = []
    constants = []
    mesh = regions = base = base_regions = None
    for level in range(cfg["levels"]):
        if command == "kernel":
            # classification wants resolution: check the finest level only
            mesh, regions, base, base_regions = build_run_mesh(
                run, cfg["levels"] - 1)
            break
        mesh, regions, base, base_regions = build_run_mesh(run, level)
        payload, c = _estimate_level(run, mesh, regions, seed)
        payload["level"] = level
        levels.append(payload)
        constants.append(c)
        if not quiet:
            print(f"  {label} level {level}: C = {c:.8g}  "
                  f"({payload['mesh']})", flush=True)
    deltas = [abs(constants[i] - constants[i - 1]) / abs(constants[i])
              for i in range(1, len(constants))]
    result = {
        "label": label, "id": run["id"], "shape": run["shape"],
        "p": run["p"], "levels": levels,
        "convergence": {"constants": constants, "deltas": deltas,
                        "stable": bool(deltas) and deltas[-1] <= 0.05},
        "verification": None, "kernel": None, "checks": [],
    }
    checks = result["checks"]
    if command in ("estimate", "verify"):
        checks.append({"name": f"{label}: estimate",
                       "passed": len(levels) == cfg["levels"]})
    if command == "verify":
        wpath = out_dir / "witnesses" / f"{label}.csv"
        wpath.parent.mkdir(parents=True, exist_ok=True)
        if run["constant"] is not None:
            rep = ver.verify_inequality(
                run["id"], mesh, run["constant"], regions=regions,
                p=run["p"], n_samples=cfg["n_samples"], seed=seed,
                witness_path=wpath)
        elif run["p"] != 2.0 or run["id"] == "Sup_P":
            _, rep = ver.quotient_report(
                run["id"], mesh, regions=regions, p=run["p"],
                n_samples=cfg["n_samples"], seed=seed, witness_path=wpath)
        else:
            _, rep = ver.verify_constant(
                run["id"], mesh, regions=regions,
                n_samples=cfg["n_samples"], seed=seed, witness_path=wpath)
        payload = json.loads(rep.to_json())
        if payload.get("witness_path"):
            # keep report bytes independent of where the run was rooted
            payload["witness_path"] = str(
                Path(payload["witness_path"]).relative_to(out_dir))
        result["verification"] = payload
        checks.append({"name": f"{label}: suite", "passed": rep.passed})
        if not quiet:
            print(f"  {label} suite: "
                  f"{'PASS' if rep.passed else 'FAIL'}", flush=True)
    if command == "kernel" or (command == "verify" and run["id"] in _DEF_IDS):
        if run["id"] in _DEF_IDS:
            kres = _kernel_check(run, base, base_regions)
            result["kernel"] = kres
            checks.append({"name": f"{label}: kernel",
                           "passed": kres["passed"]})
            if not quiet:
                print(f"  {label} kernel: dim "
                      f"{kres.get('dimension', '?')} "
                      f"{'PASS' if kres['passed'] else 'FAIL'}", flush=True)
        elif command == "kernel" and not quiet:
            # nothing to check: the id has no deformation form
            print(f"  {label}: skipped (no deformation form)", flush=True)
    result["passed"] = all(c["passed"] for c in checks)
    return result


def _write_constants_csv(path, runs):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "shape", "level", "n_nodes", "C",
                    "lambda_min", "residual"])
        for r in runs:
            for lv in r["levels"]:
                lam = lv.get("lambda_min")
                res = lv.get("residual")
                w.writerow([r["id"], r["shape"], lv["level"], lv["n_nodes"],
                            f"{lv['C']:.12g}",
                            "" if lam is None else f"{lam:.12g}",
                            "" if res is None else f"{res:.3g}"])


def _convergence_text(runs):
    lines = ["convergence of estimated constants (factor-2 ladder)", ""]
    for r in runs:
        lines.append(f"{r['id']} on {r['shape']} (p = {r['p']:g})")
        cs = r["convergence"]["constants"]
        ds = r["convergence"]["deltas"]
        for i, lv in enumerate(r["levels"]):
            d = f"  delta {ds[i - 1]:.3e}" if i else ""
            lines.append(f"  level {i}: n = {lv['n_nodes']:>8d}   "
                         f"C = {cs[i]:.10g}{d}")
        if ds:
            verdict = "stable" if r["convergence"]["stable"] else "drifting"
            lines.append(f"  last relative change {ds[-1]:.3e} ({verdict})")
        lines.append("")
    return "\n".join(lines)


def _render_text(report):
    lines = [f"guenterlab {report['header']['command']} "
             f"(seed {report['header']['config']['seed']})", ""]
    for r in report["runs"]:
        status = "PASS" if r["passed"] else "FAIL"
        cs = r["convergence"]["constants"]
        tail = f"C = {cs[-1]:.8g}" if cs else "no estimate"
        lines.append(f"{status}  {r['id']} on {r['shape']}: {tail}")
        for c in r["checks"]:
            mark = "ok" if c["passed"] else "FAILED"
            lines.append(f"      {c['name']}: {mark}")
    lines.append("")
    lines.append("all passed" if report["all_passed"] else "FAILURES present")
    return "\n".join(lines)


def run_experiment(cfg, command, out_dir, quiet=False):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n = len(cfg["run"])
    cap = os.environ.get("GUENTERLAB_THREADS")
    workers = max(1, min(n, int(cap) if cap else (os.cpu_count() or 1)))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_one, i, run, cfg, command, out_dir,
                                   True) for i, run in enumerate(cfg["run"])]
            runs = [f.result() for f in futures]
    else:
        runs = [run_one(i, run, cfg, command, out_dir, quiet)
                for i, run in enumerate(cfg["run"])]
    report = {
        "header": {
            "command": command,
            "config": {k: cfg[k] for k in sorted(_DEFAULTS)},
            "runs_declared": n,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "version": "0.1.0",
        },
        "runs": runs,
        "all_passed": all(r["passed"] for r in runs),
    }
    (out_dir / "report.json").write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n")
    if command in ("estimate", "verify"):
        _write_constants_csv(out_dir / "constants.csv", runs)
        (out_dir / "convergence.txt").write_text(_convergence_text(runs))
    return report


def _first_failure(report):
    for r in report["runs"]:
        for c in r["checks"]:
            if not c["passed"]:
                return c["name"]
    return None


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="guenterlab",
        description="estimate and verify best constants of tangential "
                    "Poincare, Friedrichs, and Korn inequalities")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (("estimate", "constants over a refinement ladder"),
                      ("verify", "estimate plus randomized suites"),
                      ("kernel", "kernel and unique continuation checks")):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", required=True, help="TOML experiment file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--levels", type=int, default=None,
                       help="override the refinement ladder depth")
        p.add_argument("--quiet", action="store_true")
    p = sub.add_parser("report", help="re-render a stored report.json")
    p.add_argument("--out", default="results",
                   help="directory holding report.json")
    p.add_argument("--quiet", action="store_true")
    sub.add_parser("list", help="registered shapes and inequality ids")
    args = parser.parse_args(argv)

    if args.command == "list":
        print("shapes:")
        for s in geo.registered_shapes():
            print(f"  {s}")
        print("inequality ids:")
        for id in reg.registered_ids():
            print(f"  {id:14s} {reg.describe(id)['doc']}")
        return 0

    if args.command == "report":
        path = Path(args.out) / "report.json"
        if not path.exists():
            print(f"no report at {path}", file=sys.stderr)
            return 2
        report = json.loads(path.read_text())
        (Path(args.out) / "convergence.txt").write_text(
            _convergence_text(report["runs"]))
        if not args.quiet:
            print(_render_text(report))
        failure = _first_failure(report)
        if failure is not None:
            print(f"FAIL: {failure}", file=sys.stderr)
            return 1
        return 0

    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.levels is not None:
        if args.levels < 1:
            print("config error: --levels must be at least 1",
                  file=sys.stderr)
            return 2
        cfg["levels"] = args.levels
    out_dir = args.out if args.out is not None else cfg["out"]

    try:
        report = run_experiment(cfg, args.command, out_dir, quiet=args.quiet)
    except GuenterLabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if args.command == "kernel" and all(r["kernel"] is None
                                        for r in report["runs"]):
        print("no run has a deformation form; nothing was checked",
              file=sys.stderr)
        return 2
    if not args.quiet:
        print(_render_text(report))
    failure = _first_failure(report)
    if failure is not None:
        print(f"FAIL: {failure}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
