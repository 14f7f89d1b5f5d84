"""Command line front end.

    magrobin solve       --config run.json --out results/
    magrobin verify      --config run.json --out results/
    magrobin sweep       --config run.json --out results/
    magrobin mesh-info   --config run.json --out results/
    magrobin convergence --config run.json --out results/

A run is described by one JSON document (see ``DEFAULTS``); ``--set
key=value`` overrides a top-level field, with ``value`` parsed as JSON
when possible. Exit codes: 0 success, 1 a verification failed, 2 bad
configuration, 3 solver breakdown or non-convergence.
"""

import argparse
import csv
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .assembly import AssemblyError, dump_coordinate
from .bochner import STANDARD_FIELDS, verify_integrated_bochner
from .bounds import bound_report, comparison_check, default_slack
from .eigensolve import DEFAULT_TOL, SolverError
from .geometry import GeometryError, MeshError, build_mesh, make_geometry
from .oracles import disk_robin_spectrum
from .pipeline import Problem, error_ratios, ground_state_ratio
from .potentials import PotentialError, make_potential

log = logging.getLogger("magrobin")

EXIT_FAIL, EXIT_CONFIG, EXIT_SOLVER = 1, 2, 3

DEFAULTS = {
    "geometry": {"kind": "disk", "radius": 1.0},
    "potential": {"family": "Zero"},
    "tau": [1.0],
    "h": [0.1, 0.05],
    "count": 5,
    "quad_order": 4,
    "tol": DEFAULT_TOL,
    # "refinement": max(1e-8, 3 |lam_h - lam_2h|); a number: absolute;
    # {"relative": r}: r * lam_k
    "slack": "refinement",
    "sweep": {"variable": "tau", "grid": [0.5, 1, 2, 4, 8]},
    "bochner": {"fields": list(STANDARD_FIELDS.values()), "quad_order": 10, "rtol": 1e-6},
    "dump_matrices": False,
    "write_mesh": False,
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(path=None, overrides=()):
    cfg = json.loads(json.dumps(DEFAULTS))
    if path:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        cfg.update(user)
    for item in overrides:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config field {key!r}")
        cfg[key] = _parse_value(val)
    return validate(cfg)


def _as_list(value, name):
    vals = value if isinstance(value, list) else [value]
    try:
        return [float(v) for v in vals]
    except (TypeError, ValueError):
        raise ConfigError(f"field {name!r} must be a number or list of numbers, got {value!r}") from None


def validate(cfg):
    """Check every field against module preconditions before any solve starts."""
    unknown = set(cfg) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config field(s) {sorted(unknown)}")
    cfg["tau"] = _as_list(cfg["tau"], "tau")
    if not cfg["tau"] or any(not (t >= 0 and np.isfinite(t)) for t in cfg["tau"]):
        raise ConfigError(f"field 'tau' must hold finite values >= 0, got {cfg['tau']}")
    cfg["h"] = _as_list(cfg["h"], "h")
    if not cfg["h"] or any(not (h > 0 and np.isfinite(h)) for h in cfg["h"]):
        raise ConfigError(f"field 'h' must hold positive mesh sizes, got {cfg['h']}")
    cfg["h"] = sorted(cfg["h"], reverse=True)  # coarse to fine
    if not isinstance(cfg["count"], int) or isinstance(cfg["count"], bool) or cfg["count"] < 1:
        raise ConfigError(f"field 'count' must be an integer >= 1, got {cfg['count']!r}")
    if not isinstance(cfg["quad_order"], int) or cfg["quad_order"] < 2:
        raise ConfigError(f"field 'quad_order' must be an integer >= 2, got {cfg['quad_order']!r}")
    if not (isinstance(cfg["tol"], (int, float)) and cfg["tol"] > 0):
        raise ConfigError(f"field 'tol' must be positive, got {cfg['tol']!r}")
    s = cfg["slack"]
    if not (s == "refinement" or (isinstance(s, (int, float)) and s >= 0)
            or (isinstance(s, dict) and set(s) == {"relative"} and s["relative"] >= 0)):
        raise ConfigError(f"field 'slack' must be 'refinement', a number >= 0 or {{'relative': r}}, got {s!r}")
    sw = cfg["sweep"]
    if not isinstance(sw, dict) or sw.get("variable") not in ("tau", "beta"):
        raise ConfigError("field 'sweep.variable' must be 'tau' or 'beta'")
    sw["grid"] = _as_list(sw.get("grid", []), "sweep.grid")
    if sw["variable"] == "tau" and any(t < 0 for t in sw["grid"]):
        raise ConfigError("field 'sweep.grid' must hold tau values >= 0")
    try:
        geometry = make_geometry(cfg["geometry"])
        alpha = make_potential(cfg["potential"], geometry)
    except (GeometryError, PotentialError) as exc:
        raise ConfigError(f"field 'geometry'/'potential': {exc}") from None
    if sw["variable"] == "beta" and geometry.kind != "annulus":
        raise ConfigError("a flux sweep ('sweep.variable' = 'beta') needs the annulus geometry")
    cfg["_geometry"], cfg["_alpha"] = geometry, alpha
    return cfg


def provenance(cfg, **extra):
    out = {
        "version": __version__,
        "geometry": cfg["_geometry"].describe(),
        "potential": cfg["_alpha"].describe(),
        "h": cfg["h"],
        "tau": cfg["tau"],
        "count": cfg["count"],
        "quad_order": cfg["quad_order"],
        "solver_tol": cfg["tol"],
        "slack": cfg["slack"],
    }
    out.update(extra)
    return out


def _problem(cfg, alpha=None):
    return Problem(cfg["_geometry"], cfg["_alpha"] if alpha is None else alpha, cfg["quad_order"], cfg["tol"])


def write_json(path, payload):
    payload = dict(payload)
    payload["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if x is None:
        return ""
    return f"{float(x):.16e}"


def _slack(cfg, coarse, fine):
    s = cfg["slack"]
    if s == "refinement":
        if coarse is None:
            return np.full(len(fine), 1e-8)
        return default_slack(coarse, fine)
    if isinstance(s, dict):
        return np.maximum(1e-8, s["relative"] * np.abs(fine))
    return np.full(len(fine), float(s))


# ---------------------------------------------------------------------------
# commands


def cmd_solve(cfg, out, threads=1):
    prob = _problem(cfg)
    runs = []
    for h in cfg["h"]:
        op = prob.operator(h)
        for tau in cfg["tau"]:
            res = prob.spectrum(h, tau, cfg["count"])
            runs.append({"h": h, "tau": tau, "n_dof": op.n_dof, "mesh": op.mesh.info(), **res.to_dict()})
        if cfg["dump_matrices"]:
            for name in ("S", "M", "B"):
                dump_coordinate(getattr(op, name), out / f"{name}_h{h:g}.txt")
        if cfg["write_mesh"]:
            (out / f"mesh_h{h:g}.off").write_text(op.mesh.to_off())
    write_json(out / "spectrum.json", {"provenance": provenance(cfg), "runs": runs})
    return 0


def cmd_mesh_info(cfg, out, threads=1):
    infos = []
    for h in cfg["h"]:
        mesh = build_mesh(cfg["_geometry"], h)
        mesh.check()
        infos.append(mesh.info())
    (out / "mesh.off").write_text(mesh.to_off())
    write_json(out / "mesh.json", {"provenance": provenance(cfg), "meshes": infos})
    print(json.dumps(infos, indent=2))
    return 0


def _reference(cfg, tau):
    g, a = cfg["_geometry"], cfg["_alpha"]
    if g.kind == "disk" and a.is_zero:
        return disk_robin_spectrum(tau, cfg["count"], g.radius)
    return None


def cmd_convergence(cfg, out, threads=1):
    prob = _problem(cfg)
    rows = []
    for tau in cfg["tau"]:
        lams = np.array([prob.spectrum(h, tau, cfg["count"]).eigenvalues for h in cfg["h"]])
        ref = _reference(cfg, tau)
        err, ratio = error_ratios(lams, ref)
        rows.append({
            "tau": tau,
            "h": cfg["h"],
            "eigenvalues": lams.tolist(),
            "reference": None if ref is None else ref.tolist(),
            "errors": err.tolist(),
            "ratios": np.where(np.isfinite(ratio), ratio, 0.0).tolist(),
        })
    write_json(out / "convergence.json", {"provenance": provenance(cfg), "levels": rows})
    return 0


def _bounds_for(cfg, prob, tau):
    """Bound report at the finest mesh, with slack from the last two meshes."""
    k = cfg["count"]
    hs = cfg["h"]
    fine = prob.spectrum(hs[-1], tau, k).eigenvalues
    coarse = prob.spectrum(hs[-2], tau, k).eigenvalues if len(hs) > 1 else None
    slack = _slack(cfg, coarse, fine)
    curv = prob.curvature()
    m = prob.field_sup()
    rep = bound_report(curv.k, tau, prob.geometry.dimension, m, curv.H_min, curv.II_min, fine, slack, h=hs[-1])

    neumann = prob.spectrum(hs[-1], 0.0, k).eigenvalues
    C, lam1 = ground_state_ratio(prob, hs[-1], tau)
    rep.C_tau = C
    rep.comparison = comparison_check(lam1, C, neumann, fine, slack)
    return rep


def cmd_verify(cfg, out, threads=1):
    prob = _problem(cfg)
    failures = []
    reports = []
    for tau in cfg["tau"]:
        rep = _bounds_for(cfg, prob, tau)
        reports.append(rep.to_dict())
        if rep.gap_ok is False:
            failures.append(f"tau={tau}: eigenvalue inside the forbidden gap")
        if rep.corollary_verdict is False:
            failures.append(f"tau={tau}: lambda_1 below a_plus despite the corollary hypotheses")
        for c in rep.comparison:
            if not c.passed:
                failures.append(f"tau={tau}: comparison sandwich fails at k={c.k}")
    write_json(out / "bounds.json", {"provenance": provenance(cfg), "reports": reports})

    bc = cfg["bochner"]
    ledgers = []
    for expr in bc.get("fields", []):
        led = verify_integrated_bochner(cfg["_geometry"], expr, cfg["_alpha"], bc.get("quad_order", 10))
        ledgers.append(led.to_dict())
        if not led.passed(bc.get("rtol", 1e-6)):
            failures.append(f"integrated identity residual {led.residual:.3e} for f={expr}")
    write_json(out / "bochner.json", {"provenance": provenance(cfg, bochner=bc), "ledgers": ledgers})

    for msg in failures:
        print(f"FAIL {msg}", file=sys.stderr)
    if not failures:
        print("all verdicts pass")
    return EXIT_FAIL if failures else 0


def cmd_sweep(cfg, out, threads=1):
    sw = cfg["sweep"]
    h = cfg["h"][-1]
    k = cfg["count"]
    base = _problem(cfg)
    curv = base.curvature()
    n = base.geometry.dimension

    def point(v):
        if sw["variable"] == "tau":
            prob, tau = base, v
        else:
            spec = dict(cfg["potential"], family="AharonovBohm", beta=v)
            prob, tau = base.with_potential(make_potential(spec, base.geometry)), cfg["tau"][0]
        lam = prob.spectrum(h, tau, k).eigenvalues
        rep = bound_report(curv.k, tau, n, prob.field_sup(), curv.H_min, curv.II_min, lam, 0.0, h=h)
        return [v, *lam, rep.a_minus, rep.a_plus, rep.gap_ok, rep.corollary_verdict]

    if sw["variable"] == "tau":
        base.operator(h)  # assemble once before the workers share it
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(point, sw["grid"]))  # map keeps grid order

    header = [sw["variable"], *[f"lambda_{i}" for i in range(1, k + 1)], "a_minus", "a_plus", "gap_ok", "corollary_ok"]
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])
    return 0


COMMANDS = {
    "solve": cmd_solve,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "mesh-info": cmd_mesh_info,
    "convergence": cmd_convergence,
}


def build_parser():
    p = argparse.ArgumentParser(prog="magrobin", description="Magnetic Robin Laplacian eigenvalues and bound checks.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a top-level config field")
    p.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    p.add_argument("--seed", type=int, default=0, help="seed recorded for randomized checks")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, args.set)
        if args.threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {args.threads}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    np.random.seed(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.command](cfg, out, args.threads)
    except (MeshError, AssemblyError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
