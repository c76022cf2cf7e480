"""Command-line front end: declarative JSON experiment configs, seeded
reproducible runs, CSV/JSON tables, SVG figures, and a machine-readable
report per run.

Every run reads one JSON config, executes one subcommand, writes its
artifacts into the output directory, and exits 0 iff every check passed.
Outputs are deterministic for a fixed config and seed; wall-clock timings
go to a separate ``timings.json`` so the primary artifacts stay
byte-identical across runs.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np

from .billiards import (
    CausticChart,
    caustic_of_line,
    circumscribed_check,
    ivory_quadrilateral,
    poncelet_grid,
    reflect,
)
from .errors import ConfigError, ConfocalError
from .geometry import Kind, euclidean, hyperbolic, spherical
from .potentials import (
    CurvedEllipsoid,
    GeodesicSphere,
    HyperbolicSurface,
    antisymmetry_check,
    arnold_field_check,
    field_at,
    point_potential,
    point_potential_derivative,
)
from .quadrics import ConfocalFamily
from .staeckel import (
    builtin_metric,
    geodesic_between,
    ivory_check,
    staeckel_billiard_trajectory,
)
from .svgout import Scene, palette, render_svg

# ---------------------------------------------------------------------------
# config schemas

_NUM = {"type": "number"}
_POSINT = {"type": "integer", "minimum": 1}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}
_PAIR = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_METRIC = {
    "type": "object",
    "properties": {
        "name": {"enum": ["elliptic_R2", "ellipsoidal_R3", "spheroconical_R3",
                          "ellipsoid_intrinsic", "sphere_conical"]},
        "params": _VEC,
    },
    "required": ["name", "params"],
    "additionalProperties": False,
}


def _schema(props, required):
    base = dict(props)
    base["seed"] = {"type": "integer", "minimum": 0}
    base["tolerance"] = {"type": "number", "exclusiveMinimum": 0.0}
    base["format"] = {"enum": ["csv", "json"]}
    return {"type": "object", "properties": base, "required": required,
            "additionalProperties": False}


SCHEMAS = {
    "ivory-check": _schema(
        {"a": _PAIR, "lam_e": _PAIR, "lam_h": _PAIR},
        ["a", "lam_e", "lam_h"]),
    "billiard-orbit": _schema(
        {"a": _PAIR, "outer_lam": _NUM, "lam_c": _NUM, "start_x": _NUM,
         "bounces": _POSINT},
        ["a", "outer_lam", "lam_c", "bounces"]),
    "poncelet-grid": _schema(
        {"a": _PAIR, "outer_lam": _NUM, "q": _POSINT, "p": _POSINT,
         "start_x": _NUM},
        ["a", "outer_lam", "q", "p"]),
    "inscribed-circles": _schema(
        {"a": _PAIR, "outer_lam": _NUM, "lam_c": _NUM, "theta_a": _NUM,
         "theta_b": _NUM},
        ["a", "outer_lam", "lam_c", "theta_a", "theta_b"]),
    "geodesic": _schema(
        {"metric": _METRIC, "corner0": _VEC, "corner1": _VEC},
        ["metric", "corner0", "corner1"]),
    "staeckel-ivory": _schema(
        {"metric": _METRIC, "box": {"type": "array", "items": _PAIR,
                                    "minItems": 1}},
        ["metric", "box"]),
    "staeckel-billiard": _schema(
        {"metric": _METRIC, "walls": {"type": "array", "items": _PAIR,
                                      "minItems": 1},
         "q0": _VEC, "p0": _VEC, "bounces": _POSINT},
        ["metric", "walls", "q0", "p0", "bounces"]),
    "potential-scan": _schema(
        {"geometry": {"enum": ["spherical", "hyperbolic"]}, "dim": _POSINT,
         "radii": {"type": "object",
                   "properties": {"start": _NUM, "stop": _NUM,
                                  "count": _POSINT},
                   "required": ["start", "stop", "count"],
                   "additionalProperties": False}},
        ["geometry", "dim", "radii"]),
    "newton-check": _schema(
        {"surface": {"type": "object",
                     "properties": {
                         "kind": {"enum": ["sphere", "ellipsoid"]},
                         "geometry": {"enum": ["spherical", "hyperbolic"]},
                         "dim": _POSINT, "radius": _NUM,
                         "a": _VEC, "b": _NUM},
                     "required": ["kind", "geometry"],
                     "additionalProperties": False},
         "point": _VEC, "expect": {"enum": ["zero", "point_mass"]},
         "N": _POSINT},
        ["surface", "point", "expect", "N"]),
    "arnold-check": _schema(
        {"coeffs": {"type": "array", "items": _VEC, "minItems": 1},
         "eps": {"type": "number", "exclusiveMinimum": 0.0},
         "point": _PAIR, "N": _POSINT, "box": {"type": "array", "items": _NUM,
                                               "minItems": 4, "maxItems": 4}},
        ["coeffs", "eps", "point", "N"]),
}

STOCHASTIC = {"newton-check", "arnold-check"}
_DEFAULT_TOL = {
    "ivory-check": 1e-9, "billiard-orbit": 1e-8, "poncelet-grid": 1e-8,
    "inscribed-circles": 1e-9, "geodesic": 1e-9, "staeckel-ivory": 1e-8,
    "staeckel-billiard": 1e-9, "potential-scan": 1e-8,
    "newton-check": 1e-2, "arnold-check": 1e-2,
}


def load_config(command: str, path, seed=None, tolerance=None) -> dict:
    """Read, schema-validate, and normalize a run config."""
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    if command not in SCHEMAS:
        raise ConfigError(f"unknown command {command!r}")
    if seed is not None:
        cfg["seed"] = seed
    if tolerance is not None:
        cfg["tolerance"] = tolerance
    try:
        jsonschema.validate(cfg, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config rejected: {exc.message}")
    if command in STOCHASTIC and "seed" not in cfg:
        raise ConfigError(f"{command} is stochastic: a seed is required")
    cfg.setdefault("tolerance", _DEFAULT_TOL[command])
    return cfg


# ---------------------------------------------------------------------------
# artifact writers


def _g17(x) -> str:
    return f"{float(x):.17g}"


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_g17(v) if isinstance(v, (int, float, np.floating))
                        and not isinstance(v, bool) else str(v) for v in row])


def _ellipse_outline(family: ConfocalFamily, lam: float):
    a1, a2 = family.a
    return np.array([a1 - lam, a2 - lam]) ** 0.5


def _check(name: str, value: float, tol: float) -> dict:
    return {"name": name, "value": float(value), "tolerance": float(tol),
            "passed": bool(value < tol)}


def _stat_check(name: str, value: float, stderr: float, nsigma=3.0) -> dict:
    return {"name": name, "value": float(value),
            "tolerance": float(nsigma * stderr),
            "passed": bool(value < nsigma * stderr)}


# ---------------------------------------------------------------------------
# subcommand implementations: each returns (checks, tables, scenes)


def _run_ivory_check(cfg, rng):
    fam = ConfocalFamily(euclidean(2), cfg["a"])
    tol = cfg["tolerance"]
    quad = ivory_quadrilateral(fam, cfg["lam_e"][0], cfg["lam_e"][1],
                               cfg["lam_h"][0], cfg["lam_h"][1])
    checks = [
        _check("diagonal_length_spread", abs(quad["AC"] - quad["BD"]), tol),
        _check("diagonal_caustic_agreement",
               abs(quad["lam_AC"] - quad["lam_BD"]), tol),
    ]
    rows = [[quad["AC"], quad["BD"], abs(quad["AC"] - quad["BD"]),
             quad["lam_AC"], quad["lam_BD"]]]
    tables = {"diagonals": (["AC", "BD", "spread", "lam_AC", "lam_BD"], rows)}
    scene = Scene()
    for k, lam in enumerate(cfg["lam_e"]):
        rx, ry = _ellipse_outline(fam, lam)
        scene.add_ellipse((0.0, 0.0), rx, ry, color=palette(k))
    corners = np.array([quad[k] for k in "ABCD"])
    scene.add_polyline(corners, closed=True, color=palette(2))
    scene.add_polyline([quad["A"], quad["C"]], color=palette(3))
    scene.add_polyline([quad["B"], quad["D"]], color=palette(3))
    scene.add_points(corners)
    return checks, tables, {"quadrilateral": scene}


def _run_billiard_orbit(cfg, rng):
    fam = ConfocalFamily(euclidean(2), cfg["a"])
    tol = cfg["tolerance"]
    chart = CausticChart(fam, cfg["lam_c"])
    line = chart.tangent_line_at(cfg.get("start_x", 0.0))
    verts = []
    lam_dev = 0.0
    cur = line
    for _ in range(cfg["bounces"]):
        lam_dev = max(lam_dev, abs(caustic_of_line(fam, cur).lam - cfg["lam_c"]))
        cur, pt = reflect(fam, cfg["outer_lam"], cur, branch="exit")
        verts.append(pt)
    verts = np.array(verts)
    checks = [_check("caustic_conservation", lam_dev, tol)]
    rows = [[i, v[0], v[1]] for i, v in enumerate(verts)]
    tables = {"orbit": (["bounce", "x", "y"], rows)}
    scene = Scene()
    rx, ry = _ellipse_outline(fam, cfg["outer_lam"])
    scene.add_ellipse((0.0, 0.0), rx, ry)
    cx, cy = _ellipse_outline(fam, cfg["lam_c"])
    scene.add_ellipse((0.0, 0.0), cx, cy, color=palette(1))
    scene.add_polyline(verts, color=palette(2), width=0.7)
    return checks, tables, {"orbit": scene}


def _run_poncelet_grid(cfg, rng):
    fam = ConfocalFamily(euclidean(2), cfg["a"])
    tol = cfg["tolerance"]
    grid = poncelet_grid(fam, cfg["outer_lam"], cfg["q"], cfg["p"],
                         cfg.get("start_x", 0.0))
    conc = max(grid["concentric_spread"].values())
    rad = max(grid["radial_spread"].values())
    checks = [
        _check("closure_gap", grid["closure_gap"], tol),
        _check("concentric_spread", conc, tol),
        _check("radial_spread", rad, tol),
        _check("cell_circumscribed_residual", max(grid["quad_residuals"]), tol),
    ]
    rows = [[i, j, pt[0], pt[1]] for (i, j), pt in sorted(grid["points"].items())]
    tables = {"grid_points": (["side_i", "side_j", "x", "y"], rows)}
    scene = Scene()
    rx, ry = _ellipse_outline(fam, cfg["outer_lam"])
    scene.add_ellipse((0.0, 0.0), rx, ry)
    scene.add_polyline(np.array(grid["vertices"]), closed=True, color=palette(1))
    scene.add_points(np.array([pt for pt in grid["points"].values()]))
    return checks, tables, {"grid": scene}


def _run_inscribed_circles(cfg, rng):
    fam = ConfocalFamily(euclidean(2), cfg["a"])
    tol = cfg["tolerance"]
    rx, ry = _ellipse_outline(fam, cfg["outer_lam"])
    A = np.array([rx * np.cos(cfg["theta_a"]), ry * np.sin(cfg["theta_a"])])
    B = np.array([rx * np.cos(cfg["theta_b"]), ry * np.sin(cfg["theta_b"])])
    res = circumscribed_check(fam, A, B, cfg["lam_c"])
    checks = [
        _check("perimeter_residual", res["perimeter_residual"], tol),
        _check("incircle_tangency_residual", res["tangency_residual"], tol),
        _check("hyperbola_agreement", res["hyperbola_mismatch"], 1e-6),
    ]
    rows = [[res["perimeter_residual"], res["tangency_residual"],
             res["incircle_center"][0], res["incircle_center"][1],
             res["incircle_radius"], res["lam_hyp"]]]
    tables = {"incircle": (["perimeter_residual", "tangency_residual",
                            "center_x", "center_y", "radius", "lam_hyp"], rows)}
    scene = Scene()
    scene.add_ellipse((0.0, 0.0), rx, ry)
    cx, cy = _ellipse_outline(fam, cfg["lam_c"])
    scene.add_ellipse((0.0, 0.0), cx, cy, color=palette(1))
    corners = np.array([res["A"], res["C"], res["B"], res["D"]])
    scene.add_polyline(corners, closed=True, color=palette(2))
    scene.add_circle(res["incircle_center"], res["incircle_radius"],
                     color=palette(3))
    scene.add_points(corners)
    return checks, tables, {"incircle": scene}


def _run_geodesic(cfg, rng):
    metric = builtin_metric(cfg["metric"]["name"], cfg["metric"]["params"])
    tol = cfg["tolerance"]
    sol = geodesic_between(metric, cfg["corner0"], cfg["corner1"])
    checks = [_check("separation_residual", sol["residual"], tol)]
    alpha = sol["alpha"] if sol["alpha"] is not None else []
    rows = [[sol["length"], sol["residual"]] + [a for a in alpha]]
    header = ["length", "residual"] + [f"alpha_{k}" for k in range(len(alpha))]
    return checks, {"geodesic": (header, rows)}, {}


def _run_staeckel_ivory(cfg, rng):
    metric = builtin_metric(cfg["metric"]["name"], cfg["metric"]["params"])
    tol = cfg["tolerance"]
    box = [tuple(b) for b in cfg["box"]]
    if len(box) != metric.n:
        raise ConfigError(f"box must have {metric.n} coordinate intervals")
    res = ivory_check(metric, box, tol=tol)
    checks = [_check("diagonal_spread", res["spread"], tol)]
    rows = [[k, length] for k, length in enumerate(res["lengths"])]
    return checks, {"diagonals": (["diagonal", "length"], rows)}, {}


def _run_staeckel_billiard(cfg, rng):
    metric = builtin_metric(cfg["metric"]["name"], cfg["metric"]["params"])
    tol = cfg["tolerance"]
    walls = [tuple(w) for w in cfg["walls"]]
    if len(walls) != metric.n or len(cfg["q0"]) != metric.n \
            or len(cfg["p0"]) != metric.n:
        raise ConfigError(f"walls, q0, p0 must all have length {metric.n}")
    res = staeckel_billiard_trajectory(metric, walls, cfg["q0"], cfg["p0"],
                                       cfg["bounces"])
    checks = [_check("alpha_drift", res["alpha_drift"], tol)]
    rows = [[t] + list(q) + list(p) for t, q, p in res["states"]]
    header = (["t"] + [f"q_{k}" for k in range(metric.n)]
              + [f"p_{k}" for k in range(metric.n)])
    tables = {"bounces": (header, rows)}
    scenes = {}
    if metric.n == 2:
        scene = Scene()
        pts = np.array([q for _, q, _ in res["states"]])
        scene.add_polyline(np.array([[walls[0][0], walls[1][0]],
                                     [walls[0][1], walls[1][0]],
                                     [walls[0][1], walls[1][1]],
                                     [walls[0][0], walls[1][1]]]), closed=True)
        scene.add_polyline(pts, color=palette(1))
        scenes["box_orbit"] = scene
    return checks, tables, scenes


def _run_potential_scan(cfg, rng):
    geom = (spherical if cfg["geometry"] == "spherical" else hyperbolic)(cfg["dim"])
    tol = cfg["tolerance"]
    r = cfg["radii"]
    radii = np.linspace(r["start"], r["stop"], r["count"])
    phi, is_sph = (np.sin, True) if geom.kind is Kind.SPHERICAL else (np.sinh, False)
    rows, flux_dev, closed_dev, anti_dev = [], 0.0, 0.0, 0.0
    for rv in radii:
        u = point_potential(geom, rv)
        du = point_potential_derivative(geom, rv)
        rows.append([rv, u, du])
        flux_dev = max(flux_dev, abs(du * phi(rv) ** (geom.n - 1) + 1.0))
        if geom.n == 3:
            oracle = 1.0 / np.tan(rv) if is_sph else 1.0 / np.tanh(rv) - 1.0
            closed_dev = max(closed_dev, abs(u - oracle))
        if is_sph:
            anti_dev = max(anti_dev, antisymmetry_check(geom, rv))
    checks = [_check("flux_constancy", flux_dev, tol)]
    if geom.n == 3:
        checks.append(_check("closed_form_agreement", closed_dev, tol))
    if is_sph:
        checks.append(_check("antisymmetry", anti_dev, tol))
    return checks, {"scan": (["r", "u", "du"], rows)}, {}


def _build_surface(scfg):
    geom_fn = spherical if scfg["geometry"] == "spherical" else hyperbolic
    if scfg["kind"] == "sphere":
        if "dim" not in scfg or "radius" not in scfg:
            raise ConfigError("sphere surfaces need dim and radius")
        geom = geom_fn(scfg["dim"])
        center = np.zeros(geom.n + 1)
        center[0] = 1.0
        return GeodesicSphere(geom, center, scfg["radius"])
    if "a" not in scfg or "b" not in scfg:
        raise ConfigError("ellipsoid surfaces need a and b")
    return CurvedEllipsoid(geom_fn(len(scfg["a"])), tuple(scfg["a"]),
                           scfg["b"])


def _run_newton_check(cfg, rng):
    surface = _build_surface(cfg["surface"])
    tol = cfg["tolerance"]
    x = np.asarray(cfg["point"], dtype=float)
    out = field_at(surface, x, cfg["N"], rng)
    rows = [[out["norm"], out["norm_stderr"], out["N"]]]
    tables = {"field": (["field_norm", "stderr", "N"], rows)}
    if cfg["expect"] == "zero":
        checks = [_stat_check("field_norm_zero", out["norm"], out["norm_stderr"])]
        return checks, tables, {}
    if not (isinstance(surface, GeodesicSphere)
            and surface.geometry.kind is Kind.HYPERBOLIC
            and surface.geometry.n == 3):
        raise ConfigError("point_mass oracle requires a hyperbolic sphere in "
                          "three dimensions")
    # distance to the center (the pole): cosh D = -<x, c>_M = x0
    D = float(np.arccosh(max(x[0], 1.0)))
    oracle = 1.0 / np.sinh(D) ** 2
    rel = abs(out["norm"] - oracle) / oracle
    checks = [_check("point_mass_relative_error", rel, tol)]
    return checks, tables, {}


def _run_arnold_check(cfg, rng):
    coeffs = np.array(cfg["coeffs"], dtype=float)
    surf = HyperbolicSurface(coeffs, euclidean(2))
    box = tuple(cfg["box"]) if "box" in cfg else None
    out = arnold_field_check(surf, cfg["eps"], tuple(cfg["point"]), cfg["N"],
                             rng, box=box)
    checks = [_stat_check("layer_field_zero", out["norm"], out["norm_stderr"])]
    rows = [[out["norm"], out["norm_stderr"], out["N"]]]
    return checks, {"field": (["field_norm", "stderr", "N"], rows)}, {}


_RUNNERS = {
    "ivory-check": _run_ivory_check,
    "billiard-orbit": _run_billiard_orbit,
    "poncelet-grid": _run_poncelet_grid,
    "inscribed-circles": _run_inscribed_circles,
    "geodesic": _run_geodesic,
    "staeckel-ivory": _run_staeckel_ivory,
    "staeckel-billiard": _run_staeckel_billiard,
    "potential-scan": _run_potential_scan,
    "newton-check": _run_newton_check,
    "arnold-check": _run_arnold_check,
}


# ---------------------------------------------------------------------------
# orchestration


def run(command: str, cfg: dict, outdir) -> dict:
    """Execute one subcommand and write all artifacts; returns the report."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg["seed"]) if "seed" in cfg else None
    timings = {}
    t0 = time.perf_counter()
    checks, tables, scenes = _RUNNERS[command](cfg, rng)
    timings["compute_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    artifacts = []
    fmt = cfg.get("format", "csv")
    for name, (header, rows) in sorted(tables.items()):
        if fmt == "json":
            path = outdir / f"{name}.json"
            payload = [dict(zip(header, [float(v) if isinstance(
                v, (int, float, np.floating)) and not isinstance(v, bool)
                else v for v in row])) for row in rows]
            path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
        else:
            path = outdir / f"{name}.csv"
            _write_csv(path, header, rows)
        artifacts.append(path.name)
    for name, scene in sorted(scenes.items()):
        path = outdir / f"{name}.svg"
        path.write_text(render_svg(scene))
        artifacts.append(path.name)

    report = {
        "command": command,
        "config": cfg,
        "checks": checks,
        "artifacts": artifacts,
        "passed": all(c["passed"] for c in checks),
    }
    (outdir / "report.json").write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n")
    timings["write_s"] = time.perf_counter() - t0
    (outdir / "timings.json").write_text(
        json.dumps(timings, sort_keys=True, indent=2) + "\n")
    return report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="confocal",
        description="Confocal-quadric billiards, Staeckel geodesics, and "
                    "potential-theory experiments.")
    parser.add_argument("command", choices=sorted(SCHEMAS))
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--tolerance", type=float, default=None)
    parser.add_argument("--format", choices=["csv", "json"], default=None)
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.command, args.config, seed=args.seed,
                          tolerance=args.tolerance)
        if args.format is not None:
            cfg["format"] = args.format
        report = run(args.command, cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConfocalError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3

    for c in report["checks"]:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"{status} {c['name']}: {c['value']:.3e} "
              f"(tolerance {c['tolerance']:.3e})")
    if not report["passed"]:
        print("some checks failed; see report.json", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
