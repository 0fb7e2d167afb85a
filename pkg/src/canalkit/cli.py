"""Command-line front end: spine | analyze | synth | build | trace.

Every command reads one JSON scene (``--config``) and writes its outputs
under ``--out-dir``.  Exit codes: 0 success, 2 invalid input, 3 numeric or
regularity failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import loc, mesh
from ._io import atomic_write_text
from .errors import CanalkitError, ParameterDomainError, UnsupportedAngleError
from .forms import (FirstForm, SecondForm, first_form_closed, fundamental_forms_numeric,
                    gt_F_f_closed, principal_curvatures, second_form_f_closed)
from .radius import (check_torsion_bound, synth_radius_circular_helix, synth_radius_general_helix,
                     synth_radius_quadrature, synth_radius_salkowski, valid_thetas)
from .scene import Scene, SceneError, load_scene
from .spine import classify_spine
from .surface import CanalSurface

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _threads(arg) -> int:
    if arg:
        return max(1, int(arg))
    env = os.environ.get("CANALKIT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise SceneError(f"CANALKIT_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _warn(msg):
    print(f"warning: {msg}", file=sys.stderr)


# --------------------------------------------------------------------------
# commands


def cmd_spine(scene: Scene, args) -> dict:
    curve = scene.spine
    n = args.grid_s or scene.grid()[0]
    lo, hi = curve.domain
    s = np.linspace(lo, hi, n, endpoint=not curve.closed)
    fr = curve.frenet(s)
    rows = ["s,kappa,tau"] + [f"{a:.9g},{k:.9g},{t:.9g}" for a, k, t in zip(s, fr.kappa, fr.tau)]
    cls = classify_spine(curve, tol=args.tol or 1e-6)
    out = Path(args.out_dir)
    atomic_write_text(out / "spine.csv", "\n".join(rows) + "\n")
    report = {"kind": curve.kind, "domain": list(curve.domain), "classification": cls.kind,
              "phi": cls.phi, "kappa_range": list(cls.kappa_range), "tau_range": list(cls.tau_range)}
    atomic_write_text(out / "spine.json", _dumps(report))
    print(f"classification: {cls.kind}")
    return report


_FORMS_HEADER = "s,theta,E,F,G,e,f,g_II,K,H,k1,k2,regular_flag"


def _forms_rows(surface, s, theta):
    """Forms-grid rows for one block of s values."""
    S, TH = np.meshgrid(s, theta, indexing="ij")
    first_n, second_n = fundamental_forms_numeric(surface, S, TH, strict=False, on_singular="nan")
    if isinstance(surface, CanalSurface):
        _, f_, _, regular = loc.canal_F_f_grid(surface, s, theta)
        closed = first_form_closed(surface, S, TH)
        first = FirstForm(closed.E, closed.F, closed.G)
        second = SecondForm(second_n.e, f_, second_n.g_II)
    else:
        regular = np.isfinite(second_n.e)
        first, second = first_n, second_n
    with np.errstate(invalid="ignore", divide="ignore"):
        k1, k2, K, H = principal_curvatures(first, second)
    cols = [S, TH, first.E, first.F, first.G, second.e, second.f, second.g_II, K, H, k1, k2]
    rows = []
    for idx in np.ndindex(S.shape):
        ok = bool(regular[idx])
        vals = [f"{c[idx]:.9g}" if (ok or j < 2) else "" for j, c in enumerate(cols)]
        rows.append(",".join(vals) + f",{int(ok)}")
    return rows


def _oracle_check(surface: CanalSurface, seed: int, n: int = 50) -> dict:
    """Closed-vs-numeric spot check at seeded random regular points."""
    rng = np.random.default_rng(seed)
    lo, hi = surface.domain
    margin = 0.0 if surface.closed_s else 0.01 * (hi - lo)
    s = rng.uniform(lo + margin, hi - margin, n)
    th = rng.uniform(0, 2 * math.pi, n)
    keep = np.abs(surface.regularity_residual(s, th)) > 1e-3
    s, th = s[keep], th[keep]
    if s.size == 0:
        return {"samples": 0}
    first_n, second_n = fundamental_forms_numeric(surface, s, th, strict=False)
    closed = first_form_closed(surface, s, th)
    f_c = second_form_f_closed(surface, s, th)
    ref = np.sqrt(first_n.E * first_n.G)
    return {
        "samples": int(s.size),
        "seed": seed,
        "max_rel_E": float(np.max(np.abs(closed.E - first_n.E) / np.abs(first_n.E))),
        "max_rel_F": float(np.max(np.abs(closed.F - first_n.F) / np.maximum(np.abs(first_n.F), ref))),
        "max_rel_G": float(np.max(np.abs(closed.G - first_n.G) / np.abs(first_n.G))),
        "max_rel_f": float(np.max(np.abs(f_c - second_n.f)
                                  / np.maximum(np.abs(second_n.f),
                                               np.maximum(np.abs(second_n.e), np.abs(second_n.g_II))))),
    }


def cmd_analyze(scene: Scene, args) -> dict:
    surface = scene.surface()
    n_s, n_theta = scene.grid(args.grid_s, args.grid_theta)
    tol = scene.tol(args.tol)
    lo, hi = surface.domain
    closed = getattr(surface, "closed_s", False)
    s = np.linspace(lo, hi, n_s, endpoint=not closed)
    theta = np.linspace(0, 2 * math.pi, n_theta, endpoint=False)

    blocks = np.array_split(s, max(1, min(_threads(args.threads), n_s)))
    if len(blocks) > 1:
        with ThreadPoolExecutor(len(blocks)) as pool:
            parts = list(pool.map(lambda b: _forms_rows(surface, b, theta), blocks))
    else:
        parts = [_forms_rows(surface, s, theta)]
    rows = [_FORMS_HEADER] + [r for p in parts for r in p]

    if isinstance(surface, CanalSurface):
        rep = loc.verify_theorem3(surface, n_s, n_theta, tol)
        report = rep.summary()
        report["singular_nodes"] = rep.singular_nodes
        report["violations"] = [[float(x) for x in v] for v in rep.violations]
        if report["theta_curves_loc"].startswith("vacuous"):
            report["theta_curves_loc"] = "vacuous (tube over planar spine)"
        report["oracle_check"] = _oracle_check(surface, args.seed)
        if rep.singular_nodes:
            _warn(f"{len(rep.singular_nodes)} singular grid nodes (listed in loc_report.json)")
    else:
        S, TH = np.meshgrid(s, theta, indexing="ij")
        F, f = gt_F_f_closed(surface, S, TH)
        report = {"surface": "generalized_tube",
                  "max_abs_F": float(np.max(np.abs(F))), "max_abs_f": float(np.max(np.abs(f))),
                  "parameter_net_is_curvature_net": bool(np.max(np.abs(F)) <= tol
                                                         and np.max(np.abs(f)) <= tol)}
    report["grid"] = [n_s, n_theta]
    out = Path(args.out_dir)
    atomic_write_text(out / "forms_grid.csv", "\n".join(rows) + "\n")
    atomic_write_text(out / "loc_report.json", _dumps(report))
    print(f"theorem3: {report.get('theorem3', 'n/a')}")
    return report


def cmd_synth(scene: Scene, args) -> dict:
    syn = scene.doc.get("synth")
    if syn is None:
        raise SceneError("scene has no 'synth' block")
    method = syn.get("method", "quadrature")
    th = float(syn["theta_star"])
    c = syn.get("c")
    spine = scene.spine
    p = spine.params
    out = Path(args.out_dir)
    if method == "quadrature":
        res = synth_radius_quadrature(spine, th, c, syn.get("s_ref"), scene.branch)
        rad = res.radius
        report = res.to_dict()
    else:
        if c is None:
            raise SceneError(f"synth method {method!r} needs 'c'")
        if method == "circular_helix":
            if spine.kind != "circular_helix":
                raise SceneError("method circular_helix needs a circular_helix spine")
            rad = synth_radius_circular_helix(p["a"], p["b"], th, c)
        elif method == "general_helix":
            if spine.kind != "general_helix_like":
                raise SceneError("method general_helix needs a general_helix_like spine")
            rad = synth_radius_general_helix(p["phi"], th, c)
        else:
            if spine.kind != "salkowski":
                raise SceneError("method salkowski needs a salkowski spine")
            try:
                rad = synth_radius_salkowski(p["phi"], th, c, spine.domain)
            except UnsupportedAngleError as exc:
                _warn(f"{exc}; falling back to quadrature")
                res = synth_radius_quadrature(spine, th, None, syn.get("s_ref"), scene.branch)
                rad = res.radius
                method = "quadrature (fallback)"
        report = {"theta_star": th, "form": rad.form, "c": float(c), "branch": scene.branch,
                  "method": method}
        if rad.form == "linear":
            report["slope_or_table"] = {"slope": float(rad.params["a"])}
        else:
            report["slope_or_table"] = {"table": "radius.csv"}
        canal = CanalSurface(spine, rad, scene.branch)
        thetas = valid_thetas(th, scene.branch)
        lo, hi = spine.domain
        ss = np.linspace(lo, hi, 512)
        report["valid_thetas"] = thetas
        report["residual_max"] = float(max(
            np.max(np.abs(loc.loc_residual(canal, ss, np.full_like(ss, t)))) for t in thetas))
        r, r1 = rad(ss), rad.derivative(ss, 1)
        report["domain"] = [lo, hi] if np.all((r > 0) & (np.abs(r1) < 1)) else None
    report["method"] = report.get("method", method)
    report["torsion_bound"] = check_torsion_bound(spine, rad).to_dict()
    lo, hi = spine.domain
    ss = np.linspace(lo, hi, args.grid_s or 256)
    table = ["s,r,r_prime"] + [f"{a:.9g},{b:.9g},{d:.9g}"
                               for a, b, d in zip(ss, rad(ss), rad.derivative(ss, 1))]
    atomic_write_text(out / "radius.csv", "\n".join(table) + "\n")
    atomic_write_text(out / "synthesis.json", _dumps(report))
    print(f"residual_max: {report['residual_max']:.3e}")
    return report


def cmd_build(scene: Scene, args) -> dict:
    surface = scene.surface()
    n_s, n_theta = scene.grid(args.grid_s, args.grid_theta)
    m = mesh.tessellate(surface, n_s, n_theta, threads=_threads(args.threads))
    out = Path(args.out_dir)
    mesh.export_obj(m, out / "mesh.obj")
    n_bad = int(np.count_nonzero(~m.regular))
    if n_bad:
        _warn(f"{n_bad} singular vertices; faces marked '# singular'")
    info = {"vertices": len(m.vertices), "faces": len(m.faces), "singular_vertices": n_bad,
            "closed": mesh.is_closed(m), "euler_characteristic": mesh.euler_characteristic(m),
            "area": mesh.area(m)}
    atomic_write_text(out / "mesh.json", _dumps(info))
    print(f"mesh: {info['vertices']} vertices, {info['faces']} faces")
    return info


class _Polyline:
    def __init__(self, s, theta, points, k_n):
        self.s, self.theta, self.points, self.k_n = s, theta, points, k_n


def cmd_trace(scene: Scene, args) -> dict:
    surface = scene.surface()
    t = scene.doc.get("trace", {})
    mode = t.get("mode", "vessiot")
    lo, hi = surface.domain
    s0 = float(t.get("s0", lo))
    th0 = float(t.get("theta0", 0.0))
    out = Path(args.out_dir)
    if mode == "vessiot":
        if not isinstance(surface, CanalSurface):
            raise SceneError("vessiot mode needs a canal surface (radius block)")
        path = loc.vessiot_integrate(surface, s0, th0, t.get("s_end"))
        n = args.grid_s or 101
        s = np.linspace(s0, path.s[-1], n)
        theta = path(s)
        pts = surface.point(s, theta)
        poly = _Polyline(s, theta, pts, np.full(n, np.nan))
        info = {"mode": mode, "reason": "completed", "s0": s0, "theta0": th0,
                "max_theta_deviation": float(np.max(np.abs(theta - th0)))}
    else:
        tr = loc.trace_curvature_line(surface, s0, th0, family=int(t.get("family", 1)),
                                      max_steps=int(t.get("max_steps", 2000)),
                                      max_length=t.get("max_length"))
        poly = tr
        info = {"mode": mode, "reason": tr.reason, "family": tr.family, "steps": len(tr) - 1,
                "length": float(tr.sigma[-1])}
    text = mesh.polyline_text(poly).replace(",nan\n", ",\n")
    atomic_write_text(out / "trace.csv", text)
    atomic_write_text(out / "trace.json", _dumps(info))
    print(f"trace: {len(poly.s)} points")
    return info


COMMANDS = {"spine": cmd_spine, "analyze": cmd_analyze, "synth": cmd_synth, "build": cmd_build,
            "trace": cmd_trace}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="canalkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="scene JSON file")
        p.add_argument("--grid-s", type=int, help="override grid n_s")
        p.add_argument("--grid-theta", type=int, help="override grid n_theta")
        p.add_argument("--tol", type=float, help="override tolerance")
        p.add_argument("--out-dir", default="out", help="output directory (default: out)")
        p.add_argument("--seed", type=int, default=42, help="seed for randomized checks")
        p.add_argument("--threads", type=int, help="worker threads (default: CANALKIT_THREADS "
                                                   "or available parallelism)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        if args.grid_s is not None and args.grid_s < 2 or \
                args.grid_theta is not None and args.grid_theta < 3:
            raise SceneError("--grid-s must be >= 2 and --grid-theta >= 3")
        if args.tol is not None and not args.tol > 0:
            raise SceneError("--tol must be positive")
        scene = load_scene(args.config)
        COMMANDS[args.command](scene, args)
    except (SceneError, ParameterDomainError, UnsupportedAngleError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CanalkitError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
