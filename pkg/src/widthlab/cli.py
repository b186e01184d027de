"""Command-line front end.

Exit codes: 0 every check passed, 1 a check failed (or a runtime error),
2 usage or configuration error, 3 inconclusive without failure.
"""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .caseverify import CONFIGURATIONS, FAIL, PASS, verify_configuration
from .config import ConfigError, load_config
from .frame import GeometryError, build_frame
from .report import CHECKS, _plain, _worst, dumps, exit_code, run_check, run_report

BODIES = ("shadow", "meissner2", "ball3", "M", "reuleaux4")
MESH_FORMATS = ("obj", "ply")


class UsageError(Exception):
    pass


def build_body(name: str):
    from .ballbody import build_ball, build_M, build_meissner2_3d, build_reuleaux
    from .shadow import build_shadow

    return {
        "shadow": build_shadow,
        "meissner2": build_meissner2_3d,
        "ball3": lambda: build_ball(3),
        "M": build_M,
        "reuleaux4": build_reuleaux,
    }[name]()


def _positive(kind):
    def parse(text):
        value = kind(text)
        if value <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value
    return parse


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {text}")
    return value


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON config; command-line flags take precedence")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--threads", type=_positive(int), help="worker cap for sampling")
    common.add_argument("--seed", type=int, help="master seed (default: $WIDTHLAB_SEED or built-in)")

    p = argparse.ArgumentParser(prog="widthlab", description="Constant-width body verification toolkit.")
    p.add_argument("--version", action="version", version=f"widthlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    sub.add_parser("frame", parents=[common], help="print the simplex frame")

    pp = sub.add_parser("patches", parents=[common], help="sample the generating set")
    pp.add_argument("--dump", required=True, help="CSV output path")
    pp.add_argument("--spacing", type=_positive(float), default=0.05, help="sample spacing (default 0.05)")

    pv = sub.add_parser("verify", help="run one family of checks")
    vs = pv.add_subparsers(dest="what", required=True, metavar="CHECK")
    vw = vs.add_parser("width", parents=[common], help="width sweep of M")
    vw.add_argument("--directions", type=_positive(int))
    vw.add_argument("--tol", type=_positive(float))
    vw.add_argument("--body", choices=("M", "reuleaux4", "meissner2", "shadow", "ball3"), default="M")
    vd = vs.add_parser("diameter", parents=[common], help="diameter of the generating set")
    vd.add_argument("--starts", type=_positive(int))
    vc = vs.add_parser("cases", parents=[common], help="case verification")
    vc.add_argument("--budget", type=_nonneg_int)
    vc.add_argument("--only", choices=sorted(CONFIGURATIONS), action="append", help="restrict to configurations")
    vsh = vs.add_parser("shadow", parents=[common], help="shadow arcs and membership equivalence")
    vsh.add_argument("--samples", type=_positive(int))

    ps = sub.add_parser("shadow", parents=[common], help="shadow checks and arc dumps")
    ps.add_argument("--check", choices=("arcs", "equivalence", "circle", "all"))
    ps.add_argument("--arcs", metavar="CSV", help="write t-grid samples of the six arcs")
    ps.add_argument("--grid", type=_positive(int), default=100)

    pvol = sub.add_parser("volume", parents=[common], help="Monte-Carlo volume")
    pvol.add_argument("--body", choices=BODIES, required=True)
    pvol.add_argument("--n", type=_positive(int))

    pm = sub.add_parser("mesh", parents=[common], help="boundary mesh export")
    pm.add_argument("--body", choices=("shadow", "meissner2", "ball3"), default="shadow")
    pm.add_argument("--subdiv", type=_nonneg_int, default=4)
    pm.add_argument("--format", choices=MESH_FORMATS)
    pm.add_argument("--out", required=True)

    pr = sub.add_parser("report", parents=[common], help="run every check and write the report")
    pr.add_argument("--out", help="report path (default: stdout)")
    pr.add_argument("--only", choices=list(CHECKS), action="append", help="restrict to checks")
    return p


def _config(args, **overrides):
    base = {"seed": args.seed, "threads": args.threads}
    base.update(overrides)
    return load_config(args.config, base)


def _emit(obj, as_json: bool, text: str | None = None) -> None:
    if as_json or text is None:
        sys.stdout.write(dumps(_plain(obj)))
    else:
        print(text)


# ---------------------------------------------------------------------------
# commands


def cmd_frame(args) -> int:
    frame = build_frame()
    lines = [f"{k}: {np.array2string(v, precision=12)}" for k, v in frame.points.items()]
    _emit(frame.to_json(), args.json, "\n".join(lines))
    return 0


def cmd_patches(args) -> int:
    from .patches import build_generator_set

    gs = build_generator_set(build_frame())
    rows = 0
    with open(args.dump, "w", newline="") as fh:
        w = csv.writer(fh)
        # params: t for arcs, (u, v) for patches, empty for vertices
        w.writerow(["piece", "p1", "p2", "x1", "x2", "x3", "x4"])
        for piece in gs.pieces():
            pts, params = piece.sample(args.spacing)
            for p, q in zip(pts, params):
                q = [f"{c:.15g}" for c in q] + [""] * (2 - len(q))
                w.writerow([piece.label] + q + [f"{c:.15g}" for c in p])
            rows += len(pts)
    _emit({"path": args.dump, "rows": rows}, args.json, f"wrote {rows} points to {args.dump}")
    return 0


def cmd_verify(args) -> int:
    if args.what == "width":
        cfg, _ = _config(args, width_directions=args.directions, width_tol=args.tol)
        names = ["width"]
        if args.body != "M":
            from .measure import width_stats

            st = width_stats(build_body(args.body), cfg.width_directions, cfg.seed, cfg.width_tol)
            ok = not st["failures"] and st["spread"] <= cfg.width_spread_tol
            verdict = PASS if ok else FAIL
            _emit({"width": {"verdict": verdict, "metrics": st}}, True)
            return exit_code(verdict)
    elif args.what == "diameter":
        cfg, _ = _config(args, diameter_starts=args.starts)
        names = ["diameter"]
    elif args.what == "shadow":
        cfg, _ = _config(args, shadow_samples=args.samples)
        names = ["shadow_arcs", "shadow_equivalence"]
    else:
        cfg, _ = _config(args, case_budget=args.budget)
        if args.only:
            reports = [
                verify_configuration(c, cfg.case_budget, cfg.seed, cfg.m0_tol, cfg.boundary_band)
                for c in args.only
            ]
            _emit([r.to_json() for r in reports], True)
            return exit_code(_worst(r.verdict for r in reports))
        names = ["cases"]
    out = {}
    for name in names:
        out[name], _ = run_check(name, cfg)
    _emit(out, True)
    return exit_code(_worst(v["verdict"] for v in out.values()))


def cmd_shadow(args) -> int:
    if args.check is None and args.arcs is None:
        raise UsageError("shadow: give --check and/or --arcs")
    code = 0
    if args.arcs:
        from .shadow import all_arcs

        t = np.linspace(0.0, np.pi / 2.0, args.grid)
        with open(args.arcs, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["arc", "t", "y1", "y2", "y3"])
            for arc in all_arcs():
                for ti, p in zip(t, arc.point(t)):
                    w.writerow([arc.label, f"{ti:.15g}"] + [f"{c:.15g}" for c in p])
        if not args.json:
            print(f"wrote {6 * args.grid} arc samples to {args.arcs}")
    if args.check:
        cfg, _ = _config(args, shadow_grid=args.grid)
        names = {
            "arcs": ["shadow_arcs"],
            "equivalence": ["shadow_equivalence"],
            "circle": ["circular_projection"],
            "all": ["shadow_arcs", "shadow_equivalence", "circular_projection"],
        }[args.check]
        out = {name: run_check(name, cfg)[0] for name in names}
        verdict = _worst(v["verdict"] for v in out.values())
        _emit(out, args.json, "\n".join(f"{k}: {v['verdict']}" for k, v in out.items()))
        code = exit_code(verdict)
    return code


def cmd_volume(args) -> int:
    from .measure import mc_volume

    body = build_body(args.body)
    cfg, _ = _config(args)
    n = args.n or (cfg.volume_n if body.dim == 3 else cfg.volume_n_4d)
    est = mc_volume(body, n=n, seed=cfg.seed, threads=cfg.threads)
    doc = dict(est.to_json(), body=args.body)
    _emit(doc, args.json, f"{args.body}: {est.mean:.6f} +- {est.stderr:.6f} (n={n}, seed={cfg.seed})")
    return 0


def cmd_mesh(args) -> int:
    from .measure import extract_mesh, write_mesh

    suffix = Path(args.out).suffix.lower().lstrip(".")
    fmt = args.format
    if fmt and suffix in MESH_FORMATS and suffix != fmt:
        raise UsageError(f"--format {fmt} conflicts with output extension .{suffix}")
    fmt = fmt or (suffix if suffix in MESH_FORMATS else None)
    if fmt is None:
        raise UsageError("cannot infer mesh format; pass --format obj|ply")
    mesh = extract_mesh(build_body(args.body), args.subdiv)
    write_mesh(mesh, args.out, fmt)
    doc = {
        "path": args.out,
        "format": fmt,
        "vertices": int(len(mesh.vertices)),
        "faces": int(len(mesh.faces)),
        "max_abs_margin": float(np.abs(mesh.margins).max()),
        "flagged": int(mesh.flags.sum()),
        "watertight": mesh.is_watertight(),
    }
    _emit(doc, args.json, f"wrote {doc['vertices']} vertices, {doc['faces']} faces to {args.out}")
    return 0


def cmd_report(args) -> int:
    cfg, defaults = _config(args)
    doc = run_report(cfg, args.only, defaults=defaults)
    text = dumps(doc)
    if args.out:
        Path(args.out).write_text(text)
        if not args.json:
            print(f"{doc['verdict']}: report written to {args.out}")
    else:
        sys.stdout.write(text)
    return exit_code(doc["verdict"])


COMMANDS = {
    "frame": cmd_frame,
    "patches": cmd_patches,
    "verify": cmd_verify,
    "shadow": cmd_shadow,
    "volume": cmd_volume,
    "mesh": cmd_mesh,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"widthlab: error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"widthlab: error: {exc}", file=sys.stderr)
        return 2
    except (GeometryError, OSError) as exc:
        print(f"widthlab: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
