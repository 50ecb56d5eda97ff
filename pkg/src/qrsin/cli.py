"""Command-line interface.

Subcommands: constants | iterate | itinerary | endpoint | hair | boxdim |
render | verify.  Every artifact embeds the resolved (dim, lambda, seed,
version); numeric output uses full round-trip decimal formatting.

Exit codes: 0 success, 1 verification-suite failure, 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__, analysis, dynamics, render
from .core import Itinerary, validate_params
from .errors import QrsinError
from .verify import SUITES, run_suite

DEFAULT_BETA_SAMPLES = 10 ** 5


def _resolve_params(dim: int, lam_text: str, seed: int,
                    beta_samples: int = DEFAULT_BETA_SAMPLES):
    """lambda "auto" resolves to 1.1 / beta_hat estimated at `beta_samples`."""
    beta = analysis.estimate_beta(dim, beta_samples, seed)
    if lam_text == "auto":
        lam = 1.1 / beta
    else:
        lam = float(lam_text)
    return validate_params(dim, lam, beta)


def _parse_point(text: str, dim: int) -> np.ndarray:
    vals = [float(v) for v in text.split(",")]
    if len(vals) != dim:
        raise ValueError(f"point has {len(vals)} coordinates, expected {dim}")
    return np.asarray(vals)


def _parse_axis(token: str) -> int:
    """1-based coordinate label ('2' or 'x2') -> 0-based index."""
    token = token.strip().lstrip("x")
    idx = int(token)
    if idx < 1:
        raise ValueError(f"coordinate labels are 1-based, got {idx}")
    return idx - 1


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _meta(params, seed) -> dict:
    return {"dim": params.dim, "lambda": float(params.lam), "seed": seed,
            "version": __version__}


# ---------------------------------------------------------------------------
# subcommand runners
# ---------------------------------------------------------------------------

def _run_constants(args) -> int:
    report = analysis.estimate_constants(
        args.dim, args.lam, args.samples, args.seed, n_pairs=args.pairs)
    _emit(json.dumps(report.to_json(), indent=2), args.out)
    return 0


def _run_iterate(args) -> int:
    params = _resolve_params(args.dim, args.lam, args.seed)
    x = _parse_point(args.point, args.dim)
    orbit = dynamics.iterate(x, args.steps, params, args.height_cap)
    lines = [f"# dim={params.dim} lambda={params.lam!r} depth={len(orbit) - 1}",
             f"# seed={args.seed} version={__version__}",
             f"# status={orbit.status.value}"
             + (f" escape_step={orbit.escape_step}" if orbit.escape_step is not None else "")]
    for k in range(len(orbit)):
        coords = ",".join(repr(float(c)) for c in orbit.points[k])
        lines.append(f"{k},{coords}")
    _emit("\n".join(lines), args.out)
    return 0


def _run_itinerary(args) -> int:
    params = _resolve_params(args.dim, args.lam, args.seed)
    x = _parse_point(args.point, args.dim)
    sym = dynamics.itinerary_of(x, args.steps, params, args.height_cap)
    payload = {
        **_meta(params, args.seed),
        "point": [float(v) for v in x],
        "steps": args.steps,
        "symbols": [s.to_json() for s in sym.symbols],
        "truncated": sym.truncated,
    }
    _emit(json.dumps(payload, indent=2), args.out)
    return 0


def _run_endpoint(args) -> int:
    itin = Itinerary.load(args.itinerary)
    params = _resolve_params(itin.dim, args.lam, args.seed)
    est = dynamics.endpoint(itin, args.tol, args.max_depth, params)
    payload = {
        **_meta(params, args.seed),
        "point": [float(v) for v in est.point],
        "residual": float(est.residual),
        "depth": est.depth,
    }
    _emit(json.dumps(payload, indent=2), args.out)
    return 0


def _run_hair(args) -> int:
    itin = Itinerary.load(args.itinerary)
    params = _resolve_params(itin.dim, args.lam, args.seed)
    trace = dynamics.hair_trace(itin, args.depth, args.tmax, args.samples, params)
    lines = [f"# dim={params.dim} lambda={params.lam!r} depth={trace.depth}",
             f"# seed={args.seed} version={__version__}"]
    for i in range(len(trace)):
        coords = ",".join(repr(float(c)) for c in trace.points[i])
        lines.append(f"{float(trace.t[i])!r},{coords}")
    _emit("\n".join(lines), args.out)
    return 0


def _run_boxdim(args) -> int:
    rows = []
    our_format = False
    with open(args.points) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                our_format = our_format or "dim=" in line
                continue
            rows.append([float(v) for v in line.split(",") if v != ""])
    pts = np.asarray(rows)
    if our_format:
        pts = pts[:, 1:]  # first column is the parameter t / step index
    scales = analysis.dyadic_scales(pts, args.scales, largest_fraction=0.125)
    est = analysis.box_count(pts, scales)
    payload = {**est.to_json(), "points": int(pts.shape[0]),
               "source": args.points, "version": __version__}
    _emit(json.dumps(payload, indent=2), args.out)
    return 0


def _run_render(args) -> int:
    params = _resolve_params(args.dim, args.lam, args.seed)
    axis_u, axis_v = (_parse_axis(t) for t in args.plane.split(","))
    fixed = []
    if args.fix:
        for part in args.fix.split(","):
            name, _, val = part.partition("=")
            fixed.append((_parse_axis(name), float(val)))
    window = tuple(float(v) for v in args.window.split(","))
    if len(window) != 4:
        raise ValueError("--window needs exactly four numbers a,b,c,d")
    w_txt, _, h_txt = args.res.lower().partition("x")
    spec = render.SliceSpec(axis_u, axis_v, tuple(fixed), window,
                            (int(w_txt), int(h_txt)))
    grid = render.render_slice(spec, params, args.max_iter, args.height_cap)
    render.write_ppm(grid, args.palette, args.out)
    if args.csv:
        render.grid_to_csv(grid, args.csv, seed=args.seed)
    sys.stdout.write(
        f"wrote {args.out} ({spec.resolution[0]}x{spec.resolution[1]}, "
        f"lambda={params.lam!r}, seed={args.seed}, version={__version__})\n")
    return 0


def _run_verify(args) -> int:
    results = run_suite(args.suite, seed=args.seed)
    width = max(len(r.name) for r in results)
    failed = 0
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        failed += 0 if r.passed else 1
        sys.stdout.write(f"{mark}  {r.name:<{width}}  [{r.seconds:6.2f}s]  {r.detail}\n")
    sys.stdout.write(f"{len(results) - failed}/{len(results)} checks passed\n")
    return 0 if failed == 0 else 1


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(p, dim=True, lam=True, cap=False):
    if dim:
        p.add_argument("--dim", type=int, default=2)
    if lam:
        p.add_argument("--lambda", dest="lam", default="auto",
                       help="positive float or 'auto' (= 1.1/beta_hat)")
    p.add_argument("--seed", type=int, default=0)
    if cap:
        p.add_argument("--height-cap", type=float, default=300.0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qrsin",
        description="Expanding quasiregular trigonometric-type maps: "
                    "constants, orbits, hairs, dimension, rendering.")
    ap.add_argument("--version", action="version", version=f"qrsin {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="estimate beta, delta, dilatations, M")
    _add_common(p)
    p.add_argument("--samples", type=int, default=10 ** 5)
    p.add_argument("--pairs", type=int, default=1000)
    p.add_argument("--out")
    p.set_defaults(fn=_run_constants)

    p = sub.add_parser("iterate", help="forward orbit as CSV")
    _add_common(p, cap=True)
    p.add_argument("--point", required=True, help='comma-separated, e.g. "0,0"')
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(fn=_run_iterate)

    p = sub.add_parser("itinerary", help="tray symbols of an orbit as JSON")
    _add_common(p, cap=True)
    p.add_argument("--point", required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(fn=_run_itinerary)

    p = sub.add_parser("endpoint", help="pullback endpoint of an itinerary")
    _add_common(p, dim=False)
    p.add_argument("--itinerary", required=True, help="itinerary JSON file")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-depth", type=int, default=60)
    p.add_argument("--out")
    p.set_defaults(fn=_run_endpoint)

    p = sub.add_parser("hair", help="trace a hair as CSV")
    _add_common(p, dim=False)
    p.add_argument("--itinerary", required=True)
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--tmax", type=float, default=3.0)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--out")
    p.set_defaults(fn=_run_hair)

    p = sub.add_parser("boxdim", help="box-counting dimension of a CSV point set")
    p.add_argument("--points", required=True, help="CSV of points")
    p.add_argument("--scales", type=int, default=5, help="number of dyadic scales")
    p.add_argument("--out")
    p.set_defaults(fn=_run_boxdim)

    p = sub.add_parser("render", help="escape-time PPM image of a 2-d slice")
    _add_common(p, cap=True)
    p.add_argument("--plane", default="1,2", help="slice axes, 1-based, e.g. 1,2")
    p.add_argument("--fix", default="", help='pinned coordinates, e.g. "x3=0.5"')
    p.add_argument("--window", required=True, help="u_min,u_max,v_min,v_max")
    p.add_argument("--res", required=True, help="WxH pixels")
    p.add_argument("--max-iter", type=int, default=64)
    p.add_argument("--palette", default="hue", choices=sorted(render.PALETTES))
    p.add_argument("--out", required=True, help="output .ppm path")
    p.add_argument("--csv", help="also write per-pixel CSV records here")
    p.set_defaults(fn=_run_render)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", default="all", choices=["all", *SUITES])
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_run_verify)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (QrsinError, ValueError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"qrsin {args.command}: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
