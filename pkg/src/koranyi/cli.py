"""Command-line front end.

Subcommands: ``solve``, ``check``, ``verify``, ``kernel``, ``calibrate`` and
``grid``.  Exit codes: 0 success, 1 internal error, 2 unsolvable problem,
3 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from . import kernels as K
from .expr import ExprError
from .harmonics import SeriesConfig, load_provider
from .quadrature import GridCache, ball_grid, boundary_grid, gauge_polar, grid_to_dict
from .solver import BVPSpec, Discretization, SpecError, UnsolvableError, check, solve, verify

EXIT_OK, EXIT_INTERNAL, EXIT_UNSOLVABLE, EXIT_INVALID = 0, 1, 2, 3


class InputError(ValueError):
    pass


def _resolution(value: str) -> int:
    r = int(value)
    if r < 4:
        raise argparse.ArgumentTypeError("resolution must be >= 4")
    return r


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--resolution", type=_resolution, help="volume grid resolution")
    p.add_argument("--boundary-resolution", type=_resolution, help="boundary grid resolution")
    p.add_argument("--delta-cap", type=float, help="gauge radius of the excised characteristic caps")
    p.add_argument("--ntheta", type=int, default=32, help="nodes of trapezoid circular averages")
    p.add_argument("--series-kmax", type=int, help="truncation in k of the correction series")
    p.add_argument("--series-mmax", type=int, help="truncation in m of the correction series")
    p.add_argument("--series-coeffs", help="JSON table of series coefficients")
    p.add_argument("--neumann-correction", choices=["exact", "series"], help="Neumann function correction term")
    p.add_argument("--grid-cache", help="JSON file caching grids and calibration constants")
    p.add_argument("--threads", type=int, help="worker threads for matrix fills")
    p.add_argument("--seed", type=int, default=0, help="seed for probe sampling")
    p.add_argument("--out", help="output CSV (fields) or JSON (grids)")
    p.add_argument("--report", help="output JSON report")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="koranyi", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"koranyi {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, helptext in [("solve", "solve a boundary value problem"),
                           ("check", "evaluate solvability conditions"),
                           ("verify", "solve and report equation and boundary residuals")]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--spec", required=True, help="problem spec JSON")
        _common(p)
        if name != "check":
            p.add_argument("--force", action="store_true", help="solve even when conditions fail")
            p.add_argument("--emit-plot-data", help="write (rho, psi, u) triples to this CSV")
            p.add_argument("--method", choices=["direct", "composition"], default="direct")
    p = sub.add_parser("kernel", help="tabulate a kernel on the grids")
    p.add_argument("--type", required=True, choices=["fundamental", "green", "poisson", "neumann"])
    p.add_argument("--eta", required=True, help="pole as comma separated coordinates x1..xn,y1..yn,t")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--method", choices=["auto", "closed", "trapezoid"], default="auto")
    _common(p)
    p = sub.add_parser("calibrate", help="compute and persist the boundary measure calibration")
    p.add_argument("--n", type=int, default=1)
    _common(p)
    p = sub.add_parser("grid", help="serialize a grid to JSON")
    p.add_argument("--kind", choices=["volume", "boundary"], default="volume")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--full", action="store_true", help="full grid instead of the circular one")
    _common(p)
    return ap


# helpers ------------------------------------------------------------------------

def _check_writable(args) -> None:
    for attr in ("out", "report", "emit_plot_data", "grid_cache"):
        path = getattr(args, attr, None)
        if path:
            parent = os.path.dirname(os.path.abspath(path))
            if not os.path.isdir(parent) or not os.access(parent, os.W_OK):
                raise InputError(f"cannot write {path}: directory missing or read-only")


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items())}


def _series(args, spec_series: SeriesConfig | None):
    if args.series_kmax is None and args.series_mmax is None and args.series_coeffs is None:
        return spec_series
    base = spec_series or SeriesConfig()
    provider = load_provider(args.series_coeffs) if args.series_coeffs else base.coeff_provider
    return SeriesConfig(args.series_kmax if args.series_kmax is not None else base.k_max,
                        args.series_mmax if args.series_mmax is not None else base.m_max,
                        provider, base.b0)


def _load_spec(args) -> BVPSpec:
    try:
        with open(args.spec) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read spec {args.spec}: {exc}") from None
    if not isinstance(data, dict):
        raise InputError("spec must be a JSON object")
    spec = BVPSpec.from_dict(data)
    if args.resolution:
        spec.resolution = args.resolution
        if args.boundary_resolution is None and not (isinstance(data.get("resolution"), dict)
                                                     and "boundary" in data["resolution"]):
            spec.boundary_resolution = max(64, 4 * args.resolution)
    if args.boundary_resolution:
        spec.boundary_resolution = args.boundary_resolution
    if args.delta_cap is not None:
        spec.delta_cap = args.delta_cap
    if args.neumann_correction:
        spec.correction = args.neumann_correction
    spec.series = _series(args, spec.series)
    return spec.validate()


def _disc(spec: BVPSpec, args) -> Discretization:
    cache = GridCache(args.grid_cache) if args.grid_cache else None
    disc = Discretization.for_spec(spec, threads=args.threads, cache=cache)
    if cache is not None:
        cache.save()
    return disc


def _envelope(args, **body) -> dict:
    out = {"tool": "koranyi", "version": __version__, "config": _config(args), "seed": args.seed}
    out.update(body)
    return out


def _write_json(path, obj) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2, default=_json_default)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _fmt(v) -> str:
    return repr(float(v))


def _write_csv(path, header, rows) -> None:
    if not path:
        return
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def _field_csv(path, fld) -> None:
    rho, psi = gauge_polar(fld.points)
    rows = np.column_stack([fld.points, rho, psi, fld.values])
    _write_csv(path, ["x1", "y1", "t", "rho", "psi", "u"], rows)


def _tolerances(spec: BVPSpec) -> dict:
    return {"solvability": spec.tol}


# subcommands ----------------------------------------------------------------------

def cmd_check(args) -> int:
    spec = _load_spec(args)
    disc = _disc(spec, args)
    rep = check(spec, disc)
    _write_json(args.report, _envelope(args, spec=spec.to_dict(), report=rep.to_dict(),
                                       calibration=disc.calibration, tolerances=_tolerances(spec)))
    print(rep.summary())
    return EXIT_OK if rep.solvable else EXIT_UNSOLVABLE


def _solve(args, with_verify: bool) -> int:
    spec = _load_spec(args)
    disc = _disc(spec, args)
    try:
        rep, fld = solve(spec, disc, force=args.force, method=args.method)
    except UnsolvableError as exc:
        _write_json(args.report, _envelope(args, spec=spec.to_dict(), report=exc.report.to_dict(),
                                           calibration=disc.calibration, tolerances=_tolerances(spec)))
        print(exc.report.summary() + " (use --force to solve anyway)")
        return EXIT_UNSOLVABLE
    body = dict(spec=spec.to_dict(), report=rep.to_dict(), calibration=disc.calibration,
                tolerances=_tolerances(spec), forced=bool(args.force and not rep.solvable),
                nodes=int(fld.values.size))
    if with_verify:
        body["verification"] = verify(fld, spec, disc, seed=args.seed)
    _write_json(args.report, _envelope(args, **body))
    _field_csv(args.out, fld)
    if args.emit_plot_data:
        rho, psi = gauge_polar(fld.points)
        _write_csv(args.emit_plot_data, ["rho", "psi", "u"], np.column_stack([rho, psi, fld.values]))
    line = f"{spec.kind}: {fld.values.size} nodes, calibration {disc.calibration:.6f}, {rep.summary()}"
    if with_verify:
        line += f", interior residual {body['verification']['interior']['relative_sup']:.3g}"
    print(line)
    return EXIT_OK


def cmd_solve(args) -> int:
    return _solve(args, False)


def cmd_verify(args) -> int:
    return _solve(args, True)


def _parse_eta(text: str, n: int) -> np.ndarray:
    try:
        eta = np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise InputError(f"cannot parse --eta {text!r}") from None
    if eta.shape != (2 * n + 1,) or not np.all(np.isfinite(eta)):
        raise InputError(f"--eta needs {2 * n + 1} finite coordinates")
    return eta


def cmd_kernel(args) -> int:
    n = args.n
    eta = _parse_eta(args.eta, n)
    R = args.resolution or 16
    Rb = args.boundary_resolution or max(64, 4 * R)
    cap = args.delta_cap if args.delta_cap is not None else 0.05
    circ = n == 1
    vol = ball_grid(R, n, circular=circ)
    bnd = boundary_grid(Rb, cap, n, circular=circ, calibrate=False)
    kind = args.type
    gauge_eta = float(K.koranyi_norm(eta))
    if kind in ("green", "poisson") and not gauge_eta < 1:
        raise InputError("the pole must lie inside the ball")
    series = _series(args, None)
    opts = dict(ntheta=args.ntheta, method=args.method)

    def kern(xi):
        if kind == "fundamental":
            return K.fundamental(eta, xi)
        if kind == "green":
            return K.green(eta, xi, **opts)
        if kind == "poisson":
            return K.poisson(eta, xi, **opts)
        return K.neumann(eta, xi, series=series, correction=args.neumann_correction or "exact", **opts)

    pts = bnd.nodes if kind == "poisson" else np.vstack([vol.nodes, bnd.nodes])
    keep = np.any(pts != eta, axis=-1)
    pts = pts[keep]
    vals = kern(pts)
    gauge = K.koranyi_norm(pts)
    header = [f"x{j}" for j in range(1, n + 1)] + [f"y{j}" for j in range(1, n + 1)] + ["t", "gauge", "value"]
    _write_csv(args.out, header, np.column_stack([pts, gauge, vals]))
    on_bnd = np.isclose(gauge, 1.0)
    sup_b = float(np.max(np.abs(vals[on_bnd]))) if on_bnd.any() else 0.0
    _write_json(args.report, _envelope(args, kernel=kind, eta=eta.tolist(), rows=int(len(vals)),
                                       boundary_sup=sup_b))
    print(f"{kind} kernel at eta={eta.tolist()}: {len(vals)} rows, max |value| on boundary {sup_b:.3g}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    Rb = args.boundary_resolution or args.resolution or 64
    cap = args.delta_cap if args.delta_cap is not None else 0.05
    if args.grid_cache:
        cache = GridCache(args.grid_cache)
        g = cache.boundary(Rb, cap, args.n, circular=args.n == 1)
        cache.save()
    else:
        g = boundary_grid(Rb, cap, args.n, circular=args.n == 1)
    _write_json(args.report, _envelope(args, n=args.n, boundary_resolution=Rb, delta_cap=cap,
                                       calibration=g.calibration))
    print(f"calibration constant {g.calibration!r} (n={args.n}, boundary resolution {Rb}, delta_cap {cap})")
    return EXIT_OK


def cmd_grid(args) -> int:
    circ = not args.full
    cap = args.delta_cap if args.delta_cap is not None else 0.05
    if args.kind == "volume":
        g = ball_grid(args.resolution or 16, args.n, circular=circ)
    else:
        g = boundary_grid(args.boundary_resolution or args.resolution or 64, cap, args.n, circular=circ)
    if args.out:
        d = grid_to_dict(g)
        d["config"] = _config(args)
        d["version"] = __version__
        _write_json(args.out, d)
    print(f"{g.key}: {g.size} nodes, total weight {float(np.sum(g.weights))!r}")
    return EXIT_OK


COMMANDS = {"check": cmd_check, "solve": cmd_solve, "verify": cmd_verify, "kernel": cmd_kernel,
            "calibrate": cmd_calibrate, "grid": cmd_grid}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        _check_writable(args)
        return COMMANDS[args.command](args)
    except (SpecError, ExprError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - the exit code contract needs a catch-all
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
