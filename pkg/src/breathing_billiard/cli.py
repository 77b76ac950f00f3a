"""Command-line front end.

Subcommands: classify, find-member, flight, map, simulate, orbit, hull,
certify, c0, lyapunov, portrait.  JSON goes to --out (default stdout) and
embeds the config that produced it; bulk numeric series go to CSV files
('.' decimal, ',' separator, header row, config in a leading comment line).
Exit codes: 0 success, 1 domain/precondition error, 2 convergence failure,
64 usage error.  BB_THREADS caps worker parallelism of multi-start runs.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import aubry, bmap, chaoscert, flight, radius, simulate
from .bmap import CylinderState
from .errors import ConvergenceError, DomainError, PreconditionError
from .genfun import make_context
from .radius import RadiusProfile

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_CONVERGENCE = 2
EXIT_USAGE = 64


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, float) and not math.isfinite(o):
        return repr(o)
    raise TypeError(f"not serialisable: {type(o)}")


def _sanitize(obj):
    """Replace non-finite floats so the JSON stays strictly parseable."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def _emit(payload: dict, out_path: str | None):
    text = json.dumps(_sanitize(payload), sort_keys=True, indent=2,
                      default=_json_default)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


_PATH_KEYS = {"out", "csv", "bounces_csv", "trajectory_csv"}


def _config_dict(args: argparse.Namespace) -> dict:
    # output locations are not part of the run semantics: identical configs
    # must give byte-identical payloads wherever they are written
    cfg = {k: v for k, v in vars(args).items()
           if k != "func" and k not in _PATH_KEYS}
    return _sanitize(cfg)


def _profile(args) -> RadiusProfile:
    return RadiusProfile.from_json(args.profile)


def _context(args, profile=None, sigma=None):
    profile = profile if profile is not None else _profile(args)
    sigma = sigma if sigma is not None else getattr(args, "sigma", None)
    return make_context(profile, args.c, args.eps, sigma=sigma)


def _write_csv(path, header, rows, config_line):
    with open(path, "w", newline="") as fh:
        fh.write(f"# config: {config_line}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                        for v in row])


# --- subcommand bodies -----------------------------------------------------

def _cmd_classify(args):
    profile = _profile(args)
    v = radius.classify(profile, args.eps, grid_n=args.grid_n)
    b = v.bounds
    _emit({"config": _config_dict(args),
           "result": {"class": v.klass,
                      "degenerate": v.degenerate,
                      "witnesses": [[t, dd] for t, dd in v.witnesses],
                      "margins": v.margins,
                      "window": list(v.window) if v.window else None,
                      "bounds": {"r_min": b.r_min, "r_max": b.r_max,
                                 "dR_norm": b.dR_norm, "ddR2_norm": b.ddR2_norm,
                                 "sigma": b.sigma}}}, args.out)
    return EXIT_OK


def _cmd_find_member(args):
    mean, v = radius.find_member(args.k, args.delta, args.eps,
                                 M_hint=args.m_hint, min_window=args.min_window)
    _emit({"config": _config_dict(args),
           "result": {"mean": mean,
                      "profile": json.loads(radius.family_profile(
                          args.k, args.delta, mean).to_json()),
                      "class": v.klass,
                      "window": list(v.window) if v.window else None,
                      "sigma": v.bounds.sigma,
                      "appendix_bound": radius.sufficient_mean_bound(args.k, args.delta),
                      "margins": v.margins}}, args.out)
    return EXIT_OK


def _cmd_flight(args):
    profile = _profile(args)
    report = flight.validate_window(args.t0, args.t1, args.c, profile, args.eps)
    seg = flight.make_segment(profile, args.t0, args.t1, args.c)
    payload = {"config": _config_dict(args),
               "result": {"window": report.as_dict(),
                          "A": seg.A, "B": seg.B, "dtheta": seg.dtheta,
                          "energy": seg.energy, "chord_length": seg.chord_length}}
    if args.csv:
        rows = flight.segment_samples(seg, args.dt)
        _write_csv(args.csv, ["t", "r", "theta", "x", "y"], rows,
                   json.dumps(_config_dict(args), sort_keys=True))
        payload["result"]["csv"] = args.csv
    _emit(payload, args.out)
    return EXIT_OK


def _cmd_map(args):
    ctx = _context(args)
    s = CylinderState(args.t0, args.K)
    if args.inverse:
        s1 = bmap.backward(ctx, s)
        jac = None
    else:
        s1 = bmap.forward(ctx, s)
        jac = bmap.jacobian(ctx, s, t1=s1.t)
    rplus, rminus = (bmap.radial_velocity(ctx, args.t0, args.K)
                     if not args.inverse else (None, None))
    result = {"sigma_star": bmap.sigma_star(ctx),
              "t1": s1.t, "K1": s1.K,
              "t1_mod1": s1.t % 1.0}
    if jac is not None:
        result["jacobian"] = {"dt1_dt0": jac.dt1_dt0, "dt1_dK0": jac.dt1_dK0,
                              "dK1_dt0": jac.dK1_dt0, "dK1_dK0": jac.dK1_dK0,
                              "det": jac.det}
        result["rdot_plus"] = rplus
        result["rdot_minus"] = rminus
    _emit({"config": _config_dict(args), "result": result}, args.out)
    return EXIT_OK


def _cmd_simulate(args):
    ctx = _context(args)
    res = simulate.run(ctx, CylinderState(args.t0, args.K), args.n)
    cfg_line = json.dumps(_config_dict(args), sort_keys=True)
    if args.bounces_csv:
        with open(args.bounces_csv, "w", newline="") as fh:
            simulate.write_bounces_csv(res.records, fh, config_line=cfg_line)
    if args.trajectory_csv:
        with open(args.trajectory_csv, "w", newline="") as fh:
            simulate.write_trajectory_csv(res.records, args.dt, fh, config_line=cfg_line)
    energies = simulate.energy_series(res.records)
    _emit({"config": _config_dict(args),
           "result": {"bounces": len(res.records),
                      "completed": res.completed,
                      "reason": res.reason,
                      "first": {"t": res.records[0].t, "K": res.records[0].K},
                      "last": {"t": res.records[-1].t, "K": res.records[-1].K},
                      "energy_min": min(e for _, e in energies),
                      "energy_max": max(e for _, e in energies)}}, args.out)
    return EXIT_OK


def _cmd_orbit(args):
    ctx = _context(args)
    orbit = aubry.periodic_orbit(ctx, args.p, args.q, starts=args.starts,
                                 seed=args.seed, workers=_workers())
    if args.csv:
        _write_csv(args.csv, ["n", "t", "K"],
                   [(n, orbit.times[n], orbit.Ks[n]) for n in range(orbit.q)],
                   json.dumps(_config_dict(args), sort_keys=True))
    _emit({"config": _config_dict(args),
           "result": {"p": orbit.p, "q": orbit.q, "times": list(orbit.times),
                      "Ks": list(orbit.Ks), "action": orbit.action,
                      "residual": orbit.residual, "monotone": orbit.monotone}},
          args.out)
    return EXIT_OK


def _cmd_hull(args):
    ctx = _context(args)
    hull = aubry.hull_samples(ctx, args.omega, denom_cap=args.denom_cap,
                              starts=args.starts, seed=args.seed,
                              workers=_workers())
    if args.csv:
        _write_csv(args.csv, ["xi", "phi", "eta"],
                   list(zip(hull.xs, hull.phi, hull.eta)),
                   json.dumps(_config_dict(args), sort_keys=True))
    _emit({"config": _config_dict(args),
           "result": {"omega": hull.omega, "p": hull.p, "q": hull.q,
                      "xs": list(hull.xs), "phi": list(hull.phi),
                      "eta": list(hull.eta)}}, args.out)
    return EXIT_OK


def _cmd_certify(args):
    profile = _profile(args)
    cert = chaoscert.certify(profile, args.eps, args.c,
                             omega_grid=args.omega_grid, k_samples=args.k_samples)
    if args.csv and cert.a_grid:
        _write_csv(args.csv, ["K", "a"], cert.a_grid,
                   json.dumps(_config_dict(args), sort_keys=True))
    _emit({"config": _config_dict(args), "result": cert.to_dict()}, args.out)
    return EXIT_OK


def _cmd_c0(args):
    profile = _profile(args)
    res = chaoscert.c0_search(profile, args.eps, iters=args.iters,
                              omega_grid=args.omega_grid, k_samples=args.k_samples)
    _emit({"config": _config_dict(args),
           "result": {"c0": res.c0, "c_max": res.c_max,
                      "tested": [[c, ok] for c, ok in res.tested],
                      "monotone_observed": res.monotone_observed,
                      "reason": res.reason}}, args.out)
    return EXIT_OK


def _cmd_lyapunov(args):
    ctx = _context(args)
    if args.seeds:
        if args.k_lo is None or args.k_hi is None:
            raise PreconditionError("--seeds needs --k-lo and --k-hi")
        rows = chaoscert.lyapunov_table(ctx, args.k_lo, args.k_hi,
                                        seeds=args.seeds, n=args.n, seed=args.seed)
        result = {"table": rows,
                  "lambda_max": max(r["lambda"] for r in rows)}
    else:
        if args.t0 is None or args.K is None:
            raise PreconditionError("single-orbit mode needs --t0 and --K")
        est = chaoscert.lyapunov(ctx, CylinderState(args.t0, args.K), args.n)
        result = {"lambda": est.lam, "steps": est.steps, "completed": est.completed}
    _emit({"config": _config_dict(args), "result": result}, args.out)
    return EXIT_OK


def _cmd_portrait(args):
    ctx = _context(args)
    s_star = bmap.sigma_star(ctx)
    k_lo = args.k_lo if args.k_lo is not None else s_star * 1.05
    k_hi = args.k_hi
    rows = []
    for t0 in np.linspace(0.0, 1.0, args.t_count, endpoint=False):
        for k0 in np.linspace(k_lo, k_hi, args.k_count):
            s = CylinderState(float(t0), float(k0))
            guess = None
            for _ in range(args.n):
                if s.K <= s_star:
                    break
                try:
                    s_next = bmap.forward(ctx, s, t1_guess=guess)
                except DomainError:
                    break
                rows.append((s_next.t % 1.0, s_next.K))
                guess = s_next.t + (s_next.t - s.t)
                s = s_next
    _write_csv(args.csv, ["t_mod1", "K"], rows,
               json.dumps(_config_dict(args), sort_keys=True))
    _emit({"config": _config_dict(args),
           "result": {"points": len(rows), "csv": args.csv,
                      "sigma_star": s_star}}, args.out)
    return EXIT_OK


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("BB_THREADS", "1")))
    except ValueError:
        return 1


# --- parser ----------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="breathing-billiard",
                     description="Breathing circle billiard toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=fn)
        p.add_argument("--out", help="JSON output path (default: stdout)")
        return p

    def add_profile(p, with_c=True, with_sigma=False):
        p.add_argument("--profile", required=True,
                       help='profile literal, e.g. \'{"mean":1,"harmonics":[[1,0.05]]}\'')
        p.add_argument("--eps", type=float, default=0.5,
                       help="window parameter in (0,1); default 0.5")
        if with_c:
            p.add_argument("--c", type=float, required=True)
        if with_sigma:
            p.add_argument("--sigma", type=float, default=None,
                           help="working strip width (required for constant profiles)")

    p = add("classify", _cmd_classify, help="class R / R_tilde test")
    add_profile(p, with_c=False)
    p.add_argument("--grid-n", type=int, default=4096)

    p = add("find-member", _cmd_find_member, help="search the sine family for a member")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--eps", type=float, default=0.5,
                   help="window parameter in (0,1); default 0.5")
    p.add_argument("--m-hint", type=float, default=None)
    p.add_argument("--min-window", type=float, default=None)

    p = add("flight", _cmd_flight, help="one inter-bounce flight")
    add_profile(p)
    p.add_argument("--t0", type=float, required=True)
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--dt", type=float, default=1e-2)
    p.add_argument("--csv", help="CSV path for (t, r, theta, x, y) samples")

    p = add("map", _cmd_map, help="one step of the cylinder map")
    add_profile(p, with_sigma=True)
    p.add_argument("--t0", type=float, required=True)
    p.add_argument("--K", type=float, required=True)
    p.add_argument("--inverse", action="store_true")

    p = add("simulate", _cmd_simulate, help="iterate the map into a bouncing run")
    add_profile(p, with_sigma=True)
    p.add_argument("--t0", type=float, required=True)
    p.add_argument("--K", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dt", type=float, default=1e-2)
    p.add_argument("--bounces-csv")
    p.add_argument("--trajectory-csv")

    p = add("orbit", _cmd_orbit, help="(p,q)-periodic minimal orbit")
    add_profile(p, with_sigma=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--starts", type=int, default=16)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--csv")

    p = add("hull", _cmd_hull, help="hull-function samples for a rotation number")
    add_profile(p, with_sigma=True)
    p.add_argument("--omega", type=float, required=True)
    p.add_argument("--denom-cap", type=int, default=64)
    p.add_argument("--starts", type=int, default=8)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--csv")

    p = add("certify", _cmd_certify, help="invariant-curve destruction certificate")
    add_profile(p)
    p.add_argument("--omega-grid", type=int, default=chaoscert.DEFAULT_OMEGA_GRID)
    p.add_argument("--k-samples", type=int, default=chaoscert.DEFAULT_K_SAMPLES)
    p.add_argument("--csv", help="CSV path for the (K, a) diagnostic grid")

    p = add("c0", _cmd_c0, help="largest certified momentum")
    add_profile(p, with_c=False)
    p.add_argument("--iters", type=int, default=20)
    p.add_argument("--omega-grid", type=int, default=chaoscert.DEFAULT_OMEGA_GRID)
    p.add_argument("--k-samples", type=int, default=chaoscert.DEFAULT_K_SAMPLES)

    p = add("lyapunov", _cmd_lyapunov, help="Lyapunov exponent estimates")
    add_profile(p, with_sigma=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seeds", type=int, default=0,
                   help="number of random states in [--k-lo, --k-hi]")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--k-lo", type=float, default=None)
    p.add_argument("--k-hi", type=float, default=None)
    p.add_argument("--t0", type=float, default=None)
    p.add_argument("--K", type=float, default=None)

    p = add("portrait", _cmd_portrait, help="phase-portrait point cloud")
    add_profile(p, with_sigma=True)
    p.add_argument("--t-count", type=int, default=20)
    p.add_argument("--k-count", type=int, default=10)
    p.add_argument("--k-lo", type=float, default=None)
    p.add_argument("--k-hi", type=float, required=True)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--csv", required=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except SystemExit:
        # argparse exits itself on --help; keep that behaviour
        raise
    try:
        return args.func(args)
    except (DomainError, PreconditionError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DOMAIN
    except ConvergenceError as exc:
        sys.stderr.write(f"convergence failure: {exc} {exc.diagnostics}\n")
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
