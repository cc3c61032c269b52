"""Command-line driver.

Exit codes: 0 success, 1 a verified inequality is violated, 2 invalid table
or arguments, 3 no 4-periodic curve, 4 reflection failure, 5 dual quadratures
disagree.  Machine-readable output goes to ``--out`` (or stdout);
diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (DegenerateChord, NoConvergence, NoFourPeriodicCurve, OrbitError,
                     ProfileSymmetryViolated, RootNotBracketed, TableError)
from .fourcurve import (d_profile, perturbed_profile, r_squared_variation, table_from_d,
                        validate_four_periodic)
from .geometry import build_table, circle, ellipse, load_table
from .measure import estimate_m_measure, stratified_points
from .phasemap import (PhasePoint, incidence_to_chart, incidence_to_chart_arrays, iterate,
                       write_orbit_csv)
from .rigidity import verify_main_theorem
from .variational import classify_points

EXIT_OK = 0
EXIT_VIOLATED = 1
EXIT_TABLE = 2
EXIT_PROFILE = 3
EXIT_REFLECT = 4
EXIT_INCONSISTENT = 5

DEFAULTS = {
    "builtin": "circle", "file": None, "r": 1.0, "a": 1.25, "b": 1.0, "eps": 0.05,
    "mode": "sin2", "R": 1.0, "seed": 42, "quad_panels": None, "horizon": 64,
    "samples": 10_000, "tol": 1e-8, "out": None, "workers": 1,
    "n": 10, "p": None, "phi": None, "psi": None, "delta": None, "portrait": None,
}


def _log(msg):
    print(msg, file=sys.stderr)


class CliError(Exception):
    def __init__(self, code, msg):
        super().__init__(msg)
        self.code = code


# ---------------------------------------------------------------- config

def _common(parser):
    g = parser.add_argument_group("table source")
    g.add_argument("--builtin", choices=["circle", "ellipse", "from-d"])
    g.add_argument("--file", help="table definition JSON")
    g.add_argument("--r", type=float, help="circle radius")
    g.add_argument("--a", type=float, help="ellipse semi-axis along x")
    g.add_argument("--b", type=float, help="ellipse semi-axis along y")
    g.add_argument("--eps", type=float, help="from-d perturbation size")
    g.add_argument("--mode", help="from-d perturbation mode, e.g. sin2")
    g.add_argument("--R", type=float, help="from-d orthoptic radius")
    o = parser.add_argument_group("run")
    o.add_argument("--config", help="JSON file with any of these options")
    o.add_argument("--seed", type=int)
    o.add_argument("--quad-panels", type=int, dest="quad_panels")
    o.add_argument("--horizon", type=int)
    o.add_argument("--samples", type=int)
    o.add_argument("--tol", type=float)
    o.add_argument("--out")
    o.add_argument("--workers", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="csbilliard", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table-info", help="table metrics and 4-periodic curve existence")
    _common(p)
    p.set_defaults(func=cmd_table_info)

    p = sub.add_parser("orbit", help="CSV dump of an orbit")
    _common(p)
    p.add_argument("--p", type=float, help="signed distance of the start line")
    p.add_argument("--phi", type=float, help="normal angle of the start line")
    p.add_argument("--psi", type=float, help="start from incidence (psi, delta) instead")
    p.add_argument("--delta", type=float)
    p.add_argument("--n", type=int, help="number of reflections (default 10)")
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("profile", help="angle profile of the 4-periodic curve")
    _common(p)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("classify", help="CSV classification of a stratified sample of B")
    _common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("measure", help="measure estimates over B")
    _common(p)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("verify", help="full pipeline and rigidity report")
    _common(p)
    p.add_argument("--portrait", help="phase-portrait CSV path")
    p.set_defaults(func=cmd_verify)
    return parser


def resolve(argv=None):
    """Parse ``argv``; values come from flags, then ``--config``, then defaults."""
    parser = build_parser()
    args = parser.parse_args(argv)
    merged = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, ValueError) as exc:
            raise CliError(EXIT_TABLE, f"cannot read config: {exc}")
        unknown = set(cfg) - set(DEFAULTS)
        if unknown:
            raise CliError(EXIT_TABLE, f"unknown config keys: {sorted(unknown)}")
        merged.update(cfg)
    for key, value in vars(args).items():
        if value is not None or key not in merged:
            merged[key] = value
    if merged.get("file"):
        merged["builtin"] = None
    return argparse.Namespace(**merged)


def run_config(args):
    """The result-relevant part of the configuration, for echoing in reports."""
    keys = ["seed", "quad_panels", "horizon", "samples", "tol"]
    if args.file:
        keys.append("file")
    else:
        keys.append("builtin")
        keys += {"circle": ["r"], "ellipse": ["a", "b"], "from-d": ["eps", "mode", "R"]}[args.builtin]
    return {k: getattr(args, k) for k in keys}


def load(args):
    kwargs = {"panels": args.quad_panels} if args.quad_panels else {}
    try:
        if args.file:
            return load_table(args.file, **kwargs)
        if args.builtin == "circle":
            return circle(args.r, **kwargs)
        if args.builtin == "ellipse":
            return ellipse(args.a, args.b, **kwargs)
        table = table_from_d(perturbed_profile(args.eps, args.mode), args.R)
        if args.quad_panels:
            table = build_table(table.support, table.tolerance, **kwargs)
        return table
    except (TableError, ProfileSymmetryViolated) as exc:
        raise CliError(EXIT_TABLE, f"invalid table: {exc}")
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CliError(EXIT_TABLE, f"cannot read table: {exc}")


def profile_of(table, args):
    try:
        return d_profile(table, tolerance=args.tol)
    except NoFourPeriodicCurve as exc:
        raise CliError(EXIT_PROFILE, str(exc))


# ---------------------------------------------------------------- output

def _json_text(obj):
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def emit(args, text, path=None):
    path = path or args.out
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands

def cmd_table_info(args):
    table = load(args)
    variation, mean = r_squared_variation(table)
    info = {"config": run_config(args), "metrics": table.metrics.as_dict(),
            "harmonics": [int(k) for k in table.harmonics],
            "R_squared_variation": variation, "has_profile": variation <= args.tol}
    if info["has_profile"]:
        info["R_squared"] = mean
    emit(args, _json_text(info))
    return EXIT_OK


def cmd_orbit(args):
    table = load(args)
    if args.psi is not None:
        if args.delta is None:
            raise CliError(EXIT_TABLE, "--psi needs --delta")
        try:
            z = incidence_to_chart(table, args.psi, args.delta)
        except DegenerateChord as exc:
            raise CliError(EXIT_REFLECT, f"reflect failed at step 0: {exc}")
    else:
        if args.p is None or args.phi is None:
            raise CliError(EXIT_TABLE, "orbit needs --p and --phi (or --psi and --delta)")
        z = PhasePoint(args.p, args.phi)
    try:
        seg = iterate(table, z, args.n)
    except OrbitError as exc:
        raise CliError(EXIT_REFLECT, str(exc))
    except (DegenerateChord, RootNotBracketed, NoConvergence) as exc:
        raise CliError(EXIT_REFLECT, f"reflect failed at step 0: {exc}")
    buf = io.StringIO()
    write_orbit_csv(buf, table, seg)
    emit(args, buf.getvalue())
    return EXIT_OK


def cmd_profile(args):
    table = load(args)
    profile = profile_of(table, args)
    report = validate_four_periodic(table, profile)
    _log(f"closure max |T^4 z - z| = {report.max_closure:.3e} over {report.samples} points")
    emit(args, _json_text(profile.to_json()))
    return EXIT_OK


def _classified(table, profile, args):
    psi, delta, weight = stratified_points(table, profile, args.samples, args.seed)
    p, phi = incidence_to_chart_arrays(table, psi, delta)
    verdict, first_bad = classify_points(table, p, phi, args.horizon, workers=args.workers)
    return psi, delta, weight, verdict[:, 0], first_bad[:, 0]


def cmd_classify(args):
    table = load(args)
    profile = profile_of(table, args)
    psi, delta, _, verdict, first_bad = _classified(table, profile, args)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["psi", "delta", "N", "verdict", "first_bad_index"])
    for row in zip(psi, delta, verdict, first_bad):
        w.writerow([repr(float(row[0])), repr(float(row[1])), args.horizon, int(row[2]), int(row[3])])
    emit(args, buf.getvalue())
    return EXIT_OK


def _horizons(N):
    hz = {N}
    k = 2
    while k < N:
        hz.add(k)
        k *= 2
    return sorted(hz)


def cmd_measure(args):
    table = load(args)
    profile = profile_of(table, args)
    rep = estimate_m_measure(table, profile, args.horizon, args.samples, args.seed,
                             horizons=_horizons(args.horizon), workers=args.workers)
    out = rep.as_json()
    out["config"] = run_config(args)
    emit(args, _json_text(out))
    return EXIT_OK


def cmd_verify(args):
    table = load(args)
    profile = profile_of(table, args)
    points = stratified_points(table, profile, args.samples, args.seed)
    rep = estimate_m_measure(table, profile, args.horizon, seed=args.seed,
                             horizons=_horizons(args.horizon), workers=args.workers,
                             points=points)
    rig = verify_main_theorem(table, profile, rep.mu_Delta, rep.undecided_mass,
                              by_horizon=rep.by_horizon, tolerance=args.tol)
    closure = validate_four_periodic(table, profile)
    report = {
        "config": run_config(args),
        "measure": rep.as_json(),
        "mu_Delta_by_horizon": {str(M): {"mu_M": v[0].value, "mu_Delta": v[1].value,
                                         "stderr": v[1].error, "undecided_mass": v[2]}
                                for M, v in rep.by_horizon.items()},
        "rigidity": rig.as_dict(),
        "four_periodic": closure.as_dict(),
        "metrics": table.metrics.as_dict(),
    }
    emit(args, _json_text(report))
    portrait = args.portrait
    if portrait is None and args.out:
        portrait = str(Path(args.out).with_suffix("")) + "_portrait.csv"
    if portrait:
        psi, delta, _ = points
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["psi", "delta", "verdict"])
        for a, b, v in zip(psi, delta, rep.verdict):
            w.writerow([repr(float(a)), repr(float(b)), int(v)])
        Path(portrait).write_text(buf.getvalue())
    if rig.dual_quadrature_gap > args.tol:
        _log(f"1-D and 2-D evaluations of I differ by {rig.dual_quadrature_gap:.3e}")
        return EXIT_INCONSISTENT
    if rig.any_violated:
        _log("an inequality is flagged as violated")
        return EXIT_VIOLATED
    return EXIT_OK


def main(argv=None):
    try:
        args = resolve(argv)
        return args.func(args)
    except CliError as exc:
        _log(f"error: {exc}")
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
