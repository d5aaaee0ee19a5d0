"""Command-line front end: thresholds, boundary CSV, Gaussian checks, protocol simulation."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import gaussian as g
from .lhs import eta_ent, eta_steer, steering_witness
from .protocol import simulate
from .states import FamilySpec

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVALID_DATA = 3
EXIT_NUMERICAL = 4

BELL_UPPER_D2 = 1 / math.sqrt(2)


class UsageError(Exception):
    pass


def boundary_rows(d_max):
    if d_max < 2:
        raise UsageError("--d-max must be >= 2")
    return [(d, eta_ent(d), eta_steer("werner", d), eta_steer("isotropic", d)) for d in range(2, d_max + 1)]


def format_boundary_csv(d_max):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["d", "eta_ent", "eta_steer_werner", "eta_steer_iso"])
    for d, ent, wer, iso in boundary_rows(d_max):
        writer.writerow([d, f"{ent:.6f}", f"{wer:.6f}", f"{iso:.6f}"])
    return buf.getvalue()


def cmd_thresholds(args, out):
    d = args.d
    if d < 2:
        raise UsageError("--d must be >= 2")
    out.write(f"d                  {d}\n")
    out.write(f"eta_ent            {eta_ent(d):.6f}\n")
    out.write(f"eta_steer_werner   {eta_steer('werner', d):.6f}\n")
    out.write(f"eta_steer_iso      {eta_steer('isotropic', d):.6f}\n")
    bell = f"{BELL_UPPER_D2:.6f}" if d == 2 else "(none)"
    out.write(f"eta_bell_upper     {bell}\n")
    return EXIT_OK


def cmd_boundary(args, out):
    text = format_boundary_csv(args.d_max)
    if args.out is None or args.out == "-":
        out.write(text)
    else:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            raise UsageError(f"cannot write {args.out}: {exc}") from None
    return EXIT_OK


def _margin_dict(margin, tol):
    status = "boundary" if abs(margin) <= tol else ("satisfied" if margin > 0 else "violated")
    return {"min_eigenvalue": margin, "tolerance": tol, "status": status}


def gaussian_report(v):
    valid_margin, valid_tol = g.validity_margin(v)
    report = {"valid": bool(valid_margin >= -valid_tol), "margins": {"validity": _margin_dict(valid_margin, valid_tol)}}
    if not report["valid"]:
        return report
    for who in ("alice", "bob"):
        m, tol = g.steering_margin(v, who)
        report[f"steerable_by_{who}"] = bool(m < -tol)
        report["margins"][f"steering_by_{who}"] = _margin_dict(m, tol)
    if g.is_standard_form(v):
        prod = g.reid_product(v)
        report["reid_product"] = prod
        report["reid_violation"] = bool(prod < g.REID_BOUND)
    return report


def cmd_gaussian_check(args, out):
    try:
        doc = json.loads(Path(args.cm).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot parse {args.cm}: {exc}") from None
    try:
        v = g.CovarianceMatrix.from_dict(doc)
    except g.InvalidCovarianceError as exc:
        out.write(json.dumps({"valid": False, "error": str(exc)}) + "\n")
        return EXIT_INVALID_DATA
    report = gaussian_report(v)
    out.write(json.dumps(report, indent=2) + "\n")
    return EXIT_OK if report["valid"] else EXIT_INVALID_DATA


def _spec_from_args(args):
    try:
        return FamilySpec(args.family, args.d, args.eta)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_simulate(args, out):
    spec = _spec_from_args(args)
    if args.runs < 1:
        raise UsageError("--runs must be positive")
    report = simulate(spec, args.mode, args.runs, args.seed, tomography=args.tomography)
    doc = {"family": spec.family, "d": spec.d, "eta": spec.eta, "mode": args.mode, "seed": args.seed}
    doc.update(report.to_dict())
    _write_json(doc, args.out, out)
    return EXIT_OK


def cmd_witness(args, out):
    spec = _spec_from_args(args)
    if args.runs < 1:
        raise UsageError("--runs must be positive")
    rep = steering_witness(spec, args.runs, args.seed)
    doc = {"family": spec.family, "d": spec.d, "eta": spec.eta, "eta_steer": eta_steer(spec.family, spec.d)}
    doc.update(rep.to_dict())
    _write_json(doc, args.out, out)
    return EXIT_OK


def _write_json(doc, path, out):
    text = json.dumps(doc, indent=2) + "\n"
    if path is None or path == "-":
        out.write(text)
    else:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise UsageError(f"cannot write {path}: {exc}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="qsteer", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("thresholds", help="entanglement, steering and Bell thresholds for one d")
    t.add_argument("--d", type=int, required=True)
    t.set_defaults(func=cmd_thresholds)

    b = sub.add_parser("boundary", help="CSV of threshold curves for d = 2..d_max")
    b.add_argument("--d-max", type=int, required=True)
    b.add_argument("--out", default=None, help="output path (stdout if omitted)")
    b.set_defaults(func=cmd_boundary)

    gc = sub.add_parser("gaussian-check", help="validity, steerability and Reid product of a CM JSON file")
    gc.add_argument("cm", help="covariance matrix JSON document")
    gc.set_defaults(func=cmd_gaussian_check)

    for name, func, runs, helptext in (
        ("simulate", cmd_simulate, 1_000_000, "simulate the steering task and verify it"),
        ("witness", cmd_witness, 50, "steering witness of a family state over random bases"),
    ):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--family", choices=["werner", "isotropic", "iso"], default="werner")
        s.add_argument("--d", type=int, required=True)
        s.add_argument("--eta", type=float, required=True)
        s.add_argument("--runs", type=int, default=runs)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--out", default=None)
        if name == "simulate":
            s.add_argument("--mode", choices=["honest", "cheat"], default="honest")
            s.add_argument("--tomography", action="store_true", help="Bob keeps single-shot shadow estimates")
        s.set_defaults(func=func)
    return p


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, out)
    except UsageError as exc:
        parser.exit(EXIT_USAGE, f"qsteer {args.command}: error: {exc}\n")
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        sys.stderr.write(f"qsteer {args.command}: numerical failure: {exc}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
