"""Command-line front end.

Exit codes: 0 success, 1 a verification failed, 2 usage error, 3 numerical
error.  Every file lands under ``--out-dir`` (default ``./out``).
"""

import argparse
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import reporting
from .criticality import classify_preset
from .errors import CritlabError, NumericalError
from .operators import Preset, make_operator
from .spectral import Grid, SweepPoint, default_step, dirichlet_principal_eigenvalue, eigenvalue_sweep
from .verification import (
    find_K_and_verify_lower_bound,
    run_ce1,
    run_ce2,
    verify_kn_lower,
    verify_kn_upper,
    verify_limit_averages,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3
PRESETS = [p.value for p in Preset]
SA_FORM = {Preset.CE1_DRIFT: Preset.CE1_SA, Preset.CE2_DRIFT: Preset.CE2_SA}
_VALUE_FLAGS = ("--range", "--radii")


class UsageError(Exception):
    pass


def _range(text):
    m = re.fullmatch(r"\s*([^:]+):([^:]+)\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}")
    try:
        lo, hi = float(m.group(1)), float(m.group(2))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers in {text!r}") from None
    if not hi > lo:
        raise argparse.ArgumentTypeError("range needs LO < HI")
    return lo, hi


def _radii(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("no radii given")
    return vals


def _fields(text):
    names = [v.strip() for v in text.split(",") if v.strip()]
    bad = [n for n in names if n not in reporting.FIELDS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"fields must be among {', '.join(reporting.FIELDS)}")
    return names


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default=argparse.SUPPRESS, help="directory for all outputs (default ./out)")

    parser = argparse.ArgumentParser(
        prog="critlab",
        description="Limit-periodic drift, counter-example operators and criticality checks.",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    field = sub.add_parser("field", help="sample sigma, b, B or b_inf", parents=[common])
    fsub = field.add_subparsers(dest="action", metavar="ACTION", required=True)
    for name, default, text in (("eval", "b", "write samples to CSV"),
                                ("plot", "sigma,b", "CSV plus an SVG line chart")):
        p = fsub.add_parser(name, help=text, parents=[common])
        p.add_argument("--which", type=_fields, default=_fields(default),
                       help=f"comma-separated fields from {', '.join(reporting.FIELDS)} (default {default})")
        p.add_argument("--range", type=_range, default=(-9.0, 9.0), help="LO:HI (default -9:9)")
        p.add_argument("--step", type=float, default=0.01, help="sample spacing (default 0.01)")
        p.add_argument("--tol", type=float, default=1e-9, help="accuracy of b_inf (default 1e-9)")

    eig = sub.add_parser("eig", help="Dirichlet principal eigenvalue on [-R, R]", parents=[common])
    eig.add_argument("--preset", choices=PRESETS, default="ce1-sa", help="operator (default ce1-sa)")
    eig.add_argument("--radius", type=float, default=9.0, help="half-width R (default 9)")
    eig.add_argument("--h", type=float, default=None, help="mesh step (default: radius dependent)")

    sweep = sub.add_parser("sweep", help="eigenvalues over a list of radii", parents=[common])
    sweep.add_argument("--preset", choices=PRESETS, default="ce1-sa", help="operator (default ce1-sa)")
    sweep.add_argument("--radii", type=_radii, default=_radii("9,27,81,243"), help="R1,R2,... (default 9,27,81,243)")
    sweep.add_argument("--h", type=float, default=None, help="mesh step (default: radius dependent)")
    sweep.add_argument("--no-extrapolate", action="store_true", help="report the raw second-order values")

    crit = sub.add_parser("criticality", help="classify a preset", parents=[common])
    crit.add_argument("--preset", choices=PRESETS, default="ce1-sa", help="operator (default ce1-sa)")
    crit.add_argument("--threshold", type=float, default=1e6, help="divergence threshold (default 1e6)")

    ver = sub.add_parser("verify", help="inequality checks", parents=[common])
    vsub = ver.add_subparsers(dest="check", metavar="CHECK", required=True)
    for name in ("kn-lower", "kn-upper"):
        p = vsub.add_parser(name, help=f"{name} inequality for all k <= n <= NMAX", parents=[common])
        p.add_argument("--nmax", type=int, default=8, help="largest n, at most 9 (default 8)")
    p = vsub.add_parser("global-bound", help="find K in the global lower bound for B", parents=[common])
    p.add_argument("--xmax", type=float, default=3.0**8, help="sample up to |x| = XMAX (default 6561)")
    p.add_argument("--step", type=float, default=0.01, help="sample spacing (default 0.01)")
    p = vsub.add_parser("limit-averages", help="signs of the integrals of b_inf", parents=[common])
    p.add_argument("--kmax", type=int, default=4, help="largest k, at most 6 (default 4)")
    p.add_argument("--tol", type=float, default=1e-6, help="quadrature tolerance (default 1e-6)")

    sub.add_parser("ce1", help="first counter-example pipeline", parents=[common])
    sub.add_parser("ce2", help="second counter-example pipeline", parents=[common])
    rep = sub.add_parser("report", help="both pipelines into one JSON file", parents=[common])
    rep.add_argument("--out", default="report.json", help="file name, relative to --out-dir (default report.json)")
    return parser


def _normalise_argv(argv):
    # "--range -9:9" would be taken for an option; glue such values to their flag
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def _sa_preset(name):
    preset = Preset.parse(name)
    return SA_FORM.get(preset, preset)


def _field(args, out):
    lo, hi = args.range
    x = reporting.sample_grid(lo, hi, args.step)
    values = {w: reporting.sample_field(w, x, args.tol) for w in args.which}
    for w, y in values.items():
        path = reporting.write_text(out / f"field_{w}.csv", reporting.field_csv(x, y))
        print(f"wrote {path}")
    if args.action == "plot":
        labels = {"sigma": "sigma(x)", "b": "b(x)", "B": "B(x)", "binf": "b_inf(x)"}
        svg = reporting.line_chart_svg(x, [(labels[w], values[w]) for w in args.which])
        path = reporting.write_text(out / f"field_{'_'.join(args.which)}.svg", svg)
        print(f"wrote {path}")
    return EXIT_OK


def _eig(args, out):
    preset = _sa_preset(args.preset)
    if not args.radius > 0:
        raise UsageError("--radius must be positive")
    h = args.h if args.h is not None else default_step(args.radius)
    if not h > 0 or h >= args.radius:
        raise UsageError("--h must be positive and smaller than the radius")
    res = dirichlet_principal_eigenvalue(make_operator(preset), Grid.symmetric(args.radius, h))
    doc = reporting.eigen_dict(preset.value, [SweepPoint(args.radius, res.lam, res.residual, h, res.positive,
                                                         [res.lam])])
    reporting.validate(doc, "eigen_result")
    reporting.write_text(out / f"eig_{preset.value}.json", reporting.dumps(doc))
    reporting.write_text(out / f"eig_{preset.value}_eigenfunction.csv", reporting.field_csv(res.x, res.eigenfunction))
    print(f"{preset.value}  R={args.radius:g}  h={h:g}  lambda={res.lam:.10g}  residual={res.residual:.2e}  "
          f"positive={res.positive}")
    return EXIT_OK


def _sweep(args, out):
    preset = _sa_preset(args.preset)
    if any(r <= 0 for r in args.radii):
        raise UsageError("radii must be positive")
    t0 = time.perf_counter()
    res = eigenvalue_sweep(make_operator(preset), args.radii, h=args.h, extrapolate=not args.no_extrapolate)
    doc = reporting.eigen_dict(preset.value, res.points, res.extrapolated)
    reporting.validate(doc, "eigen_result")
    reporting.write_text(out / f"sweep_{preset.value}.csv", reporting.sweep_csv(res.points))
    reporting.write_text(out / f"sweep_{preset.value}.json", reporting.dumps(doc))
    for p in res.points:
        print(f"R={p.radius:<8g} lambda={p.lam:.10g}  residual={p.residual:.2e}")
    print(f"({time.perf_counter() - t0:.2f} s)")
    return EXIT_OK


def _criticality(args, out):
    rep = classify_preset(args.preset, threshold=args.threshold)
    doc = rep.to_dict()
    reporting.validate(doc, "criticality_report")
    reporting.write_text(out / f"criticality_{args.preset}.json", reporting.dumps(doc))
    print(f"{args.preset}: {rep.classification}")
    for note in rep.notes:
        print(f"  {note}")
    return EXIT_OK


def _verify(args, out):
    if args.check == "kn-lower":
        rec = verify_kn_lower(args.nmax)
    elif args.check == "kn-upper":
        rec = verify_kn_upper(args.nmax)
    elif args.check == "global-bound":
        K, rec = find_K_and_verify_lower_bound(args.xmax, args.step)
        print(f"K = {K:.12g} (implementation-derived)")
    else:
        rec = verify_limit_averages(args.kmax, args.tol)
    doc = rec.to_dict()
    reporting.validate(doc, "verification_record")
    reporting.write_text(out / f"verify_{args.check}.json", reporting.dumps(doc))
    print(f"{rec.name}: {'pass' if rec.passed else 'FAIL'}  worst margin {rec.worst_margin:.6g} at "
          f"{rec.worst_location}  ({rec.runtime_ms} ms)")
    return EXIT_OK if rec.passed else EXIT_FAIL


def _pipeline_exit(reports):
    if any(r.numerical_error for r in reports):
        return EXIT_NUMERICAL
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def _pipeline(args, out):
    rep = run_ce1() if args.command == "ce1" else run_ce2()
    doc = rep.to_dict()
    reporting.validate(doc, "pipeline_report")
    reporting.write_text(out / f"{args.command}.json", reporting.dumps(doc))
    print(rep.summary_table(), end="")
    return _pipeline_exit([rep])


def _report(args, out):
    reports = [run_ce1(), run_ce2()]
    doc = reporting.suite_dict(reports)
    reporting.validate(doc, "suite_report")
    target = Path(args.out)
    path = reporting.write_text(target if target.is_absolute() else out / target, reporting.dumps(doc))
    for r in reports:
        print(r.summary_table())
    print(f"wrote {path}")
    return _pipeline_exit(reports)


HANDLERS = {"field": _field, "eig": _eig, "sweep": _sweep, "criticality": _criticality, "verify": _verify,
            "ce1": _pipeline, "ce2": _pipeline, "report": _report}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_normalise_argv(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    out = Path(getattr(args, "out_dir", "out"))
    try:
        with np.errstate(over="ignore", under="ignore"):
            return HANDLERS[args.command](args, out)
    except UsageError as err:
        parser.print_usage(sys.stderr)
        print(f"critlab: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as err:
        print(f"critlab: numerical error: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CritlabError as err:
        parser.print_usage(sys.stderr)
        print(f"critlab: error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
