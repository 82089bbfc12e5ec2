"""Command-line entry point: ``cmcrit <subcommand> ...``.

Exit codes: 0 success, 1 failed verification, 2 non-convergence,
3 domain/input error, 4 insufficient precision.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

from . import __version__
from .errors import CmcritError, DomainError
from .extrapolate import fit_inverse_poly, stability_report
from .precision import PrecisionContext, context_for, recommended_digits, to_decimal
from .reference import BUILTIN
from .report import (curve_samples, emit_plot, emit_table, format_real, make_table, read_table,
                     reference_table)
from .solver import NewtonConfig, solve_transition, sweep
from .tower import f_eval, tower
from .validate import SUITES, run_suite

log = logging.getLogger("cmcrit")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _str_list(text: str) -> list[str]:
    return [v for v in text.replace(" ", "").split(",") if v]


def _range(text: str) -> tuple[str, str]:
    lo, sep, hi = text.partition(":")
    if not sep or not lo or not hi:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}")
    return lo, hi


def _load_table(spec: str):
    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        if name not in BUILTIN:
            raise DomainError(f"unknown builtin dataset {name!r}; available: {', '.join(BUILTIN)}")
        return reference_table(BUILTIN[name])
    return read_table(spec)


def cmd_eval(args) -> int:
    ctx = context_for(args.n, args.digits)
    t = tower(args.x, args.a, args.n, ctx, b=args.b)
    digits = ctx.decimal_digits
    if args.tower:
        print("# k  c(k) = (-1)^(k+1) d^k/dx^k (1+a/x)^(x+b)")
        for k, v in enumerate(t.c):
            print(f"{k} {to_decimal(v, digits)}")
        return 0
    if t.request.b == 0:
        print(to_decimal(f_eval(t, args.n), digits))
    else:
        # (-1)^n d^n/dx^n of (1+a/x)^(x+b) - e^a
        with ctx.activate():
            v = -t.c[0] - t.exp_a if args.n == 0 else -t.c[args.n]
        print(to_decimal(v, digits))
    return 0


def _print_point(p, out=None) -> None:
    out = out or sys.stdout
    d = PrecisionContext(p.digits_used).decimal_digits
    print(f"n          {p.n}", file=out)
    print(f"a_f        {format_real(p.a_f, d)}", file=out)
    print(f"x_f        {format_real(p.x_f, d)}", file=out)
    print(f"residual_1 {to_decimal(p.residual_1, 6)}", file=out)
    print(f"residual_2 {to_decimal(p.residual_2, 6)}", file=out)
    print(f"iterations {p.iterations}", file=out)
    print(f"digits     {p.digits_used}", file=out)
    print(f"status     {p.status}", file=out)


def cmd_transition(args) -> int:
    ctx = context_for(args.n, args.digits)
    cfg = NewtonConfig(step_tolerance=args.tol, max_iterations=args.max_iter, context=ctx)
    if (args.x0 is None) != (args.a0 is None):
        raise DomainError("--x0 and --a0 must be given together")
    seed = (args.x0, args.a0) if args.x0 is not None else None
    p = solve_transition(args.n, cfg, seed)
    _print_point(p)
    log.info("solved n=%d in %.3f s", p.n, p.elapsed)
    return 0


def cmd_sweep(args) -> int:
    cfg = None
    if args.tol is not None or args.max_iter is not None:
        digits = args.digits or recommended_digits(max(args.schedule))
        cfg = NewtonConfig(step_tolerance=args.tol or 1e-16, max_iterations=args.max_iter or 100,
                           context=PrecisionContext(digits))
    start = time.perf_counter()
    rows = sweep(args.schedule, cfg, parallel=args.parallel, workers=args.workers, digits=args.digits)
    log.info("sweep finished in %.1f s", time.perf_counter() - start)
    for r in rows:
        log.info("n=%d status=%s elapsed=%.1f s", r.n, r.status, r.elapsed or 0.0)
    table = make_table(rows, record_timing=args.record_timing)
    emit_table(table, args.format, args.out or sys.stdout)
    return 2 if any(r.status == "failed" for r in rows) else 0


def cmd_extrapolate(args) -> int:
    table = _load_table(args.input)
    pts = table.points()
    digits = args.digits or max(r.digits_used for r in table.rows)
    ctx = PrecisionContext(digits)
    k = args.points or (args.degree + 1)
    if k > len(pts):
        raise DomainError(f"--points {k} exceeds the {len(pts)} usable rows")
    use = pts[-k:]
    est = fit_inverse_poly(use, args.degree, ctx)
    shown = min(digits, 30)
    print(f"a_c        {format_real(est.a_c, shown)}")
    for i, c in enumerate(est.coefficients, start=1):
        print(f"a_{i}        {format_real(c, shown)}")
    print(f"degree     {est.degree}")
    print(f"points     {','.join(str(n) for n, _ in use)}")
    print(f"fit        {'interpolatory' if est.interpolatory else 'least-squares'}")
    print(f"sum|w|     {format_real(est.condition_diagnostic, 8)}")
    if args.windows:
        degrees = [d for d in range(1, args.degree + 2) if d + 1 <= len(pts)]
        rep = stability_report(pts, degrees, ctx)
        for d in degrees:
            print(f"# degree {d}: spread {to_decimal(rep.spread[d], 3)}")
            for ns, v in rep.estimates[d]:
                print(f"  {','.join(map(str, ns)):<24} {format_real(v, 16)}")
    return 0


def cmd_plot_curves(args) -> int:
    digits = args.digits or 30
    ctx = PrecisionContext(digits)
    curves = curve_samples(args.n, args.a, args.xrange, args.points, ctx, extra_orders=args.extra_orders)
    ylim = tuple(float(v) for v in args.yrange) if args.yrange else None
    emit_plot("curves", curves, args.out, ylim=ylim, title=args.title or "")
    return 0


def cmd_plot_extrapolation(args) -> int:
    table = _load_table(args.input)
    ctx = PrecisionContext(args.digits or max(r.digits_used for r in table.rows))
    emit_plot("extrapolation", table.points(), args.out, degree=args.degree, points=args.fit_points,
              context=ctx, title=args.title or "")
    return 0


def cmd_verify(args) -> int:
    ctx = PrecisionContext(args.digits or 60)
    names = list(SUITES) if args.all or not args.suite else [args.suite]
    ok = True
    for name in names:
        start = time.perf_counter()
        rep = run_suite(name, ctx)
        print("\n".join(rep.lines()))
        log.info("suite %s took %.1f s", name, time.perf_counter() - start)
        ok &= rep.passed
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--digits", type=int, default=None,
                        help="working precision in decimal digits (default: recommended for the order)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="cmcrit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"cmcrit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("eval", parents=[common], help="signed derivative f(x, a, n)")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--x", required=True)
    s.add_argument("--a", required=True)
    s.add_argument("--b", default="0")
    s.add_argument("--tower", action="store_true", help="print c(0..n) instead of f(x, a, n)")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("transition", parents=[common], help="solve for (a_f(n), x_f(n))")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--x0")
    s.add_argument("--a0")
    s.add_argument("--tol", type=float, default=1e-16)
    s.add_argument("--max-iter", type=int, default=100)
    s.set_defaults(func=cmd_transition)

    s = sub.add_parser("sweep", parents=[common], help="solve a schedule of orders")
    s.add_argument("--schedule", type=_int_list, required=True)
    s.add_argument("--parallel", action="store_true")
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--out")
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.add_argument("--tol", type=float, default=None)
    s.add_argument("--max-iter", type=int, default=None)
    s.add_argument("--record-timing", action="store_true",
                   help="store wall-clock times in the table (output is then not reproducible)")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("extrapolate", parents=[common], help="limit of a_f(n) as n -> infinity")
    s.add_argument("--input", required=True, help="table file or builtin:table1")
    s.add_argument("--points", type=int, default=None, help="use the last K rows (default degree+1)")
    s.add_argument("--degree", type=int, default=2)
    s.add_argument("--windows", action="store_true", help="also print the sliding-window stability report")
    s.set_defaults(func=cmd_extrapolate)

    s = sub.add_parser("plot-curves", parents=[common], help="SVG of f(x, a, n) curves")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--a", type=_str_list, required=True, help="comma-separated a values")
    s.add_argument("--xrange", type=_range, required=True, help="LO:HI")
    s.add_argument("--yrange", type=_range, default=None, help="LO:HI (default: data range)")
    s.add_argument("--points", type=int, default=200)
    s.add_argument("--extra-orders", type=int, default=0, help="also plot orders n+1..n+K")
    s.add_argument("--title")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_plot_curves)

    s = sub.add_parser("plot-extrapolation", parents=[common], help="SVG of a_f against 1/n")
    s.add_argument("--input", required=True)
    s.add_argument("--degree", type=int, default=None)
    s.add_argument("--fit-points", type=int, default=None, help="fit through the last K rows")
    s.add_argument("--title")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_plot_extrapolation)

    s = sub.add_parser("verify", parents=[common], help="run oracle suites")
    s.add_argument("--suite", choices=SUITES)
    s.add_argument("--all", action="store_true")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except CmcritError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
