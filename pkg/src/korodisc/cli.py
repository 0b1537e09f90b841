"""Command-line front end.

Exit codes: 0 success, 1 verification failures, 2 bad arguments or
precondition violations, 3 resource limits, 4 cross-method inconsistency.

All numeric output is JSON or CSV; reports carry schema_version "1".
Identical arguments produce identical output up to the elapsed_ms timing
fields, regardless of --threads.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

from .errors import (
    GeneratorNotFoundError,
    InconsistencyError,
    PreconditionError,
    ResourceLimitError,
)
from . import verify as verify_mod
from .discrepancy import SearchConfig, nonperiodic_discrepancy, periodic_discrepancy
from .dispersion import IntervalSystem, dispersion, solve_congruence_system
from .lattice import default_cap, hyperbolic_cross_size, max_exactness, search_generator
from .point_sets import (
    Generator,
    PointSet,
    dump_pointset_csv,
    fibonacci_pointset,
    korobov_pointset,
    read_pointset_csv,
    write_pointset_csv,
)

SCHEMA_VERSION = "1"


def _resolve_threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("KORODISC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise PreconditionError(f"KORODISC_THREADS={env!r} is not an integer")
    return 1


def _emit(obj: dict, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_vector(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise PreconditionError(f"expected a comma-separated integer vector, got {text!r}")


def _generator_from_args(args) -> Generator:
    if getattr(args, "vector", None):
        vec = _parse_vector(args.vector)
        if len(vec) != args.d:
            raise PreconditionError(f"vector has {len(vec)} components, expected {args.d}")
        return Generator(args.m, vec)
    if getattr(args, "gen", None) is None:
        raise PreconditionError("provide --gen or --vector")
    return Generator.from_scalar(args.m, args.gen, args.d)


def _load_pointset(args) -> PointSet:
    picked = [bool(getattr(args, "fib", None)),
              bool(getattr(args, "m", None)),
              bool(getattr(args, "infile", None))]
    if sum(picked) != 1:
        raise PreconditionError("choose exactly one of --fib, --m, or --in")
    if args.fib:
        return fibonacci_pointset(args.fib)
    if args.m:
        g = _generator_from_args(args)
        return korobov_pointset(g, args.d)
    return read_pointset_csv(args.infile)


# --- subcommands --------------------------------------------------------------

def cmd_pointset(args) -> int:
    if args.which == "fib":
        if args.n < 2:
            raise PreconditionError(f"fibonacci point sets need n >= 2, got {args.n}")
        ps = fibonacci_pointset(args.n)
    else:
        ps = korobov_pointset(_generator_from_args(args), args.d)
    if args.out:
        write_pointset_csv(ps, args.out)
        print(len(ps))
    else:
        dump_pointset_csv(ps, sys.stdout)
        print(len(ps), file=sys.stderr)
    return 0


def cmd_lattice_search(args) -> int:
    res = search_generator(args.m, args.L, args.d, force=args.force,
                           threads=_resolve_threads(args))
    _emit({
        "schema_version": SCHEMA_VERSION,
        "m": res.m,
        "L": res.L,
        "d": res.d,
        "a": res.a,
        "gamma_size": res.gamma_size,
        "verified": res.verified,
        "elapsed_ms": res.elapsed_ms,
    }, args.out)
    return 0


def cmd_lattice_maxexact(args) -> int:
    g = _generator_from_args(args)
    t0 = time.perf_counter()
    cap = args.cap if args.cap is not None else default_cap(args.d)
    res = max_exactness(g, args.d, cap=cap)
    _emit({
        "schema_version": SCHEMA_VERSION,
        "m": g.m,
        "a": list(g.a),
        "d": args.d,
        "cap": cap,
        "N_max": res.n_max,
        "exceeds_cap": res.exceeds_cap,
        "witness": list(res.witness) if res.witness else None,
        "elapsed_ms": (time.perf_counter() - t0) * 1000.0,
    }, args.out)
    return 0


def _write_trace(path: str, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if not rows:
            return
        d = len(rows[0]["u"])
        header = [f"u{j+1}" for j in range(d)] + [f"z{j+1}" for j in range(d)] + ["value"]
        fh.write(",".join(header) + "\n")
        for row in rows:
            vals = list(row["u"]) + list(row["z"]) + [row["value"]]
            fh.write(",".join(f"{v:.17g}" for v in vals) + "\n")


def cmd_disc(args) -> int:
    ps = _load_pointset(args)
    cfg = SearchConfig(z_grid=args.z_grid, u_grid=args.u_grid,
                       quadrature_refinement=args.refine)
    t0 = time.perf_counter()
    if args.which == "periodic":
        p = math.inf if args.p in ("inf", "infinity") else float(args.p)
        est = periodic_discrepancy(ps, args.v, args.r, p, cfg=cfg,
                                   threads=_resolve_threads(args),
                                   collect_trace=bool(args.trace))
    else:
        est = nonperiodic_discrepancy(ps, args.v, args.r, cfg=cfg,
                                      collect_trace=bool(args.trace))
    report = est.to_json_dict()
    report["schema_version"] = SCHEMA_VERSION
    report["elapsed_ms"] = (time.perf_counter() - t0) * 1000.0
    if args.trace:
        _write_trace(args.trace, est.trace or [])
    _emit(report, args.out)
    if est.certified is False:
        print("error: cross-method residual exceeds the truncation certificate",
              file=sys.stderr)
        return 4
    return 0


def cmd_disp(args) -> int:
    ps = _load_pointset(args)
    t0 = time.perf_counter()
    if args.approx:
        res = dispersion(ps, method="grid", grid_resolution=args.grid_res)
    else:
        res = dispersion(ps, limit=args.limit)
    flags = ["open-at-lo"] if res.open_at_lo else []
    _emit({
        "schema_version": SCHEMA_VERSION,
        "n": len(ps),
        "d": ps.dim,
        "dispersion": res.volume,
        "dispersion_exact": str(res.volume_exact),
        "witness": {"lo": list(res.witness.lo), "hi": list(res.witness.hi), "flags": flags},
        "method": res.method,
        "elapsed_ms": (time.perf_counter() - t0) * 1000.0,
    }, args.out)
    return 0


def _parse_intervals(text: str) -> tuple[tuple[int, int], ...]:
    out = []
    for part in text.split(","):
        try:
            x, y = part.split(":")
            out.append((int(x), int(y)))
        except ValueError:
            raise PreconditionError(
                f"expected intervals as x1:y1,x2:y2,..., got {text!r}")
    return tuple(out)


def cmd_congruence(args) -> int:
    sys_ = IntervalSystem(p=args.p, a=args.a, intervals=_parse_intervals(args.intervals))
    t0 = time.perf_counter()
    mu = solve_congruence_system(sys_)
    report = {
        "schema_version": SCHEMA_VERSION,
        "p": args.p,
        "a": args.a,
        "d": sys_.dim,
        "intervals": [list(iv) for iv in sys_.intervals],
        "product": sys_.product,
        "mu": mu,
        "elapsed_ms": (time.perf_counter() - t0) * 1000.0,
    }
    if args.threshold is not None:
        report["threshold"] = args.threshold
        report["above_threshold"] = sys_.product >= args.threshold
    _emit(report, args.out)
    return 0


def cmd_verify(args) -> int:
    only = None if args.target == "all" else [args.target]
    if only and only[0] not in verify_mod.check_names():
        raise PreconditionError(
            f"unknown check {args.target!r}; known: all, " + ", ".join(verify_mod.check_names()))
    report = verify_mod.run_all(quick=args.quick, seed=args.seed,
                                threads=_resolve_threads(args), only=only)
    for line in report.summary_lines():
        print(line)
    if args.out:
        _emit(report.to_json_dict(), args.out)
    return 0 if report.passed else 1


# --- parser -------------------------------------------------------------------

def _add_common(sub):
    sub.add_argument("--out", default=None, help="write the JSON report to this file")
    sub.add_argument("--threads", type=int, default=None,
                     help="worker threads (default: KORODISC_THREADS or 1)")
    sub.add_argument("--seed", type=int, default=0,
                     help="seed for randomized sampling (recorded in reports)")


def _add_pointset_source(sub):
    sub.add_argument("--fib", type=int, default=None, help="Fibonacci index n")
    sub.add_argument("--m", type=int, default=None, help="Korobov modulus")
    sub.add_argument("--gen", type=int, default=None, help="scalar Korobov generator")
    sub.add_argument("--vector", default=None, help="explicit direction vector a1,a2,...")
    sub.add_argument("--d", type=int, default=2, help="dimension (with --m)")
    sub.add_argument("--in", dest="infile", default=None, help="point-set CSV file")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="korodisc",
        description="Lattice point sets, fixed-volume discrepancy, and dispersion",
    )
    sp = ap.add_subparsers(dest="command", required=True)

    ps = sp.add_parser("pointset", help="construct a point set as CSV")
    pssub = ps.add_subparsers(dest="which", required=True)
    fib = pssub.add_parser("fib", help="Fibonacci point set")
    fib.add_argument("--n", type=int, required=True)
    _add_common(fib)
    fib.set_defaults(func=cmd_pointset)
    kor = pssub.add_parser("korobov", help="Korobov point set")
    kor.add_argument("--m", type=int, required=True)
    kor.add_argument("--gen", type=int, default=None)
    kor.add_argument("--vector", default=None)
    kor.add_argument("--d", type=int, required=True)
    _add_common(kor)
    kor.set_defaults(func=cmd_pointset)

    lat = sp.add_parser("lattice", help="generator search and exactness")
    latsub = lat.add_subparsers(dest="which", required=True)
    search = latsub.add_parser("search", help="smallest exact scalar generator")
    search.add_argument("--m", type=int, required=True)
    search.add_argument("--L", type=int, required=True)
    search.add_argument("--d", type=int, required=True)
    search.add_argument("--force", action="store_true",
                        help="search even if the counting precondition fails")
    _add_common(search)
    search.set_defaults(func=cmd_lattice_search)
    mx = latsub.add_parser("maxexact", help="maximal exactness level of a rule")
    mx.add_argument("--m", type=int, required=True)
    mx.add_argument("--gen", type=int, default=None)
    mx.add_argument("--vector", default=None)
    mx.add_argument("--d", type=int, required=True)
    mx.add_argument("--cap", type=int, default=None)
    _add_common(mx)
    mx.set_defaults(func=cmd_lattice_maxexact)

    disc = sp.add_parser("disc", help="fixed-volume discrepancy estimates")
    discsub = disc.add_subparsers(dest="which", required=True)
    for which in ("periodic", "nonperiodic"):
        dsub = discsub.add_parser(which)
        _add_pointset_source(dsub)
        dsub.add_argument("--v", type=float, required=True, help="box volume")
        dsub.add_argument("--r", type=int, required=True, help="smoothness order")
        if which == "periodic":
            dsub.add_argument("--p", default="inf", help="norm exponent or 'inf'")
        dsub.add_argument("--z-grid", type=int, default=64, dest="z_grid")
        dsub.add_argument("--u-grid", type=int, default=5, dest="u_grid")
        dsub.add_argument("--refine", type=int, default=4,
                          help="L_p quadrature grid as a multiple of the point count")
        dsub.add_argument("--trace", default=None, help="write per-candidate CSV trace")
        _add_common(dsub)
        dsub.set_defaults(func=cmd_disc)

    dp = sp.add_parser("disp", help="exact dispersion (largest empty box)")
    _add_pointset_source(dp)
    dp.add_argument("--limit", type=int, default=None, help="exact-mode point limit")
    dp.add_argument("--approx", action="store_true", help="snapped-grid approximation")
    dp.add_argument("--grid-res", type=int, default=64, dest="grid_res")
    _add_common(dp)
    dp.set_defaults(func=cmd_disp)

    cg = sp.add_parser("congruence", help="solve a residue interval system")
    cg.add_argument("--p", type=int, required=True)
    cg.add_argument("--a", type=int, required=True)
    cg.add_argument("--intervals", required=True, help="x1:y1,x2:y2,...")
    cg.add_argument("--threshold", type=int, default=None,
                    help="report whether the interval product meets this threshold")
    _add_common(cg)
    cg.set_defaults(func=cmd_congruence)

    vf = sp.add_parser("verify", help="run the verification suite")
    vf.add_argument("target", help="'all' or a single check name")
    vf.add_argument("--quick", action="store_true", help="shrink the n/m ranges")
    _add_common(vf)
    vf.set_defaults(func=cmd_verify)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GeneratorNotFoundError as exc:
        print(f"error: not found: {exc}", file=sys.stderr)
        return 2
    except ResourceLimitError as exc:
        print(f"error: resource limit: {exc}", file=sys.stderr)
        return 3
    except InconsistencyError as exc:
        print(f"error: internal inconsistency: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
