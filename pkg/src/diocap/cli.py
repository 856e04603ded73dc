"""Batch command-line front end.

One subcommand per process; machine output (JSON or CSV) goes to stdout or
--output, human diagnostics to stderr.  Exit codes: 0 success, 2 usage
error, 3 domain/precision error, 4 solver non-convergence.  Output bytes
are independent of the thread setting: every reduction in the library has
a fixed order.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction

from . import capacity as cap
from . import constructions as cons
from . import contfrac as cf
from . import kernels as ker
from . import measures as mea
from . import sums
from .errors import (DiocapError, DomainError, IncompatibleClamp,
                     InsufficientTable, PrecisionExhausted, RationalInput,
                     Undecidable)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_NONCONVERGENCE = 4

RULES = {
    "golden": lambda: cons.GrowthRule.constant(1),
    "nonbrjuno-exp": lambda: cons.GrowthRule.exp_of_q((6,)),
    "nonpm-expexp": lambda: cons.GrowthRule.exp_exp_of_q((2,)),
}


def _parse_rule(text: str) -> cons.GrowthRule:
    if text in RULES:
        return RULES[text]()
    if ":" in text:
        head, arg = text.split(":", 1)
        if head == "constant":
            return cons.GrowthRule.constant(int(arg))
        if head in ("poly", "polynomial"):
            return cons.GrowthRule.polynomial(int(arg))
        if head == "exp-of-q":
            return cons.GrowthRule.exp_of_q(
                tuple(int(s) for s in arg.split(",")))
        if head == "expexp-of-q":
            return cons.GrowthRule.exp_exp_of_q(
                tuple(int(s) for s in arg.split(",")))
    raise DomainError(f"unknown growth rule {text!r}")


def _parse_value(text: str, bits: int):
    """A named constant, a rational p/q, or a decimal literal (exact)."""
    if text in cf.NAMED_REALS:
        return cf.named_real(text, bits)
    return cf.CertifiedReal.from_fraction(Fraction(text))


def _parse_alpha(text: str, bits: int, terms: int):
    """Potential target: named constant, rational, or growth rule."""
    if text in RULES:
        return cons.build(_parse_rule(text), max(terms, 5)).anchor
    if text in cf.NAMED_REALS:
        return cf.named_real(text, bits)
    if text.startswith(("constant:", "poly:", "exp-of-q:", "expexp-of-q:")):
        return cons.build(_parse_rule(text), max(terms, 5)).anchor
    return Fraction(text)


def _emit(args, text: str) -> None:
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _jdump(obj) -> str:
    return json.dumps(obj, sort_keys=True, allow_nan=True) + "\n"


def _csv(rows, header) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_expand(args) -> int:
    value = _parse_value(args.value, args.bits)
    pq = cf.expand(value, args.terms, start_bits=args.bits)
    table = cf.convergents(pq, args.terms)
    if args.format == "json":
        _emit(args, table.to_json() + "\n")
    else:
        rows = [(n, (pq.digits[n - 1] if n >= 1 else pq.a0),
                 str(table.ps[n]), str(table.qs[n]))
                for n in range(table.n_max + 1)]
        _emit(args, _csv(rows, ["n", "digit", "P", "Q"]))
    return EXIT_OK


def _cmd_construct(args) -> int:
    rule = _parse_rule(args.rule)
    res = cons.build(rule, args.terms)
    if args.format == "json":
        _emit(args, res.logtable.to_json() + "\n")
    else:
        rows = []
        for e in res.logtable.entries:
            lnq, lnlnq = e.lnQ, e.lnlnQ
            rows.append((e.n,
                         repr(lnq) if math.isfinite(lnq) else "inf",
                         repr(lnlnq) if math.isfinite(lnlnq) else "inf",
                         repr(e.rel_err)))
        _emit(args, _csv(rows, ["n", "lnQ", "lnlnQ", "rel_err"]))
    return EXIT_OK


def _series_table(args):
    rule = _parse_rule(args.rule)
    res = cons.build(rule, args.N + 1 if args.N >= 1 else 2)
    if res.table.n_max >= args.N + 1:
        return res.table
    return res.logtable


def _cmd_series(args) -> int:
    table = _series_table(args)
    if args.kind == "brjuno":
        rep = sums.brjuno_series(table, args.N)
    elif args.kind == "pm":
        rep = sums.pm_series(table, args.N)
    elif args.kind == "lemma1":
        rep = sums.lemma1_series(table, args.N, args.epsilon)
    elif args.kind == "lemma2":
        rep = sums.lemma2_series(table, args.N, args.epsilon)
    else:
        raise DomainError(f"unknown series kind {args.kind!r}")
    if args.format == "csv":
        _emit(args, sums.report_to_csv(rep))
        return EXIT_OK
    obj = {
        "kind": rep.kind,
        "N": rep.N,
        "epsilon": rep.epsilon,
        "S": rep.total,
        "diagnostics": rep.diagnostics,
        "terms": [[n, t] for n, t in zip(rep.ns, rep.terms)],
        "partial_sums": [[n, s] for n, s in zip(rep.ns, rep.partial_sums)],
        "skipped": [[n, why] for n, why in rep.skipped],
    }
    if rep.split_members is not None:
        obj["split"] = {
            "members": rep.split_members,
            "sum_in": rep.split_sum_in,
            "sum_out": rep.split_sum_out,
        }
        if rep.kind == "lemma1":
            cb = sums.cauchy_bunyakovsky_check(rep)
            obj["cauchy_bunyakovsky"] = {
                "lhs": cb.lhs, "rhs": cb.rhs, "holds": cb.holds}
    _emit(args, _jdump(obj))
    return EXIT_OK


def _cmd_kernel(args) -> int:
    spec = ker.KernelSpec(args.family, args.sigma)
    ds = [float(s) for s in args.distances.split(",")]
    rows = [(repr(d), repr(ker.kernel_eval(spec, d))) for d in ds]
    if args.format == "json":
        _emit(args, _jdump({"family": spec.family, "sigma": spec.sigma,
                            "theorem_grade": spec.theorem_grade,
                            "values": [[d, ker.kernel_eval(spec, d)]
                                       for d in ds]}))
    else:
        _emit(args, _csv(rows, ["d", "k"]))
    return EXIT_OK


def _cmd_gauge(args) -> int:
    spec = ker.GaugeSpec(args.family, args.sigma)
    ts = [float(s) for s in args.t.split(",")]
    vals = [(t, ker.gauge_eval(spec, t)) for t in ts]
    if args.format == "json":
        _emit(args, _jdump({"family": spec.family, "sigma": spec.sigma,
                            "domain_max": spec.domain_max, "values": vals}))
    else:
        _emit(args, _csv([(repr(t), repr(h)) for t, h in vals], ["t", "h"]))
    return EXIT_OK


def _cmd_measure(args) -> int:
    m = mea.build_paper_measure(args.qmax, args.epsilon,
                                reduced_only=args.reduced)
    mass = m.total_mass()
    bound = mea.comparison_mass_bound(args.qmax, args.epsilon)
    obj = {"q_max": args.qmax, "epsilon": args.epsilon,
           "reduced_only": args.reduced, "atoms": m.atom_count(),
           "mass": mass, "mass_bound": bound}
    if args.format == "json":
        _emit(args, _jdump(obj))
    else:
        _emit(args, _csv([(args.qmax, args.epsilon, m.atom_count(),
                           mass, bound)],
                         ["q_max", "epsilon", "atoms", "mass", "mass_bound"]))
    return EXIT_OK


def _parse_sweep(text: str) -> list[int]:
    # "128:4096:x2" -> 128, 256, ..., 4096
    parts = text.split(":")
    if len(parts) == 3 and parts[2].startswith("x"):
        lo, hi, fac = int(parts[0]), int(parts[1]), int(parts[2][1:])
        out = []
        q = lo
        while q <= hi:
            out.append(q)
            q *= fac
        return out
    if len(parts) == 1:
        return [int(parts[0])]
    raise DomainError(f"cannot parse sweep {text!r} (want lo:hi:xFACTOR)")


def _cmd_potential(args) -> int:
    spec = ker.KernelSpec(args.family, args.sigma)
    alpha = _parse_alpha(args.alpha, args.bits, args.terms)
    qs = _parse_sweep(args.qmax_sweep if args.qmax_sweep else str(args.qmax))
    if isinstance(alpha, Fraction) and args.tail:
        results = []
        for q in qs:
            m = mea.build_paper_measure(q, args.epsilon,
                                        reduced_only=args.reduced)
            results.append((q, mea.potential(m, spec, alpha,
                                             with_tail_bound=True)))
    else:
        results = mea.potential_sweep(args.epsilon, spec, alpha, qs,
                                      reduced_only=args.reduced)
    rows = [(q, repr(pv.value),
             repr(pv.tail_bound) if pv.tail_bound is not None else "")
            for q, pv in results]
    if args.format == "json":
        _emit(args, _jdump({"alpha": args.alpha, "sigma": args.sigma,
                            "epsilon": args.epsilon,
                            "sweep": [[q, pv.value, pv.tail_bound]
                                      for q, pv in results]}))
    else:
        _emit(args, _csv(rows, ["q_max", "potential", "tail_bound"]))
    return EXIT_OK


def _cmd_capacity(args) -> int:
    spec = ker.KernelSpec(args.family, args.sigma)
    lo, hi = Fraction(args.lo), Fraction(args.hi)
    grid = cap.NodeSet.uniform_grid(lo, hi, args.grid)
    est = cap.discrete_capacity(grid, spec, tol=args.tol)
    if not est.converged:
        print(f"capacity solver did not reach tol={args.tol} "
              f"(gap {est.duality_gap:.3g} after {est.iterations} iterations)",
              file=sys.stderr)
        return EXIT_NONCONVERGENCE
    obj = est.to_json_dict()
    if args.properties:
        half = max(2, args.grid // 2)
        fam = [cap.NodeSet(grid.nodes[:half], grid.clamp_delta),
               grid,
               cap.NodeSet(grid.nodes[half:], grid.clamp_delta)]
        rep = cap.check_capacity_properties(fam, spec, tol=1e-6,
                                            solver_tol=args.tol)
        obj["properties"] = {
            "checks": [[c.kind, c.left_index, c.right_index,
                        c.lhs, c.rhs, c.ok] for c in rep.checks],
            "violations": len(rep.violations),
            "skipped": list(rep.skipped),
            "inner_outer": rep.inner_outer_note,
        }
    if args.format == "json":
        _emit(args, _jdump(obj))
    else:
        _emit(args, _csv([(est.W, est.C, est.duality_gap, est.iterations)],
                         ["W", "C", "gap", "iters"]))
    return EXIT_OK


def _cmd_cover(args) -> int:
    gauge = ker.GaugeSpec(args.gauge, args.sigma)
    lo, hi = Fraction(args.lo), Fraction(args.hi)
    n = args.points
    samples = [lo + (hi - lo) * Fraction(i, n - 1) for i in range(n)] \
        if n > 1 else [lo]
    est = cap.greedy_cover(samples, args.epsilon, gauge)
    if not est.covers(samples):
        raise DomainError("greedy cover failed to cover its samples")
    obj = {"gauge": args.gauge, "sigma": args.sigma, "epsilon": args.epsilon,
           "points": n, "intervals": est.count, "gauge_sum": est.gauge_sum}
    if args.format == "json":
        _emit(args, _jdump(obj))
    else:
        _emit(args, _csv([(args.epsilon, est.count, est.gauge_sum)],
                         ["epsilon", "intervals", "gauge_sum"]))
    return EXIT_OK


# ---------------------------------------------------------------------------


def _add_common(p, fmt_default="json"):
    p.add_argument("--format", choices=("json", "csv"), default=fmt_default)
    p.add_argument("--output", default=None, help="write to file, not stdout")
    p.add_argument("--threads", type=int,
                   default=int(os.environ.get("DIOCAP_THREADS", "0")) or None,
                   help="worker threads (default: physical cores); results "
                        "do not depend on it")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="diocap",
        description="continued fractions, small-divisor series, capacity "
                    "kernels and discrete capacity estimates")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("expand", help="continued-fraction expansion")
    p.add_argument("--value", required=True,
                   help="named constant (golden, pi, pi-frac, e, e-frac), "
                        "rational p/q, or decimal literal")
    p.add_argument("--terms", type=int, required=True)
    p.add_argument("--bits", type=int, default=256)
    _add_common(p)
    p.set_defaults(fn=_cmd_expand)

    p = sub.add_parser("construct", help="growth-rule witness tables")
    p.add_argument("--rule", required=True,
                   help="golden | nonbrjuno-exp | nonpm-expexp | constant:c "
                        "| poly:d | exp-of-q:seed | expexp-of-q:seed")
    p.add_argument("--terms", type=int, required=True)
    _add_common(p)
    p.set_defaults(fn=_cmd_construct)

    p = sub.add_parser("series", help="small-divisor series with split report")
    p.add_argument("--kind", required=True,
                   choices=("brjuno", "pm", "lemma1", "lemma2"))
    p.add_argument("--rule", required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=0.1)
    _add_common(p)
    p.set_defaults(fn=_cmd_series)

    p = sub.add_parser("kernel", help="tabulate kernel values")
    p.add_argument("--family", choices=("K1", "K2"), required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--distances", required=True, help="comma-separated")
    _add_common(p, fmt_default="csv")
    p.set_defaults(fn=_cmd_kernel)

    p = sub.add_parser("gauge", help="tabulate gauge values")
    p.add_argument("--family", choices=("H1", "H2", "LINEAR"), required=True)
    p.add_argument("--sigma", type=float, default=3.0)
    p.add_argument("--t", required=True, help="comma-separated scales")
    _add_common(p, fmt_default="csv")
    p.set_defaults(fn=_cmd_gauge)

    p = sub.add_parser("measure", help="build the canonical measure")
    p.add_argument("--qmax", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--reduced", action="store_true")
    _add_common(p)
    p.set_defaults(fn=_cmd_measure)

    p = sub.add_parser("potential", help="potential sweep over q_max")
    p.add_argument("--alpha", required=True)
    p.add_argument("--qmax", type=int, default=None)
    p.add_argument("--qmax-sweep", dest="qmax_sweep", default=None,
                   help="lo:hi:x2 style geometric sweep")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--family", choices=("K1", "K2"), default="K1")
    p.add_argument("--bits", type=int, default=256)
    p.add_argument("--terms", type=int, default=40)
    p.add_argument("--reduced", action="store_true")
    p.add_argument("--tail", action="store_true",
                   help="include certified truncation tail bounds "
                        "(rational targets only)")
    _add_common(p, fmt_default="csv")
    p.set_defaults(fn=_cmd_potential)

    p = sub.add_parser("capacity", help="discrete capacity estimate")
    p.add_argument("--grid", type=int, required=True)
    p.add_argument("--lo", default="0")
    p.add_argument("--hi", default="1/4")
    p.add_argument("--family", choices=("K1", "K2"), default="K1")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--properties", action="store_true",
                   help="also run monotonicity/subadditivity checks")
    _add_common(p)
    p.set_defaults(fn=_cmd_capacity)

    p = sub.add_parser("cover", help="greedy gauge-cover estimate")
    p.add_argument("--points", type=int, required=True)
    p.add_argument("--lo", default="0")
    p.add_argument("--hi", default="1/2")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--gauge", choices=("H1", "H2", "LINEAR"), default="H1")
    p.add_argument("--sigma", type=float, default=3.0)
    _add_common(p)
    p.set_defaults(fn=_cmd_cover)

    return ap


def _apply_threads(threads) -> None:
    if not threads:
        return
    try:
        import numba
        numba.set_num_threads(max(1, min(threads, numba.config.NUMBA_NUM_THREADS)))
    except ImportError:
        pass


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if args.cmd == "potential" and not (args.qmax or args.qmax_sweep):
        print("error: potential needs --qmax or --qmax-sweep", file=sys.stderr)
        return EXIT_USAGE
    _apply_threads(args.threads)
    try:
        return args.fn(args)
    except (DomainError, PrecisionExhausted, RationalInput,
            InsufficientTable, Undecidable, IncompatibleClamp) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except DiocapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
