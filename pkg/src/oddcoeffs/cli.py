"""Command-line interface: ``oddcoeffs <command> [options]``.

Exit codes: 0 success, 1 validation or suite failure, 2 method not
applicable (or bad usage), 3 resource limit.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Sequence

import mpmath

from . import __version__
from .automaton import Automaton, build, evaluate, validate
from .catalog import (PRESET_NAMES, SuiteReport, run_digitsum_suite, run_dispersion_suite,
                      run_extreme_suite, run_recursion_suite, run_stern_suite, stern_table,
                      stern_v, suites_for)
from .errors import (OddCoeffsError, RankConditionError, ResourceLimitError, ValidationError,
                     ZeroCornerError)
from .gf2poly import RecurrenceSpec, odd_count
from .lyapunov import (DEFAULT_K_MAX, LyapunovEstimate, closed_series_trinomial, empirical_mean,
                       find_coordinate_change, monte_carlo, moshe_series, wynn_epsilon)
from .presets import automaton_for, preset
from .spectral import (avg_growth_exponent, char_poly, kronecker_mixture, mixture_sum,
                       variance_exponent, verify_min_poly, verify_variance_poly)

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_INAPPLICABLE, EXIT_LIMIT = 0, 1, 2, 3
THREADS_ENV = "ODDCOEFFS_THREADS"


class Target:
    """A preset or an inline spec, with its automaton built lazily."""

    def __init__(self, name: str | None, spec: RecurrenceSpec):
        self.name = name
        self.spec = spec
        self._automaton: Automaton | None = None

    @property
    def automaton(self) -> Automaton:
        if self._automaton is None:
            self._automaton = automaton_for(self.name) if self.name else build(self.spec)
        return self._automaton

    def describe(self) -> dict:
        return {"preset": self.name, "spec": self.spec.to_dict()}


def _target(args) -> Target:
    chosen = sum(bool(x) for x in (args.preset, args.poly, args.order2))
    if chosen != 1:
        raise SystemExit(_usage("give exactly one of --preset, --poly or --order2"))
    if args.preset:
        return Target(args.preset, preset(args.preset).spec)
    if args.poly:
        return Target(None, RecurrenceSpec.first_order(args.poly, args.ell))
    missing = [f for f in ("q1", "q2", "p0", "p1", "ell") if getattr(args, f) is None]
    if missing:
        raise SystemExit(_usage("--order2 needs " + ", ".join("--" + m for m in missing)))
    return Target(None, RecurrenceSpec.second_order(args.q1, args.q2, args.p0, args.p1, args.ell))


def _usage(msg: str) -> int:
    print(f"oddcoeffs: error: {msg}", file=sys.stderr)
    return EXIT_INAPPLICABLE


def _config(args) -> dict:
    skip = {"func", "format"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(args, result: dict, text: str | None = None, rows: list[dict] | None = None) -> None:
    if args.format == "json":
        doc = {"schema": SCHEMA, "version": __version__, "command": args.command,
               "config": _config(args), "result": result}
        print(json.dumps(doc, indent=2, default=_jsonable))
    elif args.format == "tsv" and rows is not None:
        _print_tsv(rows)
    else:
        print(text if text is not None else json.dumps(result, indent=2, default=_jsonable))


def _jsonable(x):
    if hasattr(x, "to_dict"):
        return x.to_dict()
    try:
        return float(x)
    except (TypeError, ValueError):
        return str(x)


def _print_tsv(rows: list[dict]) -> None:
    if not rows:
        return
    keys = list(rows[0])
    print("\t".join(keys))
    for r in rows:
        print("\t".join(_cell(r[k]) for k in keys))


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _reference(target: Target, n_max: int):
    return stern_table(n_max) if target.name == "stern" else None


# commands ----------------------------------------------------------------

def cmd_synth(args) -> int:
    t = _target(args)
    a = t.automaton
    result = {"target": t.describe(), "automaton": a.to_dict()}
    code = EXIT_OK
    if args.check:
        rep = validate(a, t.spec, args.n_max, reference=_reference(t, args.n_max),
                       raise_on_failure=False)
        result["check"] = rep.to_dict()
        code = EXIT_OK if rep.passed else EXIT_FAIL
    text = a.to_json(indent=2)
    if args.check:
        text += f"\ncheck {'passed' if code == EXIT_OK else 'FAILED'} for n <= {args.n_max}"
    _emit(args, result, text)
    return code


def cmd_count(args) -> int:
    t = _target(args)
    if args.range:
        lo, hi = args.range
    elif args.n is not None:
        lo = hi = args.n
    else:
        return _usage("count needs N or --range A B")
    if lo < 0 or hi < lo:
        return _usage("need 0 <= A <= B")
    a = t.automaton
    rows, code = [], EXIT_OK
    for n in range(lo, hi + 1):
        row = {"n": n, "count": evaluate(a, n)}
        if args.oracle:
            ref = stern_v(n) if t.name == "stern" else odd_count(t.spec, n)
            row["oracle"] = ref
            if ref != row["count"]:
                code = EXIT_FAIL
        rows.append(row)
    if args.format == "text":
        text = "\n".join(f"{r['n']}\t{r['count']}" + (f"\t{r['oracle']}" if "oracle" in r else "")
                         for r in rows)
    else:
        text = None
    _emit(args, {"target": t.describe(), "values": rows,
                 "oracle_agrees": code == EXIT_OK if args.oracle else None}, text, rows)
    if code:
        print("oddcoeffs: automaton disagrees with the oracle", file=sys.stderr)
    return code


def cmd_exponents(args) -> int:
    t = _target(args)
    a = t.automaton
    avg = mpmath.nstr(avg_growth_exponent(a), 25)
    var = mpmath.nstr(variance_exponent(a), 25)
    result = {"target": t.describe(), "m": a.m,
              "avg_growth_exponent": avg,
              "variance_exponent": var,
              "char_poly_sum": list(char_poly(mixture_sum(a)).coeffs),
              "char_poly_kronecker": list(char_poly(kronecker_mixture(a)).coeffs)}
    checks = {}
    if t.name:
        c = preset(t.name).constants
        for label, poly in (("perron_poly", c.perron_poly), ("growth_min_poly", c.growth_min_poly)):
            if poly:
                checks[label] = verify_min_poly(a, poly)
        if c.variance_min_poly:
            checks["variance_min_poly"] = verify_variance_poly(a, c.variance_min_poly)
        if c.avg_exponent_text:
            checks["avg_exponent_matches"] = abs(float(avg) - c.avg_exponent) <= 1e-12
    result["checks"] = checks
    code = EXIT_OK if all(checks.values()) else EXIT_FAIL
    text = "\n".join([f"m\t{a.m}", f"avg_growth_exponent\t{avg}", f"variance_exponent\t{var}"]
                     + [f"{k}\t{'ok' if v else 'FAILED'}" for k, v in checks.items()])
    _emit(args, result, text, [{"quantity": "avg_growth_exponent", "value": avg},
                               {"quantity": "variance_exponent", "value": var}])
    return code


def _estimate(t: Target, method: str, args) -> LyapunovEstimate:
    a = t.automaton
    if method == "closed":
        if t.name != "trinomial":
            raise RankConditionError("the closed series is only available for the trinomial")
        return closed_series_trinomial(args.k_max or 60, cc=find_coordinate_change(a))
    if method == "series":
        cc = find_coordinate_change(a)
        return moshe_series(cc, args.k_max, strict=args.strict)
    if method == "mc":
        return monte_carlo(a, k=args.k or 10_000, samples=args.samples, seed=args.seed,
                           workers=args.threads)
    if method == "mean":
        return empirical_mean(a, args.K)
    raise ValueError(method)


def cmd_lyapunov(args) -> int:
    t = _target(args)
    try:
        est = _estimate(t, args.method, args)
    except RankConditionError as exc:
        print(f"oddcoeffs: {exc}", file=sys.stderr)
        return EXIT_INAPPLICABLE
    except ZeroCornerError as exc:
        print(f"oddcoeffs: {exc} (rerun without --strict to skip such terms)", file=sys.stderr)
        return EXIT_FAIL
    if args.trace:
        _write_trace(args.trace, est)
    result = {"target": t.describe(), "estimate": est.to_dict()}
    if t.name and preset(t.name).constants.lam is not None:
        result["published_lambda"] = preset(t.name).constants.lam
    text = f"lambda\t{est.lam!r}\nexponent\t{est.exponent!r}\nmethod\t{est.method}"
    if est.stderr is not None:
        text += f"\nstderr\t{est.stderr!r}"
    _emit(args, result, text, [{"lambda": est.lam, "exponent": est.exponent,
                                "method": est.method, "horizon": est.horizon,
                                "stderr": est.stderr}])
    return EXIT_OK


def _write_trace(path: str, est: LyapunovEstimate) -> None:
    """TSV of ``k, S_k`` and the Wynn estimate built from ``S_1 .. S_k``."""
    partial = est.diagnostics.get("partial_sums")
    if partial is None:
        raise SystemExit(_usage("--trace needs a series method"))
    lines = ["k\tS_k\taccelerated_k"]
    for k, s in enumerate(partial, start=1):
        acc = wynn_epsilon(partial[:k]).value if k >= 3 else s
        lines.append(f"{k}\t{s!r}\t{acc!r}")
    out = "\n".join(lines) + "\n"
    if path == "-":
        sys.stderr.write(out)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(out)


_SUITES = {
    "recursion": lambda name, args: run_recursion_suite(name, args.n_max),
    "extreme": lambda name, args: run_extreme_suite(name, args.k_max or 30),
    "digitsum": lambda name, args: run_digitsum_suite(min(args.n_max, 1 << 16)),
    "dispersion": lambda name, args: run_dispersion_suite(name, args.K),
    "stern": lambda name, args: run_stern_suite(),
}


def cmd_identities(args) -> int:
    if args.suite == "all":
        if not args.preset:
            return _usage("--suite all needs --preset")
        reports = [f() for f in suites_for(args.preset)]
    else:
        if args.suite not in ("digitsum", "stern") and not args.preset:
            return _usage(f"--suite {args.suite} needs --preset")
        try:
            reports = [_SUITES[args.suite](args.preset, args)]
        except ValueError as exc:
            return _usage(str(exc))
    ok = all(r.passed for r in reports)
    text = "\n".join(_suite_line(r) for r in reports) or "no suites apply"
    _emit(args, {"reports": [r.to_dict() for r in reports], "passed": ok}, text,
          [{"suite": r.suite, "preset": r.preset, "checked": r.checked, "passed": r.passed}
           for r in reports])
    return EXIT_OK if ok else EXIT_FAIL


def _suite_line(r: SuiteReport) -> str:
    status = "pass" if r.passed else "FAIL"
    line = f"{r.suite}\t{r.preset or '-'}\t{r.checked} checks\t{status}"
    if r.failures:
        line += "\t" + json.dumps(r.failures[0])
    return line


def _lambda_for(name: str, args) -> tuple[float | None, str | None, float | None]:
    a = automaton_for(name)
    try:
        cc = find_coordinate_change(a)
    except RankConditionError:
        est = monte_carlo(a, k=args.k or 10_000, samples=args.samples, seed=args.seed,
                          workers=args.threads)
        return est.lam, "monte_carlo", est.stderr
    k_max = args.k_max or DEFAULT_K_MAX.get(cc.q, 20)
    est = moshe_series(cc, k_max)
    return est.lam, "word_series_wynn", None


def cmd_report(args) -> int:
    names = list(PRESET_NAMES) if args.all else (args.presets or [])
    if not names:
        return _usage("report needs --all or at least one preset name")
    for n in names:
        preset(n)
    rows = []
    for name in names:
        a = automaton_for(name)
        lam, method, se = _lambda_for(name, args)
        suites = [f() for f in suites_for(name)] if not args.no_suites else []
        rows.append({"preset": name, "m": a.m,
                     "avg_growth_exponent": float(avg_growth_exponent(a)),
                     "lambda": lam, "lambda_method": method, "lambda_stderr": se,
                     "typical_exponent": lam / math.log(2) if lam is not None else None,
                     "variance_exponent": float(variance_exponent(a)),
                     "suites": ("skipped" if not suites else
                                "pass" if all(s.passed for s in suites) else "FAIL"),
                     "suite_count": len(suites),
                     "oeis": ",".join(preset(name).constants.oeis_ids)})
    ok = all(r["suites"] != "FAIL" for r in rows)
    _emit(args, {"rows": rows, "passed": ok}, _render_table(rows), rows)
    return EXIT_OK if ok else EXIT_FAIL


def _render_table(rows: list[dict]) -> str:
    head = f"{'preset':<13}{'m':>3}  {'avg exp':<18}{'lambda':<20}{'method':<18}{'var exp':<18}suites"
    out = [head, "-" * len(head)]
    for r in rows:
        out.append(f"{r['preset']:<13}{r['m']:>3}  {r['avg_growth_exponent']:<18.15f}"
                   f"{r['lambda']:<20.15f}{r['lambda_method']:<18}"
                   f"{r['variance_exponent']:<18.15f}{r['suites']} ({r['suite_count']})")
    return "\n".join(out)


# parser -------------------------------------------------------------------

def _spec_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("target")
    g.add_argument("--preset", choices=PRESET_NAMES, help="named sequence")
    g.add_argument("--poly", help="order-1 multiplier q, coefficients low to high, e.g. 1,1,0,1")
    g.add_argument("--order2", action="store_true", help="order-2 rule given by --q1 --q2 --p0 --p1")
    g.add_argument("--q1")
    g.add_argument("--q2")
    g.add_argument("--p0")
    g.add_argument("--p1")
    g.add_argument("--ell", type=int, help="window width (default deg q)")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("json", "tsv", "text"), default="text")
    p.add_argument("--n-max", type=int, default=1 << 14, help="oracle range (default 2^14)")
    p.add_argument("--k-max", type=int, default=None,
                   help="series word length; default per q: " + str(DEFAULT_K_MAX))
    p.add_argument("--K", type=int, default=20, help="empirical range n < 2^K (default 20)")
    p.add_argument("--k", type=int, default=None, help="Monte Carlo product length (default 10000)")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=int(os.environ.get(THREADS_ENV, "1")),
                   help=f"worker threads (default ${THREADS_ENV} or 1)")
    p.add_argument("--strict", action=argparse.BooleanOptionalAction, default=True,
                   help="fail on a zero corner entry instead of skipping it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oddcoeffs",
                                     description="Odd coefficients of polynomial powers")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="build the linear representation")
    _spec_options(p)
    _common(p)
    p.add_argument("--check", action="store_true", help="validate against the oracle first")
    p.set_defaults(func=cmd_synth, format="json")

    p = sub.add_parser("count", help="odd-coefficient counts")
    _spec_options(p)
    _common(p)
    p.add_argument("n", nargs="?", type=int)
    p.add_argument("--range", nargs=2, type=int, metavar=("A", "B"))
    p.add_argument("--oracle", action="store_true", help="cross-check with the GF(2) oracle")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("exponents", help="average-growth and variance exponents")
    _spec_options(p)
    _common(p)
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser("lyapunov", help="typical-growth (Lyapunov) exponent")
    _spec_options(p)
    _common(p)
    p.add_argument("--method", choices=("series", "closed", "mc", "mean"), default="series")
    p.add_argument("--trace", metavar="PATH", help="write partial sums as TSV ('-' for stderr)")
    p.set_defaults(func=cmd_lyapunov)

    p = sub.add_parser("identities", help="run identity suites")
    _spec_options(p)
    _common(p)
    p.add_argument("--suite", choices=(*_SUITES, "all"), default="all")
    p.set_defaults(func=cmd_identities, n_max=1 << 12)

    p = sub.add_parser("report", help="consolidated constants table")
    _common(p)
    p.add_argument("presets", nargs="*", metavar="PRESET", help="preset names")
    p.add_argument("--all", action="store_true")
    p.add_argument("--no-suites", action="store_true", help="skip the identity suites")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"oddcoeffs: validation failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ResourceLimitError, OverflowError) as exc:
        print(f"oddcoeffs: resource limit: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except OddCoeffsError as exc:
        print(f"oddcoeffs: {exc}", file=sys.stderr)
        return EXIT_INAPPLICABLE
    except ValueError as exc:
        print(f"oddcoeffs: {exc}", file=sys.stderr)
        return EXIT_INAPPLICABLE


if __name__ == "__main__":
    sys.exit(main())
