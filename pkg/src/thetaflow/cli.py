"""Command-line front end: ``thetaflow eval | flow | check``.

Complex numbers are written as "re,im" pairs (a bare real is accepted).
Values starting with a minus sign must be attached with "=", for example
``--tau=-0.5,1``.

Exit codes: 0 success, 1 internal error, 2 usage error, 3 domain error or
step underflow, 4 domain escape, 5 failed check, 6 output not writable.
"""

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import checks
from .conserved import invariant_columns
from .elliptic import hyp2f1, legendre_quad
from .errors import DomainEscape, StepUnderflow, ThetaFlowError
from .flows import SystemId, SystemState
from .integrate import PathSegment, integrate
from .qseries import Moebius, closed_form_state, modular_forms, theta_quad
from .suites import DEFAULT_REGION, DEFAULT_SEED, SUITES, RunConfig, run_suite

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_DOMAIN, EXIT_ESCAPE, EXIT_CHECK, EXIT_IO = range(7)
CLOSED_FORM_TOL = 1e-8


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def parse_complex(text):
    parts = str(text).split(",")
    try:
        if len(parts) == 1:
            z = complex(float(parts[0]), 0.0)
        elif len(parts) == 2:
            z = complex(float(parts[0]), float(parts[1]))
        else:
            raise ValueError
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}") from None
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise argparse.ArgumentTypeError(f"non-finite value {text!r}")
    return z


def parse_state(text):
    items = [p for p in str(text).split(";") if p.strip()]
    if not items:
        raise argparse.ArgumentTypeError("empty state")
    return [parse_complex(p) for p in items]


def parse_reals(n):
    def parse(text):
        parts = str(text).split(",")
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected {n} comma-separated reals") from None
        if len(vals) != n or not all(math.isfinite(v) for v in vals):
            raise argparse.ArgumentTypeError(f"expected {n} finite comma-separated reals")
        return vals
    return parse


def parse_threshold(text):
    name, sep, val = str(text).partition("=")
    try:
        v = float(val)
    except ValueError:
        v = float("nan")
    if not sep or not name or not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError("expected NAME=positive_value")
    return name, v


def positive_int(text):
    try:
        v = int(text, 0)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1 or v > 100000:
        raise argparse.ArgumentTypeError("expected an integer in 1..100000")
    return v


def seed_int(text):
    try:
        v = int(text, 0)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def tolerance(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 1e-13 <= v <= 1e-6:
        raise argparse.ArgumentTypeError("tolerance must lie in [1e-13, 1e-6]")
    return v


_GLOBAL_DEFAULTS = {"seed": DEFAULT_SEED, "rtol": 1e-10, "atol": 1e-12, "format": None,
                    "out": None}


def _add_globals(p, suppress):
    d = (lambda k: argparse.SUPPRESS) if suppress else (lambda k: _GLOBAL_DEFAULTS[k])
    p.add_argument("--seed", type=seed_int, default=d("seed"),
                   help="random seed (default 0xD1CE)")
    p.add_argument("--rtol", type=tolerance, default=d("rtol"), help="relative tolerance")
    p.add_argument("--atol", type=tolerance, default=d("atol"), help="absolute tolerance")
    p.add_argument("--format", choices=("csv", "json"), default=d("format"))
    p.add_argument("--out", default=d("out"), help="output file (default stdout)")


def build_parser():
    p = _Parser(prog="thetaflow", description=__doc__.split("\n")[0])
    _add_globals(p, suppress=False)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    ev = sub.add_parser("eval", help="evaluate special functions")
    _add_globals(ev, suppress=True)
    evs = ev.add_subparsers(dest="what", parser_class=_Parser)
    evs.required = True
    th = evs.add_parser("theta", help="theta-constants and eta")
    _add_globals(th, suppress=True)
    th.add_argument("--tau", type=parse_complex, required=True)
    th.add_argument("--order", type=int, choices=range(4), default=0)
    el = evs.add_parser("elliptic", help="K, K', E, E' at modulus k")
    _add_globals(el, suppress=True)
    el.add_argument("--k", type=parse_complex, required=True)
    hy = evs.add_parser("hyp2f1", help="Gauss hypergeometric function")
    _add_globals(hy, suppress=True)
    for name in ("a", "b", "c", "s"):
        hy.add_argument(f"--{name}", type=parse_complex, required=True)
    hy.add_argument("--side", type=int, choices=(-1, 1), default=None,
                    help="side of the cut [1, inf)")
    fm = evs.add_parser("forms", help="g2, g3 and Eisenstein series")
    _add_globals(fm, suppress=True)
    fm.add_argument("--tau", type=parse_complex, required=True)

    fl = sub.add_parser("flow", help="integrate a system along a straight path")
    _add_globals(fl, suppress=True)
    fl.add_argument("system", help="system tag, e.g. Canonical19")
    fl.add_argument("--params", type=parse_reals(3), default=None,
                    help="a,b,c for HalphenBrioschi57")
    src = fl.add_mutually_exclusive_group(required=True)
    src.add_argument("--state", type=parse_state, help="initial state 're,im;re,im;...'")
    src.add_argument("--from-theta", type=parse_complex, dest="from_theta", metavar="TAU",
                     help="closed-form initial state at TAU")
    fl.add_argument("--moebius", type=parse_reals(4), default=[1, 0, 0, 1],
                    help="alpha,beta,gamma,delta for --from-theta")
    fl.add_argument("--eps", type=parse_complex, default=None,
                    help="x scale for Canonical19 (0 selects the elementary family)")
    fl.add_argument("--I", type=parse_complex, dest="I", default=None,
                    help="integral I for Jacobi9 closed forms")
    fl.add_argument("--sign", type=int, choices=(-1, 1), default=None)
    fl.add_argument("--t0", type=parse_complex, default=None,
                    help="start time (default: the --from-theta point)")
    fl.add_argument("--t1", type=parse_complex, required=True)
    fl.add_argument("--min-samples", type=positive_int, default=64, dest="min_samples")
    fl.add_argument("--verify-closed-form", action="store_true", dest="verify")

    ck = sub.add_parser("check", help="run a verification suite")
    _add_globals(ck, suppress=True)
    ck.add_argument("suite", choices=SUITES)
    ck.add_argument("--samples", type=positive_int, default=20)
    ck.add_argument("--workers", type=positive_int, default=1)
    ck.add_argument("--threshold", type=parse_threshold, action="append", default=[],
                    help="override an identity threshold, NAME=VALUE")
    ck.add_argument("--region", type=parse_reals(4), default=list(DEFAULT_REGION),
                    help="re0,re1,im0,im1 of the sampling rectangle")
    return p


# ---------------------------------------------------------------------------
# Formatting

def _num(x):
    return float(f"{x:.15g}")


def _cjson(z):
    z = complex(z)
    return [_num(z.real), _num(z.imag)]


def _emit(text, args):
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _values_text(pairs, fmt):
    if fmt == "json":
        return json.dumps({k: _cjson(v) if isinstance(v, complex) else _num(v)
                           for k, v in pairs}, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "re", "im"])
    for k, v in pairs:
        v = complex(v)
        w.writerow([k, f"{v.real:.15g}", f"{v.imag:.15g}"])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Commands

def cmd_eval(args):
    if args.what == "theta":
        tq = theta_quad(args.tau, args.order)
        names = ("theta2", "theta3", "theta4", "eta")
        pairs = list(zip(names, map(complex, tq.values)))
        for n in range(1, args.order + 1):
            pairs += [(f"d{n}_{nm}", complex(v)) for nm, v in zip(names, tq.d(n))]
        t2, t3, t4, _ = tq.values
        pairs.append(("jacobi_identity_residual", float(abs(t3 ** 4 - t2 ** 4 - t4 ** 4))))
    elif args.what == "elliptic":
        lq = legendre_quad(args.k)
        pairs = [("K", lq.K), ("Kprime", lq.Kprime), ("E", lq.E), ("Eprime", lq.Eprime),
                 ("legendre_relation", lq.legendre_relation())]
    elif args.what == "hyp2f1":
        pairs = [("hyp2f1", hyp2f1(args.a, args.b, args.c, args.s, args.side))]
    else:
        mf = modular_forms(theta_quad(args.tau))
        pairs = [(k, getattr(mf, k)) for k in ("g2_sym", "g3_sym", "g2", "g3", "E2", "E4", "E6")]
    pairs = [(k, complex(v) if not isinstance(v, float) else v) for k, v in pairs]
    _emit(_values_text(pairs, args.format or "csv"), args)
    return EXIT_OK


def _initial_state(args):
    params = tuple(args.params) if args.params else ()
    system = SystemId.parse(args.system, params)
    if args.from_theta is not None:
        m = Moebius(*args.moebius)
        tau = args.from_theta

        def closed(t):
            return closed_form_state(system, t, m, eps=args.eps, I=args.I, sign=args.sign)
        t0 = tau if args.t0 is None else args.t0
        return closed(t0), t0, closed
    if args.t0 is None:
        raise UsageError("thetaflow flow: error: --t0 is required with --state")
    t = args.t0 if system.tag == "LegendreClosure28" else None
    if system.tag == "LegendreClosure28":
        return SystemState(system, args.state, t), args.t0, None
    return SystemState(system, args.state), args.t0, None


def cmd_flow(args):
    init, t0, closed = _initial_state(args)
    if args.verify and closed is None:
        raise UsageError("thetaflow flow: error: --verify-closed-form needs --from-theta")
    tr = integrate(init, PathSegment(t0, args.t1), args.rtol, args.atol, args.min_samples)
    inv = {}
    try:
        inv = invariant_columns(tr)
    except ThetaFlowError:
        inv = {}
    comps = tr.system.components
    header = ["index", "t_re", "t_im"]
    for c in comps:
        header += [f"{c}_re", f"{c}_im"]
    for k in inv:
        header += [f"{k}_re", f"{k}_im"]
    header.append("local_error")
    dev = None
    if args.verify:
        dev = np.array([np.max(np.abs(closed(t).v - v)) / max(1.0, np.max(np.abs(v)))
                        for t, v in zip(tr.t, tr.states)])
        header.append("closed_form_deviation")
    rows = []
    for i in range(len(tr)):
        row = [i, tr.t[i].real, tr.t[i].imag]
        for v in tr.states[i]:
            row += [v.real, v.imag]
        for col in inv.values():
            row += [col[i].real, col[i].imag]
        row.append(tr.errors[i])
        if dev is not None:
            row.append(dev[i])
        rows.append(row)
    fmt = args.format or "csv"
    if fmt == "json":
        data = {"system": str(tr.system), "columns": header,
                "rows": [[r[0]] + [_num(x) for x in r[1:]] for r in rows]}
        text = json.dumps(data, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([r[0]] + [f"{x:.17g}" for x in r[1:]])
        text = buf.getvalue()
    _emit(text, args)
    drift = {k: float(np.max(np.abs(c - c[0])) / max(abs(c[0]), 1e-300))
             for k, c in inv.items() if np.all(np.isfinite(c))}
    msg = f"{tr.system}: {len(tr)} samples, {tr.stats.accepted} steps"
    if drift:
        msg += ", max drift " + ", ".join(f"{k} {v:.2e}" for k, v in drift.items())
    if dev is not None:
        worst = float(np.max(dev))
        msg += f", closed-form max deviation {worst:.3e}"
        print(msg, file=sys.stderr)
        return EXIT_OK if worst < CLOSED_FORM_TOL else EXIT_CHECK
    print(msg, file=sys.stderr)
    return EXIT_OK


def cmd_check(args):
    cfg = RunConfig(seed=args.seed, rtol=args.rtol, atol=args.atol, samples=args.samples,
                    region=tuple(args.region), thresholds=dict(args.threshold),
                    workers=args.workers)
    rows = run_suite(args.suite, cfg)
    fmt = args.format or "json"
    if fmt == "json":
        text = json.dumps([r.to_dict() for r in rows], indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "residual", "threshold", "pass", "gating", "detail"])
        for r in rows:
            w.writerow([r.check, f"{r.residual:.6e}", f"{r.threshold:.1e}", int(r.passed),
                        int(r.gating), r.detail])
        text = buf.getvalue()
    _emit(text, args)
    ok = checks.all_passed(rows)
    npass = sum(r.passed for r in rows if r.gating)
    ngate = sum(r.gating for r in rows)
    print(f"check {args.suite}: {npass}/{ngate} gating checks passed, "
          f"{len(rows) - ngate} informational (seed {args.seed:#x})", file=sys.stderr)
    return EXIT_OK if ok else EXIT_CHECK


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        for k, v in _GLOBAL_DEFAULTS.items():
            if not hasattr(args, k):
                setattr(args, k, v)
        cmd = {"eval": cmd_eval, "flow": cmd_flow, "check": cmd_check}[args.command]
        return cmd(args)
    except UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    except DomainEscape as exc:
        where = f" (last good t = {exc.last_t})" if exc.last_t is not None else ""
        print(f"DomainEscape: {exc}{where}", file=sys.stderr)
        return EXIT_ESCAPE
    except StepUnderflow as exc:
        where = f" (last good t = {exc.last_t})" if exc.last_t is not None else ""
        print(f"StepUnderflow: {exc}{where}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ThetaFlowError, ValueError, ArithmeticError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # pragma: no cover - last-resort guard
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
