"""Command-line front end: one subcommand per operation, CSV or JSON out.

Exit codes: 0 success, 2 invalid input, 1 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import sys
import time
from fractions import Fraction

from . import __version__
from ._numeric import ValidationError, as_fraction, fmt_real

CIRCLE_DEFAULT = "-1/2,1/2"
LOG_DEFAULT = "1,2"


# --------------------------------------------------------------------------
# grids


def _power_grid(text: str) -> list:
    """``2^a..2^b`` in the order written, exact Fractions."""
    lhs, rhs = text.split("..")
    b1, e1 = lhs.split("^")
    b2, e2 = rhs.split("^")
    if int(b1) != int(b2):
        raise ValidationError(f"grid {text!r} mixes bases")
    base, e1, e2 = int(b1), int(e1), int(e2)
    step = 1 if e2 >= e1 else -1
    return [Fraction(base) ** e for e in range(e1, e2 + step, step)]


def parse_grid(text: str) -> list:
    """Expand ``2^a..2^b``, ``start:stop:step`` (stop included) or ``x,y,z``."""
    text = str(text).strip()
    try:
        if ".." in text:
            return _power_grid(text)
        if ":" in text:
            parts = [as_fraction(p) for p in text.split(":")]
            if len(parts) == 2:
                parts.append(Fraction(1))
            start, stop, step = parts
            if step <= 0 or stop < start:
                raise ValidationError(f"grid {text!r} needs step > 0 and stop >= start")
            n = math.floor((stop - start) / step)
            return [start + k * step for k in range(n + 1)]
        return [as_fraction(p) for p in text.split(",") if p.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"cannot parse grid {text!r}") from exc


def _int_grid(text: str) -> list:
    vals = parse_grid(text)
    if any(v.denominator != 1 for v in vals):
        raise ValidationError(f"grid {text!r} must contain integers")
    return [int(v) for v in vals]


# --------------------------------------------------------------------------
# output


def _cell(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, int):
        return str(v)
    if isinstance(v, (float, Fraction)):
        return fmt_real(float(v))
    return str(v)


def _json_cell(v):
    if isinstance(v, bool) or isinstance(v, int) or isinstance(v, str):
        return v
    x = float(v)
    return x if math.isfinite(x) else str(x)


def render(columns: list, rows: list, fmt: str) -> str:
    if fmt == "json":
        data = [{c: _json_cell(r[c]) for c in columns} for r in rows]
        return json.dumps({"columns": columns, "rows": data}, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r[c]) for c in columns])
    return buf.getvalue()


# --------------------------------------------------------------------------
# commands


def _curve(args):
    from .curves import make_builtin

    iv = args.interval
    if iv is None:
        name = args.curve.split(":")[0]
        iv = {"circle-arc": CIRCLE_DEFAULT, "log": LOG_DEFAULT}.get(name, "0,1")
    return make_builtin(args.curve, iv)


def _psi(args):
    from .metric import ApproxFunction

    return ApproxFunction.parse(args.psi, relaxed=getattr(args, "relaxed", False))


def _ms(t0):
    return (time.perf_counter() - t0) * 1000.0


def cmd_count(args, tilde=False):
    from .counting import count_N, count_N_tilde

    fn = count_N_tilde if tilde else count_N
    t0 = time.perf_counter()
    res = fn(_curve(args), args.Q, as_fraction(args.delta), method=args.method,
             threads=args.threads, points=bool(args.points))
    if args.points:
        with open(args.points, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["a", "q", "dist"])
            for a, q, d in res.points:
                w.writerow([a, q, fmt_real(float(d))])
    row = {"Q": args.Q, "delta": as_fraction(args.delta), "count": res.count,
           "ambiguous": res.ambiguous, "elapsed_ms": _ms(t0)}
    return ["Q", "delta", "count", "ambiguous", "elapsed_ms"], [row]


def cmd_count_nf(args):
    from .counting import count_Nf

    t0 = time.perf_counter()
    res = count_Nf(_curve(args), _psi(args), args.Q, method=args.method, threads=args.threads)
    row = {"Q": args.Q, "psi_Q": res.extra["psi_Q"], "count": res.count,
           "majorant_count": res.extra["majorant"], "ambiguous": res.ambiguous,
           "elapsed_ms": _ms(t0)}
    return ["Q", "psi_Q", "count", "majorant_count", "ambiguous", "elapsed_ms"], [row]


def cmd_coprime(args):
    from .counting import count_coprime_triples

    t0 = time.perf_counter()
    res = count_coprime_triples(_curve(args), args.R, as_fraction(args.Psi),
                                method=args.method, threads=args.threads)
    row = {"R": args.R, "Psi": as_fraction(args.Psi), "count": res.count,
           "double_sum": res.extra["double_sum"], "elapsed_ms": _ms(t0)}
    return ["R", "Psi", "count", "double_sum", "elapsed_ms"], [row]


def cmd_envelope(args):
    from .counting import bound_envelope

    Qs = _int_grid(args.Q_grid)
    ds = parse_grid(args.delta_grid)
    grid = [(Q, d) for Q in Qs for d in ds]
    rows = bound_envelope(_curve(args), grid, eps=args.eps, theta=args.theta,
                          method=args.method, threads=args.threads)
    return ["Q", "delta", "count", "thm1_rhs", "thm4_rhs", "ratio1", "ratio4"], rows


_LAMBDA_COLS = ["j", "h", "beta", "phi", "lambda"]


def cmd_dual(args):
    from .dual import build_dual, lambda_record, lambda_records

    d = build_dual(_curve(args))
    recs = [lambda_record(d, args.j, args.h)] if args.h is not None else lambda_records(d, args.j)
    rows = [{"j": r.j, "h": r.h, "beta": r.beta_h, "phi": r.phi_h, "lambda": r.lambda_h}
            for r in recs]
    return _LAMBDA_COLS, rows


def cmd_lambda(args):
    from .dual import build_dual, lambda_table

    t = lambda_table(build_dual(_curve(args)), args.J)
    rows = [{"j": int(j), "h": int(h), "beta": b, "phi": p, "lambda": l}
            for j, h, b, p, l in zip(t["j"], t["h"], t["beta"], t["phi"], t["lambda"])]
    return _LAMBDA_COLS, rows


def cmd_lemma23(args):
    from .dual import build_dual, lemma23_sums

    s = lemma23_sums(build_dual(_curve(args)), args.J, args.Q, eps=args.eps)
    cols = ["J", "Q", "S5", "S6", "S7", "rhs5", "rhs6", "rhs7"]
    return cols, [{c: getattr(s, c) for c in cols}]


def cmd_fejer(args):
    import numpy as np

    from .fejer import eval_kernel, fourier_identity_check, kernel_order, lower_bound_check
    from .fejer import near_integer_grid

    J = kernel_order(args.delta)
    grid = np.linspace(-2.0, 2.0, args.grid)
    Js = sorted({1, 2, 3, J, *[2 ** k for k in range(int(math.log2(args.J_max)) + 1)]})
    Js = [j for j in Js if j <= args.J_max] or [J]
    lo = min(float(np.min(eval_kernel(j, grid))) for j in Js)
    hi = max(float(np.max(eval_kernel(j, grid))) for j in Js)
    fe = max(fourier_identity_check(j, grid) for j in Js)
    lb = lower_bound_check(args.delta, near_integer_grid(args.delta, args.grid))
    rows = [
        {"check": "range", "status": "PASS" if lo >= 0 and hi <= 1 else "FAIL",
         "value": lo if lo < 0 else hi, "bound": 1.0},
        {"check": "fourier", "status": "PASS" if fe <= 1e-10 else "FAIL", "value": fe,
         "bound": 1e-10},
        {"check": "lower_bound", "status": "PASS" if lb.holds else "FAIL",
         "value": lb.min_value, "bound": lb.claimed_floor},
        {"check": "lower_bound_squared", "status": "PASS" if lb.holds_squared else "FAIL",
         "value": lb.min_value, "bound": lb.squared_floor},
    ]
    return ["check", "status", "value", "bound"], rows


def cmd_majorant(args):
    from .fejer import majorant_chain

    r = majorant_chain(_curve(args), args.Q, as_fraction(args.delta), method=args.method,
                       threads=args.threads)
    row = {"Q": r.Q, "delta": as_fraction(args.delta), "N_tilde": r.N_tilde,
           "majorant": r.majorant, "slack": r.slack}
    return ["Q", "delta", "N_tilde", "majorant", "slack"], [row]


def cmd_sigma(args):
    from .metric import enumerate_sigma

    b = enumerate_sigma(_curve(args), _psi(args), args.n)
    rows = [{"n": b.n, "q": s.q, "p1": s.p1, "p2": s.p2, "lo": s.lo, "hi": s.hi,
             "length": s.length} for s in b.intervals]
    return ["n", "q", "p1", "p2", "lo", "hi", "length"], rows


def cmd_step4(args):
    from .metric import step4_card_check

    rows = step4_card_check(_curve(args), _psi(args), _int_grid(args.n_range))
    return ["n", "card", "rhs", "ratio"], [vars(r) for r in rows]


def cmd_khinchin(args):
    from .metric import borel_cantelli_sum, classify_khinchin

    psi = _psi(args)
    if args.borel_cantelli is not None:
        res = borel_cantelli_sum(_curve(args), psi, args.borel_cantelli)
        if res.divergent_regime:
            print("note: sum psi^2 diverges; exploratory run", file=sys.stderr)
        return ["n", "block_length", "partial_sum", "comparison"], [vars(r) for r in res.rows]
    res = classify_khinchin(psi, args.t_max)
    return ["t", "partial_sum", "verdict"], [
        {"t": t, "partial_sum": s, "verdict": res.verdict} for t, s in res.trace]


def cmd_jarnik(args):
    from .metric import classify_jarnik_curve

    res = classify_jarnik_curve(_psi(args), args.s, args.t_max)
    return ["t", "partial_sum", "verdict"], [
        {"t": t, "partial_sum": s, "verdict": res.verdict} for t, s in res.trace]


def cmd_hausdorff(args):
    from .metric import hausdorff_cover_sum

    res = hausdorff_cover_sum(_curve(args), _psi(args), args.s, args.l, args.L,
                              apply_floor=not args.no_floor)
    return ["n", "card", "diameter", "summand", "cumulative"], [vars(r) for r in res.rows]


def cmd_mult(args):
    from .metric import mult_probe, multiplicative_hits

    c, psi = _curve(args), _psi(args)
    if args.x is not None:
        pts = [(float(as_fraction(args.x)), multiplicative_hits(c, args.x, psi, args.Q))]
    else:
        pts = mult_probe(c, psi, args.Q, args.samples, args.seed)
    return ["x", "hits"], [{"x": x, "hits": h} for x, h in pts]


def cmd_bench(args):
    from .counting import count_N

    c = _curve(args)
    d = as_fraction(args.delta)
    count_N(c, 10, d, method=args.method, threads=1)  # compile outside the timing
    rows, base = [], None
    for n in _int_grid(args.thread_list):
        t0 = time.perf_counter()
        res = count_N(c, args.Q, d, method=args.method, threads=n)
        ms = _ms(t0)
        base = ms if base is None else base
        rows.append({"threads": n, "elapsed_ms": ms, "speedup": base / ms, "count": res.count})
    return ["threads", "elapsed_ms", "speedup", "count"], rows


# --------------------------------------------------------------------------
# parser


def _common(p, counting=True):
    p.add_argument("--curve", default="parabola", help="curve spec (parabola, poly:c0,c1,..., exp, ...)")
    p.add_argument("--interval", default=None, help="closed interval 'lo,hi'")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $CURVEPOINTS_THREADS or CPU count)")
    p.add_argument("--out", default=None, help="write results here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--manifest", default=None, help="write a JSON run record to this path")
    p.add_argument("--config", default=None, help="key=value file; flags override it")
    p.add_argument("--seed", type=int, default=0)
    if counting:
        p.add_argument("--method", choices=("auto", "oracle-exact", "float-guarded"),
                       default="auto")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="curvepoints", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def add(name, fn, help, counting=True):
        p = sub.add_parser(name, help=help)
        _common(p, counting)
        p.set_defaults(func=fn)
        return p

    for name, tilde in (("count", False), ("count-tilde", True)):
        p = add(name, lambda a, t=tilde: cmd_count(a, t),
                "N(Q, delta)" if not tilde else "dyadic count over Q < q <= 2Q")
        p.add_argument("--Q", type=int, required=True)
        p.add_argument("--delta", required=True)
        p.add_argument("--points", default=None, help="also write accepted a,q,dist here")
    p = add("count-nf", cmd_count_nf, "count with q-dependent threshold q psi(Q)/Q")
    p.add_argument("--Q", type=int, required=True)
    p.add_argument("--psi", required=True, help="c,v,w for c t^-v (log t)^-w")
    p = add("coprime-triples", cmd_coprime, "primitive triples near the curve")
    p.add_argument("--R", type=int, required=True)
    p.add_argument("--Psi", required=True)
    p = add("bound-envelope", cmd_envelope, "counts against the bound shapes on a grid")
    p.add_argument("--Q-grid", dest="Q_grid", default="2^7..2^13")
    p.add_argument("--delta-grid", dest="delta_grid", default="2^-2..2^-7")
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--theta", type=float, default=None)
    p = add("dual", cmd_dual, "lambda records for one j", counting=False)
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--h", type=int, default=None)
    p = add("lambda", cmd_lambda, "lambda records for 0 < |j| <= J", counting=False)
    p.add_argument("--J", type=int, required=True)
    p = add("lemma23", cmd_lemma23, "the three lambda sums and their shapes", counting=False)
    p.add_argument("--J", type=int, required=True)
    p.add_argument("--Q", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.05)
    p = add("fejer-check", cmd_fejer, "kernel range, Fourier identity, lower bound",
            counting=False)
    p.add_argument("--delta", required=True)
    p.add_argument("--J-max", dest="J_max", type=int, default=256)
    p.add_argument("--grid", type=int, default=1000)
    p = add("majorant", cmd_majorant, "dyadic count against the kernel majorant")
    p.add_argument("--Q", type=int, required=True)
    p.add_argument("--delta", required=True)
    p = add("sigma-intervals", cmd_sigma, "nonempty sigma(p/q) of one dyadic block",
            counting=False)
    p.add_argument("--psi", required=True)
    p.add_argument("--n", type=int, required=True)
    p = add("step4-check", cmd_step4, "block cardinalities against psi(2^n) 4^n",
            counting=False)
    p.add_argument("--psi", required=True)
    p.add_argument("--n-range", dest="n_range", default="4:10")
    p = add("khinchin-sum", cmd_khinchin, "sum psi(t)^2: verdict and partial sums",
            counting=False)
    p.add_argument("--psi", required=True)
    p.add_argument("--t-max", dest="t_max", type=int, default=10 ** 6)
    p.add_argument("--borel-cantelli", dest="borel_cantelli", type=int, default=None,
                   metavar="N_MAX", help="instead sum sigma lengths over blocks 0..N_MAX")
    p = add("jarnik-sum", cmd_jarnik, "sum t^(1-s) psi(t)^(s+1)", counting=False)
    p.add_argument("--psi", required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--t-max", dest="t_max", type=int, default=10 ** 6)
    p = add("hausdorff-cover", cmd_hausdorff, "covering sum S(l, L, s)", counting=False)
    p.add_argument("--psi", required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--no-floor", dest="no_floor", action="store_true")
    p = add("mult-probe", cmd_mult, "multiplicative hit counts (exploratory)", counting=False)
    p.add_argument("--psi", required=True)
    p.add_argument("--Q", type=int, required=True)
    p.add_argument("--x", default=None, help="probe one point instead of sampling")
    p.add_argument("--samples", type=int, default=16)
    p.add_argument("--relaxed", action="store_true",
                   help="allow psi that does not tend to 0 (flagged non-admissible)")
    p = add("bench", cmd_bench, "timing of count across thread counts")
    p.add_argument("--Q", type=int, default=30000)
    p.add_argument("--delta", default="0.01")
    p.add_argument("--thread-list", dest="thread_list", default="1,2,4,8")
    return ap


def read_config(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected key=value")
            k, v = line.split("=", 1)
            out[k.strip().lstrip("-").replace("-", "_")] = v.strip()
    return out


def _find_config(argv) -> str | None:
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if a.startswith("--config="):
            return a.split("=", 1)[1]
    return None


def _apply_config(ap, argv, cfg: dict):
    """Parse with config values installed as defaults of the chosen subcommand."""
    sub = next(a for a in ap._actions if isinstance(a, argparse._SubParsersAction))
    cmd = next((a for a in argv if a in sub.choices), None)
    if cmd is None:
        return ap.parse_args(argv)
    sp = sub.choices[cmd]
    known = {a.dest: a for a in sp._actions}
    defaults = {}
    for k, v in cfg.items():
        if k not in known or k in ("help", "config"):
            raise ValidationError(f"config key {k!r} is not an option of {cmd}")
        act = known[k]
        if isinstance(act, argparse._StoreTrueAction):
            defaults[k] = v.lower() in ("1", "true", "yes")
        else:
            defaults[k] = act.type(v) if act.type else v
        act.required = False
    sp.set_defaults(**defaults)
    return ap.parse_args(argv)


def _versions() -> dict:
    import mpmath
    import numba
    import numpy

    return {"curvepoints": __version__, "python": platform.python_version(),
            "numpy": numpy.__version__, "numba": numba.__version__,
            "mpmath": mpmath.__version__}


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        cfg_path = _find_config(argv)
        if cfg_path:
            args = _apply_config(ap, argv, read_config(cfg_path))
        else:
            args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    try:
        cols, rows = args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report, don't traceback
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    text = render(cols, rows, args.format)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.manifest:
        from .counting import default_threads

        cfg = {k: v for k, v in vars(args).items() if k != "func"}
        rec = {"config": cfg, "versions": _versions(), "elapsed_s": time.perf_counter() - t0,
               "threads": args.threads or default_threads(),
               "env_threads": os.environ.get("CURVEPOINTS_THREADS")}
        with open(args.manifest, "w") as fh:
            json.dump(rec, fh, indent=1, default=str)
    return 0


def main() -> None:
    sys.exit(run())
