"""Acceptance suite: one PASS/FAIL line per criterion at its stated tolerance.

Lines are printed as each test runs and collected again in the terminal
summary.  A test fails exactly when its line says FAIL.
"""

import math
import os
import time
from fractions import Fraction

import numpy as np
from conftest import CURVES, report
from curvepoints import make_builtin
from curvepoints.cli import run
from curvepoints.counting import bound_envelope, count_by_q, count_N, count_N_tilde
from curvepoints.dual import build_dual, check_dual, lambda_table, LAMBDA_AGREE
from curvepoints.fejer import (CLAIMED_FLOOR, SQUARED_FLOOR, eval_kernel, fourier_identity_check,
                               lower_bound_check, majorant_sweep, near_integer_grid)
from curvepoints.metric import (ApproxFunction, critical_exponent_curve, enumerate_sigma,
                                hausdorff_cover_sum, jarnik_exponents, oracle_verdict,
                                khinchin_exponents, ratio_spread, step4_card_check,
                                combine_verdicts)

DELTAS = ["0.01", "0.05", "0.1", "0.25", "0.49"]
Q_MAX = 200


def test_oracle_equivalence():
    t0 = time.perf_counter()
    bad, amb = [], 0
    for name, iv in CURVES:
        c = make_builtin(name, iv)
        for d in DELTAS:
            exact = count_by_q(c, 1, Q_MAX, d, "oracle-exact")
            fl = count_by_q(c, 1, Q_MAX, d, "float-guarded")
            amb += count_N(c, Q_MAX, d, method="float-guarded").ambiguous
            # equal per-q counts give equal N(Q) for every Q <= 200
            if not np.array_equal(np.cumsum(exact), np.cumsum(fl)):
                bad.append((name, d))
    el = time.perf_counter() - t0
    ok = not bad and el < 60
    assert report("oracle equivalence", ok,
                  f"4 curves x 5 deltas x Q<=200, mismatches={bad}, escalated={amb}, "
                  f"{el:.1f}s (< 60s)")


def test_dyadic_identity():
    bad = 0
    cells = 0
    for name, iv in CURVES:
        c = make_builtin(name, iv)
        for d in DELTAS:
            pre = np.concatenate([[0], np.cumsum(count_by_q(c, 1, 2 * Q_MAX, d))])
            for Q in range(1, Q_MAX + 1):
                cells += 1
                if count_N_tilde(c, Q, d).count != pre[2 * Q] - pre[Q]:
                    bad += 1
            for Q in (1, 50, 200):
                bad += count_N(c, 2 * Q, d).count != pre[2 * Q]
    assert report("dyadic identity", bad == 0, f"{cells} cells, violations={bad}")


def test_fejer_suite():
    grid = np.linspace(-1, 1, 1000)
    lo, hi, fe = 1.0, 0.0, 0.0
    for J in range(1, 257):
        v = eval_kernel(J, grid)
        lo, hi = min(lo, float(v.min())), max(hi, float(v.max()))
        fe = max(fe, fourier_identity_check(J, grid))
    range_ok = lo >= 0 and hi <= 1
    fe_ok = fe <= 1e-10
    lbs = {d: lower_bound_check(d, near_integer_grid(d, 1000)) for d in (0.49, 0.1, 0.01)}
    lb_ok = all(lb.holds for lb in lbs.values())
    sq_ok = all(lb.holds_squared for lb in lbs.values())
    worst = math.inf
    for name, iv in CURVES:
        c = make_builtin(name, iv)
        for d in DELTAS:
            worst = min(worst, min(r.slack for r in majorant_sweep(c, Q_MAX, d)))
    slack_ok = worst >= 0
    mins = ", ".join(f"d={d}: {lb.min_value:.4f}" for d, lb in lbs.items())
    ok = range_ok and fe_ok and lb_ok and slack_ok
    assert report(
        "Fejer kernel suite", ok,
        f"range [{lo:.3g}, {hi:.3g}] {'ok' if range_ok else 'BAD'}; "
        f"Fourier max err {fe:.2e} (<= 1e-10) {'ok' if fe_ok else 'BAD'}; "
        f"min K_J on ||a||<=d: {mins} vs 2/pi={CLAIMED_FLOOR:.4f} {'ok' if lb_ok else 'BAD'} "
        f"(vs 4/pi^2={SQUARED_FLOOR:.4f} {'ok' if sq_ok else 'BAD'}); "
        f"min majorant slack {worst:.4g} {'ok' if slack_ok else 'BAD'}")


def test_dual_suite():
    t0 = time.perf_counter()
    parts = []
    ok = True
    for name in ("parabola", "exp"):
        c = make_builtin(name, "0,1")
        d = build_dual(c)
        chk = check_dual(d, grid_n=1000)
        t = lambda_table(d, 64)  # raises if the two formulas differ by > 1e-9
        a = t["h"] / t["j"]
        err = float(np.max(np.abs(t["lambda"] - np.abs(
            (t["j"] * d.F(a)) - np.rint(t["j"] * d.F(a)))))) if a.size else 0.0
        good = (chk.roundtrip <= 1e-10 * c.interval.width and chk.fpp_product <= 1e-8
                and err <= LAMBDA_AGREE)
        ok &= good
        parts.append(f"{name}: roundtrip {chk.roundtrip:.1e}, F''f''-1 {chk.fpp_product:.1e}, "
                     f"lambda diff {err:.1e} over {a.size} records")
    el = time.perf_counter() - t0
    ok &= el < 30
    assert report("dual suite", ok, "; ".join(parts) + f"; {el:.1f}s (< 30s)")


COARSE_Q = {2 ** 7, 2 ** 9, 2 ** 11, 2 ** 13}
COARSE_D = {Fraction(1, 4), Fraction(1, 16), Fraction(1, 64)}


def test_bound_shape():
    t0 = time.perf_counter()
    c = make_builtin("parabola", "0,1")
    grid = [(2 ** a, Fraction(1, 2 ** b)) for a in range(7, 14) for b in range(2, 8)]
    rows = bound_envelope(c, grid)
    coarse = [r["ratio1"] for r in rows
              if r["Q"] in COARSE_Q and Fraction(r["delta"]) in COARSE_D]
    fine = [r["ratio1"] for r in rows
            if not (r["Q"] in COARSE_Q and Fraction(r["delta"]) in COARSE_D)]
    C = max(coarse)
    el = time.perf_counter() - t0
    ok = max(fine) <= 2 * C and el < 600
    assert report("bound shape dQ^2 + d^-1/2 Q", ok,
                  f"C*={C:.4f} from {len(coarse)} coarse cells, max fine ratio "
                  f"{max(fine):.4f} over {len(fine)} cells (<= 2C*), {el:.1f}s")


def test_asymptotic_ratio():
    c = make_builtin("parabola", "0,1")
    d = Fraction(1, 20)
    per_q = count_by_q(c, 1, 2 ** 13, d)
    pre = np.cumsum(per_q)
    ratios = [int(pre[Q - 1]) / (float(d) * Q * Q) for Q in (2 ** 10, 2 ** 11, 2 ** 12, 2 ** 13)]
    dist = [abs(r - 1) for r in ratios]
    in_band = all(0.5 <= r <= 2 for r in ratios)
    trend = all(b <= a for a, b in zip(dist, dist[1:]))
    assert report("N ~ (xi-eta) d Q^2 trend", in_band and trend,
                  "ratios " + ", ".join(f"{r:.5f}" for r in ratios)
                  + f"; |r-1| non-increasing: {trend}")


def test_metric_suite():
    c = make_builtin("parabola", "0,1")
    worst_len = 0.0
    len_ok = True
    rows = step4_card_check(c, ApproxFunction(1, 0.55), range(4, 11))
    spread = ratio_spread(rows)
    for psi in (ApproxFunction(1, 0.55), ApproxFunction(1, 0.75)):
        for n in range(0, 11):
            b = enumerate_sigma(c, psi, n)
            len_ok &= bool(np.all(b.length <= 2 * psi(b.q.astype(float)) / b.q))
            if b.count:
                worst_len = max(worst_len, float(np.max(b.length / (2 * b.radius))))
    sc = critical_exponent_curve(0.75)
    psi = ApproxFunction(1, 0.75)
    up = hausdorff_cover_sum(c, psi, sc + 0.1, 6, 12)
    down = hausdorff_cover_sum(c, psi, sc - 0.1, 6, 12)
    ok = len_ok and spread <= 2 and up.trend() == "decreasing" and down.trend() == "increasing"
    assert report(
        "metric suite", ok,
        f"sigma length <= 2psi(q)/q everywhere: {len_ok} (max ratio {worst_len:.6f}); "
        f"step4 ratio spread n=4..10: {spread:.3f} (<= 2); covering summands n=6..12: "
        f"s=5/7+0.1 {up.trend()}, s=5/7-0.1 {down.trend()}")


def _matrix():
    cases = []
    for v, w in [(0.6, 0), (0.5, 0), (0.5, 1), (0.5, 0.4), (0.4, 3), (1, 0), (0.75, 0),
                 (0.5, 0.6), (0.45, 0), (0.55, -0.05)]:
        cases.append(("khinchin", ApproxFunction(1, v, w), None))
    for v, w, s in [(1, 0, 0.6), (0.75, 0, 0.8), (0.75, 0, 0.65), (0.6, 0, 0.9), (0.6, 0, 0.7),
                    (0.9, 0, 0.52), (0.9, 0, 0.6), (0.7, 1, 0.75), (0.7, 2, 0.7647058823529411),
                    (0.7, 0, 0.7647058823529411), (0.55, 0, 0.95), (0.55, 0, 0.8),
                    (0.8, 0, 0.7), (0.8, -0.1, 0.6), (0.65, 0.5, 0.85), (0.65, 0, 0.85),
                    (0.95, 0, 0.51), (0.5, 0, 0.99), (0.5, 3, 0.99), (1, 0, 0.51)]:
        cases.append(("jarnik", ApproxFunction(1, v, w), s))
    return cases


def test_series_matrix():
    cases = _matrix()
    disagree, verdicts = [], set()
    for kind, psi, s in cases:
        ex = khinchin_exponents(psi) if kind == "khinchin" else jarnik_exponents(psi, s)
        sym = combine_verdicts(ex)
        orc = oracle_verdict(ex)
        verdicts.add(sym)
        if sym != orc:
            disagree.append((kind, str(psi), s, sym, orc))
    ok = len(cases) == 30 and not disagree and verdicts == {"convergent", "divergent"}
    assert report("series classifiers vs integral test", ok,
                  f"{len(cases)} cases, verdicts seen {sorted(verdicts)}, "
                  f"disagreements={disagree}")


def test_performance(capsys):
    argv = ["count", "--curve", "parabola", "--Q", "30000", "--delta", "0.01"]
    run(argv + ["--threads", "1", "--Q", "10"])  # compile outside the timing
    capsys.readouterr()
    t0 = time.perf_counter()
    run(argv + ["--threads", "8"])
    el = time.perf_counter() - t0
    first = capsys.readouterr().out.splitlines()[1].rsplit(",", 1)[0]
    run(argv + ["--threads", "8"])
    second = capsys.readouterr().out.splitlines()[1].rsplit(",", 1)[0]
    run(["bench", "--Q", "30000", "--delta", "0.01", "--thread-list", "1,8"])
    bench = capsys.readouterr().out.splitlines()[1:]
    speed = float(bench[-1].split(",")[2])
    counts = {b.split(",")[3] for b in bench}
    cores = os.cpu_count()
    ok = el < 30 and first == second and len(counts) == 1 and speed >= 3
    assert report("performance", ok,
                  f"Q=30000 d=0.01 in {el:.2f}s at 8 threads (< 30s), row '{first}', "
                  f"repeat identical: {first == second}; bench 1->8 threads speedup "
                  f"{speed:.2f}x (>= 3x) on {cores} CPU core(s)")
