"""Enumeration of rational points near a curve.

Every count here is a brute-force scan over candidate pairs (a, q) with
``eta*q < a <= xi*q`` and a test on ``||q f(a/q)||``.  Three backends share
one entry point, :func:`scan`:

* ``oracle-exact``: integer arithmetic for polynomial curves, 50-digit
  mpmath for the others.  Never ambiguous.
* ``float-guarded``: double precision; candidates whose distance lies within
  ``1e-7 * max(1, |q f(a/q)|)`` of the threshold are re-tested exactly.
* ``auto``: ``oracle-exact`` when the curve has exact rational form (the
  integer path is also the fastest), else ``float-guarded``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional, Sequence

import mpmath
import numpy as np

from . import _engine
from ._numeric import Real, ValidationError, as_fraction, ceil_frac, floor_frac
from .curves import KIND_GENERIC, Curve

METHODS = ("oracle-exact", "float-guarded", "auto")
GUARD_REL = 1e-7
HP_DPS = 50
HP_UNDECIDABLE = mpmath.mpf("1e-40")
_INT_MOD_LIMIT = 3_000_000_000  # keeps (M-1)**2 inside int64


def default_threads() -> int:
    import os

    env = os.environ.get("CURVEPOINTS_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass
class CountRequest:
    curve: Curve
    Q: int
    delta: Fraction
    method: str = "auto"
    threads: Optional[int] = None

    def __post_init__(self):
        self.delta = as_fraction(self.delta)
        validate_delta(self.delta)
        if int(self.Q) != self.Q or self.Q < 1:
            raise ValidationError(f"Q must be a positive integer, got {self.Q!r}")
        self.Q = int(self.Q)
        _check_curve(self.curve)
        if self.method not in METHODS:
            raise ValidationError(f"method must be one of {METHODS}")


@dataclass
class CountResult:
    count: int
    ambiguous: int
    method: str
    elapsed: float
    points: Optional[list] = None
    per_q: Optional[np.ndarray] = field(default=None, repr=False)
    extra: dict = field(default_factory=dict)


def validate_delta(delta: Fraction, name: str = "delta") -> None:
    if not 0 < delta < Fraction(1, 2):
        raise ValidationError(f"{name} must satisfy 0 < {name} < 1/2, got {float(delta):g}")


def _check_curve(curve: Curve) -> None:
    if not curve.certified:
        raise ValidationError(f"curve {curve.name} has no certified c1 > 0")


def resolve_method(curve: Curve, method: str) -> str:
    if method not in METHODS:
        raise ValidationError(f"method must be one of {METHODS}, got {method!r}")
    if method == "auto":
        return "oracle-exact" if curve.exact_hint else "float-guarded"
    return method


# --------------------------------------------------------------------------
# candidate ranges and exact helpers


@lru_cache(maxsize=256)
def _a_ranges(lo: Fraction, hi: Fraction, q_lo: int, q_hi: int):
    qs = np.arange(q_lo, q_hi + 1, dtype=np.int64)
    a_lo = np.array([floor_frac(lo * q) + 1 for q in range(q_lo, q_hi + 1)], dtype=np.int64)
    a_hi = np.array([floor_frac(hi * q) for q in range(q_lo, q_hi + 1)], dtype=np.int64)
    for arr in (qs, a_lo, a_hi):
        arr.setflags(write=False)
    return qs, a_lo, a_hi


def _poly_int_form(coeffs: Sequence[Fraction]):
    """(D, C) with q f(a/q) = sum_k C[k] a^k q^(d-k) / (D q^(d-1))."""
    D = math.lcm(*(c.denominator for c in coeffs))
    return D, [int(c * D) for c in coeffs]


def _exact_accept(dist, thr, strict: bool) -> bool:
    return dist < thr if strict else dist <= thr


def _hp_distance(curve: Curve, a: int, q: int):
    y = curve.value_mp(a, q, HP_DPS)
    with mpmath.workdps(HP_DPS):
        return abs(y - mpmath.nint(y))


def _hp_accept(curve: Curve, a: int, q: int, thr: Fraction, strict: bool) -> bool:
    d = _hp_distance(curve, a, q)
    with mpmath.workdps(HP_DPS):
        t = mpmath.mpf(thr.numerator) / thr.denominator
        if abs(d - t) < HP_UNDECIDABLE:
            raise ArithmeticError(
                f"{curve.name}: ||q f(a/q)|| at (a, q) = ({a}, {q}) is within 1e-40 of "
                f"the threshold; undecidable at {HP_DPS} digits")
        return bool(d < t) if strict else bool(d <= t)


def _exact_dist(curve: Curve, a: int, q: int) -> Fraction:
    y = curve.value_exact(a, q)
    r = y - math.floor(y)
    return min(r, 1 - r)


def _resolve_one(curve: Curve, a: int, q: int, thr: Fraction, strict: bool) -> bool:
    """Membership decided without rounding doubt where the curve allows it."""
    if curve.exact_hint:
        return _exact_accept(_exact_dist(curve, a, q), thr, strict)
    if curve.f_mp is not None:
        return _hp_accept(curve, a, q, thr, strict)
    y = float(q * curve._f(a / q))
    return _exact_accept(abs(y - round(y)), float(thr), strict)


def _float_dist(curve: Curve, a: int, q: int) -> float:
    if curve.exact_hint:
        return float(_exact_dist(curve, a, q))
    if curve.f_mp is not None:
        return float(_hp_distance(curve, a, q))
    y = float(q * curve._f(a / q))
    return abs(y - round(y))


# --------------------------------------------------------------------------
# backends


@dataclass
class ScanOutput:
    per_q: np.ndarray
    ambiguous: int
    points: Optional[list]


def _thr_list(thresholds, n: int) -> list:
    if isinstance(thresholds, (list, tuple)):
        if len(thresholds) != n:
            raise ValueError("one threshold per q required")
        return [as_fraction(t) for t in thresholds]
    t = as_fraction(thresholds)
    return [t] * n


def _scan_int(curve, qs, a_lo, a_hi, thr, strict, collect):
    D, C = _poly_int_form(curve.exact_coeffs)
    d = len(C) - 1
    q_max = int(qs[-1])
    if D * q_max ** (d - 1) >= _INT_MOD_LIMIT:
        return _scan_exact_python(curve, qs, a_lo, a_hi, thr, strict, collect)
    n = len(qs)
    mods = np.empty(n, dtype=np.int64)
    terms = np.empty((n, d + 1), dtype=np.int64)
    T = np.empty(n, dtype=np.int64)
    for i, q in enumerate(qs.tolist()):
        M = D * q ** (d - 1)
        mods[i] = M
        for k in range(d + 1):
            terms[i, k] = (C[k] * q ** (d - k)) % M
        x = thr[i] * M
        T[i] = min(ceil_frac(x) if strict else floor_frac(x) + 1, M + 1)
    counts = np.zeros(n, dtype=np.int64)
    _engine.scan_int(qs, a_lo, a_hi, mods, terms, T, counts)
    points = None
    if collect:
        points = []
        for i, q in enumerate(qs.tolist()):
            if counts[i] == 0:
                continue
            aa, rr = _engine.int_accepted(int(a_lo[i]), int(a_hi[i]), int(mods[i]),
                                          terms[i], int(T[i]))
            M = int(mods[i])
            for a, r in zip(aa.tolist(), rr.tolist()):
                points.append((a, q, float(Fraction(min(r, M - r), M))))
    return ScanOutput(counts, 0, points)


def _scan_exact_python(curve, qs, a_lo, a_hi, thr, strict, collect):
    D, C = _poly_int_form(curve.exact_coeffs)
    d = len(C) - 1
    counts = np.zeros(len(qs), dtype=np.int64)
    points = [] if collect else None
    for i, q in enumerate(qs.tolist()):
        M = D * q ** (d - 1)
        tq = [C[k] * q ** (d - k) for k in range(d + 1)]
        t = thr[i]
        c = 0
        for a in range(int(a_lo[i]), int(a_hi[i]) + 1):
            acc = 0
            for k in range(d, -1, -1):
                acc = acc * a + tq[k]
            r = acc % M
            m = min(r, M - r)
            if _exact_accept(Fraction(m, M), t, strict):
                c += 1
                if collect:
                    points.append((a, q, float(Fraction(m, M))))
        counts[i] = c
    return ScanOutput(counts, 0, points)


@lru_cache(maxsize=8192)
def _hp_distances(curve: Curve, q: int, a_lo: int, a_hi: int):
    return tuple(_hp_distance(curve, a, q) for a in range(a_lo, a_hi + 1))


def _scan_hp(curve, qs, a_lo, a_hi, thr, strict, collect):
    counts = np.zeros(len(qs), dtype=np.int64)
    points = [] if collect else None
    for i, q in enumerate(qs.tolist()):
        lo, hi = int(a_lo[i]), int(a_hi[i])
        dists = _hp_distances(curve, q, lo, hi)
        with mpmath.workdps(HP_DPS):
            t = mpmath.mpf(thr[i].numerator) / thr[i].denominator
            c = 0
            for a, dd in zip(range(lo, hi + 1), dists):
                if abs(dd - t) < HP_UNDECIDABLE:
                    raise ArithmeticError(f"undecidable at (a, q) = ({a}, {q})")
                if (dd < t) if strict else (dd <= t):
                    c += 1
                    if collect:
                        points.append((a, q, float(dd)))
        counts[i] = c
    return ScanOutput(counts, 0, points)


def _generic_float_classes(curve, q, lo, hi, t):
    a = np.arange(lo, hi + 1)
    y = q * np.asarray(curve._f(a / q), dtype=float)
    d = np.abs(y - np.rint(y))
    g = GUARD_REL * np.maximum(1.0, np.abs(y))
    amb = np.abs(d - t) < g
    acc = (d < t) & ~amb
    return a, acc, amb


def _scan_float(curve, qs, a_lo, a_hi, thr, strict, collect):
    n = len(qs)
    thr_f = np.array([float(t) for t in thr])
    counts = np.zeros(n, dtype=np.int64)
    amb = np.zeros(n, dtype=np.int64)
    compiled = curve.kind != KIND_GENERIC
    if compiled:
        params = np.array(curve.params, dtype=np.float64) if curve.params else np.zeros(1)
        _engine.scan_float(curve.kind, params, qs, a_lo, a_hi, thr_f, GUARD_REL, counts, amb)
    points = [] if collect else None
    n_amb = 0
    for i in range(n):
        q, lo, hi = int(qs[i]), int(a_lo[i]), int(a_hi[i])
        if not compiled:
            a, acc, am = _generic_float_classes(curve, q, lo, hi, thr_f[i])
            counts[i] = int(acc.sum())
            amb[i] = int(am.sum())
            amb_a = a[am].tolist()
            acc_a = a[acc].tolist() if collect else []
        else:
            amb_a = (_engine.float_candidates(curve.kind, params, q, lo, hi, thr_f[i],
                                              GUARD_REL, 2).tolist() if amb[i] else [])
            acc_a = (_engine.float_candidates(curve.kind, params, q, lo, hi, thr_f[i],
                                              GUARD_REL, 1).tolist()
                     if collect and counts[i] else [])
        resolved = [a for a in amb_a if _resolve_one(curve, a, q, thr[i], strict)]
        counts[i] += len(resolved)
        n_amb += len(amb_a)
        if collect:
            for a in sorted(acc_a + resolved):
                points.append((a, q, _float_dist(curve, a, q) if a in resolved
                               else _plain_float_dist(curve, a, q)))
    return ScanOutput(counts, n_amb, points)


def _plain_float_dist(curve, a, q):
    y = float(q * curve._f(a / q))
    return abs(y - round(y))


def scan(curve: Curve, q_lo: int, q_hi: int, thresholds, strict: bool = True,
         method: str = "auto", threads: Optional[int] = None, collect: bool = False,
         a_ranges: Optional[tuple] = None) -> ScanOutput:
    """Count a in each q of [q_lo, q_hi] with ||q f(a/q)|| below the threshold.

    ``thresholds`` is one value for all q or a sequence with one per q.  The
    test is ``<`` when ``strict`` else ``<=``.  ``a_ranges`` overrides the
    default ``(floor(eta q) + 1, floor(xi q))`` bounds with explicit arrays.
    """
    if q_hi < q_lo:
        return ScanOutput(np.zeros(0, dtype=np.int64), 0, [] if collect else None)
    method = resolve_method(curve, method)
    if a_ranges is None:
        qs, a_lo, a_hi = _a_ranges(curve.interval.lo, curve.interval.hi, int(q_lo), int(q_hi))
    else:
        qs = np.arange(q_lo, q_hi + 1, dtype=np.int64)
        a_lo, a_hi = (np.ascontiguousarray(x, dtype=np.int64) for x in a_ranges)
    thr = _thr_list(thresholds, len(qs))
    _engine.set_threads(threads or default_threads())
    if method == "oracle-exact":
        if curve.exact_hint:
            return _scan_int(curve, qs, a_lo, a_hi, thr, strict, collect)
        if curve.f_mp is None:
            raise ValidationError(f"{curve.name} has no exact or high-precision evaluator")
        return _scan_hp(curve, qs, a_lo, a_hi, thr, strict, collect)
    return _scan_float(curve, qs, a_lo, a_hi, thr, strict, collect)


# --------------------------------------------------------------------------
# public counts


def _result(out: ScanOutput, method: str, t0: float, **extra) -> CountResult:
    return CountResult(count=int(out.per_q.sum()), ambiguous=out.ambiguous, method=method,
                       elapsed=time.perf_counter() - t0, points=out.points,
                       per_q=out.per_q, extra=extra)


def count_by_q(curve: Curve, q_lo: int, q_hi: int, delta: Real, method: str = "auto",
               threads: Optional[int] = None) -> np.ndarray:
    """Per-q counts for q in [q_lo, q_hi]; prefix sums give N(Q, delta) for every Q."""
    delta = as_fraction(delta)
    validate_delta(delta)
    _check_curve(curve)
    return scan(curve, q_lo, q_hi, delta, method=method, threads=threads).per_q


def count_N(curve: Curve, Q: int, delta: Real, method: str = "auto",
            threads: Optional[int] = None, points: bool = False) -> CountResult:
    """N(Q, delta): pairs with 1 <= q <= Q, eta q < a <= xi q, ||q f(a/q)|| < delta."""
    req = CountRequest(curve, Q, delta, method, threads)
    m = resolve_method(curve, req.method)
    t0 = time.perf_counter()
    out = scan(curve, 1, req.Q, req.delta, method=m, threads=threads, collect=points)
    return _result(out, m, t0, Q=req.Q, delta=req.delta)


def count_N_tilde(curve: Curve, Q: int, delta: Real, method: str = "auto",
                  threads: Optional[int] = None, points: bool = False) -> CountResult:
    """The dyadic count over Q < q <= 2Q."""
    req = CountRequest(curve, Q, delta, method, threads)
    m = resolve_method(curve, req.method)
    t0 = time.perf_counter()
    out = scan(curve, req.Q + 1, 2 * req.Q, req.delta, method=m, threads=threads,
               collect=points)
    return _result(out, m, t0, Q=req.Q, delta=req.delta)


def _psi_fraction(psi, Q: int) -> Fraction:
    exact = getattr(psi, "value_exact", None)
    if exact is not None:
        v = exact(Q)
        if v is not None:
            return v
    return Fraction(float(psi(Q)))


def count_Nf(curve: Curve, psi: Callable[[float], float], Q: int, method: str = "auto",
             threads: Optional[int] = None) -> CountResult:
    """N_f(Q, psi, I) and its majorant with the q-independent threshold psi(Q).

    A pair (p1, q) is counted when ||q f(p1/q)|| < q psi(Q) / Q; p2 is the
    nearest integer to q f(p1/q).  ``extra['majorant']`` holds the count with
    threshold psi(Q), which bounds the first count from above.
    """
    if int(Q) != Q or Q < 1:
        raise ValidationError("Q must be a positive integer")
    _check_curve(curve)
    psiQ = _psi_fraction(psi, int(Q))
    if psiQ > Fraction(1, 2):
        raise ValidationError(f"psi(Q) = {float(psiQ):g} > 1/2; the reduction needs psi(Q) <= 1/2")
    if psiQ <= 0:
        raise ValidationError("psi(Q) must be positive")
    m = resolve_method(curve, method)
    t0 = time.perf_counter()
    per_q = [q * psiQ / Q for q in range(1, Q + 1)]
    out = scan(curve, 1, Q, per_q, method=m, threads=threads)
    maj = scan(curve, 1, Q, psiQ, method=m, threads=threads)
    res = _result(out, m, t0, Q=int(Q), psi_Q=psiQ, majorant=int(maj.per_q.sum()))
    res.ambiguous += maj.ambiguous
    return res


def lemma22_count(curve: Curve, R: int, Psi: Real, method: str = "auto",
                  threads: Optional[int] = None) -> int:
    """Double sum over R <= r < 2R, Upsilon r < b <= Xi r with ||r phi(b/r)|| <= Psi."""
    Psi = as_fraction(Psi)
    _validate_Psi(Psi, R)
    _check_curve(curve)
    return int(scan(curve, R, 2 * R - 1, Psi, strict=False, method=method,
                    threads=threads).per_q.sum())


def _validate_Psi(Psi: Fraction, R) -> None:
    if not 0 < Psi < Fraction(1, 4):
        raise ValidationError(f"Psi must satisfy 0 < Psi < 1/4, got {float(Psi):g}")
    if int(R) != R or R < 1:
        raise ValidationError("R must be a positive integer")


def count_coprime_triples(curve: Curve, R: int, Psi: Real, method: str = "auto",
                          threads: Optional[int] = None) -> CountResult:
    """Triples (r, b, c) with gcd 1, R <= r < 2R, Upsilon r < b <= Xi r and
    |r phi(b/r) - c| <= Psi, where phi is the curve's f on [Upsilon, Xi].

    ``extra['by_gcd']`` maps each gcd class d to its triple count; the classes
    sum to the double-sum count of :func:`lemma22_count`.
    """
    Psi = as_fraction(Psi)
    _validate_Psi(Psi, R)
    _check_curve(curve)
    m = resolve_method(curve, method)
    t0 = time.perf_counter()
    out = scan(curve, R, 2 * R - 1, Psi, strict=False, method=m, threads=threads,
               collect=True)
    by_gcd: dict = {}
    for b, r, _ in out.points:
        if curve.exact_hint:
            y = curve.value_exact(b, r)
            c = math.floor(y + Fraction(1, 2))
        elif curve.f_mp is not None:
            c = int(mpmath.nint(curve.value_mp(b, r, HP_DPS)))
        else:
            c = round(float(r * curve._f(b / r)))
        d = math.gcd(math.gcd(r, b), c)
        by_gcd[d] = by_gcd.get(d, 0) + 1
    return CountResult(count=by_gcd.get(1, 0), ambiguous=out.ambiguous, method=m,
                       elapsed=time.perf_counter() - t0,
                       extra={"R": int(R), "Psi": Psi, "double_sum": len(out.points),
                              "by_gcd": dict(sorted(by_gcd.items()))})


# --------------------------------------------------------------------------
# bound shapes


def thm1_rhs(Q: float, delta: float) -> float:
    return delta * Q * Q + delta ** -0.5 * Q


def thm4_rhs(Q: float, delta: float, theta: float, eps: float = 0.05) -> float:
    return (delta * Q * Q + delta ** -0.5 * Q ** (0.5 + eps)
            + delta ** ((theta - 1) / 2) * Q ** ((3 - theta) / 2))


def lemma22_rhs(R: float, Psi: float, eps: float = 0.05) -> float:
    return Psi ** (1 - eps) * R * R + R * math.log(2 * R)


def bound_envelope(curve: Curve, grid: Sequence[tuple], eps: float = 0.05,
                   theta: Optional[float] = None, method: str = "auto",
                   threads: Optional[int] = None) -> list:
    """Counts against the unit-constant bound shapes on a (Q, delta) grid.

    Returns one dict per cell with keys ``Q, delta, count, thm1_rhs,
    thm4_rhs, ratio1, ratio4``.  ``thm4_rhs`` is NaN when the curve carries
    no Hoelder data and ``theta`` is not supplied.
    """
    if not grid:
        raise ValidationError("bound_envelope needs a non-empty grid")
    _check_curve(curve)
    theta = curve.theta if theta is None else theta
    cells = [(int(Q), as_fraction(d)) for Q, d in grid]
    for Q, d in cells:
        validate_delta(d)
        if Q < 1:
            raise ValidationError("Q must be >= 1")
    prefix: dict = {}
    for d in sorted({d for _, d in cells}):
        q_max = max(Q for Q, dd in cells if dd == d)
        prefix[d] = np.cumsum(count_by_q(curve, 1, q_max, d, method, threads))
    rows = []
    for Q, d in cells:
        n = int(prefix[d][Q - 1])
        df = float(d)
        r1 = thm1_rhs(Q, df)
        r4 = thm4_rhs(Q, df, theta, eps) if theta is not None else float("nan")
        rows.append({"Q": Q, "delta": df, "count": n, "thm1_rhs": r1, "thm4_rhs": r4,
                     "ratio1": n / r1, "ratio4": n / r4})
    return rows
