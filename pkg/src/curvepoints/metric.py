"""Approximating functions, series classifiers and the dyadic covers of the
set of x whose curve point (x, f(x)) is simultaneously psi-approximable.

psi is a max of terms ``c t^-v (log t)^-w``; ``psi(t) := psi(2)`` for t < 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Sequence

import mpmath
import numpy as np

from ._numeric import Real, ValidationError, as_fraction, ceil_frac, floor_frac
from .curves import Curve

CONVERGENT = "convergent"
DIVERGENT = "divergent"
P_TOL = 1e-12
STEP1_FLOOR = (1.0, 0.5, 1.0)
CHUNK = 1 << 21


def _term(c, v, w, t):
    t = np.maximum(np.asarray(t, dtype=float), 2.0)
    return c * t ** (-v) * np.log(t) ** (-w)


@dataclass(frozen=True)
class ApproxFunction:
    """psi(t) = max over (c, v, w) terms of c t^-v (log t)^-w.

    ``relaxed`` admits functions that do not tend to zero (e.g. a constant
    surrogate for probing); such a psi is usable but ``admissible`` is False.
    """

    c: float
    v: float
    w: float = 0.0
    floor_terms: tuple = ()
    relaxed: bool = False

    def __post_init__(self):
        for c, v, w in self.terms:
            if not (math.isfinite(c) and math.isfinite(v) and math.isfinite(w)) or c <= 0:
                raise ValidationError(f"psi term ({c}, {v}, {w}) needs finite values and c > 0")
            # d/dt log term = -(v + w / log t) / t on t >= 2
            if v < 0 or v + w / math.log(2) < 0:
                raise ValidationError(f"psi term ({c}, {v}, {w}) is not non-increasing on t >= 2")
        if not self.relaxed and not self.tends_to_zero:
            raise ValidationError(
                "psi must tend to 0 (v > 0, or v = 0 and w > 0); pass relaxed=True to probe anyway")

    @classmethod
    def parse(cls, text: str, relaxed: bool = False) -> "ApproxFunction":
        """``"c,v,w"`` or ``"c,v"``; several terms joined by ``;`` are max-combined."""
        terms = []
        for part in text.split(";"):
            try:
                vals = [float(x) for x in part.split(",")]
            except ValueError as exc:
                raise ValidationError(f"bad psi spec {text!r}") from exc
            if len(vals) == 2:
                vals.append(0.0)
            if len(vals) != 3:
                raise ValidationError(f"psi term {part!r} must be c,v or c,v,w")
            terms.append(tuple(vals))
        (c, v, w), rest = terms[0], tuple(terms[1:])
        return cls(c, v, w, rest, relaxed)

    @property
    def terms(self) -> tuple:
        return ((self.c, self.v, self.w),) + tuple(tuple(t) for t in self.floor_terms)

    @property
    def tends_to_zero(self) -> bool:
        return all(v > 0 or (v == 0 and w > 0) for _, v, w in self.terms)

    @property
    def admissible(self) -> bool:
        return self.tends_to_zero

    def __call__(self, t):
        out = _term(*self.terms[0], t)
        for term in self.terms[1:]:
            out = np.maximum(out, _term(*term, t))
        return float(out) if np.ndim(out) == 0 else out

    def with_floor(self, c: float, v: float, w: float = 0.0) -> "ApproxFunction":
        """max(psi, c t^-v (log t)^-w); never smaller than psi."""
        return replace(self, floor_terms=self.floor_terms + ((c, v, w),))

    def value_exact(self, t: int) -> Optional[Fraction]:
        """Exact psi(t) for a single pure rational power at an integer t, else None."""
        if self.floor_terms or self.w != 0 or int(t) != t or t < 2:
            return None
        v = Fraction(repr(self.v)).limit_denominator(1000)
        if float(v) != self.v:
            return None
        root = round(t ** (1 / v.denominator))
        for r in (root - 1, root, root + 1):
            if r > 0 and r ** v.denominator == t:
                return Fraction(repr(self.c)) * Fraction(r) ** -v.numerator
        return None

    def __str__(self) -> str:
        return ";".join(f"{c:g},{v:g},{w:g}" for c, v, w in self.terms)


def step1_floor(psi: ApproxFunction) -> ApproxFunction:
    """max(psi, t^-1/2 (log t)^-1); unchanged if that term is already present."""
    if STEP1_FLOOR in psi.terms:
        return psi
    return psi.with_floor(*STEP1_FLOOR)


def hausdorff_floor_exponent(s: float) -> float:
    """eta_m = 0.9 (2s - 1)/(s + 1), strictly inside (0, (2s - 1)/(s + 1))."""
    _check_s(s)
    return 0.9 * (2 * s - 1) / (s + 1)


def hausdorff_floor(psi: ApproxFunction, s: float) -> ApproxFunction:
    """max(psi, t^(-1 + eta_m))."""
    return psi.with_floor(1.0, 1.0 - hausdorff_floor_exponent(s), 0.0)


# ---------------------------------------------------------------------------
# series classifiers


def series_verdict(p: float, q: float) -> str:
    """Sum of t^-p (log t)^-q over t >= 2: convergent iff p > 1 or (p = 1, q > 1)."""
    if abs(p - 1) < P_TOL:
        return CONVERGENT if q > 1 else DIVERGENT
    return CONVERGENT if p > 1 else DIVERGENT


def combine_verdicts(pairs) -> str:
    # a max of non-negative terms sums finitely iff each term does
    return CONVERGENT if all(series_verdict(p, q) == CONVERGENT for p, q in pairs) else DIVERGENT


def _check_s(s: float) -> None:
    if not 0.5 < s < 1:
        raise ValidationError(f"s must lie in (1/2, 1), got {s}")


def khinchin_exponents(psi: ApproxFunction) -> list:
    return [(2 * v, 2 * w) for _, v, w in psi.terms]


def jarnik_exponents(psi: ApproxFunction, s: float) -> list:
    """t^(1-s) psi^(s+1) = t^-(v(s+1) + s - 1) (log t)^-(w(s+1)) per term."""
    return [(v * (s + 1) + s - 1, w * (s + 1)) for _, v, w in psi.terms]


def gallagher_exponents(psi: ApproxFunction) -> list:
    """psi(t)^2 log t."""
    return [(2 * v, 2 * w - 1) for _, v, w in psi.terms]


def claim2_exponents(psi: ApproxFunction) -> list:
    """psi(t) log t."""
    return [(v, w - 1) for _, v, w in psi.terms]


@dataclass
class SeriesResult:
    verdict: str
    exponents: list
    trace: list = field(default_factory=list)


def _trace(summand, t_max: int, checkpoints: Optional[Sequence[int]] = None) -> list:
    t = np.arange(1, t_max + 1, dtype=float)
    cs = np.cumsum(summand(t))
    if checkpoints is None:
        checkpoints = sorted({10 ** k for k in range(1, int(math.log10(t_max)) + 1)} | {t_max})
    return [(int(c), float(cs[int(c) - 1])) for c in checkpoints if 1 <= c <= t_max]


def classify_khinchin(psi: ApproxFunction, t_max: int = 10 ** 6) -> SeriesResult:
    """Verdict for sum psi(t)^2 plus partial sums at powers of ten up to t_max."""
    ex = khinchin_exponents(psi)
    return SeriesResult(combine_verdicts(ex), ex, _trace(lambda t: psi(t) ** 2, t_max))


def classify_jarnik_curve(psi: ApproxFunction, s: float, t_max: int = 10 ** 6) -> SeriesResult:
    """Verdict for sum t^(1-s) psi(t)^(s+1), s in (1/2, 1)."""
    _check_s(s)
    ex = jarnik_exponents(psi, s)
    return SeriesResult(combine_verdicts(ex), ex, _trace(lambda t: t ** (1 - s) * psi(t) ** (s + 1), t_max))


def classify_gallagher(psi: ApproxFunction, t_max: int = 10 ** 6) -> SeriesResult:
    ex = gallagher_exponents(psi)
    return SeriesResult(combine_verdicts(ex), ex,
                        _trace(lambda t: psi(t) ** 2 * np.log(np.maximum(t, 2)), t_max))


def classify_claim2(psi: ApproxFunction, t_max: int = 10 ** 6) -> SeriesResult:
    ex = claim2_exponents(psi)
    return SeriesResult(combine_verdicts(ex), ex,
                        _trace(lambda t: psi(t) * np.log(np.maximum(t, 2)), t_max))


def critical_exponent_curve(v: float) -> float:
    """(2 - v)/(1 + v): the s at which sum t^(1-s) t^(-v(s+1)) switches verdict."""
    if not 0.5 < v < 1:
        raise ValidationError(f"v must lie in (1/2, 1), got {v}")
    return (2 - v) / (1 + v)


def _log_decade_integral(p: float, q: float, k: int) -> mpmath.mpf:
    """log of the integral of exp((1-p) u) u^-q over u in [10^k, 10^(k+1)].

    Substituting t = e^u turns the sum of t^-p (log t)^-q into this integral.
    The integrand is normalised at its peak and integrated with breakpoints
    scaled to its decay length, so huge exponents stay representable.
    """
    a = mpmath.mpf(1) - mpmath.mpf(p)
    L, H = mpmath.mpf(10) ** k, mpmath.mpf(10) ** (k + 1)
    qm = mpmath.mpf(q)

    def phi(u):
        return a * u - qm * mpmath.log(u)

    peak = L if phi(L) >= phi(H) else H
    # phi is concave or convex on [L, H]; its max over [L, H] is at an end
    # unless phi' vanishes inside, which needs |a| ~ q / u
    if a != 0 and qm != 0:
        u0 = qm / a
        if L < u0 < H and phi(u0) > phi(peak):
            peak = u0
    top = phi(peak)
    scale = max(abs(a) + abs(qm) / L, 1 / (H - L))
    pts = {L, H, peak}
    for m in range(0, 40):
        d = mpmath.mpf(10) ** m / scale
        if d >= H - L:
            break
        pts.update({peak - d, peak + d})
    pts = sorted(x for x in pts if L <= x <= H)
    val = mpmath.quad(lambda u: mpmath.exp(phi(u) - top), pts)
    return top + mpmath.log(val)


def integral_test_oracle(p: float, q: float, k1: int = 2, k2: int = 12) -> str:
    """Numeric verdict: convergent iff the decade integral at 10^k2 is less
    than half the one at 10^k1.

    Over u <= 10^12 an exponent offset |1 - p| below about 1e-12 changes the
    integrand by O(1) only, matching the boundary tolerance of
    :func:`series_verdict`; log exponents are resolved for |q - 1| > 0.03.
    """
    with mpmath.workdps(40):
        d1 = _log_decade_integral(p, q, k1)
        d2 = _log_decade_integral(p, q, k2)
        return CONVERGENT if d2 - d1 < mpmath.log(0.5) else DIVERGENT


def oracle_verdict(pairs) -> str:
    return CONVERGENT if all(integral_test_oracle(p, q) == CONVERGENT for p, q in pairs) else DIVERGENT


# ---------------------------------------------------------------------------
# sigma intervals and dyadic blocks


@dataclass(frozen=True)
class SigmaInterval:
    p1: int
    p2: int
    q: int
    lo: float
    hi: float
    length: float


@dataclass
class DyadicBlock:
    """All nonempty sigma(p/q) with 2^n <= q < 2^(n+1), stored column-wise.

    ``lo``/``hi`` is the hull of sigma(p/q) (which can be two pieces near a
    critical point of f); ``length`` is its measure.
    """

    n: int
    q: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    length: np.ndarray
    radius: np.ndarray  # psi(q)/q per member

    @property
    def count(self) -> int:
        return int(self.q.size)

    @property
    def total_length(self) -> float:
        return math.fsum(self.length)

    @property
    def intervals(self) -> list:
        return [SigmaInterval(int(a), int(b), int(c), float(d), float(e), float(g))
                for a, b, c, d, e, g in zip(self.p1, self.p2, self.q, self.lo, self.hi, self.length)]


def _critical_point(curve: Curve) -> Optional[float]:
    lo, hi = curve.interval.lo_f, curve.interval.hi_f
    a, b = float(curve._fp(lo)), float(curve._fp(hi))
    if a == 0:
        return lo
    if b == 0:
        return hi
    if (a > 0) == (b > 0):
        return None
    for _ in range(200):
        m = 0.5 * (lo + hi)
        fm = float(curve._fp(m))
        if (fm > 0) == (a > 0):
            lo = m
        else:
            hi = m
        if hi - lo <= 1e-17 * max(1.0, abs(m)):
            break
    return 0.5 * (lo + hi)


def c3_constant(curve: Curve) -> float:
    """1 + sup |f'| on the interval."""
    return 1.0 + curve.fp_bound


def _piece(curve, c, y0, r, u, v):
    """Measure-preserving solve of |f(c + t) - y0| < r for t in [u, v] where
    f is monotone; returns (left, right) with right <= left meaning empty."""
    fu = curve._f(c + u) - y0
    fv = curve._f(c + v) - y0
    sgn = np.where(fv >= fu, 1.0, -1.0)
    gu, gv = sgn * fu, sgn * fv
    valid = v > u

    def root(target):
        a, b = u.copy(), v.copy()
        for _ in range(64):
            m = 0.5 * (a + b)
            gm = sgn * (curve._f(c + m) - y0)
            below = gm < target
            a = np.where(below, m, a)
            b = np.where(below, b, m)
        return 0.5 * (a + b)

    need_l = valid & (gu < -r) & (gv > -r)
    need_r = valid & (gv > r) & (gu < r)
    left = np.where(need_l, root(-r) if need_l.any() else u, u)
    right = np.where(need_r, root(r) if need_r.any() else v, v)
    empty = ~valid | (gv <= -r) | (gu >= r)
    right = np.where(empty, left, right)
    return left, right


def sigma_arrays(curve: Curve, psi: ApproxFunction, q, p1, p2, xstar: Optional[float] = None):
    """Hull [lo, hi] and measure of sigma(p/q) for aligned integer arrays.

    Everything is solved in offsets t = x - p1/q with |t| <= r = psi(q)/q, so
    the reported length never exceeds 2r in floating point either.
    """
    q = np.asarray(q, dtype=float)
    c = np.asarray(p1, dtype=float) / q
    y0 = np.asarray(p2, dtype=float) / q
    r = psi(q) / q
    u = np.maximum(-r, curve.interval.lo_f - c)
    v = np.minimum(r, curve.interval.hi_f - c)
    if xstar is None:
        pieces = [_piece(curve, c, y0, r, u, v)]
    else:
        ts = np.clip(xstar - c, u, v)
        pieces = [_piece(curve, c, y0, r, u, ts), _piece(curve, c, y0, r, ts, v)]
    lo_t = np.full(c.shape, np.inf)
    hi_t = np.full(c.shape, -np.inf)
    meas = np.zeros(c.shape)
    for left, right in pieces:
        ok = right > left
        lo_t = np.where(ok, np.minimum(lo_t, left), lo_t)
        hi_t = np.where(ok, np.maximum(hi_t, right), hi_t)
        meas = meas + np.where(ok, right - left, 0.0)
    hull = np.where(meas > 0, hi_t - lo_t, 0.0)
    meas = np.minimum(meas, hull)
    return c + lo_t, c + hi_t, meas, r


def _p1_range(curve: Curve, q: int):
    """p1 with p1/q in the closed interval I."""
    return ceil_frac(curve.interval.lo * q), floor_frac(curve.interval.hi * q)


def enumerate_sigma(curve: Curve, psi: ApproxFunction, n: int) -> DyadicBlock:
    """All (p1, p2, q) with 2^n <= q < 2^(n+1), p1/q in I and sigma(p/q) nonempty.

    A nonempty sigma forces |q f(p1/q) - p2| < c3 psi(q), c3 = 1 + sup|f'|,
    so only those p2 are examined; sigma itself is then solved exactly on the
    monotone pieces of f.
    """
    if n < 0 or int(n) != n:
        raise ValidationError(f"n must be a non-negative integer, got {n!r}")
    if n > 40:
        raise ValidationError("n > 40 overflows the candidate ranges")
    c3 = c3_constant(curve)
    xstar = _critical_point(curve)
    cols = {k: [] for k in ("q", "p1", "p2", "lo", "hi", "length", "radius")}
    q_all = np.arange(2 ** n, 2 ** (n + 1), dtype=np.int64)
    ranges = [_p1_range(curve, int(q)) for q in q_all]
    sizes = np.array([max(b - a + 1, 0) for a, b in ranges])
    start = 0
    while start < q_all.size:
        stop = start + 1
        tot = sizes[start]
        while stop < q_all.size and tot + sizes[stop] <= CHUNK:
            tot += sizes[stop]
            stop += 1
        qq = np.repeat(q_all[start:stop], sizes[start:stop])
        pp = np.concatenate([np.arange(ranges[i][0], ranges[i][1] + 1, dtype=np.int64)
                             for i in range(start, stop)]) if tot else np.zeros(0, np.int64)
        start = stop
        if not qq.size:
            continue
        qf = qq.astype(float)
        y = qf * curve._f(pp / qf)
        band = c3 * psi(qf) * (1 + 1e-9) + 1e-12 * np.maximum(1.0, np.abs(y))
        k_lo = np.ceil(y - band).astype(np.int64)
        k_hi = np.floor(y + band).astype(np.int64)
        width = int((k_hi - k_lo).max(initial=-1))
        for off in range(width + 1):
            p2 = k_lo + off
            sel = p2 <= k_hi
            if not sel.any():
                continue
            lo, hi, meas, r = sigma_arrays(curve, psi, qq[sel], pp[sel], p2[sel], xstar)
            keep = meas > 0
            for key, arr in (("q", qq[sel]), ("p1", pp[sel]), ("p2", p2[sel]), ("lo", lo),
                             ("hi", hi), ("length", meas), ("radius", r)):
                cols[key].append(arr[keep])
    out = {k: (np.concatenate(v) if v else np.zeros(0)) for k, v in cols.items()}
    order = np.lexsort((out["p2"], out["p1"], out["q"]))
    out = {k: v[order] for k, v in out.items()}
    for k in ("q", "p1", "p2"):
        out[k] = out[k].astype(np.int64)
    return DyadicBlock(n=int(n), **out)


def audit_block(curve: Curve, psi: ApproxFunction, block: DyadicBlock) -> dict:
    """Check every member against the necessary conditions behind the cover.

    Returns the worst ratios; each must be < 1:
      * ``length``: length / (2 psi(q)/q)
      * ``tight``: ||q f(p1/q)|| / ((1 + sup|f'|) psi(q))
      * ``chain``: ||q f(p1/q)|| / (2 (1 + sup|f'|) psi(2^n))
    """
    if block.count == 0:
        return {"length": 0.0, "tight": 0.0, "chain": 0.0, "length_ok": True}
    c3 = c3_constant(curve)
    qf = block.q.astype(float)
    if curve.exact_hint:
        from .counting import _exact_dist
        d = np.array([float(_exact_dist(curve, int(a), int(q))) for a, q in zip(block.p1, block.q)])
    else:
        y = qf * curve._f(block.p1 / qf)
        d = np.abs(y - np.rint(y))
    length_ok = bool(np.all(block.length <= 2 * block.radius))
    return {
        "length": float(np.max(block.length / (2 * block.radius))),
        "tight": float(np.max(d / (c3 * psi(qf)))),
        "chain": float(np.max(d / (2 * c3 * psi(2.0 ** block.n)))),
        "length_ok": length_ok,
    }


# ---------------------------------------------------------------------------
# block statistics


@dataclass
class Step4Row:
    n: int
    card: int
    rhs: float
    ratio: float


def step4_card_check(curve: Curve, psi: ApproxFunction, n_range: Sequence[int]) -> list:
    """card of block n against psi(2^n) 2^(2n), with the t^-1/2 (log t)^-1 floor."""
    psi = step1_floor(psi)
    rows = []
    for n in n_range:
        b = enumerate_sigma(curve, psi, n)
        rhs = psi(2.0 ** n) * 4.0 ** n
        rows.append(Step4Row(int(n), b.count, rhs, b.count / rhs))
    return rows


def ratio_spread(rows: Sequence[Step4Row]) -> float:
    r = [row.ratio for row in rows]
    return max(r) / min(r)


@dataclass
class BorelCantelliRow:
    n: int
    block_length: float
    partial_sum: float
    comparison: float


@dataclass
class BorelCantelliResult:
    rows: list
    verdict: str

    @property
    def divergent_regime(self) -> bool:
        return self.verdict != CONVERGENT


def borel_cantelli_sum(curve: Curve, psi: ApproxFunction, n_max: int) -> BorelCantelliResult:
    """Partial sums of total sigma length per block (overlaps counted) and of
    the comparison series psi(2^n)^2 2^n."""
    verdict = series_verdict_for(psi)
    rows, acc, comp = [], [], []
    for n in range(n_max + 1):
        b = enumerate_sigma(curve, psi, n)
        acc.append(b.total_length)
        comp.append(psi(2.0 ** n) ** 2 * 2.0 ** n)
        rows.append(BorelCantelliRow(n, b.total_length, math.fsum(acc), math.fsum(comp)))
    return BorelCantelliResult(rows, verdict)


def series_verdict_for(psi: ApproxFunction) -> str:
    return combine_verdicts(khinchin_exponents(psi))


@dataclass
class CoverRow:
    n: int
    card: int
    diameter: float
    summand: float
    cumulative: float


@dataclass
class CoverResult:
    s: float
    rows: list
    psi: ApproxFunction
    theory_exponent: float

    @property
    def total(self) -> float:
        return self.rows[-1].cumulative if self.rows else 0.0

    def summands(self) -> np.ndarray:
        return np.array([r.summand for r in self.rows])

    def trend(self) -> str:
        """'decreasing' / 'increasing' if every step moves one way, else 'mixed'."""
        d = np.diff(self.summands())
        if d.size and np.all(d < 0):
            return "decreasing"
        if d.size and np.all(d > 0):
            return "increasing"
        return "mixed"


def _effective_v(psi: ApproxFunction, t: float) -> float:
    """-d log psi / d log t at t (the slowest-decaying active term)."""
    vals = [(_term(c, v, w, t), v + w / math.log(max(t, 2.0))) for c, v, w in psi.terms]
    return max(vals, key=lambda x: x[0])[1]


def hausdorff_cover_sum(curve: Curve, psi: ApproxFunction, s: float, l: int, L: int,
                        apply_floor: bool = True, blocks: Optional[dict] = None) -> CoverResult:
    """S(l, L, s) = sum over n in [l, L] of card(n) (2 psi(2^n)/2^n)^s.

    With ``apply_floor`` psi is first raised to max(psi, t^(-1 + eta_m)).
    ``blocks`` may map n to a precomputed DyadicBlock for the same psi.
    """
    if not 0 < s <= 1:
        raise ValidationError(f"s must lie in (0, 1], got {s}")
    if l > L or l < 0:
        raise ValidationError(f"need 0 <= l <= L, got l={l}, L={L}")
    if apply_floor:
        if s <= 0.5:
            raise ValidationError("the t^(-1 + eta) floor needs s > 1/2")
        psi = hausdorff_floor(psi, s)
    rows, acc = [], []
    for n in range(l, L + 1):
        b = blocks[n] if blocks and n in blocks else enumerate_sigma(curve, psi, n)
        diam = 2 * psi(2.0 ** n) / 2.0 ** n
        term = b.count * diam ** s
        acc.append(term)
        rows.append(CoverRow(n, b.count, diam, term, math.fsum(acc)))
    v = _effective_v(psi, 2.0 ** L)
    return CoverResult(s, rows, psi, 2 - s - v * (1 + s))


# ---------------------------------------------------------------------------
# multiplicative prober


def multiplicative_hits(curve: Curve, x: Real, psi, Q: int) -> int:
    """card{q <= Q : ||q x|| ||q f(x)|| < psi(q)}."""
    if Q < 1:
        raise ValidationError("Q must be >= 1")
    xf = float(as_fraction(x)) if not isinstance(x, float) else x
    if not curve.interval.lo_f <= xf <= curve.interval.hi_f:
        raise ValidationError(f"x = {xf} outside {curve.interval}")
    q = np.arange(1, Q + 1, dtype=float)
    a = q * xf
    b = q * float(curve._f(xf))
    prod = np.abs(a - np.rint(a)) * np.abs(b - np.rint(b))
    return int(np.count_nonzero(prod < psi(q)))


def mult_probe(curve: Curve, psi, Q: int, samples: int, seed: int = 0) -> list:
    """(x, hits) for ``samples`` uniform x in I; exploratory only."""
    rng = np.random.default_rng(seed)
    xs = rng.uniform(curve.interval.lo_f, curve.interval.hi_f, samples)
    return [(float(x), multiplicative_hits(curve, float(x), psi, Q)) for x in xs]
