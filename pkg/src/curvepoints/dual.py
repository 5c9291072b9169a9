"""The dual curve F(alpha) = alpha g(alpha) - f(g(alpha)), g = (f')^{-1}.

For j != 0 and an integer h with j f'(beta_h) = h, the phase
``phi = j f(beta_h) - h beta_h`` equals ``-j F(h/j)``, so its distance to the
nearest integer can be computed on either side of the transform.  The
records produced here carry both and refuse to disagree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._numeric import ValidationError
from .curves import Curve, Interval, curve_from_functions

ROOT_RTOL = 1e-13
ROOT_MAXITER = 60
LAMBDA_AGREE = 1e-9


def nearest_int_dist(x):
    x = np.asarray(x, dtype=float)
    return np.abs(x - np.rint(x))


class RootFindError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class DualCurve:
    base: Curve
    Upsilon: float
    Xi: float
    flipped: bool = False

    def g(self, alpha, return_flags: bool = False):
        """Inverse of f' on [Upsilon, Xi].

        Bisection on the interval, then safeguarded Newton; each entry stops
        once its step falls below 1e-13 relative.  Values outside
        [Upsilon, Xi] give NaN.
        """
        c = self.base
        s = -1.0 if self.flipped else 1.0
        scalar = np.ndim(alpha) == 0
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        eta, xi = c.interval.lo_f, c.interval.hi_f
        lo = np.full(alpha.shape, eta)
        hi = np.full(alpha.shape, xi)
        target = s * alpha
        outside = (alpha < self.Upsilon) | (alpha > self.Xi) | ~np.isfinite(alpha)
        # coarse bracket
        for _ in range(20):
            mid = 0.5 * (lo + hi)
            up = s * c._fp(mid) < target
            lo = np.where(up, mid, lo)
            hi = np.where(up, hi, mid)
        x = 0.5 * (lo + hi)
        done = np.zeros(alpha.shape, dtype=bool) | outside
        for _ in range(ROOT_MAXITER - 20):
            if done.all():
                break
            r = s * c._fp(x) - target
            lo = np.where(~done & (r < 0), x, lo)
            hi = np.where(~done & (r > 0), x, hi)
            step = r / (s * c._fpp(x))
            xn = x - step
            bad = ~((xn >= lo) & (xn <= hi)) | ~np.isfinite(xn)
            xn = np.where(bad, 0.5 * (lo + hi), xn)
            conv = (np.abs(xn - x) <= ROOT_RTOL * np.maximum(1.0, np.abs(x))) | (r == 0)
            x = np.where(done, x, xn)
            done = done | conv
        x = np.where(outside, np.nan, x)
        ok = done & ~outside
        if scalar:
            x, ok = float(x[0]), bool(ok[0])
        return (x, ok) if return_flags else x

    def F(self, alpha):
        b = self.g(alpha)
        return alpha * b - self.base._f(b)

    def Fp(self, alpha):
        return self.g(alpha)

    def Fpp(self, alpha):
        return 1.0 / self.base._fpp(self.g(alpha))

    def as_curve(self) -> Curve:
        """F on [Upsilon, Xi] as an ordinary (non-compiled) curve."""
        iv = Interval(Fraction(self.Upsilon), Fraction(self.Xi))
        return curve_from_functions(f"dual({self.base.name})", iv, self.F, self.Fp, self.Fpp)


def build_dual(curve: Curve) -> DualCurve:
    """Dual of a curve whose f'' keeps one sign on its interval."""
    xs = np.linspace(curve.interval.lo_f, curve.interval.hi_f, 10_001)
    v = curve._fpp(xs)
    if np.any(v > 0) and np.any(v < 0) or np.any(v == 0):
        raise ValidationError(f"f'' of {curve.name} changes sign or vanishes; no dual")
    flipped = bool(v[0] < 0)
    e1 = float(curve._fp(curve.interval.lo_f))
    e2 = float(curve._fp(curve.interval.hi_f))
    return DualCurve(base=curve, Upsilon=min(e1, e2), Xi=max(e1, e2), flipped=flipped)


@dataclass
class DualCheck:
    roundtrip: float
    fp_vs_g: float
    fpp_product: float


def check_dual(dual: DualCurve, grid_n: int = 1000, h: float = 1e-5) -> DualCheck:
    """Max errors of g(f'(x)) = x, F' = g and F''(alpha) f''(g(alpha)) = 1.

    F' and F'' are taken by central differences of F and g, so neither check
    uses the closed form it verifies.
    """
    c = dual.base
    xs = np.linspace(c.interval.lo_f, c.interval.hi_f, grid_n)
    rt = float(np.max(np.abs(dual.g(c._fp(xs)) - xs)))
    al = np.linspace(dual.Upsilon + 2 * h, dual.Xi - 2 * h, grid_n)
    fd1 = (dual.F(al + h) - dual.F(al - h)) / (2 * h)
    e1 = float(np.max(np.abs(fd1 - dual.g(al))))
    fd2 = (dual.g(al + h) - dual.g(al - h)) / (2 * h)
    e2 = float(np.max(np.abs(fd2 * c._fpp(dual.g(al)) - 1)))
    return DualCheck(rt, e1, e2)


def index_ranges(dual: DualCurve, j: int) -> tuple:
    """(H_minus, H_plus, h_minus, h_plus) from inf/sup of j f' over the interval."""
    if j == 0:
        raise ValidationError("j must be nonzero")
    a, b = j * dual.Upsilon, j * dual.Xi
    lo, hi = min(a, b), max(a, b)
    return math.floor(lo) - 1, math.ceil(hi) + 1, math.ceil(lo) + 1, math.floor(hi) - 1


@dataclass(frozen=True)
class LambdaRecord:
    j: int
    h: int
    beta_h: float
    phi_h: float
    lambda_h: float
    lambda_dual: float = field(repr=False, default=float("nan"))


def _records_arrays(dual: DualCurve, j: int, hs: np.ndarray):
    alpha = hs / j
    beta, ok = dual.g(alpha, return_flags=True)
    if not ok.all():
        bad = hs[~ok].tolist()
        raise RootFindError(f"beta root-find did not converge for j={j}, h in {bad}")
    phi = j * dual.base._f(beta) - hs * beta
    lam = nearest_int_dist(phi)
    lam2 = nearest_int_dist(j * dual.F(alpha))
    err = np.abs(lam - lam2)
    if err.size and err.max() > LAMBDA_AGREE:
        k = int(np.argmax(err))
        raise ArithmeticError(
            f"lambda formulas disagree at j={j}, h={int(hs[k])}: {lam[k]!r} vs {lam2[k]!r}")
    return beta, phi, lam, lam2


def lambda_record(dual: DualCurve, j: int, h: int) -> LambdaRecord:
    """The record for one (j, h) with h/j in [Upsilon, Xi]; no range filter."""
    if j == 0:
        raise ValidationError("j must be nonzero")
    if not dual.Upsilon <= h / j <= dual.Xi:
        raise ValidationError(f"h/j = {h / j:g} outside [{dual.Upsilon:g}, {dual.Xi:g}]")
    beta, phi, lam, lam2 = _records_arrays(dual, j, np.array([h], dtype=float))
    return LambdaRecord(j, h, float(beta[0]), float(phi[0]), float(lam[0]), float(lam2[0]))


def lambda_records(dual: DualCurve, j: int) -> list:
    """All records with h_minus < h < h_plus (empty when h_plus <= h_minus + 1)."""
    *_, hm, hp = index_ranges(dual, j)
    if hp <= hm + 1:
        return []
    hs = np.arange(hm + 1, hp, dtype=float)
    beta, phi, lam, lam2 = _records_arrays(dual, j, hs)
    return [LambdaRecord(j, int(h), float(b), float(p), float(l), float(l2))
            for h, b, p, l, l2 in zip(hs, beta, phi, lam, lam2)]


def lambda_table(dual: DualCurve, J: int) -> dict:
    """Column arrays j, h, beta, phi, lambda over 0 < |j| <= J."""
    cols = {k: [] for k in ("j", "h", "beta", "phi", "lambda")}
    for j in [*range(-J, 0), *range(1, J + 1)]:
        *_, hm, hp = index_ranges(dual, j)
        if hp <= hm + 1:
            continue
        hs = np.arange(hm + 1, hp, dtype=float)
        beta, phi, lam, _ = _records_arrays(dual, j, hs)
        cols["j"].append(np.full(hs.shape, j, dtype=np.int64))
        cols["h"].append(hs.astype(np.int64))
        cols["beta"].append(beta)
        cols["phi"].append(phi)
        cols["lambda"].append(lam)
    return {k: (np.concatenate(v) if v else np.zeros(0)) for k, v in cols.items()}


@dataclass
class Lemma23Sums:
    J: int
    Q: int
    S5: float
    S6: float
    S7: float
    rhs5: float
    rhs6: float
    rhs7: float
    n7: int


def lemma23_sums(dual: DualCurve, J: int, Q: int, eps: float = 0.05,
                 table: dict | None = None) -> Lemma23Sums:
    """The three lambda sums and their unit-constant right-hand shapes.

    ``log J`` in the shapes is taken as ``log max(J, 2)``.
    """
    if J < 1 or Q < 1:
        raise ValidationError("J and Q must be >= 1")
    t = lambda_table(dual, J) if table is None else table
    sel = np.abs(t["j"]) <= J
    jj = np.abs(t["j"][sel]).astype(float)
    lam = t["lambda"][sel]
    big = lam > 1.0 / Q
    w = jj ** -0.5
    S5 = math.fsum(w[big] * lam[big] ** -0.5)
    S6 = math.fsum(w[big] / lam[big])
    S7 = math.fsum(w[~big])
    L = math.log(max(J, 2))
    return Lemma23Sums(
        J, Q, S5, S6, S7,
        rhs5=J ** 1.5 + J ** 0.5 * L * Q ** 0.5,
        rhs6=J ** 1.5 * Q ** eps + J ** 0.5 * L * Q,
        rhs7=J ** 1.5 * Q ** (eps - 1) + J ** 0.5 * L,
        n7=int((~big).sum()),
    )


def s7_count_dual_side(dual: DualCurve, J: int, Q: int) -> int:
    """card{(j, h): lambda <= 1/Q} recounted as a scan of ||r F(b/r)|| <= 1/Q
    on the dual curve, with b restricted to each r's (h_minus, h_plus)."""
    from .counting import scan

    Fc = dual.as_curve()
    a_lo, a_hi = [], []
    for r in range(1, J + 1):
        *_, hm, hp = index_ranges(dual, r)
        a_lo.append(hm + 1)
        a_hi.append(hp - 1)
    out = scan(Fc, 1, J, Fraction(1, Q), strict=False, method="float-guarded",
               a_ranges=(np.array(a_lo), np.array(a_hi)))
    # j < 0 mirrors j > 0 with h -> -h
    return 2 * int(out.per_q.sum())
