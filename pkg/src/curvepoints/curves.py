"""Planar curves y = f(x) on a closed interval with certified curvature bounds.

A :class:`Curve` carries vectorised evaluators for f, f' and f'', the
constants ``c1 = inf |f''|`` and ``c2 = sup |f''|``, ``fp_bound = sup |f'|``
and optional Hoelder data for f''.  Built-in curves are created from a short
spec string (see :func:`parse_curve_spec`)::

    parabola            x**2
    scaled-parabola     x**2 / 2
    circle-arc          sqrt(1 - x**2)
    exp                 exp(x)
    log                 log(x)
    poly:a0,a1,...,ak   a0 + a1 x + ... + ak x**k  (integers or p/q literals)
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import mpmath
import numpy as np
from numpy.polynomial import polynomial as P

from ._numeric import Real, ValidationError, as_fraction

# numba dispatch codes, mirrored in _engine
KIND_GENERIC = -1
KIND_POLY = 0
KIND_CIRCLE = 1
KIND_EXP = 2
KIND_LOG = 3

DEFAULT_FLOOR = 1e-6
SAMPLE_N = 10_000
SAFETY = 0.01

BUILTIN_NAMES = ("parabola", "scaled-parabola", "circle-arc", "exp", "log", "poly")

Evaluator = Callable[[np.ndarray], np.ndarray]


class CurveDomainWarning(UserWarning):
    """An evaluator was queried outside the curve's interval and clamped."""


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] with exact rational endpoints."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", as_fraction(self.lo))
        object.__setattr__(self, "hi", as_fraction(self.hi))
        if not self.lo < self.hi:
            raise ValidationError(f"empty interval: need lo < hi, got [{self.lo}, {self.hi}]")

    @classmethod
    def parse(cls, text: str) -> "Interval":
        parts = [p for p in text.replace(" ", "").split(",") if p]
        if len(parts) != 2:
            raise ValidationError(f"interval must be 'lo,hi', got {text!r}")
        return cls(as_fraction(parts[0]), as_fraction(parts[1]))

    @property
    def lo_f(self) -> float:
        return float(self.lo)

    @property
    def hi_f(self) -> float:
        return float(self.hi)

    @property
    def width(self) -> float:
        return float(self.hi - self.lo)

    def __str__(self) -> str:
        return f"{self.lo},{self.hi}"


@dataclass(frozen=True, eq=False)
class Curve:
    """An immutable non-degenerate curve on a closed interval.

    The public evaluators :meth:`f`, :meth:`fp`, :meth:`fpp` clamp inputs
    outside the interval to the nearest endpoint and emit a
    :class:`CurveDomainWarning`.  The raw (unclamped) callables are kept in
    ``_f``/``_fp``/``_fpp`` for internal use on points known to lie in I.
    """

    name: str
    interval: Interval
    _f: Evaluator = field(repr=False)
    _fp: Evaluator = field(repr=False)
    _fpp: Evaluator = field(repr=False)
    c1: float
    c2: float
    fp_bound: float
    theta: Optional[float] = None
    lip_const: Optional[float] = None
    exact_coeffs: Optional[tuple] = None
    kind: int = KIND_GENERIC
    params: tuple = ()
    f_mp: Optional[Callable] = field(default=None, repr=False)
    sign: int = 1
    floor: float = DEFAULT_FLOOR

    @property
    def exact_hint(self) -> bool:
        return self.exact_coeffs is not None

    @property
    def certified(self) -> bool:
        return self.c1 > self.floor and self.c2 >= self.c1 and math.isfinite(self.c2)

    def _clamp(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.interval.lo_f, self.interval.hi_f
        if np.any((x < lo) | (x > hi)):
            warnings.warn(f"{self.name}: query outside [{lo}, {hi}] clamped",
                          CurveDomainWarning, stacklevel=3)
            x = np.clip(x, lo, hi)
        return x

    def f(self, x):
        return self._f(self._clamp(x))

    def fp(self, x):
        return self._fp(self._clamp(x))

    def fpp(self, x):
        return self._fpp(self._clamp(x))

    def value_exact(self, a: int, q: int) -> Fraction:
        """q*f(a/q) as an exact rational; polynomial curves only."""
        if self.exact_coeffs is None:
            raise TypeError(f"{self.name} has no exact rational form")
        x = Fraction(a, q)
        acc = Fraction(0)
        for c in reversed(self.exact_coeffs):
            acc = acc * x + c
        return q * acc

    def value_mp(self, a: int, q: int, dps: int = 50):
        """q*f(a/q) in mpmath at ``dps`` digits, or None when unavailable."""
        if self.f_mp is None:
            return None
        with mpmath.workdps(dps):
            return q * self.f_mp(mpmath.mpf(a) / q)


@dataclass
class NondegeneracyReport:
    min_abs_fpp: float
    max_abs_fpp: float
    argmin: float
    argmax: float
    sign_change: bool
    ok: bool

    @property
    def witness_points(self):
        return (self.argmin, self.argmax)


def parse_curve_spec(spec: str) -> tuple:
    """Split a curve spec into ``(name, coeffs)``; coeffs is None unless poly."""
    spec = spec.strip()
    if spec.startswith("poly:"):
        body = spec[len("poly:"):]
        try:
            coeffs = tuple(as_fraction(t) for t in body.split(",") if t.strip())
        except (ValidationError, TypeError) as exc:
            raise ValidationError(f"bad poly coefficients in {spec!r}") from exc
        if not coeffs:
            raise ValidationError("poly: needs at least one coefficient")
        return "poly", coeffs
    if spec not in BUILTIN_NAMES or spec == "poly":
        raise ValidationError(f"unknown curve {spec!r}; expected one of {BUILTIN_NAMES}")
    return spec, None


def _trim(coeffs: Sequence[Fraction]) -> tuple:
    c = list(coeffs)
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return tuple(c)


def _poly_deriv_exact(coeffs: Sequence[Fraction]) -> tuple:
    return tuple(k * c for k, c in enumerate(coeffs))[1:] or (Fraction(0),)


def _poly_abs_extrema(coeffs: Sequence[Fraction], lo: float, hi: float):
    """(min |p|, argmin, max |p|, argmax, sign_change) of a polynomial on [lo, hi]."""
    cf = np.array([float(c) for c in coeffs])
    cands = [lo, hi]
    if len(cf) > 2:
        for r in P.polyroots(P.polyder(cf)):
            if abs(r.imag) < 1e-12 and lo < r.real < hi:
                cands.append(float(r.real))
    sign_change = False
    if len(cf) > 1:
        for r in P.polyroots(cf):
            if abs(r.imag) < 1e-12 and lo <= r.real <= hi:
                sign_change = True
                cands.append(float(r.real))
    vals = np.abs(P.polyval(np.array(cands), cf))
    if len(coeffs) == 1:
        # constant: use the exact value
        v = abs(float(coeffs[0]))
        vals = np.full(len(cands), v)
    i, j = int(np.argmin(vals)), int(np.argmax(vals))
    mn = 0.0 if sign_change else float(vals[i])
    return mn, cands[i], float(vals[j]), cands[j], sign_change


def _poly_curve(name, interval, coeffs, floor):
    coeffs = _trim(coeffs)
    cf = np.array([float(c) for c in coeffs])
    d1 = _poly_deriv_exact(coeffs)
    d2 = _poly_deriv_exact(d1)
    d3 = _poly_deriv_exact(d2)
    cf1 = np.array([float(c) for c in d1])
    cf2 = np.array([float(c) for c in d2])
    lo, hi = interval.lo_f, interval.hi_f
    c1, _, c2, _, _ = _poly_abs_extrema(d2, lo, hi)
    _, _, fpb, _, _ = _poly_abs_extrema(d1, lo, hi)
    _, _, lip, _, _ = _poly_abs_extrema(d3, lo, hi)
    s = 1 if P.polyval((lo + hi) / 2, cf2) >= 0 else -1

    def f_mp(x, _c=coeffs):
        acc = mpmath.mpf(0)
        for c in reversed(_c):
            acc = acc * x + mpmath.mpf(c.numerator) / c.denominator
        return acc

    return Curve(
        name=name, interval=interval,
        _f=lambda x: P.polyval(x, cf), _fp=lambda x: P.polyval(x, cf1),
        _fpp=lambda x: P.polyval(x, cf2),
        c1=c1, c2=c2, fp_bound=fpb, theta=1.0, lip_const=lip,
        exact_coeffs=coeffs, kind=KIND_POLY, params=tuple(float(c) for c in coeffs),
        f_mp=f_mp, sign=s, floor=floor,
    )


def make_builtin(name: str, interval: Interval | str, floor: float = DEFAULT_FLOOR,
                 check: bool = True) -> Curve:
    """Build a catalogue curve from a spec string on ``interval``.

    With ``check=True`` (the default) a curve whose |f''| dips below ``floor``
    anywhere on the interval is rejected.  ``check=False`` returns the curve
    anyway so that :func:`check_nondegenerate` can report on it; such a curve
    is not ``certified`` and counting operations refuse it.
    """
    if isinstance(interval, str):
        interval = Interval.parse(interval)
    kind_name, coeffs = parse_curve_spec(name)
    lo, hi = interval.lo_f, interval.hi_f

    if kind_name == "parabola":
        curve = _poly_curve("parabola", interval, (Fraction(0), Fraction(0), Fraction(1)), floor)
    elif kind_name == "scaled-parabola":
        curve = _poly_curve("scaled-parabola", interval,
                            (Fraction(0), Fraction(0), Fraction(1, 2)), floor)
    elif kind_name == "poly":
        curve = _poly_curve(name, interval, coeffs, floor)
    elif kind_name == "circle-arc":
        if not (-1 < lo and hi < 1):
            raise ValidationError("circle-arc needs an interval inside (-1, 1)")
        m_near = 0.0 if lo <= 0 <= hi else min(abs(lo), abs(hi))
        m_far = max(abs(lo), abs(hi))
        curve = Curve(
            name="circle-arc", interval=interval,
            _f=lambda x: np.sqrt(1 - np.square(x)),
            _fp=lambda x: -np.asarray(x) / np.sqrt(1 - np.square(x)),
            _fpp=lambda x: -(1 - np.square(x)) ** -1.5,
            c1=(1 - m_near ** 2) ** -1.5, c2=(1 - m_far ** 2) ** -1.5,
            fp_bound=m_far / math.sqrt(1 - m_far ** 2),
            theta=1.0, lip_const=3 * m_far * (1 - m_far ** 2) ** -2.5,
            kind=KIND_CIRCLE, f_mp=lambda x: mpmath.sqrt(1 - x * x), sign=-1, floor=floor,
        )
    elif kind_name == "exp":
        curve = Curve(
            name="exp", interval=interval, _f=np.exp, _fp=np.exp, _fpp=np.exp,
            c1=math.exp(lo), c2=math.exp(hi), fp_bound=math.exp(hi),
            theta=1.0, lip_const=math.exp(hi), kind=KIND_EXP, f_mp=mpmath.exp,
            floor=floor,
        )
    elif kind_name == "log":
        if lo <= 0:
            raise ValidationError("log needs an interval inside (0, inf)")
        curve = Curve(
            name="log", interval=interval, _f=np.log,
            _fp=lambda x: 1 / np.asarray(x, dtype=float),
            _fpp=lambda x: -1 / np.square(x),
            c1=1 / hi ** 2, c2=1 / lo ** 2, fp_bound=1 / lo,
            theta=1.0, lip_const=2 / lo ** 3, kind=KIND_LOG, f_mp=mpmath.log,
            sign=-1, floor=floor,
        )
    else:  # pragma: no cover - parse_curve_spec guards this
        raise ValidationError(f"unknown curve {name!r}")

    if check and not curve.certified:
        rep = check_nondegenerate(curve, 1000)
        raise ValidationError(
            f"{name} is degenerate on [{interval}]: min |f''| = {rep.min_abs_fpp:.3g} "
            f"at x = {rep.argmin:.6g} (floor {floor:g})")
    return curve


def curve_from_functions(name: str, interval: Interval, f: Evaluator, fp: Evaluator,
                         fpp: Evaluator, floor: float = DEFAULT_FLOOR,
                         theta: Optional[float] = None, lip_const: Optional[float] = None,
                         f_mp: Optional[Callable] = None) -> Curve:
    """Wrap user evaluators; c1, c2 and fp_bound come from sampling with a 1% margin."""
    xs = np.linspace(interval.lo_f, interval.hi_f, SAMPLE_N)
    a2 = np.abs(fpp(xs))
    s2 = np.sign(fpp(xs))
    fpb = float(np.max(np.abs(fp(xs))))
    c1 = 0.0 if np.any(s2 != s2[0]) else float(np.min(a2)) * (1 - SAFETY)
    curve = Curve(
        name=name, interval=interval, _f=f, _fp=fp, _fpp=fpp,
        c1=c1, c2=float(np.max(a2)) * (1 + SAFETY), fp_bound=fpb * (1 + SAFETY),
        theta=theta, lip_const=lip_const, f_mp=f_mp,
        sign=int(s2[0]) if s2[0] != 0 else 1, floor=floor,
    )
    if not curve.certified:
        raise ValidationError(f"{name} is degenerate on [{interval}]")
    return curve


def check_nondegenerate(curve: Curve, grid_n: int = 1000,
                        floor: Optional[float] = None) -> NondegeneracyReport:
    """Scan |f''| on ``grid_n`` points (endpoints included).

    A sign change of f'' between neighbouring grid points means f'' vanishes
    in between; the zero is located by bisection and reported as the argmin
    with ``min_abs_fpp = 0``.
    """
    if grid_n < 2:
        raise ValidationError("grid_n must be >= 2")
    floor = curve.floor if floor is None else floor
    xs = np.linspace(curve.interval.lo_f, curve.interval.hi_f, grid_n)
    v = curve._fpp(xs)
    a = np.abs(v)
    i, j = int(np.argmin(a)), int(np.argmax(a))
    mn, argmin = float(a[i]), float(xs[i])
    flips = np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]
    if len(flips):
        lo_x, hi_x = float(xs[flips[0]]), float(xs[flips[0] + 1])
        s_lo = math.copysign(1.0, float(curve._fpp(lo_x)))
        for _ in range(100):
            mid = 0.5 * (lo_x + hi_x)
            if math.copysign(1.0, float(curve._fpp(mid))) == s_lo:
                lo_x = mid
            else:
                hi_x = mid
        mn, argmin = 0.0, 0.5 * (lo_x + hi_x)
    return NondegeneracyReport(
        min_abs_fpp=mn, max_abs_fpp=float(a[j]), argmin=argmin, argmax=float(xs[j]),
        sign_change=bool(len(flips)), ok=bool(mn >= floor and not len(flips)),
    )
