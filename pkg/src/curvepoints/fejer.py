"""Fejer kernel K_J and the majorant it gives for the dyadic count.

``e(x)`` is ``exp(2 pi i x)`` throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from ._numeric import Real, ValidationError, as_fraction, floor_frac
from .counting import _poly_int_form, count_by_q, count_N_tilde, validate_delta
from .curves import Curve

CLAIMED_FLOOR = 2 / math.pi
SQUARED_FLOOR = 4 / math.pi ** 2
_NEAR_INT = 1e-8


@dataclass(frozen=True)
class FejerKernel:
    J: int

    def __post_init__(self):
        if int(self.J) != self.J or self.J < 1:
            raise ValidationError(f"J must be a positive integer, got {self.J!r}")

    @classmethod
    def from_delta(cls, delta: Real) -> "FejerKernel":
        return cls(kernel_order(delta))

    def __call__(self, alpha):
        return eval_kernel(self, alpha)


def kernel_order(delta: Real) -> int:
    """J = floor(1 / (2 delta)), computed exactly."""
    d = as_fraction(delta)
    validate_delta(d)
    return floor_frac(1 / (2 * d))


def _J(k) -> int:
    return k.J if isinstance(k, FejerKernel) else int(k)


def eval_kernel(k, alpha):
    """(sin(pi J a) / (J sin(pi a)))**2, equal to 1 at integers; in [0, 1].

    ``alpha`` is first reduced to t = alpha - round(alpha) in [-1/2, 1/2];
    where |sin(pi t)| < 1e-8 the ratio is replaced by its Taylor limit.
    """
    J = _J(k)
    a = np.asarray(alpha, dtype=float)
    t = a - np.rint(a)
    s = np.sin(np.pi * t)
    near = np.abs(s) < _NEAR_INT
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.sin(np.pi * J * t) / (J * s)
    # sin(pi J t) / (J sin(pi t)) = 1 - (J^2 - 1) (pi t)^2 / 6 + O(t^4); the
    # sign (-1)^(J m) of the numerator at alpha = m + t disappears on squaring
    ratio = np.where(near, 1 - (J * J - 1) * (np.pi * t) ** 2 / 6, ratio)
    out = np.clip(ratio * ratio, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def kernel_direct(J: int, alpha):
    """|sum_{h=1}^J e(h alpha)|^2 / J^2 by explicit complex summation."""
    a = np.atleast_1d(np.asarray(alpha, dtype=float))
    h = np.arange(1, J + 1)
    z = np.exp(2j * np.pi * np.outer(a, h)).sum(axis=1)
    return np.abs(z) ** 2 / J ** 2


def kernel_fourier(J: int, alpha):
    """sum_{|j| <= J} (J - |j|) / J^2 e(j alpha); returns the complex value."""
    a = np.atleast_1d(np.asarray(alpha, dtype=float))
    j = np.arange(-J, J + 1)
    w = (J - np.abs(j)) / J ** 2
    return (w * np.exp(2j * np.pi * np.outer(a, j))).sum(axis=1)


def fourier_identity_check(k, alphas) -> float:
    """max |K_J(alpha) - Fourier side| over the grid."""
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    if alphas.size == 0:
        raise ValidationError("grid must be nonempty")
    J = _J(k)
    return float(np.max(np.abs(eval_kernel(J, alphas) - kernel_fourier(J, alphas))))


@dataclass
class LowerBound:
    delta: float
    J: int
    min_value: float
    argmin: float
    claimed_floor: float = CLAIMED_FLOOR
    squared_floor: float = SQUARED_FLOOR

    @property
    def holds(self) -> bool:
        """min K_J >= 2/pi on the grid."""
        return self.min_value >= self.claimed_floor

    @property
    def holds_squared(self) -> bool:
        """min K_J >= (2/pi)^2, the floor the squared kernel actually obeys."""
        return self.min_value >= self.squared_floor


def lower_bound_check(delta: Real, alphas) -> LowerBound:
    """Minimum of K_J over points with ||alpha|| <= delta, J = floor(1/(2 delta))."""
    d = as_fraction(delta)
    J = kernel_order(d)
    a = np.atleast_1d(np.asarray(alphas, dtype=float))
    dist = np.abs(a - np.rint(a))
    if np.any(dist > float(d) * (1 + 1e-15)):
        bad = float(a[np.argmax(dist)])
        raise ValidationError(f"grid point {bad!r} has ||alpha|| > delta = {float(d)}")
    vals = eval_kernel(J, a)
    i = int(np.argmin(vals))
    return LowerBound(float(d), J, float(vals[i]), float(a[i]))


def near_integer_grid(delta: Real, n: int = 1000, shift: int = 0) -> np.ndarray:
    """n points with ||alpha|| <= delta, endpoints +-delta included."""
    d = float(as_fraction(delta))
    return shift + np.linspace(-d, d, n)


def _candidates(curve: Curve, q: int) -> range:
    return range(floor_frac(curve.interval.lo * q) + 1, floor_frac(curve.interval.hi * q) + 1)


def _residues(curve: Curve, q: int):
    """(r, M) with q f(a/q) = r/M mod 1 for each candidate a; polynomials only."""
    D, C = _poly_int_form(curve.exact_coeffs)
    d = len(C) - 1
    M = D * q ** (d - 1)
    tq = [C[k] * q ** (d - k) for k in range(d + 1)]
    res = []
    for a in _candidates(curve, q):
        acc = 0
        for k in range(d, -1, -1):
            acc = acc * a + tq[k]
        res.append(acc % M)
    return res, M


def _phases(curve: Curve, q: int) -> np.ndarray:
    """q f(a/q) mod 1 for all candidate a of one q; exact residues for polynomials."""
    if curve.exact_hint:
        res, M = _residues(curve, q)
        return np.array([float(Fraction(r, M)) for r in res])
    a = np.array(_candidates(curve, q), dtype=float)
    y = q * np.asarray(curve._f(a / q), dtype=float)
    return y - np.floor(y)


def majorant_terms(curve: Curve, q_lo: int, q_hi: int, delta: Real) -> np.ndarray:
    """Per-q sums  sum_a K_J(q f(a/q))  for q in [q_lo, q_hi] (fsum per q)."""
    J = kernel_order(delta)
    return np.array([math.fsum(np.atleast_1d(eval_kernel(J, _phases(curve, q))))
                     for q in range(q_lo, q_hi + 1)])


@dataclass
class MajorantResult:
    Q: int
    delta: float
    J: int
    N_tilde: int
    kernel_sum: float
    majorant: float
    slack: float

    @property
    def majorant_squared(self) -> float:
        """(pi^2 / 4) * kernel sum, valid pointwise for the squared kernel."""
        return self.kernel_sum * math.pi ** 2 / 4


def majorant_chain(curve: Curve, Q: int, delta: Real, method: str = "auto",
                   threads: Optional[int] = None) -> MajorantResult:
    """N~(Q, delta) against (pi/2) sum_{Q<q<=2Q} sum_a K_J(q f(a/q)).

    ``slack = majorant - N_tilde``; it is reported, not asserted.
    """
    d = as_fraction(delta)
    J = kernel_order(d)
    nt = count_N_tilde(curve, Q, d, method=method, threads=threads).count
    ks = math.fsum(majorant_terms(curve, Q + 1, 2 * Q, d))
    maj = math.pi / 2 * ks
    return MajorantResult(int(Q), float(d), J, nt, ks, maj, maj - nt)


def majorant_sweep(curve: Curve, Q_max: int, delta: Real, method: str = "auto",
                   threads: Optional[int] = None) -> list:
    """majorant_chain for every Q in 1..Q_max from one pass over q <= 2 Q_max."""
    d = as_fraction(delta)
    J = kernel_order(d)
    per_q = count_by_q(curve, 1, 2 * Q_max, d, method, threads)
    terms = majorant_terms(curve, 1, 2 * Q_max, d)
    out = []
    for Q in range(1, Q_max + 1):
        nt = int(per_q[Q:2 * Q].sum())
        ks = math.fsum(terms[Q:2 * Q])
        maj = math.pi / 2 * ks
        out.append(MajorantResult(Q, float(d), J, nt, ks, maj, maj - nt))
    return out


def exp_sum(curve: Curve, j: int, q: int) -> complex:
    """sum over eta q < a <= xi q of e(j q f(a/q)), compensated (fsum) per component."""
    if j == 0:
        raise ValidationError("j must be nonzero")
    if q < 1:
        raise ValidationError("q must be >= 1")
    if curve.exact_hint:
        res, M = _residues(curve, q)
        theta = 2 * np.pi * np.array([float(Fraction(j * r % M, M)) for r in res])
    else:
        x = j * _phases(curve, q)
        theta = 2 * np.pi * (x - np.floor(x))
    return complex(math.fsum(np.cos(theta)), math.fsum(np.sin(theta)))
