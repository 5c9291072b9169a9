"""Small exact/float helpers shared across modules."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

Real = Union[int, float, str, Fraction]


class ValidationError(ValueError):
    """Raised when an input violates an operation's preconditions."""


def as_fraction(x: Real) -> Fraction:
    """Exact rational for ``x``.

    Floats are read as the decimal they print as, so ``0.1`` becomes 1/10
    rather than the nearest binary double.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a real number")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValidationError(f"non-finite value {x!r}")
        return Fraction(repr(x))
    if isinstance(x, str):
        s = x.strip()
        try:
            return Fraction(s)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"cannot parse rational literal {x!r}") from exc
    raise TypeError(f"unsupported real type {type(x).__name__}")


def dist_to_int(x: Fraction) -> Fraction:
    """||x||, the distance from ``x`` to the nearest integer."""
    r = x - math.floor(x)
    return min(r, 1 - r)


def fmt_real(x: float) -> str:
    """17 significant digits: round-trips every double exactly."""
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return format(float(x), ".17g")


def ceil_frac(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def floor_frac(x: Fraction) -> int:
    return x.numerator // x.denominator
