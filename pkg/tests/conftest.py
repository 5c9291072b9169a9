import math
from fractions import Fraction

import mpmath
import pytest

from curvepoints.curves import make_builtin


def brute_count(curve, q_lo, q_hi, delta, strict=True):
    """Reference count straight from the definition, exact or 60-digit."""
    d = Fraction(delta) if not isinstance(delta, float) else Fraction(repr(delta))
    lo, hi = curve.interval.lo, curve.interval.hi
    n = 0
    for q in range(q_lo, q_hi + 1):
        for a in range(math.floor(lo * q) + 1, math.floor(hi * q) + 1):
            if curve.exact_hint:
                y = curve.value_exact(a, q)
                r = y - math.floor(y)
                dist = min(r, 1 - r)
            else:
                with mpmath.workdps(60):
                    y = curve.value_mp(a, q, 60)
                    dist = Fraction(str(abs(y - mpmath.nint(y))))
            n += dist < d if strict else dist <= d
    return n


@pytest.fixture(scope="session")
def parabola():
    return make_builtin("parabola", "0,1")


@pytest.fixture(scope="session")
def exp_curve():
    return make_builtin("exp", "0,1")


@pytest.fixture(scope="session")
def circle():
    return make_builtin("circle-arc", "-1/2,1/2")


CURVES = [("parabola", "0,1"), ("scaled-parabola", "0,1"), ("circle-arc", "-1/2,1/2"),
          ("exp", "0,1")]


ACCEPTANCE_LINES = []


def report(tag, ok, detail):
    """Record one acceptance line; it is echoed live and repeated in the summary."""
    line = f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print("\n" + line, flush=True)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
