from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import CURVES, brute_count
from curvepoints import ValidationError, make_builtin
from curvepoints.counting import (bound_envelope, count_by_q, count_coprime_triples, count_N,
                                  count_N_tilde, count_Nf, lemma22_count, scan, thm1_rhs)
from curvepoints.metric import ApproxFunction


def test_parabola_reference_value(parabola):
    assert count_N(parabola, 50, 0.1).count == 330
    assert brute_count(parabola, 1, 50, 0.1) == 330


@pytest.mark.parametrize("name,iv", CURVES + [("poly:0,1/3,1,-1/5", "0,1"), ("log", "1,2")])
@pytest.mark.parametrize("delta", ["0.03", "0.25"])
def test_matches_definition(name, iv, delta):
    c = make_builtin(name, iv)
    want = brute_count(c, 1, 40, Fraction(delta))
    for method in ("oracle-exact", "float-guarded", "auto"):
        assert count_N(c, 40, delta, method=method).count == want


def test_strict_inequality_at_exact_hits(parabola):
    # q f(a/q) = a^2/q; a=1, q=4 gives 1/4: excluded at delta=1/4 strict
    strict = scan(parabola, 4, 4, Fraction(1, 4), strict=True).per_q[0]
    loose = scan(parabola, 4, 4, Fraction(1, 4), strict=False).per_q[0]
    assert loose == strict + 2  # a = 1 and a = 3 both land on 1/4 mod 1


def test_decimal_delta_semantics(parabola):
    # 0.1 means exactly 1/10, not the nearest double
    assert count_N(parabola, 60, 0.1).count == count_N(parabola, 60, Fraction(1, 10)).count


@pytest.mark.parametrize("bad", [0, 0.5, 0.6, -0.1, "x"])
def test_delta_validation(parabola, bad):
    with pytest.raises(ValidationError):
        count_N(parabola, 10, bad)


def test_Q_validation(parabola):
    with pytest.raises(ValidationError):
        count_N(parabola, 0, 0.1)


def test_dyadic_identity(parabola, exp_curve):
    for c in (parabola, exp_curve):
        for Q in (1, 7, 33, 100):
            t = count_N_tilde(c, Q, 0.05).count
            assert t == count_N(c, 2 * Q, 0.05).count - count_N(c, Q, 0.05).count


@settings(max_examples=25, deadline=None)
@given(Q=st.integers(1, 120), dQ=st.integers(0, 40),
       d1=st.fractions(Fraction(1, 200), Fraction(49, 100)),
       d2=st.fractions(Fraction(1, 200), Fraction(49, 100)))
def test_monotone_in_Q_and_delta(Q, dQ, d1, d2):
    c = make_builtin("parabola", "0,1")
    lo, hi = sorted((d1, d2))
    assert count_N(c, Q, lo).count <= count_N(c, Q, hi).count
    assert count_N(c, Q, lo).count <= count_N(c, Q + dQ, lo).count


def test_trivial_upper_bound(exp_curve):
    Q = 80
    n = count_N(exp_curve, Q, 0.49).count
    assert n <= sum(q + 1 for q in range(1, Q + 1))


@pytest.mark.parametrize("threads", [1, 4, 8])
def test_thread_count_does_not_change_result(threads):
    c = make_builtin("circle-arc", "-1/2,1/2")
    base = count_by_q(c, 1, 700, 0.05, "float-guarded", threads=1)
    assert np.array_equal(count_by_q(c, 1, 700, 0.05, "float-guarded", threads=threads), base)
    p = make_builtin("parabola", "0,1")
    assert count_N(p, 2000, 0.01, threads=threads).count == count_N(p, 2000, 0.01, threads=1).count


def test_points_consistent(parabola):
    r = count_N(parabola, 30, 0.1, points=True)
    assert len(r.points) == r.count
    for a, q, d in r.points:
        y = Fraction(a * a, q)
        assert float(d) == pytest.approx(float(abs(y - round(y))), abs=1e-15)
        assert float(d) < 0.1


def test_count_nf_below_majorant(parabola):
    psi = ApproxFunction(1.0, 2 / 3)
    r = count_Nf(parabola, psi, 64)
    assert r.extra["psi_Q"] == Fraction(1, 16)
    assert r.count <= r.extra["majorant"]


def test_count_nf_rejects_large_psi(parabola):
    with pytest.raises(ValidationError):
        count_Nf(parabola, ApproxFunction(1.0, 0.1), 4)


def test_coprime_classes_sum_to_double_sum(parabola):
    r = count_coprime_triples(parabola, 40, 0.1)
    assert sum(r.extra["by_gcd"].values()) == r.extra["double_sum"]
    assert r.extra["double_sum"] == lemma22_count(parabola, 40, 0.1)
    assert r.count == r.extra["by_gcd"][1]


def test_bound_envelope_prefix_sums(parabola):
    rows = bound_envelope(parabola, [(64, Fraction(1, 4)), (128, Fraction(1, 8))])
    assert rows[0]["count"] == count_N(parabola, 64, Fraction(1, 4)).count
    assert rows[1]["thm1_rhs"] == pytest.approx(thm1_rhs(128, 0.125))
    assert rows[1]["ratio1"] == pytest.approx(rows[1]["count"] / rows[1]["thm1_rhs"])


def test_negative_numerators():
    c = make_builtin("poly:0,0,1", "-1,1")
    assert count_N(c, 40, 0.05).count == brute_count(c, 1, 40, Fraction(1, 20))
