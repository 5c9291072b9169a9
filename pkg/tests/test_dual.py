import math

import numpy as np
import pytest

from curvepoints import ValidationError, make_builtin
from curvepoints.dual import (LAMBDA_AGREE, build_dual, check_dual, index_ranges, lambda_record,
                              lambda_records, lambda_table, lemma23_sums, s7_count_dual_side)


@pytest.fixture(scope="module")
def pdual(parabola):
    return build_dual(parabola)


def test_parabola_dual_closed_form(pdual):
    # f = x^2: g(a) = a/2, F(a) = a^2/4
    a = np.linspace(0, 2, 11)
    assert np.allclose(pdual.g(a), a / 2, atol=1e-13)
    assert np.allclose(pdual.F(a), a * a / 4, atol=1e-13)
    assert (pdual.Upsilon, pdual.Xi) == (0.0, 2.0)


def test_exp_dual_closed_form(exp_curve):
    d = build_dual(exp_curve)
    a = np.linspace(1, math.e, 9)
    assert np.allclose(d.F(a), a * np.log(a) - a, atol=1e-12)


def test_concave_curve_dual(circle):
    d = build_dual(circle)
    assert d.flipped
    x = np.linspace(-0.5, 0.5, 101)
    assert np.max(np.abs(d.g(circle.fp(x)) - x)) < 1e-12


@pytest.mark.parametrize("name,iv", [("parabola", "0,1"), ("exp", "0,1"),
                                     ("circle-arc", "-1/2,1/2"), ("log", "1,2")])
def test_check_dual(name, iv):
    c = make_builtin(name, iv)
    r = check_dual(build_dual(c))
    assert r.roundtrip <= 1e-10 * c.interval.width
    assert r.fp_vs_g < 1e-8
    assert r.fpp_product < 1e-8


def test_g_outside_range_is_nan(pdual):
    assert math.isnan(pdual.g(3.0))


def test_index_ranges(pdual):
    assert index_ranges(pdual, 3) == (-1, 7, 1, 5)
    assert index_ranges(pdual, -3) == (-7, 1, -5, -1)
    with pytest.raises(ValidationError):
        index_ranges(pdual, 0)


def test_lambda_known_value(pdual):
    r = lambda_record(pdual, 3, 5)  # beta = 5/6, phi = -25/12
    assert r.beta_h == pytest.approx(5 / 6)
    assert r.lambda_h == pytest.approx(1 / 12, abs=1e-14)
    assert abs(r.lambda_h - r.lambda_dual) <= LAMBDA_AGREE


def test_lambda_records_range(pdual):
    hs = [r.h for r in lambda_records(pdual, 3)]
    assert hs == [2, 3, 4]
    assert lambda_records(pdual, 1) == []


def test_lambda_record_rejects_out_of_range(pdual):
    with pytest.raises(ValidationError):
        lambda_record(pdual, 3, 7)


def test_lambda_table_symmetric(pdual):
    t = lambda_table(pdual, 20)
    pos = sorted(zip(t["j"][t["j"] > 0], t["h"][t["j"] > 0]))
    neg = sorted(zip(-t["j"][t["j"] < 0], -t["h"][t["j"] < 0]))
    assert pos == neg


def test_s7_count_two_ways(pdual):
    s = lemma23_sums(pdual, 64, 256)
    assert s.n7 == s7_count_dual_side(pdual, 64, 256)
    assert s.S5 >= 0 and s.S6 >= 0
    assert s.rhs7 > 0


def test_lemma23_validation(pdual):
    with pytest.raises(ValidationError):
        lemma23_sums(pdual, 0, 10)


def test_no_dual_for_inflection():
    c = make_builtin("poly:0,0,0,1", "-1,1", check=False)
    with pytest.raises(ValidationError):
        build_dual(c)
