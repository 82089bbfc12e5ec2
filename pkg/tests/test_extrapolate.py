from fractions import Fraction

import pytest
from gmpy2 import mpfr
from hypothesis import given, settings, strategies as st

from cmcrit.errors import FitError
from cmcrit.extrapolate import evaluate, fit_inverse_poly, lagrange_weights_at_zero, stability_report
from cmcrit.precision import PrecisionContext
from cmcrit.reference import A_CRITICAL, TABLE1

from .conftest import close

ROWS = [(n, a) for n, a, _ in TABLE1]


def exact_limit(rows):
    """Lagrange interpolant at t = 0 in exact rational arithmetic."""
    ts = [Fraction(1, n) for n, _ in rows]
    total = Fraction(0)
    for i, (_, a) in enumerate(rows):
        w = Fraction(1)
        for j, tj in enumerate(ts):
            if j != i:
                w *= tj / (tj - ts[i])
        total += w * Fraction(a)
    return total


def test_weights_for_last_three_rows(ctx):
    w = lagrange_weights_at_zero([40000, 50000, 100000], ctx)
    for got, want in zip(w, [Fraction(8, 3), Fraction(-5), Fraction(10, 3)]):
        assert close(got, want, rel="1e-58")


def test_reference_constant(ctx):
    est = fit_inverse_poly(ROWS[-3:], 2, ctx)
    assert close(est.a_c, A_CRITICAL, abs_="1e-11")
    oracle = exact_limit(ROWS[-3:])
    assert oracle == Fraction(8, 3) * Fraction(ROWS[-3][1]) - 5 * Fraction(ROWS[-2][1]) + Fraction(10, 3) * Fraction(ROWS[-1][1])
    assert close(est.a_c, oracle, rel="1e-58")
    # 2.2996 + 5.644325e-5, to the reference digits
    assert abs(float(est.a_c) - (2.2996 + 5.644325e-5)) < 5e-12
    assert est.interpolatory and est.degree == 2 and len(est.coefficients) == 2
    assert est.a_c < min(a for _, a in est.points)
    assert close(est.condition_diagnostic, 11, rel="1e-50")


def test_small_order_window_is_less_accurate(ctx):
    est = fit_inverse_poly(ROWS[:3], 2, ctx)
    assert close(est.a_c, A_CRITICAL, abs_="5e-7")


def test_constant_data(ctx):
    est = fit_inverse_poly([(10, "2.5"), (20, "2.5")], 1, ctx)
    assert est.a_c == mpfr("2.5")
    assert est.coefficients[0] == 0 or abs(est.coefficients[0]) < mpfr("1e-55")


@pytest.mark.parametrize("i", range(len(ROWS) - 1))
def test_degree_one_algebra(ctx, i):
    (n1, a1), (n2, a2) = ROWS[i], ROWS[i + 1]
    est = fit_inverse_poly([(n1, a1), (n2, a2)], 1, ctx)
    with ctx.activate():
        A1, A2 = ctx.real(a1), ctx.real(a2)
        expected = A2 - n1 * (A1 - A2) / (n2 - n1)
    assert close(est.a_c, expected, rel="1e-55")


def test_interpolation_reproduces_inputs(ctx):
    pts = ROWS[-4:]
    est = fit_inverse_poly(pts, 3, ctx)
    for n, a in pts:
        assert close(evaluate(est, n, ctx), a, rel="1e-55")


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(2, 10**6), min_size=3, max_size=5, unique=True),
       st.floats(1.0, 3.0), st.floats(-5.0, 5.0), st.floats(-50.0, 50.0))
def test_recovers_exact_quadratic_in_inverse_n(ns, c0, c1, c2):
    ctx = PrecisionContext(60)
    with ctx.activate():
        pts = [(n, ctx.real(c0) + ctx.real(c1) / n + ctx.real(c2) / (n * n)) for n in ns]
    est = fit_inverse_poly(pts, 2, ctx)
    assert close(est.a_c, ctx.real(c0), abs_="1e-30")


def test_least_squares_path(ctx):
    est = fit_inverse_poly(ROWS, 2, ctx)
    assert not est.interpolatory
    assert close(est.a_c, A_CRITICAL, abs_="1e-9")
    # weights of the intercept functional sum to one
    with ctx.activate():
        assert close(sum(est.weights), 1, abs_="1e-50")


def test_fit_errors(ctx):
    with pytest.raises(FitError):
        fit_inverse_poly([(10, "2.5"), (10, "2.4")], 1, ctx)
    with pytest.raises(FitError):
        fit_inverse_poly([(10, "2.5")], 1, ctx)
    with pytest.raises(FitError):
        fit_inverse_poly([(10, "2.5"), (20, "2.4")], 0, ctx)


def test_stability_report_reference_rows(ctx):
    rep = stability_report(ROWS, [1, 2, 3], ctx)
    assert rep.spread[2] <= mpfr("1e-9")
    assert len(rep.estimates[2]) == len(ROWS) - 2
    assert close(rep.best(2), A_CRITICAL, abs_="1e-11")
    assert rep.spread[3] < rep.spread[2] < rep.spread[1]


def test_stability_single_window(ctx):
    rep = stability_report(ROWS[:3], [2], ctx)
    assert rep.spread[2] == 0


def test_stability_needs_rows(ctx):
    with pytest.raises(FitError):
        stability_report(ROWS[:2], [2], ctx)
