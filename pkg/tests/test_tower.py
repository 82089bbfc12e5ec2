import math
import random

import gmpy2
import pytest
import sympy
from gmpy2 import mpfr
from hypothesis import given, settings, strategies as st

from cmcrit.errors import DomainError, OrderOutOfRange, ResourceError
from cmcrit.precision import PrecisionContext
from cmcrit.tower import (TowerRequest, compute_tower, f_eval, g_a_eval, g_eval,
                          j_tower_sign_profile, tower)

from .conftest import close


def fd(fun, z, eps, ctx):
    with ctx.activate():
        return (fun(z + eps) - fun(z - eps)) / (2 * eps)


# ---------------------------------------------------------------- g and dg/da


def test_g_order_one_example(ctx):
    assert g_eval(1, 1, 0, 1, ctx) == mpfr("-0.25")


def test_g_order_zero_example(ctx):
    with ctx.activate():
        expected = -gmpy2.log(mpfr(2)) + mpfr("0.5")
    assert close(g_eval(1, 1, 0, 0, ctx), expected, rel="1e-58")
    assert close(g_eval(1, 1, 0, 0, ctx), "-0.19314718055994530941723212145817656807550013436025525412068", rel="1e-55")


@pytest.mark.parametrize("x, a, b", [("1", "1", "0"), ("0.7", "2.3", "0"), ("3.5", "1.2", "0.75"), ("12", "-3", "2")])
@pytest.mark.parametrize("m", [0, 1, 2, 5, 9])
def test_g_next_order_is_minus_x_derivative(ctx, x, a, b, m):
    # g(m+1) = -d g(m)/dx; central difference with eps = 1e-20 at 60 digits
    eps = ctx.real("1e-20")
    slope = fd(lambda s: g_eval(s, a, b, m, ctx), ctx.real(x), eps, ctx)
    with ctx.activate():
        assert close(-slope, g_eval(x, a, b, m + 1, ctx), rel="1e-30")


@pytest.mark.parametrize("m", [0, 1, 3, 8])
def test_g_vanishes_at_zero_shift(ctx, m):
    assert g_eval("2.5", 0, 0, m, ctx) == 0


@pytest.mark.parametrize("x, a, b, m, expected", [(1, 1, 0, 0, "-0.25"), (1, 1, 0, 1, "-0.25")])
def test_g_a_examples(ctx, x, a, b, m, expected):
    assert g_a_eval(x, a, b, m, ctx) == mpfr(expected)
    slope = fd(lambda s: g_eval(x, s, b, m, ctx), ctx.real(a), ctx.real("1e-20"), ctx)
    assert close(slope, expected, rel="1e-30")


@pytest.mark.parametrize("x, a, b", [("1.3", "2.2", "0"), ("0.4", "0.9", "0.3"), ("25", "-7.5", "1.5")])
@pytest.mark.parametrize("m", [0, 1, 4, 11])
def test_g_a_matches_finite_difference(ctx, x, a, b, m):
    slope = fd(lambda s: g_eval(x, s, b, m, ctx), ctx.real(a), ctx.real("1e-20"), ctx)
    assert close(slope, g_a_eval(x, a, b, m, ctx), rel="1e-30")


@pytest.mark.parametrize("m", [0, 2, 7])
def test_g_a_zero_when_a_equals_b(ctx, m):
    assert g_a_eval("1.5", "0.8", "0.8", m, ctx) == 0


@pytest.mark.parametrize("x, a", [(0, 1), (-1, 1), (1, -1), (1, -2)])
def test_g_domain(ctx, x, a):
    with pytest.raises(DomainError):
        g_eval(x, a, 0, 1, ctx)
    with pytest.raises(DomainError):
        g_a_eval(x, a, 0, 1, ctx)


# ---------------------------------------------------------------- towers


def test_first_order_example(ctx):
    t = tower(1, 1, 3, ctx)
    with ctx.activate():
        expected = 2 * gmpy2.log(mpfr(2)) - 1
    assert close(f_eval(t, 1), expected, rel="1e-58")
    assert close(f_eval(t, 1), "0.386294361119890618834464242916353136151", rel="1e-38")


def test_order_zero_examples(ctx):
    assert f_eval(tower(1, 0, 2, ctx), 0) == 0
    t = tower(2, 1, 0, ctx)
    with ctx.activate():
        expected = gmpy2.exp(mpfr(1)) - mpfr("2.25")
    assert close(f_eval(t, 0), expected, rel="1e-58")


def test_c0_is_minus_h(ctx):
    t = tower("1.7", "0.6", 4, ctx)
    with ctx.activate():
        assert t.c[0] == -t.h_value
        assert f_eval(t, 0) == t.exp_a + t.c[0]


@pytest.mark.parametrize("x", ["0.01", "1", "37.5", "1e4"])
def test_zero_shift_collapses_exactly(ctx, x):
    t = tower(x, 0, 50, ctx, want_a_derivatives=True)
    assert t.c[0] == -1
    assert all(v == 0 for v in t.c[1:])
    assert f_eval(t, 0) == 0


def _symbolic_tower(x, a, b, order):
    s = sympy.symbols("s", positive=True)
    h = (1 + sympy.Rational(a) / s) ** (s + sympy.Rational(b))
    out = []
    for k in range(order + 1):
        d = h if k == 0 else sympy.diff(h, s, k)
        out.append((-1) ** (k + 1) * d.subs(s, sympy.Rational(x)))
    return [sympy.N(v, 80) for v in out]


@pytest.mark.parametrize("x, a, b", [("1", "1", "0"), ("3/2", "2", "1/2"), ("1/3", "5/2", "0")])
@pytest.mark.parametrize("method", ["taylor", "leibniz"])
def test_small_orders_match_symbolic_differentiation(ctx, x, a, b, method):
    t = tower(sympy.Rational(x).evalf(80).__str__(), sympy.Rational(a).evalf(80).__str__(), 6, ctx,
              b=sympy.Rational(b).evalf(80).__str__(), method=method)
    for got, want in zip(t.c, _symbolic_tower(x, a, b, 6)):
        assert close(got, str(want), rel="1e-55")


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 1000.0), st.floats(0.001, 1.0), st.floats(-0.99, 10.0))
def test_first_order_matches_closed_form(x, frac, a_scale):
    ctx = PrecisionContext(60)
    a = a_scale * x if a_scale < 0 else a_scale * frac * 10
    if a == 0:
        return
    t = tower(x, a, 1, ctx)
    # direct formula cancels like (a/x)^2; give the oracle enough digits to absorb it
    hi = PrecisionContext(130 + 2 * max(0, math.ceil(math.log10(x) - math.log10(abs(a)))))
    with hi.activate():
        X, A = hi.real(x), hi.real(a)
        h = gmpy2.exp(X * gmpy2.log1p(A / X))
        direct = (gmpy2.log1p(A / X) - A / (X + A)) * h
    assert close(f_eval(t, 1), direct, rel="1e-55")


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_a_derivatives_match_finite_difference(seed):
    ctx = PrecisionContext(60)
    rng = random.Random(seed)
    x = ctx.real(f"{rng.uniform(0.3, 20):.5f}")
    a = ctx.real(f"{rng.uniform(0.2, 3.5):.5f}")
    eps = ctx.real("1e-15")
    t = tower(x, a, 200, ctx, want_a_derivatives=True)
    with ctx.activate():
        tp, tm = tower(x, a + eps, 200, ctx), tower(x, a - eps, 200, ctx)
    for n in range(201):
        with ctx.activate():
            approx = (tp.c[n] - tm.c[n]) / (2 * eps)
        assert close(approx, t.c_a[n], rel="1e-25"), n


def test_a_derivatives_with_exponent_offset(ctx):
    x, a, b = ctx.real("2.5"), ctx.real("1.75"), ctx.real("0.5")
    eps = ctx.real("1e-15")
    t = tower(x, a, 40, ctx, b=b, want_a_derivatives=True)
    with ctx.activate():
        tp, tm = tower(x, a + eps, 40, ctx, b=b), tower(x, a - eps, 40, ctx, b=b)
        for n in range(41):
            assert close((tp.c[n] - tm.c[n]) / (2 * eps), t.c_a[n], rel="1e-25")


@pytest.mark.parametrize("x, a, b", [("1.3", "2.9", "0"), ("400", "2.3", "0"), ("0.2", "1", "1.5")])
def test_taylor_and_leibniz_routes_agree(ctx, x, a, b):
    t = tower(x, a, 80, ctx, b=b, want_a_derivatives=True)
    lb = tower(x, a, 80, ctx, b=b, want_a_derivatives=True, method="leibniz")
    for u, v in zip(t.c + t.c_a, lb.c + lb.c_a):
        assert close(u, v, rel="1e-45", abs_="1e-300")


def test_towers_are_deterministic(ctx):
    one = tower("3.3", "2.7", 120, ctx, want_a_derivatives=True)
    two = tower("3.3", "2.7", 120, ctx, want_a_derivatives=True)
    assert [v.digits(2) for v in one.c + one.c_a] == [v.digits(2) for v in two.c + two.c_a]


def test_known_cm_parameter_is_nonnegative(ctx):
    for i in range(1, 101, 9):
        t = tower(ctx.real(i) / 10, 1, 200, ctx)
        assert all(f_eval(t, n) >= 0 for n in range(201))


def test_parameter_three_is_not_cm(ctx):
    # a_f(3) ~ 2.903 < 3, so f(., 3, 4) dips below zero near x ~ 1.344
    t = tower("1.344", 3, 4, ctx)
    assert f_eval(t, 4) < 0


def test_request_validation(ctx):
    with pytest.raises(DomainError):
        TowerRequest(x=1, a=-1, max_order=3, context=ctx)
    with pytest.raises(DomainError):
        TowerRequest(x=1, a=1, max_order=-1, context=ctx)
    with pytest.raises(DomainError):
        TowerRequest(x=1, a=1, b=-0.5, max_order=2, context=ctx)


def test_order_cap(ctx):
    req = TowerRequest(x=1, a=1, max_order=11, context=ctx)
    with pytest.raises(ResourceError):
        compute_tower(req, order_cap=10)


def test_f_eval_range_and_offset(ctx):
    t = tower(1, 1, 3, ctx)
    with pytest.raises(OrderOutOfRange):
        f_eval(t, 4)
    with pytest.raises(DomainError):
        f_eval(tower(1, 1, 3, ctx, b=1), 1)


def test_unknown_method(ctx):
    with pytest.raises(ValueError):
        tower(1, 1, 3, ctx, method="symbolic")


# ---------------------------------------------------------------- J sign profiles


def test_j_profile_cm_boundary(ctx):
    xs = [ctx.real(v) / 2 for v in range(1, 21)]
    prof = j_tower_sign_profile(xs, 2, 1, 50, ctx)
    assert prof.all_nonnegative
    assert prof.first_negative() is None


def test_j_profile_beyond_boundary(ctx):
    xs = [ctx.real(v) for v in (0.1, 1, 5, 10, 25, 50)]
    prof = j_tower_sign_profile(xs, 3, 1, 200, ctx)
    n, x, v = prof.first_negative()
    assert v < 0
    # re-evaluate the witness directly
    t = tower(x, 3, max(n, 1), ctx, b=1)
    with ctx.activate():
        again = -t.c[0] - t.exp_a if n == 0 else -t.c[n]
    assert again == v


def test_j_profile_zero_parameters(ctx):
    prof = j_tower_sign_profile([ctx.real("0.5"), ctx.real(3)], 0, 0, 12, ctx)
    assert all(v == 0 for v in prof.minima)
