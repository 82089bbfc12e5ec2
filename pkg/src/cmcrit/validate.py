"""Oracle suites tying the engine to known analytic facts.

Each suite returns a :class:`SuiteReport`; failures are report content, not
exceptions.  Finite sampling can refute complete monotonicity but never
prove it, so the positive suites are sanity nets only.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import mpmath
from gmpy2 import mpfr

from .precision import PrecisionContext
from .solver import NewtonConfig, solve_transition, sweep
from .tower import f_eval, g_a_eval, g_eval, j_tower_sign_profile, tower

SUITES = ("cm_at_1", "non_cm_at_3", "j_theorem", "derivative_oracles", "monotone_af")


@dataclass
class Check:
    description: str
    passed: bool
    witness: dict = field(default_factory=dict)


@dataclass
class SuiteReport:
    name: str
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, description: str, passed: bool, **witness) -> None:
        self.checks.append(Check(description, bool(passed), witness))

    def lines(self) -> list[str]:
        out = [f"[{'PASS' if self.passed else 'FAIL'}] {self.name}"]
        for c in self.checks:
            w = ", ".join(f"{k}={_short(v)}" for k, v in c.witness.items())
            out.append(f"    {'ok  ' if c.passed else 'FAIL'} {c.description}" + (f"  ({w})" if w else ""))
        return out


def _short(v) -> str:
    if isinstance(v, mpfr):
        return mpmath.nstr(mpmath.mpf(str(v)), 12)
    return str(v)


def _grid(lo: str, step: str, count: int, ctx: PrecisionContext) -> list[mpfr]:
    with ctx.activate():
        return [ctx.real(lo) + ctx.real(step) * i for i in range(count)]


def cm_at_1(ctx: PrecisionContext, max_order: int = 200, x_max: int = 10) -> SuiteReport:
    """f(x, 1, n) >= 0 on x = 0.1, 0.2, ..., x_max for n <= max_order."""
    rep = SuiteReport("cm_at_1")
    worst = None
    for x in _grid("0.1", "0.1", 10 * x_max, ctx):
        t = tower(x, 1, max_order, ctx)
        for n in range(max_order + 1):
            v = f_eval(t, n)
            if worst is None or v < worst[0]:
                worst = (v, x, n)
            if v < 0:
                rep.add("f(x, 1, n) >= 0 on the grid", False, x=x, n=n, value=v)
                return rep
    rep.add(f"f(x, 1, n) >= 0 for x in [0.1, {x_max}], n <= {max_order}", True,
            min_value=worst[0], at_x=worst[1], at_n=worst[2])
    return rep


def find_non_cm_witness(a, ctx: PrecisionContext, max_order: int = 200):
    """Search for (x, k) with f(x, a, k) < 0, starting from transition points.

    Walks n = 2, 3, ... until a_f(n) < a; there f(., a, n+1) dips below zero
    around x_f(n).  Returns (x, k, value) or None.
    """
    a = ctx.real(a)
    cfg = NewtonConfig(context=ctx, certify=False)
    for n in range(2, max_order - 1):
        p = solve_transition(n, cfg)
        if p.a_f >= a:
            continue
        k = n + 1
        with ctx.activate():
            offsets = [mpfr(0)] + [s * mpfr(j) / 20 for j in range(1, 11) for s in (1, -1)]
            for off in offsets:
                x = p.x_f * (1 + off)
                if x + a <= 0:
                    continue
                v = f_eval(tower(x, a, k, ctx), k)
                if v < 0:
                    return x, k, v
    return None


def non_cm_at_3(ctx: PrecisionContext, max_order: int = 200) -> SuiteReport:
    rep = SuiteReport("non_cm_at_3")
    w = find_non_cm_witness(3, ctx, max_order)
    if w is None:
        rep.add(f"witness f(x, 3, n) < 0 with n <= {max_order}", False)
        return rep
    x, k, v = w
    recheck = f_eval(tower(x, 3, k, ctx), k)
    rep.add(f"witness f(x, 3, n) < 0 with n <= {max_order}", v < 0, x=x, n=k, value=v)
    rep.add("witness reproduces on re-evaluation", recheck == v and recheck < 0, value=recheck)
    return rep


def j_theorem(ctx: PrecisionContext, x_max: int = 50, order_cm: int = 50, order_non_cm: int = 200) -> SuiteReport:
    """Sign profiles of J(x; a, b): CM at a = 2b, a negative witness for a > 2b."""
    rep = SuiteReport("j_theorem")
    xs = _grid("0.5", "0.5", 2 * x_max, ctx)
    prof = j_tower_sign_profile(xs, 2, 1, order_cm, ctx)
    worst = min(range(len(prof.minima)), key=lambda n: prof.minima[n])
    rep.add(f"(a, b) = (2, 1): every order <= {order_cm} nonnegative on x in [0.5, {x_max}]",
            prof.all_nonnegative, min_value=prof.minima[worst], at_n=worst, at_x=prof.argmin[worst])
    prof = j_tower_sign_profile(xs, 3, 1, order_non_cm, ctx)
    neg = prof.first_negative()
    if neg is None:
        rep.add("(a, b) = (3, 1): negative witness", False)
    else:
        n, x, v = neg
        rep.add("(a, b) = (3, 1): negative witness", True, n=n, x=x, value=v)
    zero = j_tower_sign_profile(xs[:5], 0, 0, 10, ctx)
    rep.add("(a, b) = (0, 0): orders >= 1 vanish identically",
            all(v == 0 for v in zero.minima[1:]))
    return rep


def _rel_err(approx, exact):
    return abs(approx - exact) / abs(exact) if exact != 0 else abs(approx)


def derivative_oracles(ctx: PrecisionContext, samples: int = 3, max_order: int = 200,
                       eps: str = "1e-15", rtol: str = "1e-25", seed: int = 12345) -> SuiteReport:
    """Finite differences in a against the closed forms, and small-order
    derivatives against independent numerical differentiation."""
    rep = SuiteReport("derivative_oracles")
    rng = random.Random(seed)
    tol = ctx.real(rtol)
    for _ in range(samples):
        x = ctx.real(f"{rng.uniform(0.5, 5.0):.6f}")
        a = ctx.real(f"{rng.uniform(0.5, 3.5):.6f}")
        with ctx.activate():
            e = ctx.real(eps)
            worst_g = mpfr(0)
            for m in range(0, 30):
                fd = (g_eval(x, a + e, 0, m, ctx) - g_eval(x, a - e, 0, m, ctx)) / (2 * e)
                worst_g = max(worst_g, _rel_err(fd, g_a_eval(x, a, 0, m, ctx)))
            t0 = tower(x, a, max_order, ctx, want_a_derivatives=True)
            tp = tower(x, a + e, max_order, ctx)
            tm = tower(x, a - e, max_order, ctx)
            worst_c = mpfr(0)
            for n in range(max_order + 1):
                fd = (tp.c[n] - tm.c[n]) / (2 * e)
                worst_c = max(worst_c, _rel_err(fd, t0.c_a[n]))
        rep.add("dg/da closed form vs central difference", worst_g < tol, x=x, a=a, max_rel_err=worst_g)
        rep.add(f"c_a(n) vs central difference, n <= {max_order}", worst_c < tol, x=x, a=a, max_rel_err=worst_c)

    # independent route: mpmath numerical differentiation of h itself
    x, a, order = "1.25", "2.5", 8
    t = tower(x, a, order, ctx)
    with mpmath.workdps(ctx.decimal_digits + 20):
        h = lambda s: (1 + mpmath.mpf(a) / s) ** s  # noqa: E731
        derivs = mpmath.diffs(h, mpmath.mpf(x), order)
        worst = mpmath.mpf(0)
        for k, d in enumerate(derivs):
            ck = mpmath.mpf(str(t.c[k]))
            ref = (-1) ** (k + 1) * d
            worst = max(worst, abs(ck - ref) / abs(ref))
    rep.add(f"c(k), k <= {order}, vs numerical differentiation of h", worst < mpmath.mpf("1e-40"),
            x=x, a=a, max_rel_err=mpmath.nstr(worst, 3))

    lb = tower(x, a, 60, ctx, method="leibniz")
    tt = tower(x, a, 60, ctx)
    with ctx.activate():
        worst_route = max(_rel_err(p, q) for p, q in zip(tt.c, lb.c))
    rep.add("scaled-Taylor and binomial Leibniz routes agree to order 60",
            worst_route < ctx.real("1e-50"), max_rel_err=worst_route)
    return rep


def monotone_af(ctx: PrecisionContext, schedule=(5, 10, 20, 50, 100)) -> SuiteReport:
    rep = SuiteReport("monotone_af")
    rows = sweep(list(schedule), NewtonConfig(context=ctx))
    vals = {r.n: r.a_f for r in rows}
    failed = [r.n for r in rows if r.status == "failed"]
    rep.add("all orders converge", not failed, failed=failed)
    ok = all(rows[i].a_f > rows[i + 1].a_f for i in range(len(rows) - 1))
    rep.add("a_f strictly decreasing", ok, **{f"a_f({n})": v for n, v in vals.items()})
    rep.add("a_f > 1", all(r.a_f > 1 for r in rows))
    return rep


def run_suite(name: str, ctx: PrecisionContext | None = None) -> SuiteReport:
    ctx = ctx or PrecisionContext()
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return globals()[name](ctx)
