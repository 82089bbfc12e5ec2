"""Derivative towers of h(x) = (1 + a/x)^(x + b).

The tower is the sequence c(k) = (-1)^(k+1) d^k h / dx^k, k = 0..N, so that
c(0) = -h and, for b = 0 and k >= 1, c(k) is the k-th signed derivative
f(x, a, k) = (-1)^k d^k/dx^k [e^a - h].  Writing h' = h * l' with
l = (x + b) log(1 + a/x), Leibniz's rule gives

    c(n) = sum_{k<n} C(n-1, k) c(k) g(n-1-k),    g(m) = (-1)^(m+1) d^m l'/dx^m.

Two evaluation routes share that recurrence:

* ``"taylor"`` (default) carries scaled Taylor coefficients
  p(k) = c(k) x^k / k! and q(m) = g(m) x^(m+1) / m!, for which the
  binomial weights collapse to  p(n) = (1/n) sum p(k) q(n-1-k).  The scaled
  quantities stay O(1) and the inner loop is one product per term.
* ``"leibniz"`` evaluates the binomial form literally, with C(n-1, k)
  updated incrementally in working precision.  Slower; kept as a cross-check.

Derivatives with respect to ``a`` are propagated through the same
recurrence (product rule on each term).
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpfr

from .errors import DomainError, OrderOutOfRange, ResourceError
from .precision import PrecisionContext

MAX_ORDER_CAP = 2_000_000

# extra bits for the closed-form kernel; it also cancels by ~log2(x/|a|) bits, added per call
_KERNEL_GUARD_BITS = 64

_mul = operator.mul


@dataclass(frozen=True)
class TowerRequest:
    x: mpfr
    a: mpfr
    max_order: int
    b: mpfr = mpfr(0)
    want_a_derivatives: bool = False
    context: PrecisionContext = field(default_factory=PrecisionContext)

    def __post_init__(self) -> None:
        ctx = self.context
        for name in ("x", "a", "b"):
            object.__setattr__(self, name, ctx.real(getattr(self, name)))
        _check_domain(self.x, self.a)
        if self.b < 0:
            raise DomainError(f"b must be >= 0, got {self.b}")
        if self.max_order < 0:
            raise DomainError("max_order must be >= 0")


@dataclass
class DerivativeTower:
    request: TowerRequest
    c: list[mpfr]
    h_value: mpfr
    exp_a: mpfr
    c_a: list[mpfr] | None = None

    @property
    def max_order(self) -> int:
        return len(self.c) - 1


def _check_domain(x, a) -> None:
    if not x > 0:
        raise DomainError(f"x must be positive, got {x}")
    if not x + a > 0:
        raise DomainError(f"x + a must be positive, got x={x}, a={a}")


def g_eval(x, a, b, m: int, ctx: PrecisionContext) -> mpfr:
    """Closed form of g(m) = (-1)^(m+1) d^m/dx^m [log(1+a/x) - (a-b)/(x+a) - b/x]."""
    if m < 0:
        raise DomainError("order must be >= 0")
    with ctx.activate():
        x, a, b = ctx.real(x), ctx.real(a), ctx.real(b)
        _check_domain(x, a)
        xa = x + a
        if m == 0:
            return -gmpy2.log1p(a / x) + (a - b) / xa + b / x
        fm1 = mpfr(gmpy2.fac(m - 1))
        fm = fm1 * m
        return fm1 / xa**m - fm1 / x**m + (a - b) * fm / xa ** (m + 1) + b * fm / x ** (m + 1)


def g_a_eval(x, a, b, m: int, ctx: PrecisionContext) -> mpfr:
    """d g(m) / da = -(m+1)! (a - b) / (x + a)^(m+2)."""
    if m < 0:
        raise DomainError("order must be >= 0")
    with ctx.activate():
        x, a, b = ctx.real(x), ctx.real(a), ctx.real(b)
        _check_domain(x, a)
        return -mpfr(gmpy2.fac(m + 1)) * (a - b) / (x + a) ** (m + 2)


def _scaled_kernel(x, a, b, count: int, ctx: PrecisionContext, want_a: bool):
    """q(m) = g(m) x^(m+1)/m! and its a-derivative for m < count.

    With r = x/(x+a):  q(0) = -x log(1+a/x) + (a-b) r + b,
    q(m) = (x/m)(r^m - 1) + (a-b) r^(m+1) + b, and
    dq(m)/da = -(m+1)(a-b) r^(m+1) / (x+a).
    """
    with ctx.activate(_guard_bits(x, a)):
        x, a, b = mpfr(x), mpfr(a), mpfr(b)
        log_r = -gmpy2.log1p(a / x)
        xa = x + a
        amb = a - b
        q = []
        qa = [] if want_a else None
        for m in range(count):
            r_m1 = gmpy2.exp((m + 1) * log_r)
            if m == 0:
                q.append(x * log_r + amb * r_m1 + b)
            else:
                q.append(x / m * gmpy2.expm1(m * log_r) + amb * r_m1 + b)
            if want_a:
                qa.append(-(m + 1) * amb * r_m1 / xa)
    with ctx.activate():
        q = [+v for v in q]
        if want_a:
            qa = [+v for v in qa]
    return q, qa


def _guard_bits(x, a) -> int:
    if a == 0 or abs(a) >= x:
        return _KERNEL_GUARD_BITS
    return _KERNEL_GUARD_BITS + int(gmpy2.ceil(gmpy2.log2(x / abs(a))))


def _base(x, a, b, ctx: PrecisionContext):
    """(h, e^a, dh/da) at working precision."""
    with ctx.activate(_KERNEL_GUARD_BITS):
        h = gmpy2.exp((x + b) * gmpy2.log1p(a / x))
        h_a = h * (x + b) / (x + a)
        exp_a = gmpy2.exp(a)
    with ctx.activate():
        return +h, +exp_a, +h_a


def _taylor_tower(req: TowerRequest):
    N = req.max_order
    ctx = req.context
    x, a, b = req.x, req.a, req.b
    want_a = req.want_a_derivatives
    h, exp_a, h_a = _base(x, a, b, ctx)
    q, qa = _scaled_kernel(x, a, b, N, ctx, want_a)
    fsum = gmpy2.fsum
    with ctx.activate():
        p = [-h]
        pa = [-h_a] if want_a else None
        for n in range(1, N + 1):
            q_rev = q[n - 1 :: -1]
            p_new = fsum(map(_mul, p, q_rev)) / n
            if want_a:
                s = fsum(map(_mul, pa, q_rev)) + fsum(map(_mul, p, qa[n - 1 :: -1]))
                pa.append(s / n)
            p.append(p_new)
        # unscale: c(k) = p(k) * k! / x^k
        c = [p[0]]
        c_a = [pa[0]] if want_a else None
        w = mpfr(1)
        for k in range(1, N + 1):
            w = w * k / x
            c.append(p[k] * w)
            if want_a:
                c_a.append(pa[k] * w)
    return c, c_a, h, exp_a


def _leibniz_tower(req: TowerRequest):
    N = req.max_order
    ctx = req.context
    x, a, b = req.x, req.a, req.b
    want_a = req.want_a_derivatives
    h, exp_a, h_a = _base(x, a, b, ctx)
    g = [g_eval(x, a, b, m, ctx) for m in range(N)]
    ga = [g_a_eval(x, a, b, m, ctx) for m in range(N)] if want_a else None
    with ctx.activate():
        c = [-h]
        c_a = [-h_a] if want_a else None
        for n in range(1, N + 1):
            binom = mpfr(1)
            s = mpfr(0)
            sa = mpfr(0)
            for k in range(n):
                m = n - 1 - k
                s = s + binom * c[k] * g[m]
                if want_a:
                    sa = sa + binom * (c_a[k] * g[m] + c[k] * ga[m])
                binom = binom * (n - 1 - k) / (k + 1)
            c.append(s)
            if want_a:
                c_a.append(sa)
    return c, c_a, h, exp_a


def compute_tower(req: TowerRequest, method: str = "taylor", order_cap: int = MAX_ORDER_CAP) -> DerivativeTower:
    if req.max_order > order_cap:
        raise ResourceError(f"max_order {req.max_order} exceeds the cap {order_cap}")
    if method == "taylor":
        c, c_a, h, exp_a = _taylor_tower(req)
    elif method == "leibniz":
        c, c_a, h, exp_a = _leibniz_tower(req)
    else:
        raise ValueError(f"unknown tower method {method!r}")
    if req.a == 0 and req.b == 0:
        # kernel vanishes identically; store +0 rather than signed zeros
        c = [c[0]] + [req.context.real(0)] * (len(c) - 1)
    return DerivativeTower(request=req, c=c, h_value=h, exp_a=exp_a, c_a=c_a)


def tower(x, a, max_order: int, ctx: PrecisionContext | None = None, *, b=0,
          want_a_derivatives: bool = False, method: str = "taylor") -> DerivativeTower:
    """Convenience wrapper building the :class:`TowerRequest` in place."""
    ctx = ctx or PrecisionContext()
    req = TowerRequest(x=x, a=a, b=b, max_order=max_order,
                       want_a_derivatives=want_a_derivatives, context=ctx)
    return compute_tower(req, method=method)


def f_eval(t: DerivativeTower, n: int) -> mpfr:
    """Signed derivative f(x, a, n) = (-1)^n d^n/dx^n [e^a - h]."""
    if t.request.b != 0:
        raise DomainError("f is defined for b = 0 only; use the raw tower for J")
    if n < 0 or n > t.max_order:
        raise OrderOutOfRange(f"order {n} outside 0..{t.max_order}")
    if n == 0:
        with t.request.context.activate():
            return t.exp_a + t.c[0]
    return t.c[n]


@dataclass
class SignProfile:
    """Per-order minimum of (-1)^n d^n J/dx^n over an x-grid."""

    a: mpfr
    b: mpfr
    minima: list[mpfr]
    argmin: list[mpfr]

    @property
    def all_nonnegative(self) -> bool:
        return all(v >= 0 for v in self.minima)

    def first_negative(self):
        """(order, x, value) of the lowest order with a negative minimum, else None."""
        for n, v in enumerate(self.minima):
            if v < 0:
                return n, self.argmin[n], v
        return None


def j_tower_sign_profile(xs, a, b, N: int, ctx: PrecisionContext) -> SignProfile:
    """Signed derivatives of J(x; a, b) = (1 + a/x)^(x+b) - e^a over ``xs``.

    (-1)^n d^n J/dx^n is -c(n) for n >= 1 and -c(0) - e^a for n = 0.
    """
    minima: list = [None] * (N + 1)
    argmin: list = [None] * (N + 1)
    for x in xs:
        t = tower(x, a, N, ctx, b=b)
        with ctx.activate():
            vals = [-t.c[0] - t.exp_a] + [-v for v in t.c[1:]]
        for n, v in enumerate(vals):
            if minima[n] is None or v < minima[n]:
                minima[n] = v
                argmin[n] = t.request.x
    return SignProfile(a=ctx.real(a), b=ctx.real(b), minima=minima, argmin=argmin)
