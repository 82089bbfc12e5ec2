"""Transition points (x_f(n), a_f(n)) of the signed derivatives f(., a, n).

f(., a, n) stops being monotone decreasing in x when f(., a, n+1) first
touches zero, so the transition is the simultaneous root of

    r1 = f(x, a, n+1) = 0,    r2 = f(x, a, n+2) = 0.

Because d f(x, a, k)/dx = -f(x, a, k+1), one tower to order n+3 with
a-derivatives to n+2 yields both residuals and the full Jacobian.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import gmpy2
from gmpy2 import mpfr

from .errors import CmcritError, DomainError, InsufficientPrecision, NonConvergence
from .precision import PrecisionContext, recommended_digits
from .tower import f_eval, tower

log = logging.getLogger(__name__)

CONVERGED = "converged"
UNVERIFIED = "unverified"
FAILED = "failed"

# output of coarse_scan_seed(n) at the default grid, rounded to 3 decimals
SMALL_ORDER_SEEDS = {
    2: ("0.903", "3.14"),
    3: ("1.339", "2.91"),
    4: ("1.734", "2.78"),
    5: ("2.215", "2.69"),
    6: ("2.623", "2.63"),
    7: ("3.031", "2.59"),
    8: ("3.439", "2.56"),
    9: ("4.0", "2.53"),
    10: ("4.423", "2.51"),
}

# asymptotic seed model: x_f ~ X_SLOPE * n, a_f ~ A_LIMIT + A_SLOPE / n
X_SLOPE = "0.43637"
A_LIMIT = "2.29966"
A_SLOPE = "2.18"

CERTIFY_OFFSET = "1e-10"


@dataclass(frozen=True)
class NewtonConfig:
    step_tolerance: float = 1e-16
    max_iterations: int = 100
    damping: float = 0.5
    max_halvings: int = 40
    context: PrecisionContext = field(default_factory=PrecisionContext)
    certify: bool = True

    def __post_init__(self) -> None:
        if not self.step_tolerance > 0:
            raise ValueError("step_tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not 0 < self.damping < 1:
            raise ValueError("damping must lie in (0, 1)")


@dataclass
class TransitionPoint:
    n: int
    a_f: mpfr
    x_f: mpfr
    residual_1: mpfr
    residual_2: mpfr
    iterations: int
    digits_used: int
    elapsed: float | None = None
    status: str = CONVERGED

    @property
    def elapsed_ms(self) -> int | None:
        return None if self.elapsed is None else round(self.elapsed * 1000)


def initial_guess(n: int, ctx: PrecisionContext | None = None) -> tuple[mpfr, mpfr]:
    """Starting point (x0, a0) for order ``n``."""
    ctx = ctx or PrecisionContext()
    if n < 2:
        raise DomainError("transition points exist for n >= 2")
    if n in SMALL_ORDER_SEEDS:
        x0, a0 = SMALL_ORDER_SEEDS[n]
        return ctx.real(x0), ctx.real(a0)
    with ctx.activate():
        return ctx.real(X_SLOPE) * n, ctx.real(A_LIMIT) + ctx.real(A_SLOPE) / n


def continuation_guess(n: int, prev: TransitionPoint, ctx: PrecisionContext) -> tuple[mpfr, mpfr]:
    """Rescale a solved point at a lower order to seed order ``n``."""
    with ctx.activate():
        x0 = ctx.real(prev.x_f) * n / prev.n
        a_lim = ctx.real(A_LIMIT)
        a0 = a_lim + (ctx.real(prev.a_f) - a_lim) * prev.n / n
    return x0, a0


def _log_grid(lo: float, hi: float, count: int) -> list[float]:
    step = math.log(hi / lo) / (count - 1)
    return [lo * math.exp(i * step) for i in range(count)]


def coarse_scan_seed(n: int, a_lo: float = 1.5, a_hi: float = 4.0, a_step: float = 0.01,
                     x_points: int = 80, ctx: PrecisionContext | None = None) -> tuple[float, float]:
    """Locate where f(., a, n) first loses monotonicity as a increases.

    Scans a over [a_lo, a_hi] and, for each a, the sign of f(x, a, n+1) on a
    log-spaced x grid around the expected transition; returns (x, a) at the
    first grid a with a negative sample, x being the minimiser.  Intended for
    small n where the asymptotic seed model is unreliable.
    """
    ctx = ctx or PrecisionContext(30)
    xs = _log_grid(max(0.05, 0.1 * n), 2.0 * n + 2.0, x_points)
    steps = int(round((a_hi - a_lo) / a_step))
    for i in range(steps + 1):
        a = a_lo + i * a_step
        vals = [(f_eval(tower(x, a, n + 1, ctx), n + 1), x) for x in xs]
        v, x = min(vals)
        if v < 0:
            return x, a
    raise NonConvergence(f"no loss of monotonicity found for n={n} with a <= {a_hi}")


def _eval(n: int, x: mpfr, a: mpfr, ctx: PrecisionContext, want_a: bool = True):
    return tower(x, a, n + 3 if want_a else n + 2, ctx, want_a_derivatives=want_a)


def _scaled_system(n: int, x: mpfr, t):
    """Residuals and Jacobian of F = s c(n+1) and x F_x / (n+1), divided by s.

    s(x) = x^(n+1)/(n+1)! removes the power-law envelope of c(n+1), so the
    scaled dip F is a well-conditioned basin in x whose touching point is the
    transition.  The zero set equals {c(n+1) = c(n+2) = 0}.
    """
    m = n + 1
    c1, c2, c3 = t.c[n + 1], t.c[n + 2], t.c[n + 3]
    a1, a2 = t.c_a[n + 1], t.c_a[n + 2]
    u = m / x
    e1 = c1
    d1 = u * c1 - c2                      # F_x / s
    d2 = u * (u - 1 / x) * c1 - 2 * u * c2 + c3   # F_xx / s
    w = x / m
    e2 = w * d1
    # d(e2)/dx = d1 / m + w * d2
    j = ((d1, a1), (d1 / m + w * d2, w * (u * a1 - a2)))
    return (e1, e2), j


def _merit(n: int, x: mpfr, x_ref: mpfr, t) -> mpfr:
    """|F|^2 + |x F_x/(n+1)|^2 relative to s(x_ref)."""
    (e1, e2), _ = _scaled_system(n, x, t)
    ratio = gmpy2.exp((n + 1) * (gmpy2.log(x) - gmpy2.log(x_ref)))
    return (e1 * e1 + e2 * e2) * ratio * ratio


def solve_transition(n: int, cfg: NewtonConfig | None = None, seed=None) -> TransitionPoint:
    """Damped Newton iteration for the transition of order ``n``.

    Iterates on the scaled pair (F, x F_x/(n+1)) with F = c(n+1) x^(n+1)/(n+1)!,
    which shares its root with (r1, r2) but keeps the basin wide for seeds
    several percent away.  Raises NonConvergence (with the last iterate
    attached) or InsufficientPrecision when the Jacobian is numerically singular.
    """
    cfg = cfg or NewtonConfig()
    ctx = cfg.context
    if n < 2:
        raise DomainError("transition points exist for n >= 2")
    start = time.perf_counter()
    if seed is None:
        x, a = initial_guess(n, ctx)
    else:
        x, a = ctx.real(seed[0]), ctx.real(seed[1])
    tol = ctx.real(cfg.step_tolerance)
    eps = mpfr(2) ** (-ctx.bits)
    t = _eval(n, x, a, ctx)
    iterations = 0
    converged = False
    with ctx.activate():
        while iterations < cfg.max_iterations:
            iterations += 1
            (r1, r2), ((j11, j12), (j21, j22)) = _scaled_system(n, x, t)
            det = j11 * j22 - j12 * j21
            if det == 0 or abs(det) <= 4 * eps * (abs(j11 * j22) + abs(j12 * j21)):
                raise InsufficientPrecision(
                    f"singular Jacobian at n={n}, x={x}, a={a}; increase --digits")
            dx = (j22 * r1 - j12 * r2) / det
            da = (j11 * r2 - j21 * r1) / det
            small = abs(da) < tol and abs(dx) < tol * abs(x)
            merit0 = _merit(n, x, x, t)
            lam = mpfr(1)
            for _ in range(cfg.max_halvings + 1):
                x_new, a_new = x - lam * dx, a - lam * da
                if x_new > 0 and x_new + a_new > 0:
                    t_new = _eval(n, x_new, a_new, ctx)
                    if small or _merit(n, x_new, x, t_new) < merit0:
                        break
                lam *= cfg.damping
            else:
                raise NonConvergence(
                    f"line search failed at n={n} after {cfg.max_halvings} halvings",
                    point=_point(n, x, a, t, iterations, ctx, start, FAILED))
            log.debug("n=%d it=%d lam=%s dx=%.3e da=%.3e", n, iterations, lam, float(dx), float(da))
            x, a, t = x_new, a_new, t_new
            if small:
                converged = True
                break
    if not converged:
        raise NonConvergence(
            f"no convergence for n={n} within {cfg.max_iterations} iterations",
            point=_point(n, x, a, t, iterations, ctx, start, FAILED))
    status = CONVERGED
    if cfg.certify and not certify(n, x, a, ctx):
        status = UNVERIFIED
    return _point(n, x, a, t, iterations, ctx, start, status)


def _point(n, x, a, t, iterations, ctx, start, status) -> TransitionPoint:
    with ctx.activate():
        r1, r2 = abs(t.c[n + 1]), abs(t.c[n + 2])
    return TransitionPoint(n=n, a_f=a, x_f=x, residual_1=r1, residual_2=r2,
                           iterations=iterations, digits_used=ctx.decimal_digits,
                           elapsed=time.perf_counter() - start, status=status)


def certify(n: int, x, a, ctx: PrecisionContext, offset=CERTIFY_OFFSET) -> bool:
    """Sign bracket in a: f(x, a - d, n+1) > 0 > f(x, a + d, n+1)."""
    with ctx.activate():
        d = ctx.real(offset)
        below = f_eval(tower(x, a - d, n + 1, ctx), n + 1)
        above = f_eval(tower(x, a + d, n + 1, ctx), n + 1)
    return below > 0 > above


def _solve_row(args) -> TransitionPoint:
    n, cfg, seed = args
    try:
        return solve_transition(n, cfg, seed)
    except NonConvergence as exc:
        if exc.point is not None:
            return exc.point
        raise


def _failed_row(n: int, cfg: NewtonConfig, exc: Exception) -> TransitionPoint:
    ctx = cfg.context
    nan = ctx.real("nan")
    log.warning("order %d failed: %s", n, exc)
    return TransitionPoint(n=n, a_f=nan, x_f=nan, residual_1=nan, residual_2=nan,
                           iterations=0, digits_used=ctx.decimal_digits, status=FAILED)


def sweep(schedule, cfg: NewtonConfig | None = None, parallel: bool = False,
          workers: int | None = None, digits: int | None = None) -> list[TransitionPoint]:
    """Solve every order in ``schedule``.

    Sequential mode seeds each row from the previous converged row; parallel
    mode seeds every row from :func:`initial_guess`.  Without an explicit
    ``cfg`` or ``digits`` each row runs at :func:`recommended_digits`.
    A failing row is recorded with status ``failed``; it never aborts the sweep.
    """
    schedule = [int(n) for n in schedule]
    if not schedule:
        raise ValueError("empty schedule")
    if any(n < 2 for n in schedule):
        raise DomainError("every order in the schedule must be >= 2")
    if sorted(set(schedule)) != schedule:
        raise ValueError("schedule must be strictly ascending")

    def row_cfg(n):
        if cfg is not None:
            return cfg if digits is None else replace(cfg, context=cfg.context.with_digits(digits))
        return NewtonConfig(context=PrecisionContext(digits or recommended_digits(n)))

    if parallel:
        jobs = [(n, row_cfg(n), None) for n in schedule]
        rows = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_solve_row, job) for job in jobs]
            for (n, c, _), fut in zip(jobs, futures):
                try:
                    rows.append(fut.result())
                except CmcritError as exc:
                    rows.append(_failed_row(n, c, exc))
        return rows

    rows: list[TransitionPoint] = []
    prev = None
    for n in schedule:
        c = row_cfg(n)
        seed = None
        if prev is not None and prev.status != FAILED and n > max(SMALL_ORDER_SEEDS):
            seed = continuation_guess(n, prev, c.context)
        try:
            row = _solve_row((n, c, seed))
        except CmcritError as exc:
            row = _failed_row(n, c, exc)
        log.info("n=%d a_f=%s x_f=%s status=%s", n, row.a_f, row.x_f, row.status)
        rows.append(row)
        prev = row
    return rows
