"""Extrapolation of a_f(n) to n -> infinity in the variable t = 1/n.

The model is a_f = a_c + a_1 t + ... + a_d t^d.  With exactly d+1 points the
limit is the Lagrange interpolant evaluated at t = 0,

    a_c = sum_i a_f(n_i) * prod_{j != i} t_j / (t_j - t_i),

and with more points a least-squares fit through the normal equations.
All arithmetic is done in working precision; t spans ~1e-5 so double
precision would already cost the digits that matter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from gmpy2 import mpfr

from .errors import FitError
from .precision import PrecisionContext


@dataclass
class CriticalEstimate:
    a_c: mpfr
    coefficients: list[mpfr]
    degree: int
    points: list[tuple[int, mpfr]]
    condition_diagnostic: mpfr
    weights: list[mpfr] = field(default_factory=list)

    @property
    def interpolatory(self) -> bool:
        return len(self.points) == self.degree + 1


def _normalize(points, ctx: PrecisionContext):
    pts = [(int(n), ctx.real(v)) for n, v in points]
    ns = [n for n, _ in pts]
    if len(set(ns)) != len(ns):
        raise FitError("duplicate n in fit points")
    if any(n <= 0 for n in ns):
        raise FitError("orders must be positive")
    return pts


def lagrange_weights_at_zero(ns, ctx: PrecisionContext) -> list[mpfr]:
    """Weights w_i with p(0) = sum w_i y_i for the interpolant through t_i = 1/n_i."""
    with ctx.activate():
        t = [1 / mpfr(n) for n in ns]
        weights = []
        for i, ti in enumerate(t):
            w = mpfr(1)
            for j, tj in enumerate(t):
                if j != i:
                    w = w * tj / (tj - ti)
            weights.append(w)
    return weights


def _solve(A, y):
    """Gaussian elimination with partial pivoting on small dense systems."""
    n = len(A)
    M = [list(row) + [yi] for row, yi in zip(A, y)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(M[r][col]))
        if M[piv][col] == 0:
            raise FitError("degenerate fit system")
        M[col], M[piv] = M[piv], M[col]
        for r in range(col + 1, n):
            f = M[r][col] / M[col][col]
            if f:
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    out = [mpfr(0)] * n
    for r in range(n - 1, -1, -1):
        s = M[r][n] - sum((M[r][k] * out[k] for k in range(r + 1, n)), mpfr(0))
        out[r] = s / M[r][r]
    return out


def fit_inverse_poly(points, degree: int, ctx: PrecisionContext | None = None) -> CriticalEstimate:
    """Fit a polynomial of ``degree`` in 1/n to (n, a_f) pairs."""
    ctx = ctx or PrecisionContext()
    if degree < 1:
        raise FitError("degree must be >= 1")
    pts = _normalize(points, ctx)
    if len(pts) < degree + 1:
        raise FitError(f"need at least {degree + 1} points for degree {degree}, got {len(pts)}")
    ns = [n for n, _ in pts]
    ys = [v for _, v in pts]
    n_ref = min(ns)
    with ctx.activate():
        # columns in u = n_ref / n keep the system O(1); a_k = b_k * n_ref^k
        V = [[(mpfr(n_ref) / n) ** k for k in range(degree + 1)] for n in ns]
        VT = list(zip(*V))
        G = [[sum((p * q for p, q in zip(ci, cj)), mpfr(0)) for cj in VT] for ci in VT]
        rhs = [sum((p * y for p, y in zip(ci, ys)), mpfr(0)) for ci in VT]
        b = _solve(G, rhs)
        coeffs = [bk * mpfr(n_ref) ** k for k, bk in enumerate(b)]
        if len(pts) == degree + 1:
            weights = lagrange_weights_at_zero(ns, ctx)
            a_c = sum((w * y for w, y in zip(weights, ys)), mpfr(0))
        else:
            e0 = [mpfr(1)] + [mpfr(0)] * degree
            z = _solve(G, e0)
            weights = [sum((vi * zi for vi, zi in zip(row, z)), mpfr(0)) for row in V]
            a_c = coeffs[0]
        cond = sum((abs(w) for w in weights), mpfr(0))
    return CriticalEstimate(a_c=a_c, coefficients=coeffs[1:], degree=degree, points=pts,
                            condition_diagnostic=cond, weights=weights)


def evaluate(est: CriticalEstimate, n, ctx: PrecisionContext | None = None) -> mpfr:
    """Fitted a_f at order ``n`` (any positive real)."""
    ctx = ctx or PrecisionContext()
    with ctx.activate():
        t = 1 / ctx.real(n)
        acc = mpfr(0)
        for ak in reversed(est.coefficients):
            acc = (acc + ak) * t
        return est.a_c + acc


@dataclass
class StabilityReport:
    estimates: dict[int, list[tuple[tuple[int, ...], mpfr]]]
    spread: dict[int, mpfr]

    def best(self, degree: int) -> mpfr:
        return self.estimates[degree][-1][1]


def stability_report(points, degrees, ctx: PrecisionContext | None = None) -> StabilityReport:
    """a_c over every window of d+1 consecutive orders, for each degree d.

    The spread (max - min) per degree is an empirical error bar, not a bound.
    """
    ctx = ctx or PrecisionContext()
    pts = sorted(_normalize(points, ctx))
    degrees = sorted(set(int(d) for d in degrees))
    if not degrees:
        raise FitError("no degrees requested")
    if len(pts) < max(degrees) + 1:
        raise FitError(f"need at least {max(degrees) + 1} rows, got {len(pts)}")
    estimates = {}
    spread = {}
    for d in degrees:
        rows = []
        for i in range(len(pts) - d):
            window = pts[i : i + d + 1]
            est = fit_inverse_poly(window, d, ctx)
            rows.append((tuple(n for n, _ in window), est.a_c))
        estimates[d] = rows
        vals = [v for _, v in rows]
        with ctx.activate():
            spread[d] = max(vals) - min(vals)
    return StabilityReport(estimates=estimates, spread=spread)
