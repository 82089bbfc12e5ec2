"""Sweep tables on disk and static SVG figures.

Tables are written as CSV or JSON with every big float in decimal, carrying
enough digits to reproduce the binary value exactly when read back at the
same precision.  Figures are plain SVG built from line and marker
primitives.
"""

from __future__ import annotations

import csv
import datetime
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import gmpy2
from gmpy2 import mpfr

from . import __version__
from .errors import CmcritError
from .precision import PrecisionContext
from .solver import TransitionPoint
from .tower import f_eval, tower

CSV_COLUMNS = ("n", "a_f", "x_f", "iterations", "residual_1", "residual_2", "digits", "elapsed_ms", "status")


class TableError(CmcritError, ValueError):
    exit_code = 3


@dataclass
class SweepTable:
    rows: list[TransitionPoint]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        ns = [r.n for r in self.rows]
        if ns != sorted(set(ns)):
            raise TableError("rows must have unique n in ascending order")

    def points(self, converged_only: bool = True) -> list[tuple[int, mpfr]]:
        return [(r.n, r.a_f) for r in self.rows if not converged_only or r.status != "failed"]


def make_table(rows, record_timing: bool = False) -> SweepTable:
    """Wrap solver rows; wall-clock fields are dropped unless ``record_timing``."""
    rows = sorted(rows, key=lambda r: r.n)
    meta = {"generator": f"cmcrit {__version__}",
            "digits": max((r.digits_used for r in rows), default=None)}
    if record_timing:
        meta["created"] = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    else:
        rows = [TransitionPoint(**{**r.__dict__, "elapsed": None}) for r in rows]
    return SweepTable(rows=rows, metadata=meta)


def format_real(x: mpfr, digits: int) -> str:
    """Decimal string with ``digits`` significant digits; positional when the
    exponent is moderate, scientific otherwise."""
    if gmpy2.is_nan(x):
        return "nan"
    if gmpy2.is_infinite(x):
        return "inf" if x > 0 else "-inf"
    mant, exp, _ = x.digits(10, digits)
    sign = ""
    if mant.startswith("-"):
        sign, mant = "-", mant[1:]
    if set(mant) <= {"0"}:
        return "0"
    if -4 <= exp <= digits:
        if exp <= 0:
            body = "0." + "0" * (-exp) + mant
        else:
            body = mant[:exp] + "." + mant[exp:]
        body = body.rstrip("0").rstrip(".") if "." in body else body
        return sign + body
    e = exp - 1
    frac = mant[1:].rstrip("0")
    return f"{sign}{mant[0]}{'.' + frac if frac else ''}e{'+' if e >= 0 else '-'}{abs(e):02d}"


def _row_dict(r: TransitionPoint) -> dict:
    d = PrecisionContext(r.digits_used).roundtrip_digits
    return {
        "n": r.n,
        "a_f": format_real(r.a_f, d),
        "x_f": format_real(r.x_f, d),
        "iterations": r.iterations,
        "residual_1": format_real(r.residual_1, d),
        "residual_2": format_real(r.residual_2, d),
        "digits": r.digits_used,
        "elapsed_ms": r.elapsed_ms,
        "status": r.status,
    }


def _row_from(d: dict) -> TransitionPoint:
    try:
        digits = int(d["digits"])
        ctx = PrecisionContext(digits)
        elapsed = d.get("elapsed_ms")
        elapsed = None if elapsed in (None, "") else int(elapsed) / 1000
        return TransitionPoint(
            n=int(d["n"]), a_f=ctx.real(d["a_f"]), x_f=ctx.real(d["x_f"]),
            residual_1=ctx.real(d["residual_1"]), residual_2=ctx.real(d["residual_2"]),
            iterations=int(d["iterations"]), digits_used=digits, elapsed=elapsed,
            status=d.get("status") or "converged")
    except (KeyError, ValueError, TypeError) as exc:
        raise TableError(f"malformed table row {d!r}: {exc}") from exc


def render_table(table: SweepTable, fmt: str = "csv") -> str:
    if not table.rows:
        raise TableError("refusing to write an empty table")
    rows = [_row_dict(r) for r in table.rows]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: "" if v is None else v for k, v in row.items()})
        return buf.getvalue()
    if fmt == "json":
        return json.dumps({"metadata": table.metadata, "rows": rows}, indent=2) + "\n"
    raise TableError(f"unknown table format {fmt!r}")


def atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_table(table: SweepTable, fmt: str, destination) -> None:
    """Write ``table`` as csv or json.  ``destination`` is a path or a text stream."""
    text = render_table(table, fmt)
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        atomic_write(destination, text)


def parse_table(text: str, fmt: str | None = None) -> SweepTable:
    if fmt is None:
        fmt = "json" if text.lstrip().startswith("{") else "csv"
    if fmt == "json":
        doc = json.loads(text)
        return SweepTable(rows=[_row_from(r) for r in doc["rows"]], metadata=doc.get("metadata", {}))
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or not {"n", "a_f"} <= set(reader.fieldnames):
        raise TableError("csv input needs at least the columns n and a_f")
    rows = []
    for rec in reader:
        if set(CSV_COLUMNS) <= set(rec):
            rows.append(_row_from(rec))
        else:
            # minimal (n, a_f[, x_f]) tables, e.g. hand-entered reference data
            ctx = PrecisionContext(int(rec.get("digits") or 60))
            nan = ctx.real("nan")
            rows.append(TransitionPoint(n=int(rec["n"]), a_f=ctx.real(rec["a_f"]),
                                        x_f=ctx.real(rec.get("x_f") or "nan"), residual_1=nan,
                                        residual_2=nan, iterations=0, digits_used=ctx.decimal_digits,
                                        status="reference"))
    return SweepTable(rows=rows)


def read_table(path) -> SweepTable:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_table(text, "json" if path.suffix.lower() == ".json" else None)


def reference_table(rows, digits: int = 60) -> SweepTable:
    """SweepTable from reference (n, a_f, x_f) string triples."""
    ctx = PrecisionContext(digits)
    nan = ctx.real("nan")
    return SweepTable(rows=[
        TransitionPoint(n=n, a_f=ctx.real(a), x_f=ctx.real(x), residual_1=nan, residual_2=nan,
                        iterations=0, digits_used=digits, status="reference")
        for n, a, x in rows])


# ---------------------------------------------------------------- curves


@dataclass
class Curve:
    a: mpfr
    n: int
    xs: list[mpfr]
    ys: list[mpfr]

    @property
    def label(self) -> str:
        return f"f(x, {format_real(self.a, 6)}, {self.n})"


def curve_samples(n: int, a_values, x_range, count: int, ctx: PrecisionContext | None = None,
                  extra_orders: int = 0) -> list[Curve]:
    """Sample f(x, a, k) on a uniform x grid for each a and k = n..n+extra_orders."""
    ctx = ctx or PrecisionContext()
    lo, hi = (ctx.real(v) for v in x_range)
    if not lo > 0:
        raise TableError("x range must start above 0")
    if count < 2:
        raise TableError("need at least two sample points")
    with ctx.activate():
        xs = [lo + (hi - lo) * i / (count - 1) for i in range(count)]
    curves = []
    for a in a_values:
        towers = [tower(x, a, n + extra_orders, ctx) for x in xs]
        for k in range(n, n + extra_orders + 1):
            curves.append(Curve(a=ctx.real(a), n=k, xs=xs, ys=[f_eval(t, k) for t in towers]))
    return curves


# ---------------------------------------------------------------- svg

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b")
_W, _H = 640, 440
_L, _R, _T, _B = 80, 20, 40, 60


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if hi == lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    v = start
    while v <= hi + step * 1e-9:
        ticks.append(0.0 if abs(v) < step * 1e-9 else v)
        v += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    if v != 0 and (abs(v) < 1e-3 or abs(v) >= 1e5):
        return f"{v:.3g}"
    return f"{v:.6g}"


class _Canvas:
    def __init__(self, xlim, ylim, title: str, xlabel: str, ylabel: str):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 == self.x0:
            self.x0, self.x1 = self.x0 - 0.5, self.x1 + 0.5
        if self.y1 == self.y0:
            self.y0, self.y1 = self.y0 - 0.5, self.y1 + 0.5
        self.parts = [
            '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_W}" height="{_H}" '
            f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
            f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
            f'<text x="{_W / 2:.1f}" y="22" text-anchor="middle" font-size="14">{_esc(title)}</text>',
        ]
        self._axes(xlabel, ylabel)

    def px(self, x: float) -> float:
        return _L + (x - self.x0) / (self.x1 - self.x0) * (_W - _L - _R)

    def py(self, y: float) -> float:
        return _H - _B - (y - self.y0) / (self.y1 - self.y0) * (_H - _T - _B)

    def _axes(self, xlabel, ylabel):
        p = self.parts
        p.append(f'<rect x="{_L}" y="{_T}" width="{_W - _L - _R}" height="{_H - _T - _B}" '
                 f'fill="none" stroke="black"/>')
        for v in _nice_ticks(self.x0, self.x1):
            X = self.px(v)
            p.append(f'<line x1="{_fmt(X)}" y1="{_H - _B}" x2="{_fmt(X)}" y2="{_H - _B + 5}" stroke="black"/>')
            p.append(f'<text x="{_fmt(X)}" y="{_H - _B + 18}" text-anchor="middle">{_tick_label(v)}</text>')
        for v in _nice_ticks(self.y0, self.y1):
            Y = self.py(v)
            p.append(f'<line x1="{_L - 5}" y1="{_fmt(Y)}" x2="{_L}" y2="{_fmt(Y)}" stroke="black"/>')
            p.append(f'<text x="{_L - 8}" y="{_fmt(Y + 4)}" text-anchor="end">{_tick_label(v)}</text>')
        if self.y0 < 0 < self.y1:
            Y = self.py(0.0)
            p.append(f'<line x1="{_L}" y1="{_fmt(Y)}" x2="{_W - _R}" y2="{_fmt(Y)}" '
                     f'stroke="#888888" stroke-dasharray="4 3"/>')
        p.append(f'<text x="{(_L + _W - _R) / 2:.1f}" y="{_H - 15}" text-anchor="middle">{_esc(xlabel)}</text>')
        p.append(f'<text x="18" y="{(_T + _H - _B) / 2:.1f}" text-anchor="middle" '
                 f'transform="rotate(-90 18 {(_T + _H - _B) / 2:.1f})">{_esc(ylabel)}</text>')

    def polyline(self, xs, ys, color, dashed=False):
        pts = " ".join(f"{_fmt(self.px(x))},{_fmt(self.py(y))}" for x, y in zip(xs, ys))
        dash = ' stroke-dasharray="6 4"' if dashed else ""
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')

    def marker(self, x, y, color, r=3.5, filled=True):
        fill = color if filled else "white"
        self.parts.append(f'<circle cx="{_fmt(self.px(x))}" cy="{_fmt(self.py(y))}" r="{r}" '
                          f'fill="{fill}" stroke="{color}"/>')

    def legend(self, entries):
        for i, (label, color) in enumerate(entries):
            y = _T + 16 + 16 * i
            x = _W - _R - 190
            self.parts.append(f'<line x1="{x}" y1="{y - 4}" x2="{x + 20}" y2="{y - 4}" stroke="{color}" stroke-width="2"/>')
            self.parts.append(f'<text x="{x + 26}" y="{y}">{_esc(label)}</text>')

    def clip(self):
        self.parts.insert(3, f'<defs><clipPath id="plot"><rect x="{_L}" y="{_T}" '
                             f'width="{_W - _L - _R}" height="{_H - _T - _B}"/></clipPath></defs>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _pad(lo: float, hi: float, frac: float = 0.05) -> tuple[float, float]:
    span = hi - lo or abs(hi) or 1.0
    return lo - frac * span, hi + frac * span


def render_curves(curves: list[Curve], title: str = "", ylim=None) -> str:
    xs = [float(x) for c in curves for x in c.xs]
    ys = [float(y) for c in curves for y in c.ys if math.isfinite(float(y))]
    xlim = (min(xs), max(xs))
    ylim = tuple(ylim) if ylim else _pad(min(ys), max(ys))
    cv = _Canvas(xlim, ylim, title or "signed derivatives f(x, a, n)", "x", "f(x, a, n)")
    cv.clip()
    entries = []
    for i, c in enumerate(curves):
        color = _PALETTE[i % len(_PALETTE)]
        cv.parts.append('<g clip-path="url(#plot)">')
        cv.polyline([float(x) for x in c.xs], [float(y) for y in c.ys], color)
        cv.parts.append("</g>")
        entries.append((c.label, color))
    cv.legend(entries)
    return cv.render()


def render_extrapolation(points, estimate=None, title: str = "") -> str:
    """(1/n, a_f) markers, optional fitted polynomial and its t = 0 intercept."""
    from .extrapolate import evaluate

    ts = [1.0 / n for n, _ in points]
    ys = [float(a) for _, a in points]
    lo_y, hi_y = min(ys), max(ys)
    if estimate is not None:
        lo_y = min(lo_y, float(estimate.a_c))
        hi_y = max(hi_y, float(estimate.a_c))
    xlim = (0.0, max(ts) * 1.05)
    cv = _Canvas(xlim, _pad(lo_y, hi_y), title or "a_f against 1/n", "1/n", "a_f")
    entries = [("a_f(n)", _PALETTE[0])]
    if estimate is not None:
        grid = [xlim[1] * i / 200 for i in range(201)]
        fit = [float(evaluate(estimate, 1 / t)) if t > 0 else float(estimate.a_c) for t in grid]
        cv.polyline(grid, fit, _PALETTE[1], dashed=True)
        cv.marker(0.0, float(estimate.a_c), _PALETTE[1], r=5, filled=False)
        a_c = format_real(estimate.a_c, 12)
        cv.parts.append(f'<text x="{_fmt(cv.px(0.0) + 8)}" y="{_fmt(cv.py(float(estimate.a_c)) + 16)}" '
                        f'fill="{_PALETTE[1]}">a_c = {a_c}</text>')
        entries.append((f"degree-{estimate.degree} fit in 1/n", _PALETTE[1]))
    for t, y in zip(ts, ys):
        cv.marker(t, y, _PALETTE[0])
    cv.legend(entries)
    return cv.render()


def emit_plot(kind: str, data, destination, **kwargs) -> None:
    """Write an SVG figure.

    kind ``curves``: ``data`` is a list of :class:`Curve`.
    kind ``extrapolation``: ``data`` is a list of (n, a_f); with two or more
    points a polynomial in 1/n (degree ``degree``, default min(2, len-1)) is
    fitted and overlaid.
    """
    if kind == "curves":
        svg = render_curves(data, title=kwargs.get("title", ""), ylim=kwargs.get("ylim"))
    elif kind == "extrapolation":
        from .extrapolate import fit_inverse_poly

        pts = sorted((int(n), a) for n, a in data)
        est = None
        if len(pts) >= 2:
            degree = kwargs.get("degree") or min(2, len(pts) - 1)
            use = pts[-(kwargs.get("points") or degree + 1):]
            est = fit_inverse_poly(use, degree, kwargs.get("context"))
        svg = render_extrapolation(pts, est, title=kwargs.get("title", ""))
    else:
        raise TableError(f"unknown plot kind {kind!r}")
    if hasattr(destination, "write"):
        destination.write(svg)
    else:
        atomic_write(destination, svg)
