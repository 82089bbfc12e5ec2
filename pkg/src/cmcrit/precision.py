"""Working-precision configuration.

Every numeric routine takes a :class:`PrecisionContext` explicitly and runs
its arithmetic inside :meth:`PrecisionContext.activate`, which installs a
thread-local gmpy2 context for the duration of the block. Nothing here
mutates process-wide precision state.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterator

import gmpy2
from gmpy2 import mpfr

DEFAULT_DIGITS = 60
MIN_DIGITS = 30

_ROUNDING = {"nearest": gmpy2.RoundToNearest}

Real = mpfr


@dataclass(frozen=True)
class PrecisionContext:
    decimal_digits: int = DEFAULT_DIGITS
    rounding: str = "nearest"

    def __post_init__(self) -> None:
        if int(self.decimal_digits) != self.decimal_digits or self.decimal_digits < MIN_DIGITS:
            raise ValueError(f"decimal_digits must be an integer >= {MIN_DIGITS}, got {self.decimal_digits!r}")
        if self.rounding not in _ROUNDING:
            raise ValueError(f"unsupported rounding rule {self.rounding!r}")

    @property
    def bits(self) -> int:
        return math.ceil(self.decimal_digits * math.log2(10))

    @property
    def roundtrip_digits(self) -> int:
        """Significant decimal digits needed to reproduce a value exactly."""
        return math.ceil(self.bits * math.log10(2)) + 1

    def gmpy_context(self, extra_bits: int = 0) -> gmpy2.context:
        return gmpy2.context(precision=self.bits + extra_bits, round=_ROUNDING[self.rounding])

    @contextmanager
    def activate(self, extra_bits: int = 0) -> Iterator[gmpy2.context]:
        with self.gmpy_context(extra_bits) as ctx:
            yield ctx

    def real(self, value) -> mpfr:
        """Convert ``value`` (str, int, float, mpfr) to a working-precision real."""
        if isinstance(value, float):
            # repr() keeps float inputs readable ("0.1" stays 0.1, not 0.1000000000000000055...)
            value = repr(value)
        return mpfr(value, self.bits)

    def with_digits(self, decimal_digits: int) -> "PrecisionContext":
        return PrecisionContext(decimal_digits, self.rounding)


def recommended_digits(n: int) -> int:
    """Working digits for a derivative tower of order ``n``.

    60 digits up to n = 1e5; beyond that 15 guard digits per decade.
    """
    if n < 0:
        raise ValueError("order must be non-negative")
    if n <= 10**5:
        return DEFAULT_DIGITS
    return DEFAULT_DIGITS + math.ceil(15 * (math.log10(n) - 5) - 1e-9)


def context_for(n: int, digits: int | None = None) -> PrecisionContext:
    return PrecisionContext(digits if digits is not None else recommended_digits(n))


def to_decimal(x: mpfr, digits: int) -> str:
    """Scientific-notation string with ``digits`` significant digits.

    Deterministic and locale independent, e.g. ``2.3018e+00``.
    """
    if gmpy2.is_nan(x) or gmpy2.is_infinite(x):
        return str(x)
    mant, exp, _ = x.digits(10, digits)
    sign = ""
    if mant.startswith("-"):
        sign, mant = "-", mant[1:]
    if set(mant) <= {"0"}:
        return f"{sign}0." + "0" * (digits - 1) + "e+00"
    e = exp - 1
    return f"{sign}{mant[0]}.{mant[1:]}e{'+' if e >= 0 else '-'}{abs(e):02d}"
