from fractions import Fraction

import gmpy2
import pytest
from gmpy2 import mpfr

from cmcrit.precision import PrecisionContext

_CHECK = gmpy2.context(precision=400)


@pytest.fixture
def ctx():
    return PrecisionContext(60)


def _wide(v):
    if isinstance(v, Fraction):
        return mpfr(v.numerator, 400) / v.denominator
    return mpfr(v, 400)


def close(a, b, rel=None, abs_=None):
    """|a - b| <= max(rel*|b|, abs_), evaluated at 400 bits.

    Accepts mpfr, str, int, float and Fraction operands.
    """
    with gmpy2.context(_CHECK):
        a, b = _wide(a), _wide(b)
        bound = mpfr(0)
        if rel is not None:
            bound = max(bound, _wide(rel) * abs(b))
        if abs_ is not None:
            bound = max(bound, _wide(abs_))
        return abs(a - b) <= bound
