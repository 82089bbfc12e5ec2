import pytest

from cmcrit.precision import PrecisionContext
from cmcrit.tower import f_eval, tower
from cmcrit.validate import SUITES, SuiteReport, find_non_cm_witness, run_suite


@pytest.mark.parametrize("name", SUITES)
def test_suite_passes(name, ctx):
    rep = run_suite(name, ctx)
    assert rep.passed, "\n".join(rep.lines())
    assert rep.lines()[0] == f"[PASS] {name}"


def test_non_cm_witness_is_real(ctx):
    x, k, v = find_non_cm_witness(3, ctx)
    assert v < 0
    # a_f(3) ~ 2.903 < 3 is the first order below 3, so the dip is in f(., 3, 4)
    assert k == 4
    assert abs(float(x) - 1.3438) < 0.01
    assert f_eval(tower(x, 3, k, ctx), k) == v
    # the same point at higher precision keeps its sign
    hi = PrecisionContext(100)
    assert f_eval(tower(hi.real(x), 3, k, hi), k) < 0


def test_no_witness_at_completely_monotone_parameter(ctx):
    assert find_non_cm_witness(2, ctx, max_order=12) is None


def test_failed_report_lines():
    rep = SuiteReport("demo")
    rep.add("first", True)
    rep.add("second", False, n=3)
    assert not rep.passed
    assert rep.lines() == ["[FAIL] demo", "    ok   first", "    FAIL second  (n=3)"]


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_suite("nope")
