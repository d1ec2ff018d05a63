import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from radbergman import report as rep

L = np.arange(1, 41) * math.log(2)


def test_constant_trace_is_bounded():
    v, fit = rep.decide(L, np.log(4.0 - np.exp(-L)))
    assert v == rep.BOUNDED
    assert fit.model == "constant"


def test_linear_growth_is_log_model():
    v, fit = rep.decide(L, np.log(1.0 + 3.0 * L))
    assert v == rep.DIVERGENT
    assert fit.model == "log"


def test_power_growth():
    v, fit = rep.decide(L, 0.5 * L + 1.0)
    assert (v, fit.model) == (rep.DIVERGENT, "power")
    assert fit.slope == pytest.approx(0.5)


def test_exponential_growth_does_not_overflow():
    v, fit = rep.decide(L, np.exp(0.3 * L))
    assert (v, fit.model) == (rep.DIVERGENT, "exp")


def test_infinite_trace_is_divergent():
    lt = np.zeros_like(L)
    lt[-1] = math.inf
    assert rep.decide(L, lt)[0] == rep.DIVERGENT


def test_slow_approach_is_inconclusive():
    # sup still rising by more than 2% but with no clean growth law
    lt = np.log(4.0 - 20.0 / (5.0 + L))
    assert rep.decide(L, lt)[0] == rep.INCONCLUSIVE


def test_too_few_points():
    assert rep.decide([1.0, 2.0], [0.0, 0.0])[0] == rep.INCONCLUSIVE


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=30))
def test_running_sup_is_monotone(xs):
    s = rep.running_sup(xs)
    assert np.all(np.diff(s) >= 0)
    assert s[-1] == max(xs)


def test_report_serialisation():
    r = rep.CriterionReport.build("demo", {"omega": {"family": "standard", "a": 0.0}}, "radius",
                                  1 - np.exp(-L), L, np.append(np.zeros(39), math.inf))
    d = r.to_dict()
    assert d["verdict"] == rep.DIVERGENT
    assert d["trace"][-1] == "inf"
    rows = list(r.csv_rows())
    assert len(rows) == L.size and set(rows[0]) == {"k", "grid", "L", "trace", "running_sup"}
