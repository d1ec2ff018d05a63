import math

import numpy as np
import pytest
from scipy import integrate

from radbergman.moments import moment_table
from radbergman.weights import Exponential, LogPerturbed, Product, Standard, log_moment_quad


def test_closed_form_strategy():
    tab = moment_table(Standard(a=1.0))
    assert tab.strategy == "closed_form"
    # w_{2n+1} = 1 / ((2n+2)(2n+3))
    n = np.arange(5)
    assert np.allclose(np.exp(tab.odd_moments_log(5)), 1 / ((2 * n + 2) * (2 * n + 3)), rtol=1e-13)


def test_interpolated_table_matches_fresh_quadrature():
    spec = Product(factors=(Standard(a=0.5), LogPerturbed(p=0.0, q=-1.5)))
    tab = moment_table(spec, x_max=1e4)
    assert tab.strategy == "chebyshev_log_moments"
    xs = np.array([0.3, 7.7, 123.4, 4321.0])
    got = tab.log(xs)
    ref = np.array([log_moment_quad(spec, float(x)) for x in xs])
    assert np.max(np.abs(got - ref)) < 1e-10
    assert tab.error < 1e-9


def test_exponential_moments_against_scipy():
    tab = moment_table(Exponential(alpha=1.0, beta=1.0), x_max=1e6)
    for x in (1e2, 1e4, 1.6e5):
        # t = 1 - r; the integrand peaks near t = x^-1/2, shift by its log-maximum
        shift = -2 * math.sqrt(x)
        f = lambda t: math.exp(x * math.log1p(-t) - 1 / t - shift) if t > 0 else 0.0  # noqa: E731
        peak = 1 / math.sqrt(x)
        ref, _ = integrate.quad(f, 0, 1, points=[peak / 4, peak, 4 * peak], epsrel=1e-12,
                                limit=200)
        assert float(tab.log(x)) == pytest.approx(shift + math.log(ref), abs=1e-9)


def test_out_of_range_request():
    tab = moment_table(Exponential(alpha=1.0, beta=1.0), x_max=1e6)
    with pytest.raises(ValueError):
        tab.log([2e6])
    with pytest.raises(ValueError):
        tab.log([-1.0])


def test_tables_are_shared():
    s = Standard(a=0.25)
    assert moment_table(s) is moment_table(Standard(a=0.25))
    assert math.isfinite(float(moment_table(s).log(3.0)))


def test_panels_are_fitted_on_demand():
    tab = moment_table(Product(factors=(Standard(a=1.0), LogPerturbed(p=0.0, q=-1.0))), x_max=1e18)
    tab.log([10.0])
    assert len(tab._panels) == 1
    tab.log([1e15])
    assert len(tab._panels) == 2
