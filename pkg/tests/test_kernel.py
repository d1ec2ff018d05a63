import cmath
import math

import numpy as np
import pytest
from scipy import integrate

from radbergman.kernel import (
    KernelConvergenceError, KernelEvaluator, coefficient_bump, integral_mean_M1,
    integral_mean_deriv, integral_mean_table, kernel_deriv_eval, kernel_eval,
)
from radbergman.moments import moment_table
from radbergman.quad import log_quad
from radbergman.weights import Exponential, LogPerturbed, Standard, log_tail_u


def _pairs(n, rng, rmax=0.995):
    z = np.sqrt(rng.uniform(0, rmax ** 2, n)) * np.exp(2j * np.pi * rng.uniform(size=n))
    w = np.sqrt(rng.uniform(0, rmax ** 2, n)) * np.exp(2j * np.pi * rng.uniform(size=n))
    return z, w


def test_unweighted_kernel_closed_form():
    K = KernelEvaluator(Standard(a=0.0))
    z, w = _pairs(100, np.random.default_rng(1))
    for a, b in zip(z, w):
        t = a.conjugate() * b
        assert abs(kernel_eval(K, a, b).value - 1 / (1 - t) ** 2) <= 1e-10 * abs(1 / (1 - t) ** 2)
        d = 2 * a.conjugate() / (1 - b * a.conjugate()) ** 3
        assert abs(kernel_deriv_eval(K, b, a).value - d) <= 1e-9 * abs(d)


def test_linear_weight_kernel_closed_form():
    # coefficients (n+1)(2n+3) sum to 4/(1-t)^3 - 1/(1-t)^2
    K = KernelEvaluator(Standard(a=1.0))
    z, w = _pairs(50, np.random.default_rng(2), rmax=0.97)
    for a, b in zip(z, w):
        t = a.conjugate() * b
        exact = 4 / (1 - t) ** 3 - 1 / (1 - t) ** 2
        kv = kernel_eval(K, a, b)
        assert abs(kv.value - exact) <= 1e-10 * abs(exact)
        assert kv.error < 1e-9 * abs(exact)


def test_kernel_is_hermitian():
    K = KernelEvaluator(Exponential(alpha=1.0, beta=1.0))
    a, b = 0.3 + 0.4j, -0.5 + 0.1j
    assert K.eval(a, b).value == pytest.approx(K.eval(b, a).value.conjugate(), rel=1e-11)


def test_kernel_at_origin():
    K = KernelEvaluator(Standard(a=1.0))
    # 1 / (2 w_1) with w_1 = 1/6
    assert K.eval(0, 0.7).value == pytest.approx(3.0, rel=1e-14)


def test_argument_validation():
    K = KernelEvaluator(Standard(a=0.0), r_max=0.99)
    with pytest.raises(ValueError):
        K.eval(0.999, 0.999)
    with pytest.raises(ValueError):
        K.eval(0.1, 0.1, tol=1e-15)


def test_term_budget():
    K = KernelEvaluator(Standard(a=0.0), n_max=100)
    with pytest.raises(KernelConvergenceError):
        K.eval(0.99, 0.99)


@pytest.mark.parametrize("rho", [0.1, 0.5, 0.9, 0.99])
def test_integral_mean_unweighted(rho):
    # the circle mean of |1 - rho e^it|^-2 is 1 / (1 - rho^2)
    K = KernelEvaluator(Standard(a=0.0))
    assert integral_mean_M1(K, 0.995, rho / 0.995) == pytest.approx(1 / (1 - rho ** 2), rel=1e-9)


def test_integral_mean_derivative_unweighted():
    K = KernelEvaluator(Standard(a=0.0))
    a, r = 0.8, 0.9
    rho = a * r
    ref, _ = integrate.quad(lambda t: abs(1 - rho * cmath.exp(1j * t)) ** -3, 0, 2 * math.pi,
                            epsrel=1e-13)
    assert integral_mean_deriv(K, a, r) == pytest.approx(2 * r * ref / (2 * math.pi), rel=1e-8)


def test_integral_mean_table_interpolates():
    tab = integral_mean_table(Standard(a=0.0), u_max=6.0)
    u = np.array([0.1, 1.7, 5.9])
    rho = -np.expm1(-u)
    assert np.allclose(tab(u), -np.log1p(-rho ** 2), atol=1e-8)
    with pytest.raises(ValueError):
        tab(np.array([100.0]))


def test_bump_past_the_table_is_reported():
    tab = moment_table(Exponential(alpha=1.0, beta=1.0), x_max=1e4)
    with pytest.raises(KernelConvergenceError):
        coefficient_bump(lambda m: -tab.log(2.0 * m + 1.0), math.log(1 - 1e-4), 0.5 * (1e4 - 3))


@pytest.mark.parametrize("w", [Standard(a=0.0), Standard(a=1.0), LogPerturbed(p=-1.0, q=-2.0)])
def test_integral_mean_is_comparable_to_tail_integral(w):
    # for doubling-tail weights M_1 at radius rho is comparable to int_0^rho dt/(w_hat(t)(1-t)),
    # which in u = -log(1-t) is int_0^u du / w_hat
    u = np.arange(1, 13) * math.log(2)
    tab = integral_mean_table(w, u_max=float(u[-1]) + 0.25)
    est = np.array([log_quad(lambda x: -np.asarray(log_tail_u(w, x), float), 0.0, ui).log_value
                    for ui in u])
    ratio = np.exp(tab(u) - est)
    assert np.all((ratio > 0.1) & (ratio < 3.0))
    # the ratio settles rather than drifting off
    assert abs(ratio[-1] / ratio[-2] - 1) < 0.03
