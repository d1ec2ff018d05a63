import numpy as np
import pytest

from radbergman import report as rep
from radbergman.classify import (
    INCONCLUSIVE, MEMBER, NON_MEMBER, and3, classify, dcheck_classify, dhat_classify,
    fit_exponent, lower_doubling_integral_check, moment_dhat_test, moment_tail_equiv_check,
    monotone_product_check, product_tail_equiv_check,
)
from radbergman.weights import Exponential, LogPerturbed, Power, Standard, Tabulated

LP = LogPerturbed(p=-1.0, q=-2.0)


@pytest.mark.parametrize("a", [0.0, 0.5, 2.0])
def test_standard_weights_are_doubling(a):
    r = classify(Standard(a=a))
    assert (r.dhat_verdict, r.dcheck_verdict, r.d_verdict) == (MEMBER, MEMBER, MEMBER)
    assert r.alpha == pytest.approx(a + 1, abs=1e-6)


def test_exponential_is_lower_but_not_upper_doubling():
    r = classify(Exponential(alpha=1.0, beta=1.0))
    assert r.dhat_verdict == NON_MEMBER
    assert r.dcheck_verdict == MEMBER
    assert r.d_verdict == NON_MEMBER


def test_log_perturbed_is_upper_but_not_lower_doubling():
    r = classify(LP)
    assert r.dhat_verdict == MEMBER
    assert r.dcheck_verdict == NON_MEMBER
    assert all(v["tends_to_one"] for v in r.evidence["dcheck_by_K"].values())


def test_classification_is_deterministic():
    a = classify(LP).to_dict()
    b = classify(LP).to_dict()
    assert a == b


def test_and3():
    assert and3(MEMBER, MEMBER) == MEMBER
    assert and3(MEMBER, NON_MEMBER) == NON_MEMBER
    assert and3(INCONCLUSIVE, MEMBER) == INCONCLUSIVE
    assert and3(INCONCLUSIVE, NON_MEMBER) == NON_MEMBER


def test_depth_validation():
    with pytest.raises(ValueError):
        dhat_classify(Standard(a=0.0), depth=4)
    with pytest.raises(ValueError):
        dcheck_classify(Standard(a=0.0), K_grid=(1,))


def test_fit_exponent_of_standard_weight():
    assert fit_exponent(Standard(a=1.5)) == pytest.approx(2.5, abs=1e-8)


def test_moment_dhat_test_verdicts():
    assert moment_dhat_test(Standard(a=1.0)).verdict == rep.BOUNDED
    # limit of w_x / w_2x for (1-r)^a is 2^(a+1)
    assert moment_dhat_test(Standard(a=1.0)).running_sup[-1] == pytest.approx(4.0, rel=1e-4)
    assert moment_dhat_test(Exponential(alpha=1.0, beta=1.0)).verdict == rep.DIVERGENT


def test_moment_tail_band():
    r = moment_tail_equiv_check(Standard(a=1.0))
    lo, hi = r.extra["band"]
    assert 0 < lo <= hi < 3
    with pytest.raises(ValueError):
        moment_tail_equiv_check(Standard(a=1.0), x_grid=[0.5])


def test_lower_doubling_integral_bounded_for_standard():
    assert lower_doubling_integral_check(Standard(a=1.0)).verdict == rep.BOUNDED


def test_product_tail_ratio_in_unit_interval():
    r = product_tail_equiv_check(Standard(a=1.0), LP)
    assert np.all(r.trace <= 1 + 1e-12) and np.all(r.trace > 0)


@pytest.mark.parametrize("omega,value", [(Standard(a=0.0), 0.5), (Standard(a=1.0), 2.0 / 3.0)])
def test_product_tail_closed_forms(omega, value):
    r = product_tail_equiv_check(omega, Standard(a=0.0))
    assert np.allclose(r.trace, value, rtol=1e-10)


def test_monotone_product_keeps_upper_doubling():
    step = Tabulated(r=(0.0, 0.5), w=(1.0, 2.0))
    p = monotone_product_check(Standard(a=1.0), step, "nondecreasing")
    assert p.dhat_verdict == MEMBER
    assert p.evidence["contradictions"] == []


def test_monotone_product_keeps_lower_doubling():
    p = monotone_product_check(Standard(a=1.0), Power(a=1.0), "nonincreasing")
    assert p.dcheck_verdict == MEMBER
    assert p.evidence["contradictions"] == []
    with pytest.raises(ValueError):
        monotone_product_check(Standard(a=1.0), LP, "sideways")


def test_slowly_settling_ratio_is_not_called_member():
    # R_n for (1-r) log(e/(1-r)) increases towards 4 and never stabilises
    p = monotone_product_check(Standard(a=1.0), LogPerturbed(p=0.0, q=1.0), "nondecreasing")
    assert p.dhat_verdict == INCONCLUSIVE
    assert p.evidence["contradictions"]


@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("spec", [Standard(a=1.0), Exponential(alpha=1.0, beta=1.0)])
def test_lower_doubling_integral_for_members(spec, gamma):
    assert lower_doubling_integral_check(spec, gamma=gamma).verdict == rep.BOUNDED


def test_lower_doubling_integral_grows_for_log_perturbed():
    r = lower_doubling_integral_check(LP, gamma=1.0)
    assert r.verdict == rep.DIVERGENT and r.fit.model == "log"


@pytest.mark.parametrize("spec", [Standard(a=0.5), Exponential(alpha=1.0, beta=1.0), LP])
def test_dcheck_is_monotone_in_K(spec):
    by_K = classify(spec, cross_check=False).evidence["dcheck_by_K"]
    flags = [by_K[K]["member"] for K in sorted(by_K)]
    assert flags == sorted(flags)


@pytest.mark.parametrize("spec", [Standard(a=0.0), Standard(a=2.0), Exponential(alpha=1.0, beta=1.0), LP])
def test_tail_and_moment_upper_doubling_tests_agree(spec):
    r = classify(spec)
    moment = r.evidence["moment_dhat"]["verdict"]
    assert (r.dhat_verdict == MEMBER) == (moment == rep.BOUNDED)
