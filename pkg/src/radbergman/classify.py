"""Membership tests for the upper doubling, lower doubling and doubling classes.

All tests are finite dyadic scans on ``r_n = 1 - 2^-n`` and therefore
heuristics; every report carries the traces that produced its verdict.
Tail values are handled as logarithms throughout, so exponentially small
tails at depth 40 are no obstacle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import report as rep
from .weights import Product, TailOf, WeightSpec, log_moment, log_tail_u

MEMBER = "member"
NON_MEMBER = "non-member"
INCONCLUSIVE = "inconclusive"

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class ClassifyRules:
    stable_levels: int = 8
    growth_factor: float = 1.05
    growth_r2: float = 0.99
    noise: float = 1e-9
    dcheck_margin: float = 0.05
    decay_slope: float = -0.5
    fit_levels: int = 16


def and3(a: str, b: str) -> str:
    """Three-valued conjunction of membership verdicts."""
    if a == NON_MEMBER or b == NON_MEMBER:
        return NON_MEMBER
    if a == MEMBER and b == MEMBER:
        return MEMBER
    return INCONCLUSIVE


@dataclass
class ClassificationReport:
    weight: WeightSpec
    depth: int
    dhat_verdict: str = INCONCLUSIVE
    dcheck_verdict: str = INCONCLUSIVE
    dhat_constant: float = math.nan
    dcheck_pair: tuple = (math.nan, math.nan)
    alpha: float = math.nan
    beta: float = math.nan
    traces: dict = field(default_factory=dict)
    evidence: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def d_verdict(self) -> str:
        return and3(self.dhat_verdict, self.dcheck_verdict)

    def to_dict(self) -> dict:
        return {
            "weight": self.weight.to_config(),
            "label": self.weight.label(),
            "depth": self.depth,
            "dhat": self.dhat_verdict,
            "dcheck": self.dcheck_verdict,
            "d": self.d_verdict,
            "dhat_constant": rep._num(self.dhat_constant),
            "dcheck_pair": {"K": rep._num(self.dcheck_pair[0]), "C": rep._num(self.dcheck_pair[1])},
            "alpha": rep._num(self.alpha),
            "beta": rep._num(self.beta),
            "traces": {k: rep._jsonable(v) for k, v in self.traces.items()},
            "evidence": rep._jsonable(self.evidence),
            "notes": list(self.notes),
            "heuristic": "verdicts are decided from finite dyadic traces",
        }

    def csv_rows(self):
        n = self.traces.get("levels", [])
        for i, lev in enumerate(n):
            row = {"n": int(lev), "r": 1.0 - 2.0 ** -lev,
                   "tail": float(np.exp(self.traces["log_tail"][i])),
                   "R": float(np.exp(self.traces["log_R"][i]))}
            for K, lq in self.traces.get("log_Q", {}).items():
                row[f"Q_{K}"] = float(np.exp(lq[i]))
            yield row


def _log_tails(spec, levels, rtol):
    return np.asarray(log_tail_u(spec, np.asarray(levels, float) * LOG2, rtol), float)


def _nondecreasing_fit(y, x):
    slope, icpt, r2 = rep._linfit(x, y)
    return slope, r2


def fit_exponent(spec, depth=40, levels=16, rtol=1e-12):
    """Least-squares slope of ``log w_hat`` against ``log(1-r)`` on the last levels."""
    n = np.arange(depth - levels + 1, depth + 1)
    lt = _log_tails(spec, n, rtol)
    slope, _, _ = rep._linfit(-n * LOG2, lt)
    return slope


def dhat_classify(spec: WeightSpec, depth: int = 40, rules: ClassifyRules = ClassifyRules(),
                  rtol: float = 1e-12) -> ClassificationReport:
    """Upper-doubling test from ``R_n = w_hat(1-2^-n) / w_hat(1-2^-(n+1))``."""
    if depth < 8:
        raise ValueError("depth must be at least 8")
    levels = np.arange(1, depth + 2)
    lt = _log_tails(spec, levels, rtol)
    logR = lt[:-1] - lt[1:]
    n = levels[:-1]
    out = ClassificationReport(weight=spec, depth=depth)
    out.traces.update(levels=n, log_tail=lt[:-1], log_R=logR)
    out.dhat_constant = _exp(float(np.max(logR)))

    m = rules.stable_levels
    last = logR[-m:]
    steps = np.diff(last)
    tol = rules.noise * np.maximum(1.0, np.abs(last[1:]))
    if not np.all(np.isfinite(last)):
        verdict = INCONCLUSIVE
    elif np.all(steps <= tol):
        verdict = MEMBER
    elif np.all(steps >= math.log(rules.growth_factor)):
        # grows geometrically or faster; require a clean fit of log R or log log R
        fits = [_nondecreasing_fit(last, n[-m:])]
        if np.all(last > 0):
            fits.append(_nondecreasing_fit(np.log(last), n[-m:]))
        ok = any(s > 0 and r2 > rules.growth_r2 for s, r2 in fits)
        verdict = NON_MEMBER if ok else INCONCLUSIVE
    else:
        verdict = INCONCLUSIVE
    out.dhat_verdict = verdict
    out.evidence["dhat_rule"] = {"last_levels": m, "max_step": float(np.max(steps))}
    k = rules.fit_levels
    slope, _, _ = rep._linfit(-n[-k:] * LOG2, lt[:-1][-k:])
    out.alpha = slope
    return out


def _exp(x):
    return math.exp(x) if x < 709 else math.inf


def _log_expm1(x):
    """log(exp(x) - 1) for x > 0 without overflow."""
    x = np.asarray(x, float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return np.where(x > 30, x + np.log1p(-np.exp(-x)), np.log(np.expm1(x)))


def dcheck_classify(spec: WeightSpec, depth: int = 40, K_grid=(2, 4, 8, 16),
                    rules: ClassifyRules = ClassifyRules(), rtol: float = 1e-12,
                    report: ClassificationReport | None = None) -> ClassificationReport:
    """Lower-doubling test from ``Q_K(n) = w_hat(r_n) / w_hat(1 - (1-r_n)/K)``.

    A fixed ``K`` stands in for the ``inf over k`` of the dyadic
    characterisation; the decay of ``Q_K - 1`` is judged by its log-log slope
    in ``n`` over the last levels.
    """
    if depth < 8:
        raise ValueError("depth must be at least 8")
    out = report or ClassificationReport(weight=spec, depth=depth)
    n = np.arange(1, depth + 1)
    lt = _log_tails(spec, n, rtol)
    m = rules.stable_levels
    k = min(rules.fit_levels, depth)
    logQ, per_K = {}, {}
    best = None
    for K in K_grid:
        if K <= 1:
            raise ValueError("K must exceed 1")
        lq = lt - np.asarray(log_tail_u(spec, n * LOG2 + math.log(K), rtol), float)
        logQ[K] = lq
        inf_last = float(np.min(lq[-m:]))
        lqm1 = _log_expm1(np.maximum(lq[-k:], 1e-300))
        slope, _, r2 = rep._linfit(np.log(n[-k:]), lqm1)
        member = inf_last > math.log1p(rules.dcheck_margin) and slope > rules.decay_slope
        to_one = slope <= rules.decay_slope or inf_last <= 0.0
        per_K[K] = {"inf_last": _exp(inf_last), "decay_slope": slope, "decay_r2": r2,
                    "member": bool(member), "tends_to_one": bool(to_one)}
        if member and best is None:
            best = (K, _exp(inf_last))
    if best is not None:
        out.dcheck_verdict = MEMBER
        out.dcheck_pair = best
    elif all(v["tends_to_one"] for v in per_K.values()):
        out.dcheck_verdict = NON_MEMBER
    else:
        out.dcheck_verdict = INCONCLUSIVE
    out.traces["log_Q"] = logQ
    out.traces.setdefault("levels", n)
    out.traces.setdefault("log_tail", lt)
    out.evidence["dcheck_by_K"] = per_K
    out.notes.append("lower doubling judged at fixed K in %s (finite surrogate for inf over k)"
                     % list(K_grid))
    slope, _, _ = rep._linfit(-n[-k:] * LOG2, lt[-k:])
    out.beta = slope
    return out


def moment_dhat_test(spec: WeightSpec, x_grid=None, rules=rep.VerdictRules()):
    """Trace ``w_x / w_2x`` on a dyadic exponent grid; bounded iff it stabilises."""
    x = np.asarray(x_grid if x_grid is not None else 2.0 ** np.arange(0, 21), float)
    if np.any(x < 1):
        raise ValueError("exponents must be >= 1")
    lt = np.asarray(log_moment(spec, x)) - np.asarray(log_moment(spec, 2 * x))
    return rep.CriterionReport.build("moment_dhat", {"omega": spec.to_config()}, "exponent",
                                     x, np.log(x), lt, rules)


def moment_tail_equiv_check(spec: WeightSpec, x_grid=None):
    """Trace ``w_x / w_hat(1 - 1/x)``; bounded above and below for upper-doubling weights."""
    x = np.asarray(x_grid if x_grid is not None else 2.0 ** np.arange(0, 21), float)
    if np.any(x < 1):
        raise ValueError("exponents must be >= 1")
    lt = np.asarray(log_moment(spec, x)) - np.asarray(log_tail_u(spec, np.log(x)))
    r = rep.CriterionReport.build("moment_tail_equiv", {"omega": spec.to_config()}, "exponent",
                                  x, np.log(x), lt)
    r.extra["band"] = [float(np.exp(lt.min())), float(np.exp(lt.max()))]
    return r


def lower_doubling_integral_check(spec: WeightSpec, gamma: float = 1.0, depth: int = 40,
                                  sub: int = 8):
    """Trace ``w_hat(r)^g * int_0^r ds / (w_hat(s)^g (1-s))`` on the dyadic grid.

    In ``u = -log(1-s)`` the integral is ``int_0^u w_hat^-g du``; it is
    accumulated level by level with Gauss-Legendre panels in log space.
    """
    xg, wg = np.polynomial.legendre.leggauss(12)
    n = np.arange(1, depth + 1)
    logs = []
    acc = -math.inf
    edges = np.linspace(0.0, depth * LOG2, depth * sub + 1)
    for j in range(depth * sub):
        a, b = edges[j], edges[j + 1]
        u = 0.5 * (a + b) + 0.5 * (b - a) * xg
        vals = -gamma * np.asarray(log_tail_u(spec, u), float) + np.log(0.5 * (b - a) * wg)
        acc = np.logaddexp(acc, rep_logsumexp(vals))
        if (j + 1) % sub == 0:
            logs.append(acc)
    lt = gamma * np.asarray(log_tail_u(spec, n * LOG2), float) + np.asarray(logs)
    return rep.CriterionReport.build(f"lower_doubling_integral_gamma_{gamma:g}",
                                     {"omega": spec.to_config()}, "radius",
                                     1.0 - 2.0 ** -n, n * LOG2, lt)


def rep_logsumexp(v):
    m = np.max(v)
    return float(m + np.log(np.sum(np.exp(v - m)))) if np.isfinite(m) else float(m)


def classify(spec: WeightSpec, depth: int = 40, K_grid=(2, 4, 8, 16),
             rules: ClassifyRules = ClassifyRules(), cross_check: bool = True,
             rtol: float = 1e-12) -> ClassificationReport:
    """Full classification; conflicting characterisations yield ``inconclusive``."""
    out = dhat_classify(spec, depth, rules, rtol)
    dcheck_classify(spec, depth, K_grid, rules, rtol, report=out)
    if cross_check:
        mt = moment_dhat_test(spec)
        out.evidence["moment_dhat"] = {"verdict": mt.verdict, "log_trace": mt.log_trace}
        moment_says = {rep.BOUNDED: MEMBER, rep.DIVERGENT: NON_MEMBER}.get(mt.verdict)
        if moment_says and out.dhat_verdict != INCONCLUSIVE and moment_says != out.dhat_verdict:
            out.notes.append(f"dyadic tail test says {out.dhat_verdict}, moment test says "
                             f"{moment_says}; upper doubling set to inconclusive")
            out.dhat_verdict = INCONCLUSIVE
    return out


def monotone_product_check(base: WeightSpec, factor: WeightSpec, direction: str,
                           depth: int = 40, rules: ClassifyRules = ClassifyRules()):
    """Classify ``base * factor`` and test the monotone-factor implications.

    ``direction`` is ``"nondecreasing"`` or ``"nonincreasing"``.  An upper
    doubling base times a non-decreasing factor must stay upper doubling; a
    lower doubling base times a non-increasing factor must stay lower doubling.
    """
    if direction not in ("nondecreasing", "nonincreasing"):
        raise ValueError("direction must be 'nondecreasing' or 'nonincreasing'")
    b = classify(base, depth, rules=rules, cross_check=False)
    prod = Product(factors=(base, factor))
    p = classify(prod, depth, rules=rules, cross_check=False)
    contradictions = []
    if direction == "nondecreasing" and b.dhat_verdict == MEMBER and p.dhat_verdict != MEMBER:
        contradictions.append("upper doubling base times non-decreasing factor not upper doubling")
    if direction == "nonincreasing" and b.dcheck_verdict == MEMBER and p.dcheck_verdict != MEMBER:
        contradictions.append("lower doubling base times non-increasing factor not lower doubling")
    p.evidence["base"] = {"dhat": b.dhat_verdict, "dcheck": b.dcheck_verdict}
    p.evidence["direction"] = direction
    p.evidence["contradictions"] = contradictions
    return p


def product_tail_equiv_check(omega: WeightSpec, nu: WeightSpec, depth: int = 40):
    """Trace ``int_r^1 w nu_hat / (w_hat(r) nu_hat(r))``; lies in ``(0, 1]``."""
    n = np.arange(1, depth + 1)
    u = n * LOG2
    prod = Product(factors=(omega, TailOf(base=nu)))
    lt = (np.asarray(log_tail_u(prod, u), float) - np.asarray(log_tail_u(omega, u), float)
          - np.asarray(log_tail_u(nu, u), float))
    return rep.CriterionReport.build("product_tail_equiv",
                                     {"omega": omega.to_config(), "nu": nu.to_config()},
                                     "radius", 1.0 - 2.0 ** -n, u, lt)
