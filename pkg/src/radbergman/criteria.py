"""Boundedness criteria and norm functionals for Bergman projections on growth spaces.

Every scan returns a :class:`~radbergman.report.CriterionReport`.  Norm
functionals reduce the area integral of ``|B_a|`` (or of the derivative
kernel) to a radial integral of its circle means, which depend on ``a`` and
the integration radius only through their product; one interpolant of
``log M_1`` per weight therefore serves a whole scan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import classify as cl
from . import report as rep
from .kernel import integral_mean_table
from .quad import DivergentIntegral, log_quad, logsumexp
from .weights import (Standard, TailOf, WeightSpec, log_moment, log_tail_u, ratio_weight)

LOG2 = math.log(2.0)
GENERAL_V_NOTE = "general v: test-function argument reused for any positive decreasing radial v"


def _cfg(**specs):
    return {k: v.to_config() for k, v in specs.items()}


def _dyadic_x(x_grid):
    x = np.asarray(x_grid if x_grid is not None else 2.0 ** np.arange(0, 21), float)
    if np.any(x < 1):
        raise ValueError("exponents must be >= 1")
    return x


def _log_moment_or_inf(spec, x):
    out = []
    for xx in np.atleast_1d(x):
        try:
            out.append(float(log_moment(spec, float(xx))))
        except DivergentIntegral:
            out.append(math.inf)
    return np.asarray(out)


# ---------------------------------------------------------------------------
# moment and tail criteria
# ---------------------------------------------------------------------------


def moment_criterion_scan(omega: WeightSpec, nu: WeightSpec, x_grid=None,
                          rules=rep.VerdictRules()) -> rep.CriterionReport:
    """Trace ``nu_x (w/nu_hat)_x / w_2x`` on a dyadic exponent grid."""
    x = _dyadic_x(x_grid)
    ratio = ratio_weight(omega, nu)
    mixed = _log_moment_or_inf(ratio, x)
    lt = np.asarray(log_moment(nu, x)) + mixed - np.asarray(log_moment(omega, 2 * x))
    notes = ["mixed moment diverges"] if np.any(np.isinf(mixed)) else []
    return rep.CriterionReport.build("moment_criterion", _cfg(omega=omega, nu=nu), "exponent",
                                     x, np.log(x), lt, rules, notes)


def _log_segment(spec, u0, u1):
    """log of ``int`` of ``spec`` over ``u in [u0, u1]`` (``dr = e^-u du``)."""
    return log_quad(spec.log_integrand_u, u0, u1, rtol=1e-12).log_value


def tail_criterion_scan(omega: WeightSpec, nu: WeightSpec, depth: int = 40,
                        rules=rep.VerdictRules()) -> rep.CriterionReport:
    """Trace ``(nu_hat/w_hat)(r) int_r^1 w/nu_hat`` on ``r_k = 1 - 2^-k``.

    When ``w/nu_hat`` is not integrable the quantity is infinite at every
    radius.  The report then carries the truncated trace
    ``P_k = max_{j<k} (nu_hat/w_hat)(r_j) int_{r_j}^{r_k} w/nu_hat``, whose
    growth rate separates the borderline (log) from the strictly divergent
    (power) regime.
    """
    k = np.arange(1, depth + 1)
    u = k * LOG2
    ratio = ratio_weight(omega, nu)
    base = np.asarray(log_tail_u(nu, u)) - np.asarray(log_tail_u(omega, u))
    notes, extra = [], {}
    try:
        mixed = np.asarray(log_tail_u(ratio, u), float)
        lt = base + mixed
    except DivergentIntegral:
        notes.append("w/nu_hat not integrable near r=1: trace is +inf at every radius; "
                     "truncated trace reported for the growth fit")
        seg = np.array([_log_segment(ratio, a, b) for a, b in zip(u[:-1], u[1:])])
        lt = np.full(depth, -math.inf)
        for kk in range(1, depth):
            lt[kk] = max(base[j] + logsumexp(seg[j:kk]) for j in range(kk))
        lt = lt[1:]
        k, u = k[1:], u[1:]
        extra["mixed_tail"] = "divergent"
        extra["truncated"] = True
    r = rep.CriterionReport.build("tail_criterion", _cfg(omega=omega, nu=nu), "radius",
                                  1.0 - 2.0 ** -k, u, lt, rules, notes, extra)
    return r


def necessary_moment_condition(omega: WeightSpec, nu: WeightSpec, x_grid=None,
                               rules=rep.VerdictRules()) -> rep.CriterionReport:
    """Trace ``(w/nu_hat)_x nu_hat(1-1/x) / w_2x``."""
    x = _dyadic_x(x_grid)
    mixed = _log_moment_or_inf(ratio_weight(omega, nu), x)
    lt = mixed + np.asarray(log_tail_u(nu, np.log(x))) - np.asarray(log_moment(omega, 2 * x))
    return rep.CriterionReport.build("necessary_moment", _cfg(omega=omega, nu=nu), "exponent",
                                     x, np.log(x), lt, rules)


# ---------------------------------------------------------------------------
# norm functionals
# ---------------------------------------------------------------------------


def a_grid_for(depth: int) -> np.ndarray:
    """``a_k = 1 - 2^-k`` for ``k = 0..depth``."""
    return 1.0 - 2.0 ** -np.arange(0, depth + 1, dtype=float)


@dataclass
class _NormIntegrand:
    """log of ``2 r^(1+p) M(a r) w(r)/v(r)`` as a function of ``u = -log(1-r)``."""

    omega: WeightSpec
    v: WeightSpec | None
    a: float
    table: object
    extra_r_power: int = 0

    def __call__(self, u):
        u = np.asarray(u, float)
        t = np.exp(-u)
        with np.errstate(divide="ignore"):
            log_r = np.log1p(-t)
            # 1 - a r = (1 - a) + a t
            u_rho = -np.log((1.0 - self.a) + self.a * t)
        # combine the exact linear parts of w, v and the Jacobian before adding
        c, g = self.omega.log_density_split_u(u)
        if self.v is not None:
            cv, gv = self.v.log_density_split_u(u)
            with np.errstate(invalid="ignore"):
                c, g = c - cv, g - gv
        ratio = (c - 1.0) * u + g if c != 1.0 else g
        out = LOG2 + (1 + self.extra_r_power) * log_r + self.table(u_rho) + ratio
        return np.where(np.isnan(out), -np.inf, out)


def _log_area_integral(omega, v, a, table, extra_r_power=0):
    """Return log of the A-part (``r < (1+a)/2``), the B-part, and the total."""
    g = _NormIntegrand(omega, v, a, table, extra_r_power)
    u_split = -math.log(0.5 * (1.0 - a)) if a > 0 else LOG2
    try:
        la = log_quad(g, 0.0, u_split, rtol=1e-10).log_value
        lb = log_quad(g, u_split, rtol=1e-10).log_value
    except DivergentIntegral:
        return math.nan, math.inf, math.inf
    return la, lb, float(np.logaddexp(la, lb))


def _norm_scan(name, omega, v, depth, deriv, rules, a_grid=None):
    a = a_grid_for(depth) if a_grid is None else np.asarray(a_grid, float)
    if np.any(a < 0) or np.any(a >= 1):
        raise ValueError("a must lie in [0, 1)")
    u_a = -np.log1p(-a)
    table = integral_mean_table(omega, deriv, u_max=float(u_a.max()) + 0.25)
    log_parts = []
    lt = np.empty(a.size)
    for i, ai in enumerate(a):
        la, lb, tot = _log_area_integral(omega, v, float(ai), table, 1 if deriv else 0)
        log_parts.append((la, lb))
        lt[i] = tot + float(v.log_density_u(u_a[i]))
        if deriv:
            lt[i] += -u_a[i]          # factor (1 - a)
    weights = {"omega": omega.to_config(), "v": v.to_config()}
    notes = [GENERAL_V_NOTE] if not isinstance(v, TailOf) else []
    extra = {"log_A_part": [p[0] for p in log_parts], "log_B_part": [p[1] for p in log_parts],
             "mean_table_check_error": table.max_check_error}
    return rep.CriterionReport.build(name, weights, "radius", a, u_a, lt, rules, notes, extra)


def hinf_norm_scan(omega: WeightSpec, v: WeightSpec, depth: int = 12, a_grid=None,
                   rules=rep.VerdictRules()) -> rep.CriterionReport:
    """Trace ``v(a) int_D |B_a| w/v dA`` over ``a = 1 - 2^-k``.

    ``v`` is any positive decreasing radial function given as a weight
    spec; ``TailOf(nu)`` gives the growth space of ``nu_hat``.
    """
    return _norm_scan("hinf_norm", omega, v, depth, False, rules, a_grid)


def bloch_norm_scan(omega: WeightSpec, v: WeightSpec, depth: int = 12, a_grid=None,
                    rules=rep.VerdictRules()) -> rep.CriterionReport:
    """Trace ``(1-a) v(a) int_D |d/dz B_w(a)| w(w)/v(w) dA(w)`` over ``a = 1 - 2^-k``."""
    return _norm_scan("bloch_norm", omega, v, depth, True, rules, a_grid)


def hardy_integral(omega: WeightSpec, a: float) -> float:
    """``log L(a)`` with ``L(a) = int_D |B_a| w dA``."""
    table = integral_mean_table(omega, False, u_max=-math.log1p(-a) + 0.25)
    return _log_area_integral(omega, None, a, table)[2]


def hardy_bound(a: float, constant: str = "stated") -> float:
    """Lower bound for ``L(a)``.

    ``"stated"`` is ``(pi/a) log(1/(1-a))``; ``"hardy"`` uses the constant
    ``1/pi`` that Hardy's inequality ``sum |c_n|/(n+1) <= pi ||f||_1`` yields.
    """
    base = -math.log1p(-a) / a
    if constant == "stated":
        return math.pi * base
    if constant == "hardy":
        return base / math.pi
    raise ValueError(f"unknown constant {constant!r}")


@dataclass
class HardyCheck:
    a: np.ndarray
    L: np.ndarray
    bound: np.ndarray
    constant: str

    @property
    def ratio(self) -> np.ndarray:
        return self.L / self.bound

    def holds(self, tol: float = 1e-6) -> bool:
        return bool(np.all(self.ratio >= 1 - tol))


def hardy_lower_bound_check(omega: WeightSpec, a_grid=(0.5, 0.9, 0.99, 0.999),
                            constant: str = "stated") -> HardyCheck:
    a = np.asarray(a_grid, float)
    if np.any(a <= 0) or np.any(a >= 1):
        raise ValueError("a must lie in (0, 1)")
    L = np.exp([hardy_integral(omega, float(x)) for x in a])
    bound = np.array([hardy_bound(float(x), constant) for x in a])
    return HardyCheck(a, L, bound, constant)


# ---------------------------------------------------------------------------
# cross-check matrix
# ---------------------------------------------------------------------------

_TO_BOOL = {rep.BOUNDED: True, rep.DIVERGENT: False, cl.MEMBER: True, cl.NON_MEMBER: False}


def _and(*vals):
    """Three-valued conjunction over True / False / None."""
    if any(v is False for v in vals):
        return False
    if all(v is True for v in vals):
        return True
    return None


def _classify_ratio(omega, nu, depth):
    ratio = ratio_weight(omega, nu)
    try:
        return cl.classify(ratio, depth, cross_check=False)
    except DivergentIntegral:
        return None


@dataclass
class MatrixRow:
    omega: WeightSpec
    nu: WeightSpec
    classes: dict
    scans: dict
    conditions: dict
    checks: list = field(default_factory=list)
    inconsistencies: list = field(default_factory=list)

    def to_dict(self):
        return {
            "omega": self.omega.to_config(), "nu": self.nu.to_config(),
            "omega_label": self.omega.label(), "nu_label": self.nu.label(),
            "classes": self.classes,
            "scans": {k: v.verdict for k, v in self.scans.items()},
            "conditions": self.conditions,
            "checks": self.checks,
            "inconsistencies": self.inconsistencies,
        }


def _agree(row: MatrixRow, label: str, names):
    vals = {n: row.conditions[n] for n in names}
    known = {n: v for n, v in vals.items() if v is not None}
    if len(set(known.values())) > 1:
        row.inconsistencies.append(f"{label}: " + ", ".join(f"{n}={v}" for n, v in vals.items()))
    else:
        row.checks.append(f"{label}: consistent ({', '.join(f'{n}={v}' for n, v in vals.items())})")


def equivalence_matrix(pairs, depth: int = 12, class_depth: int = 40,
                       rules=rep.VerdictRules()) -> list:
    """Run all scans on each ``(omega, nu)`` pair and check that the criteria agree.

    With ``nu`` upper doubling: H-infinity bounded iff (nu lower doubling and the
    moment criterion), iff (omega upper doubling, nu lower doubling and the tail
    criterion), iff (omega/nu_hat doubling and nu lower doubling); Bloch bounded
    iff the moment criterion iff (omega upper doubling and the tail criterion).
    With ``omega`` upper doubling the analogous statements use ``nu`` doubling.
    Rows satisfying neither hypothesis are labelled out of hypothesis.
    """
    rows = []
    for omega, nu in pairs:
        c_om = cl.classify(omega, class_depth, cross_check=False)
        c_nu = cl.classify(nu, class_depth, cross_check=False)
        c_ra = _classify_ratio(omega, nu, class_depth)
        classes = {
            "omega": {"dhat": c_om.dhat_verdict, "dcheck": c_om.dcheck_verdict, "d": c_om.d_verdict},
            "nu": {"dhat": c_nu.dhat_verdict, "dcheck": c_nu.dcheck_verdict, "d": c_nu.d_verdict},
            "ratio": ({"dhat": c_ra.dhat_verdict, "dcheck": c_ra.dcheck_verdict, "d": c_ra.d_verdict}
                      if c_ra else {"dhat": cl.NON_MEMBER, "dcheck": cl.NON_MEMBER,
                                    "d": cl.NON_MEMBER, "note": "not integrable"}),
        }
        v = TailOf(base=nu)
        scans = {
            "moment": moment_criterion_scan(omega, nu, rules=rules),
            "tail": tail_criterion_scan(omega, nu, rules=rules),
            "hinf": hinf_norm_scan(omega, v, depth, rules=rules),
            "bloch": bloch_norm_scan(omega, v, depth, rules=rules),
        }
        b = {k: _TO_BOOL.get(s.verdict) for k, s in scans.items()}
        om_dhat = _TO_BOOL.get(c_om.dhat_verdict)
        nu_dhat = _TO_BOOL.get(c_nu.dhat_verdict)
        nu_dcheck = _TO_BOOL.get(c_nu.dcheck_verdict)
        nu_d = _TO_BOOL.get(c_nu.d_verdict)
        ra_d = _TO_BOOL.get(classes["ratio"]["d"])
        cond = {"hinf_bounded": b["hinf"], "bloch_bounded": b["bloch"],
                "moment_bounded": b["moment"], "tail_bounded": b["tail"]}
        row = MatrixRow(omega, nu, classes, scans, cond)
        hyp = []
        if nu_dhat is True:
            hyp.append("nu upper doubling")
            cond["nu_I_ii"] = _and(nu_dcheck, b["moment"])
            cond["nu_I_iii"] = _and(om_dhat, nu_dcheck, b["tail"])
            cond["nu_I_iv"] = _and(ra_d, nu_dcheck)
            _agree(row, "H-infinity characterisation (nu upper doubling)",
                   ["hinf_bounded", "nu_I_ii", "nu_I_iii", "nu_I_iv"])
            cond["nu_B_iii"] = _and(om_dhat, b["tail"])
            _agree(row, "Bloch characterisation (nu upper doubling)",
                   ["bloch_bounded", "moment_bounded", "nu_B_iii"])
            if nu_dcheck is False and b["hinf"] is not False:
                row.inconsistencies.append("nu upper but not lower doubling, yet H-infinity "
                                           f"scan is {scans['hinf'].verdict}")
        if om_dhat is True:
            hyp.append("omega upper doubling")
            cond["om_I_ii"] = _and(nu_dcheck, b["moment"])
            cond["om_I_iii"] = _and(nu_dcheck, b["tail"])
            cond["om_I_iv"] = _and(ra_d, nu_d)
            _agree(row, "H-infinity characterisation (omega upper doubling)",
                   ["hinf_bounded", "om_I_ii", "om_I_iii", "om_I_iv"])
            _agree(row, "Bloch characterisation (omega upper doubling)",
                   ["bloch_bounded", "moment_bounded", "tail_bounded"])
        if b["hinf"] is True and (om_dhat or nu_dhat):
            if _TO_BOOL.get(c_om.d_verdict) is False or nu_d is False:
                row.inconsistencies.append("H-infinity bounded but a weight is not doubling")
        if b["hinf"] is True:
            nm = necessary_moment_condition(omega, nu, rules=rules)
            scans["necessary_moment"] = nm
            if nm.verdict == rep.DIVERGENT:
                row.inconsistencies.append("H-infinity bounded but the necessary moment "
                                           "condition diverges")
        cond["hypothesis"] = hyp or ["out of hypothesis"]
        rows.append(row)
    return rows


def default_pairs():
    """Eight built-in pairs with ``nu`` upper doubling."""
    from .weights import LogPerturbed, OmegaNu
    lp = LogPerturbed(p=-1, q=-2)
    s = lambda a: Standard(a=a)  # noqa: E731
    return [
        (s(1.0), s(0.0)), (s(2.0), s(1.0)), (s(1.5), s(0.5)),
        (s(0.0), s(0.0)), (s(0.5), s(1.0)),
        (s(1.0), s(1.5)), (s(0.0), lp), (OmegaNu(base=lp), lp),
    ]
