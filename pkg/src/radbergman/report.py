"""Scan reports and the bounded/divergent decision rules.

A scan is a trace ``t_k`` indexed by a growth variable ``L_k`` (``-log(1-r)``
for radius grids, ``log x`` for exponent grids).  Traces are stored as
logarithms so that divergent traces never overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

BOUNDED = "bounded"
DIVERGENT = "divergent"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class VerdictRules:
    """Thresholds for deciding a scan from its final octave."""

    bounded_rel_increase: float = 0.02
    growth_r2: float = 0.99
    min_points: int = 4


@dataclass(frozen=True)
class GrowthFit:
    model: str          # constant | log | power | exp | infinite
    slope: float
    intercept: float
    r2: float

    def to_dict(self):
        return {"model": self.model, "slope": _num(self.slope),
                "intercept": _num(self.intercept), "r2": _num(self.r2)}


def _num(x):
    x = float(x)
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _linfit(x, y):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum((y - (slope * x + icpt)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return float(slope), float(icpt), r2


def final_octave(L) -> np.ndarray:
    """Boolean mask of the grid points with ``L >= L_max / 2``."""
    L = np.asarray(L, float)
    return L >= 0.5 * L[-1]


def running_sup(log_trace) -> np.ndarray:
    return np.maximum.accumulate(np.asarray(log_trace, float))


def fit_growth(L, log_trace) -> GrowthFit:
    """Best of the log (``t ~ L``), power (``log t ~ L``) and exp (``log log t ~ L``) models."""
    L = np.asarray(L, float)
    lt = np.asarray(log_trace, float)
    if np.any(np.isposinf(lt)):
        return GrowthFit("infinite", math.inf, math.nan, 1.0)
    fits = []
    if np.max(lt) < 300.0:
        # beyond this the least-squares sums overflow
        fits.append(("log", *_linfit(L, np.exp(lt))))
    fits.append(("power", *_linfit(L, lt)))
    if np.all(lt > 0):
        fits.append(("exp", *_linfit(L, np.log(lt))))
    grow = [f for f in fits if f[1] > 0]
    if not grow:
        model, slope, icpt, r2 = max(fits, key=lambda f: f[3])
        return GrowthFit("constant", slope, icpt, r2)
    model, slope, icpt, r2 = max(grow, key=lambda f: f[3])
    return GrowthFit(model, slope, icpt, r2)


def decide(L, log_trace, rules: VerdictRules = VerdictRules()):
    """Verdict from the final octave of a trace, with the fitted growth model."""
    L = np.asarray(L, float)
    lt = np.asarray(log_trace, float)
    if np.any(np.isposinf(lt)):
        return DIVERGENT, GrowthFit("infinite", math.inf, math.nan, 1.0)
    if np.any(np.isnan(lt)):
        return INCONCLUSIVE, GrowthFit("constant", math.nan, math.nan, math.nan)
    mask = final_octave(L)
    if mask.sum() < rules.min_points:
        return INCONCLUSIVE, GrowthFit("constant", math.nan, math.nan, math.nan)
    sup = running_sup(lt)
    first = int(np.argmax(mask))
    base = sup[first - 1] if first > 0 else sup[first]
    increase = math.expm1(min(sup[-1] - base, 700.0))
    fit = fit_growth(L[mask], lt[mask])
    if increase < rules.bounded_rel_increase:
        slope, icpt, r2 = _linfit(L[mask], lt[mask])
        return BOUNDED, GrowthFit("constant", slope, icpt, r2)
    if fit.model != "constant" and fit.slope > 0 and fit.r2 > rules.growth_r2:
        return DIVERGENT, fit
    return INCONCLUSIVE, fit


@dataclass
class CriterionReport:
    """A sup-scan of one criterion together with its verdict and evidence."""

    criterion: str
    weights: dict
    grid_kind: str                  # "radius" or "exponent"
    grid: np.ndarray
    L: np.ndarray
    log_trace: np.ndarray
    verdict: str = INCONCLUSIVE
    fit: GrowthFit | None = None
    notes: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @classmethod
    def build(cls, criterion, weights, grid_kind, grid, L, log_trace,
              rules: VerdictRules = VerdictRules(), notes=(), extra=None):
        log_trace = np.asarray(log_trace, float)
        verdict, fit = decide(L, log_trace, rules)
        return cls(criterion, dict(weights), grid_kind, np.asarray(grid, float),
                   np.asarray(L, float), log_trace, verdict, fit, list(notes), dict(extra or {}))

    @property
    def trace(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_trace)

    @property
    def running_sup(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(running_sup(self.log_trace))

    @property
    def sup(self) -> float:
        return float(self.running_sup[-1])

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "weights": self.weights,
            "grid_kind": self.grid_kind,
            "grid": [_num(g) for g in self.grid],
            "L": [_num(v) for v in self.L],
            "log_trace": [_num(v) for v in self.log_trace],
            "trace": [_num(v) for v in self.trace],
            "running_sup": [_num(v) for v in self.running_sup],
            "verdict": self.verdict,
            "fit": self.fit.to_dict() if self.fit else None,
            "notes": list(self.notes),
            "extra": {k: _jsonable(v) for k, v in self.extra.items()},
        }

    def csv_rows(self):
        sup = self.running_sup
        for k in range(len(self.grid)):
            yield {"k": k, "grid": self.grid[k], "L": self.L[k],
                   "trace": float(self.trace[k]), "running_sup": float(sup[k])}


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (float, np.floating)):
        return _num(v)
    if isinstance(v, np.integer):
        return int(v)
    return v
