"""Log-space adaptive quadrature for peaked and slowly decaying integrands.

Everything in this package that integrates a radial weight goes through
:func:`log_quad`.  The integrand is supplied as its logarithm, so weights
such as ``exp(-1/(1-r))`` evaluated at ``r = 1 - 2**-40`` stay representable.
Panels grow geometrically away from the located peak; each panel is a
20-point Gauss-Legendre rule checked against its two halves and bisected
until the two agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)
_EPS = float(np.finfo(float).eps)

# Dense probe offsets used to locate the maximum of the log-integrand.
_PROBE = np.concatenate([[0.0], np.geomspace(1e-13, 1e7, 481)])


class QuadratureError(RuntimeError):
    """Raised when the requested accuracy is not reached within budget."""


class DivergentIntegral(ArithmeticError):
    """Raised when panel contributions stop decaying geometrically."""

    def __init__(self, message, partial_sums=()):
        super().__init__(message)
        self.partial_sums = list(partial_sums)


@dataclass(frozen=True)
class QuadResult:
    log_value: float
    rel_error: float
    n_eval: int

    @property
    def value(self) -> float:
        return math.exp(self.log_value) if self.log_value < 709.0 else math.inf


def _safe(g, x):
    y = np.asarray(g(x), dtype=float)
    if np.any(np.isposinf(y)):
        bad = np.asarray(x)[np.isposinf(y)][0]
        raise QuadratureError(f"log-integrand is +inf at x={bad:.6g}; transform the singularity away")
    return np.where(np.isnan(y), -np.inf, y)


class _Panels:
    """Accumulates exp(g - shift) over panels with adaptive bisection."""

    def __init__(self, g, shift, rtol, max_depth=48, max_eval=2_000_000):
        self.g = g
        self.shift = shift
        self.rtol = rtol
        self.max_depth = max_depth
        self.max_eval = max_eval
        self.n_eval = 0
        self.err = 0.0

    def _rule(self, a, b):
        m = 0.5 * (a + b)
        h = 0.5 * (b - a)
        hl = 0.5 * (m - a)
        x = np.concatenate([m + h * _GL_X, 0.5 * (a + m) + hl * _GL_X, 0.5 * (m + b) + hl * _GL_X])
        y = _safe(self.g, x) - self.shift
        self.n_eval += x.size
        if self.n_eval > self.max_eval:
            raise QuadratureError(f"evaluation budget exhausted near x={m:.6g}")
        if np.any(y > 700.0):
            raise _Rescale(float(np.max(y)))
        f = np.exp(y)
        whole = h * np.dot(_GL_W, f[:20])
        halves = hl * (np.dot(_GL_W, f[20:40]) + np.dot(_GL_W, f[40:]))
        # rounding in g is amplified into relative error of exp(g); g is often a
        # sum of terms linear in x that cancel, so |x| bounds that rounding too
        g_mag = float(np.max(np.abs(y[np.isfinite(y)] + self.shift), initial=0.0))
        g_noise = 16.0 * _EPS * max(g_mag, 4.0 * abs(b))
        return whole, halves, m, g_noise

    def integrate(self, a, b, scale_hint, depth=0):
        whole, halves, m, g_noise = self._rule(a, b)
        diff = abs(whole - halves)
        # node positions carry absolute rounding; do not chase it
        noise = 256.0 * math.ulp(max(abs(a), abs(b))) / (b - a)
        tol = max(self.rtol, noise, g_noise) * max(abs(halves), scale_hint)
        if diff <= tol or depth >= self.max_depth or not (a < m < b):
            self.err += diff
            return halves
        left = self.integrate(a, m, scale_hint, depth + 1)
        return left + self.integrate(m, b, scale_hint, depth + 1)


class _Rescale(Exception):
    def __init__(self, excess):
        super().__init__(excess)
        self.excess = excess


def _locate_peak(g, lo, hi):
    if math.isinf(hi):
        pts = lo + _PROBE * max(1.0, abs(lo))
    else:
        span = hi - lo
        rel = np.concatenate([_PROBE[_PROBE <= 1.0], [0.5]])
        pts = np.unique(np.concatenate([lo + span * rel, hi - span * rel, np.linspace(lo, hi, 65)]))
        pts = pts[(pts >= lo) & (pts <= hi)]
    pts = np.unique(pts)
    vals = _safe(g, pts)
    k = int(np.argmax(vals))
    if not np.isfinite(vals[k]):
        return None, -np.inf
    c, gc = float(pts[k]), float(vals[k])
    a = float(pts[max(k - 1, 0)])
    b = float(pts[min(k + 1, pts.size - 1)])
    if b > a:
        res = minimize_scalar(lambda x: -float(_safe(g, np.array([x]))[0]), bounds=(a, b),
                              method="bounded", options={"xatol": 1e-15 * max(1.0, abs(c)) + 1e-300})
        if res.success and -res.fun > gc:
            c, gc = float(res.x), float(-res.fun)
    return c, gc


def _side_scale(g, c, gc, direction, limit):
    """Distance from ``c`` at which the log-integrand has dropped by one."""
    offs = _PROBE[1:] * max(1.0, abs(c))
    if limit is not None:
        offs = offs[offs < limit]
    if offs.size == 0:
        return limit if limit else 1.0
    vals = _safe(g, c + direction * offs)
    drop = np.nonzero(vals < gc - 1.0)[0]
    if drop.size:
        s = float(offs[drop[0]])
    else:
        s = float(offs[-1])
    floor = 64.0 * math.ulp(max(abs(c), 1e-300))
    return max(s, floor)


def log_quad(g, lo, hi=math.inf, *, rtol=1e-12, max_panels=4000,
             divergence_ratio=0.98, divergence_run=8):
    """Return log of the integral of ``exp(g(x))`` over ``[lo, hi)``.

    ``g`` must accept and return numpy arrays.  When ``hi`` is infinite the
    right-hand panels double in width; if eight consecutive panel
    contributions fail to shrink by ``divergence_ratio`` the integral is
    declared divergent.
    """
    if not hi > lo:
        return QuadResult(-math.inf, 0.0, 0)
    c, gc = _locate_peak(g, lo, hi)
    if c is None:
        return QuadResult(-math.inf, 0.0, 0)
    shift = gc
    for _ in range(4):
        try:
            return _log_quad_from(g, lo, hi, c, gc, shift, rtol, max_panels,
                                  divergence_ratio, divergence_run)
        except _Rescale as exc:
            shift += exc.excess
    if math.isinf(hi):
        # the integrand keeps growing past every rescaling on an unbounded range
        raise DivergentIntegral("log-integrand unbounded on the right", partial_sums=[])
    raise QuadratureError("log-integrand could not be rescaled")


def _log_quad_from(g, lo, hi, c, gc, shift, rtol, max_panels, div_ratio, div_run):
    acc = _Panels(g, shift, rtol)
    total = 0.0
    n_panels = 0

    # right side
    right_limit = None if math.isinf(hi) else hi - c
    if right_limit is None or right_limit > 0:
        w = _side_scale(g, c, gc, +1.0, right_limit)
        a = c
        contribs = []
        while True:
            b = a + w
            if not math.isinf(hi) and b >= hi:
                b = hi
            part = acc.integrate(a, b, total * 1e-3)
            total += part
            contribs.append(part)
            n_panels += 1
            if b == hi:
                break
            if n_panels > 3 and part <= 1e-3 * rtol * total:
                break
            if len(contribs) > div_run + 4:
                tail = contribs[-(div_run + 1):]
                if all(t1 > div_ratio * t0 and t0 > 0 for t0, t1 in zip(tail, tail[1:])):
                    raise DivergentIntegral(
                        f"panel contributions not decaying beyond x={b:.3g}",
                        partial_sums=np.cumsum(contribs) * math.exp(shift) if shift < 700 else [])
            if n_panels > max_panels or b > 1e300:
                raise QuadratureError(f"right tail unresolved after {n_panels} panels (x={b:.3g})")
            a = b
            w *= 2.0

    # left side
    if c > lo:
        w = _side_scale(g, c, gc, -1.0, c - lo)
        b = c
        while b > lo:
            a = max(lo, b - w)
            part = acc.integrate(a, b, total * 1e-3)
            total += part
            n_panels += 1
            if a > lo and part <= 1e-3 * rtol * total and n_panels > 3:
                break
            if n_panels > max_panels:
                raise QuadratureError("left side unresolved")
            b = a
            w *= 2.0

    if total <= 0.0:
        return QuadResult(-math.inf, 0.0, acc.n_eval)
    return QuadResult(shift + math.log(total), acc.err / total, acc.n_eval)


def logsumexp(values) -> float:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return -math.inf
    m = np.max(v)
    if not np.isfinite(m):
        return float(m)
    return float(m + math.log(np.sum(np.exp(v - m))))
