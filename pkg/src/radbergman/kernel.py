"""Reproducing kernels of radial-weight Bergman spaces and their integral means.

The kernel is the power series ``B_z(w) = sum_n (conj(z) w)^n / (2 m_{2n+1})``
with ``m_x`` the moments of the weight.  Point values are summed in chunks
with extended-precision phases and ``math.fsum`` accumulation; integral
means ``M_1`` are computed from the coefficient sequence with FFTs.
"""

from __future__ import annotations

import cmath
import math
import threading
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.optimize import brentq, minimize_scalar

from .moments import MomentTable, moment_table
from .weights import WeightSpec

_EPS = float(np.finfo(float).eps)
_LOG_HALF = math.log(0.5)
# coefficients below exp(-_DROP) of the peak are discarded
_DROP = 46.0


class KernelConvergenceError(ArithmeticError):
    """The series did not meet its stopping rule within the term budget."""


@dataclass(frozen=True)
class KernelValue:
    value: complex
    error: float
    n_terms: int

    def __complex__(self):
        return complex(self.value)


class KernelEvaluator:
    """Kernel and derivative evaluation for one weight.

    Parameters mirror the truncation rule: summation stops once the observed
    ratio of consecutive term moduli has stayed below ``q_max = (1+|t|)/2``
    for ``run`` terms and ``last * q_max/(1-q_max) * safety`` is below the
    requested tolerance.
    """

    def __init__(self, weight: WeightSpec, n_max: int = 2_000_000, r_max: float = 0.9999,
                 safety: float = 10.0, run: int = 10, table: MomentTable | None = None):
        self.weight = weight
        self.n_max = int(n_max)
        self.r_max = r_max
        self.safety = safety
        self.run = run
        self.table = table or moment_table(weight)
        self._lc = np.empty(0)
        self._lock = threading.Lock()

    # -- coefficients --------------------------------------------------------

    def log_coeffs(self, n) -> np.ndarray:
        """``log(1/(2 m_{2n+1}))`` for real or integer ``n >= 0``."""
        n = np.asarray(n, dtype=float)
        return _LOG_HALF - self.table.log(2.0 * n + 1.0)

    def _prefix(self, n_terms: int) -> np.ndarray:
        with self._lock:
            if self._lc.size < n_terms:
                size = max(n_terms, 2 * self._lc.size, 1024)
                size = min(size, self.n_max + 1)
                self._lc = self.log_coeffs(np.arange(size))
            return self._lc

    @property
    def moment_error(self) -> float:
        return self.table.error

    # -- series ---------------------------------------------------------------

    def _sum(self, t: complex, log_a, tol: float) -> KernelValue:
        """Sum ``sum_m A_m t^m`` where ``log_a(n)`` returns ``log A_m`` for ``m < n``."""
        rho = abs(t)
        if rho > self.r_max:
            raise ValueError(f"|conj(z) w| = {rho:.6g} exceeds r_max = {self.r_max}")
        if rho == 0.0:
            la = log_a(1)
            return KernelValue(complex(math.exp(la[0])), 4 * _EPS * math.exp(la[0]), 1)
        q_max = 0.5 * (1.0 + rho)
        log_q = math.log(q_max)
        log_rho = np.longdouble(math.log(rho))
        theta = np.longdouble(cmath.phase(t))
        re = np.empty(0)
        im = np.empty(0)
        lm_all = np.empty(0)
        ref = None
        stop = 0
        chunk = 1024
        while True:
            start, stop = stop, min(stop + chunk, self.n_max + 1)
            m = np.arange(start, stop, dtype=np.longdouble)
            lm = log_a(stop)[start:stop].astype(np.longdouble) + m * log_rho
            if ref is None:
                ref = np.longdouble(np.max(lm))
            mag = np.exp(lm - ref)
            ph = m * theta
            re = np.concatenate([re, (mag * np.cos(ph)).astype(float)])
            im = np.concatenate([im, (mag * np.sin(ph)).astype(float)])
            lm_all = np.concatenate([lm_all, (lm - ref).astype(float)])
            small = np.diff(lm_all) < log_q          # small[j]: ratio a_{j+1}/a_j
            # streak[j] = consecutive small ratios ending at j
            idx = np.arange(small.size)
            last_bad = np.maximum.accumulate(np.where(~small, idx, -1))
            streak = idx - last_bad
            cand = np.nonzero(streak >= self.run)[0] + 1   # term index N
            if cand.size:
                bound = np.exp(lm_all[cand]) * q_max / (1.0 - q_max) * self.safety
                s_re = np.cumsum(re)[cand]
                s_im = np.cumsum(im)[cand]
                abs_cum = np.cumsum(np.exp(lm_all))[cand]
                ok = np.nonzero(bound <= tol * np.maximum(np.hypot(s_re, s_im), _EPS * abs_cum))[0]
                if ok.size:
                    n_last = int(cand[ok[0]])
                    total = complex(math.fsum(re[:n_last + 1]), math.fsum(im[:n_last + 1]))
                    abs_sum = float(np.sum(np.exp(lm_all[:n_last + 1])))
                    err = float(bound[ok[0]]) + (8 * _EPS + self.moment_error) * abs_sum
                    scale = math.exp(float(ref))
                    return KernelValue(total * scale, err * scale, n_last + 1)
            if stop > self.n_max:
                raise KernelConvergenceError(
                    f"kernel series not converged after {self.n_max} terms (|t|={rho:.6g})")
            chunk *= 2

    def eval(self, z: complex, zeta: complex, tol: float = 1e-12) -> KernelValue:
        """``B_z(zeta)`` with an error estimate."""
        if tol < 1e-12:
            raise ValueError("tol must be >= 1e-12")
        t = complex(z).conjugate() * complex(zeta)
        return self._sum(t, self._prefix, tol)

    def deriv(self, z: complex, zeta: complex, tol: float = 1e-12) -> KernelValue:
        """``d/dz B_zeta(z) = sum_{n>=1} n z^(n-1) conj(zeta)^n / (2 m_{2n+1})``."""
        if tol < 1e-12:
            raise ValueError("tol must be >= 1e-12")
        zeta_c = complex(zeta).conjugate()
        if zeta_c == 0:
            return KernelValue(0j, 0.0, 0)
        t = complex(z) * zeta_c

        def log_a(n):
            lc = self._prefix(n + 1)
            m = np.arange(lc.size - 1)
            return np.log1p(m) + lc[1:]

        kv = self._sum(t, log_a, tol)
        return KernelValue(kv.value * zeta_c, kv.error * abs(zeta_c), kv.n_terms)


def kernel_eval(K: KernelEvaluator, z, zeta, tol=1e-12) -> KernelValue:
    return K.eval(z, zeta, tol)


def kernel_deriv_eval(K: KernelEvaluator, z, zeta, tol=1e-12) -> KernelValue:
    return K.deriv(z, zeta, tol)


# ---------------------------------------------------------------------------
# integral means
# ---------------------------------------------------------------------------


def _series_log_coeffs(table: MomentTable, deriv: bool):
    """``log A_m`` of the series whose integral mean is wanted.

    Kernel: ``A_m = 1/(2 m_{2m+1})``.  Derivative: ``A_m = (m+1)/(2 m_{2m+3})``.
    """
    if deriv:
        return lambda m: np.log1p(m) + _LOG_HALF - table.log(2.0 * m + 3.0)
    return lambda m: _LOG_HALF - table.log(2.0 * m + 1.0)


@dataclass(frozen=True)
class Bump:
    peak_n: float
    peak_log: float
    n_lo: int
    n_hi: int
    sigma: float


def coefficient_bump(log_a, log_rho: float, n_cap: float) -> Bump:
    """Locate the log-concave bump of ``log A_m + m log rho``."""
    def f(m):
        return float(log_a(np.array([m]))[0] + m * log_rho)

    grid = np.concatenate([[0.0], 2.0 ** np.arange(0, math.log2(n_cap) + 1)])
    grid = grid[grid <= n_cap]
    vals = np.asarray(log_a(grid)) + grid * log_rho
    k = int(np.argmax(vals))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid.size - 1)]
    if hi > lo:
        res = minimize_scalar(lambda m: -f(m), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-3 * max(1.0, lo)})
        peak_n, peak = (float(res.x), -float(res.fun)) if -res.fun > vals[k] else (grid[k], vals[k])
    else:
        peak_n, peak = float(grid[k]), float(vals[k])
    if k == grid.size - 1 and grid[k] >= n_cap:
        raise KernelConvergenceError("coefficient bump extends past the moment table")
    h = max(1.0, 1e-3 * peak_n)
    curv = (f(peak_n + h) - 2 * f(peak_n) + f(max(peak_n - h, 0.0))) / h ** 2 if peak_n > h else 0.0
    sigma = 1.0 / math.sqrt(-curv) if curv < 0 else math.inf
    level = peak - _DROP
    if f(0.0) >= level:
        n_lo = 0
    else:
        n_lo = int(math.floor(brentq(lambda m: f(m) - level, 0.0, peak_n)))
    right = min(max(peak_n + 1.0, 2.0 * peak_n), n_cap)
    while f(right) >= level:
        if right >= n_cap:
            raise KernelConvergenceError("coefficient bump extends past the moment table")
        right = min(2.0 * right, n_cap)
    n_hi = int(math.ceil(brentq(lambda m: f(m) - level, peak_n, right)))
    return Bump(peak_n, peak, n_lo, n_hi, sigma)


def _mean_abs(b: np.ndarray, n_start: int, tol: float, max_len: int = 1 << 24) -> float:
    """Mean of ``|sum_k b_k e^{ik theta}|`` over the circle, by folded FFTs."""
    m = b.size
    n = 64
    prev = None
    while True:
        if n >= m:
            folded = b
        else:
            pad = (-m) % n
            folded = np.concatenate([b, np.zeros(pad)]).reshape(-1, n).sum(axis=0)
        vals = np.fft.fft(folded, n=max(n, folded.size))
        cur = float(np.mean(np.abs(vals)))
        if prev is not None and abs(cur - prev) <= tol * cur:
            return cur
        if n >= max_len:
            raise KernelConvergenceError("integral mean did not converge within the FFT budget")
        prev = cur
        n *= 2


def log_integral_mean(table: MomentTable, rho: float, deriv: bool = False,
                      tol: float = 1e-11) -> float:
    """``log M_1`` of the kernel series (or its derivative series) at radius ``rho``.

    Wide coefficient bumps that start away from ``m = 0`` are decimated:
    sampling a smooth bump with step ``h`` leaves the integral mean of its
    Fourier series unchanged up to aliasing of order ``exp(-(pi sigma/h)^2/2)``.
    """
    log_a = _series_log_coeffs(table, deriv)
    if rho == 0.0:
        return float(log_a(np.array([0.0]))[0])
    n_cap = 0.5 * (table.x_max - 3.0)
    bump = coefficient_bump(log_a, math.log(rho), n_cap)
    h = 1
    if bump.n_lo > 0 and math.isfinite(bump.sigma):
        h = max(1, int(bump.sigma // 8))
    m = np.arange(bump.n_lo, bump.n_hi + 1, h, dtype=float)
    lb = np.asarray(log_a(m)) + m * math.log(rho) - bump.peak_log
    b = np.exp(lb)
    return bump.peak_log + math.log(_mean_abs(b, bump.n_lo, tol))


def integral_mean_M1(K: KernelEvaluator, a: complex, s: float, tol: float = 1e-10) -> float:
    """``M_1(B_a, s)``, the circle average of ``|B_a|`` at radius ``s``."""
    if not 0.0 <= s < 1.0:
        raise ValueError("s must lie in [0, 1)")
    rho = abs(a) * s
    return math.exp(log_integral_mean(K.table, rho, False, tol))


def integral_mean_deriv(K: KernelEvaluator, a: float, r: float, tol: float = 1e-10) -> float:
    """Circle average over ``|w| = r`` of ``|d/dz B_w(z)|`` at ``|z| = a``."""
    rho = abs(a) * r
    return r * math.exp(log_integral_mean(K.table, rho, True, tol))


# fast-decaying weights push the coefficient bump to huge indices near the rim
_MEAN_X_MAX = 1e18


class IntegralMeanTable:
    """Piecewise Chebyshev interpolant of ``log M_1`` in ``u = -log(1 - rho)``.

    ``M_1`` depends on ``a`` and ``s`` only through ``rho = |a| s``, so one
    table per weight serves every radius of a scan.
    """

    def __init__(self, weight: WeightSpec, deriv: bool = False, u_max: float = 12.0,
                 panel: float = 0.5, degree: int = 16, tol: float = 1e-9):
        self.weight = weight
        self.deriv = deriv
        self.u_max = u_max
        self.tol = tol
        self.table = moment_table(weight, x_max=_MEAN_X_MAX)
        self.max_check_error = 0.0
        self._panels = []
        edges = np.arange(0.0, u_max + panel, panel)
        stack = list(zip(edges[:-1], edges[1:]))[::-1]
        while stack:
            u0, u1 = stack.pop()
            poly = Chebyshev.interpolate(self._direct, degree, domain=[u0, u1])
            check = u0 + (u1 - u0) * np.array([0.21, 0.64, 0.93])
            err = float(np.max(np.abs(poly(check) - self._direct(check))))
            if err > tol * max(1.0, float(np.max(np.abs(poly(check))))) and u1 - u0 > 1e-2:
                mid = 0.5 * (u0 + u1)
                stack.extend([(mid, u1), (u0, mid)])
                continue
            self.max_check_error = max(self.max_check_error, err)
            self._panels.append((u0, u1, poly))
        self._starts = np.array([p[0] for p in self._panels])

    def _direct(self, u):
        rho = -np.expm1(-np.asarray(u, float))
        return np.array([log_integral_mean(self.table, float(r), self.deriv, 1e-12) for r in rho])

    def __call__(self, u):
        """``log M_1`` at ``u = -log(1 - rho)`` (array)."""
        u = np.asarray(u, float)
        if np.any(u > self.u_max * (1 + 1e-12)):
            raise ValueError(f"u = {float(np.max(u)):.4g} beyond table range {self.u_max:.4g}")
        idx = np.clip(np.searchsorted(self._starts, u, side="right") - 1, 0, len(self._panels) - 1)
        out = np.empty_like(u)
        for k in np.unique(idx):
            sel = idx == k
            out[sel] = self._panels[k][2](u[sel])
        return out


_MEAN_TABLES: dict = {}
_MEAN_LOCK = threading.Lock()


def integral_mean_table(weight: WeightSpec, deriv: bool = False, u_max: float = 12.0):
    """Shared table, rebuilt only when a larger range is requested."""
    key = (weight, deriv)
    with _MEAN_LOCK:
        tab = _MEAN_TABLES.get(key)
        if tab is None or tab.u_max < u_max:
            tab = _MEAN_TABLES[key] = IntegralMeanTable(weight, deriv, u_max=max(u_max, 1.0))
    return tab
