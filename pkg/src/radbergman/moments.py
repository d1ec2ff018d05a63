"""Tabulated log-moments ``log w_x`` for fast kernel coefficient generation.

Closed-form families evaluate their moments directly.  Every other weight
gets a piecewise Chebyshev interpolant of ``log w_x`` in ``s = log(1 + x)``;
each panel is checked against fresh quadratures at off-node points and
bisected until the check passes.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Chebyshev

from .weights import WeightSpec, log_moment, log_moment_quad

_PANEL_WIDTH = 0.5
_DEGREE = 20


@dataclass
class MomentTable:
    """Moments ``w_x`` for ``0 <= x <= x_max`` with a relative-error estimate.

    ``entries`` records every directly computed ``(x, log w_x)`` pair.
    ``rel_error`` covers the panels fitted so far.
    """

    spec: WeightSpec
    x_max: float = 4.0e6 + 1.0
    rtol: float = 1e-12
    entries: dict = field(default_factory=dict, repr=False)
    rel_error: float = 0.0
    _panels: dict = field(default=None, repr=False)
    _edges: np.ndarray = field(default=None, repr=False)
    _worst: float = field(default=0.0, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def strategy(self) -> str:
        return "closed_form" if self.spec.has_closed_moments else "chebyshev_log_moments"

    def _direct(self, x: float) -> float:
        v = log_moment_quad(self.spec, float(x), self.rtol)
        self.entries[float(x)] = v
        return v

    def _fit(self, s0, s1):
        def f(s):
            return np.array([self._direct(x) for x in np.expm1(s)])

        poly = Chebyshev.interpolate(f, _DEGREE, domain=[s0, s1])
        check = s0 + (s1 - s0) * np.array([0.13, 0.41, 0.77, 0.97])
        direct = f(check)
        err = np.max(np.abs(poly(check) - direct))
        # quadrature of log w_x is only good to a few ulps of |log w_x|
        floor = 64.0 * np.finfo(float).eps * float(np.max(np.abs(direct)))
        return poly, err, floor

    def _base_edges(self):
        s_max = math.log1p(self.x_max)
        edges = np.arange(0.0, s_max + _PANEL_WIDTH, _PANEL_WIDTH)
        edges[-1] = max(edges[-1], s_max)
        return edges

    def _build_panel(self, k: int):
        """Fit base panel ``k``, bisecting until the off-node check passes."""
        edges = self._edges
        stack = [(edges[k], edges[k + 1])]
        pieces = []
        while stack:
            s0, s1 = stack.pop()
            poly, err, floor = self._fit(s0, s1)
            if err > max(10 * self.rtol, floor) and s1 - s0 > 1e-3:
                mid = 0.5 * (s0 + s1)
                stack.extend([(mid, s1), (s0, mid)])
                continue
            self._worst = max(self._worst, err)
            pieces.append((s0, s1, poly))
        pieces.sort(key=lambda p: p[0])
        self._panels[k] = (np.array([p[0] for p in pieces]), pieces)
        # log error -> relative error in the moment
        self.rel_error = max(math.expm1(self._worst), self.rtol)

    def log(self, x) -> np.ndarray:
        """``log w_x`` for an array of exponents.

        Panels are fitted on first use, so a wide ``x_max`` costs nothing
        until large exponents are actually requested.
        """
        x = np.asarray(x, dtype=float)
        if self.spec.has_closed_moments:
            return np.asarray(log_moment(self.spec, x))
        if np.any(x > self.x_max) or np.any(x < 0):
            raise ValueError(f"exponent outside table range [0, {self.x_max:g}]")
        s = np.log1p(x)
        with self._lock:
            if self._panels is None:
                self._edges = self._base_edges()
                self._panels = {}
                self._worst = 0.0
            base = np.clip(np.searchsorted(self._edges, s, side="right") - 1, 0, self._edges.size - 2)
            for k in np.unique(base):
                if k not in self._panels:
                    self._build_panel(int(k))
        out = np.empty_like(s)
        for k in np.unique(base):
            sel = base == k
            starts, pieces = self._panels[k]
            idx = np.clip(np.searchsorted(starts, s[sel], side="right") - 1, 0, len(pieces) - 1)
            vals = np.empty(int(sel.sum()))
            for j in np.unique(idx):
                vals[idx == j] = pieces[j][2](s[sel][idx == j])
            out[sel] = vals
        return out

    def odd_moments_log(self, n_terms: int) -> np.ndarray:
        """``log w_{2n+1}`` for ``n = 0..n_terms-1``."""
        return self.log(2.0 * np.arange(n_terms) + 1.0)

    @property
    def error(self) -> float:
        if self.spec.has_closed_moments:
            return 1e-14
        return self.rel_error


_TABLES: dict = {}
_TABLES_LOCK = threading.Lock()


def moment_table(spec: WeightSpec, x_max: float = 4.0e6 + 1.0) -> MomentTable:
    """Shared table per weight, built once."""
    key = (spec, x_max)
    with _TABLES_LOCK:
        tab = _TABLES.get(key)
        if tab is None:
            tab = _TABLES[key] = MomentTable(spec, x_max)
    return tab
