"""Exponentially decreasing weights ``w = exp(-phi)`` and the distance ``d_rho``.

``d_rho(z, zeta)`` is the infimum of ``int |gamma'| / rho(gamma)`` over curves
joining the two points.  It is approximated by shortest paths on a polar
graph whose edges are straight chords weighted by their exact line integral,
so every graph value is the length of an admissible curve and bounds
``d_rho`` from above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import dijkstra

from . import report as rep
from .classify import dhat_classify
from .criteria import hinf_norm_scan
from .kernel import KernelConvergenceError, KernelEvaluator
from .weights import (Exponential, Power, Product, TailOf, WeightSpec, log_tail)

_GL8 = np.polynomial.legendre.leggauss(8)


# ---------------------------------------------------------------------------
# weight family
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassESpec:
    """``phi(r) = alpha/(1-r^ell)^beta``, optionally ``- sigma log(1-r^2)``.

    With ``kind="log_corrected"`` the phase is
    ``alpha/(1-r^2)^beta - sigma log(1-r^2)`` and ``ell`` is fixed to 2.
    ``rho = (1-r)^rho_exponent`` with default exponent ``1 + beta/2``.
    """

    alpha: float = 1.0
    beta: float = 1.0
    ell: float = 1.0
    kind: str = "power"
    sigma: float = 0.0
    rho_exponent: float | None = None

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0 or self.ell <= 0:
            raise ValueError("alpha, beta and ell must be positive")
        if self.kind not in ("power", "log_corrected"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.kind == "log_corrected":
            object.__setattr__(self, "ell", 2.0)
        if self.rho_exponent is None:
            object.__setattr__(self, "rho_exponent", 1.0 + 0.5 * self.beta)

    def _s(self, r):
        # 1 - r^ell without cancellation
        with np.errstate(divide="ignore"):
            return -np.expm1(self.ell * np.log(np.asarray(r, float)))

    def phi(self, r):
        s = self._s(r)
        out = self.alpha * s ** (-self.beta)
        if self.kind == "log_corrected":
            out = out - self.sigma * np.log(s)
        return out

    def dphi(self, r):
        r = np.asarray(r, float)
        a, b, l = self.alpha, self.beta, self.ell
        s = self._s(r)
        out = a * b * l * r ** (l - 1) * s ** (-b - 1)
        if self.kind == "log_corrected":
            out = out + 2 * self.sigma * r / s
        return out

    def laplacian(self, r):
        """``phi'' + phi'/r``, with the ``r -> 0`` limit where it is finite."""
        r = np.asarray(r, float)
        a, b, l = self.alpha, self.beta, self.ell
        s = self._s(r)
        with np.errstate(divide="ignore"):
            out = a * b * l * l * r ** (l - 2) * s ** (-b - 2) * (1 + b * r ** l)
        if self.kind == "log_corrected":
            out = out + 4 * self.sigma / s ** 2
        return out

    def rho(self, r):
        return (1.0 - np.asarray(r, float)) ** self.rho_exponent

    @property
    def w(self) -> WeightSpec:
        base = Exponential(alpha=self.alpha, beta=self.beta, ell=self.ell)
        if self.kind == "log_corrected" and self.sigma != 0:
            return Product(factors=(base, Power(a=self.sigma, form="one_minus_r2")))
        return base

    @property
    def omega(self) -> WeightSpec:
        """``w^2``."""
        base = Exponential(alpha=2 * self.alpha, beta=self.beta, ell=self.ell)
        if self.kind == "log_corrected" and self.sigma != 0:
            return Product(factors=(base, Power(a=2 * self.sigma, form="one_minus_r2")))
        return base

    def v(self, nu: WeightSpec | None = None, t: int = 0, sigma: float = 0.0) -> WeightSpec:
        """``w nu_hat^t rho^sigma``."""
        if t not in (-1, 0, 1):
            raise ValueError("t must be -1, 0 or 1")
        factors = [self.w]
        if t:
            if nu is None:
                raise ValueError("nu is required when t != 0")
            factors.append(TailOf(base=nu, power=float(t)))
        if sigma:
            factors.append(Power(a=sigma * self.rho_exponent))
        return factors[0] if len(factors) == 1 else Product(factors=tuple(factors))

    def to_config(self):
        return {"alpha": self.alpha, "beta": self.beta, "ell": self.ell, "kind": self.kind,
                "sigma": self.sigma, "rho_exponent": self.rho_exponent}


@dataclass
class WZeroCheck:
    r: np.ndarray
    ratio: np.ndarray            # 1/sqrt(laplacian) / rho
    rho_over_t: np.ndarray       # rho / (1 - r)

    @property
    def band(self) -> tuple:
        return float(self.ratio.min()), float(self.ratio.max())

    @property
    def band_constant(self) -> float:
        lo, hi = self.band
        return max(hi, 1.0 / lo)

    @property
    def rho_constant(self) -> float:
        return float(self.rho_over_t.max())

    def to_dict(self):
        return {"band": list(self.band), "band_constant": self.band_constant,
                "rho_constant": self.rho_constant,
                "r": self.r.tolist(), "ratio": self.ratio.tolist()}


def wzero_check(spec: ClassESpec, r_grid=None) -> WZeroCheck:
    """Compare ``1/sqrt(laplacian phi)`` with ``rho`` on a radius grid.

    For ``ell = 1`` the laplacian blows up at the origin (``phi'(0) != 0``),
    so the default grid starts at ``r = 1/2``.
    """
    if r_grid is None:
        u0 = math.log(2.0) if spec.ell == 1 else 0.01
        r_grid = -np.expm1(-np.linspace(u0, 20 * math.log(2.0), 200))
    r = np.asarray(r_grid, float)
    ratio = 1.0 / np.sqrt(spec.laplacian(r)) / spec.rho(r)
    return WZeroCheck(r, ratio, spec.rho(r) / (1.0 - r))


# ---------------------------------------------------------------------------
# graph distance
# ---------------------------------------------------------------------------


def chord_length(rho, p, q):
    """``int |dz| / rho(|z|)`` along the straight segments ``p -> q`` (arrays)."""
    p = np.asarray(p, complex)
    q = np.asarray(q, complex)
    x, w = _GL8
    s = 0.5 * (x + 1.0)
    pts = p[..., None] + (q - p)[..., None] * s
    return np.abs(q - p) * np.sum(0.5 * w / rho(np.abs(pts)), axis=-1)


def _stencil(radial: int, angular: int):
    out = []
    for di in range(0, radial + 1):
        for dj in range(-angular, angular + 1):
            if (di, dj) == (0, 0) or math.gcd(di, abs(dj)) != 1:
                continue
            if di == 0 and dj < 0:
                continue
            out.append((di, dj))
    return out


@dataclass
class PolarGraph:
    """Centre node plus rings at ``radii`` times ``n_theta`` uniform angles.

    Each node links to ring offsets up to ``reach_r`` and angular offsets up
    to ``reach_theta`` (primitive directions only); the centre links to every
    node of the first ``reach_r`` rings.  A graph made by :meth:`halved`
    also keeps every edge of its ``parent``, so refinement never lengthens
    a shortest path.
    """

    rho: object
    radii: tuple
    n_theta: int = 512
    reach_r: int = 3
    reach_theta: int = 4
    parent: "PolarGraph | None" = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.radii = tuple(float(r) for r in self.radii)
        if any(b <= a for a, b in zip(self.radii, self.radii[1:])) or self.radii[0] <= 0:
            raise ValueError("ring radii must be positive and increasing")
        if self.radii[-1] >= 1:
            raise ValueError("ring radii must lie inside the unit disk")
        if self.parent is not None and (self.n_theta != 2 * self.parent.n_theta
                                        or self.n_radial != 2 * self.parent.n_radial):
            raise ValueError("a refined graph must double the parent's rings and angles")

    @classmethod
    def uniform_u(cls, rho, n_theta: int = 512, n_radial: int = 256,
                  u_max: float = 20 * math.log(2.0), **kw):
        """Rings equally spaced in ``u = -log(1-r)``."""
        u = (u_max / n_radial) * np.arange(1, n_radial + 1)
        return cls(rho, tuple(-np.expm1(-u)), n_theta, **kw)

    @classmethod
    def isotropic(cls, rho, n_theta: int = 256, r_max: float = 0.975, r_min: float = 0.05,
                  rim_fraction: float = 0.25, **kw):
        """Rings spaced ``r dtheta`` (square cells) but never wider than ``rim_fraction (1-r)``."""
        dth = 2 * math.pi / n_theta
        radii = [r_min]
        while radii[-1] < r_max:
            r = radii[-1]
            radii.append(r + min(r * dth, rim_fraction * (1 - r)))
        radii[-1] = r_max
        return cls(rho, tuple(radii), n_theta, **kw)

    @property
    def n_radial(self) -> int:
        return len(self.radii)

    @property
    def radius(self) -> float:
        return self.radii[-1]

    @cached_property
    def nodes(self) -> np.ndarray:
        r = np.asarray(self.radii)
        th = 2 * np.pi * np.arange(self.n_theta) / self.n_theta
        ring = (r[:, None] * np.exp(1j * th)[None, :]).ravel()
        return np.concatenate([[0.0 + 0.0j], ring])

    def index(self, i, j):
        """Node index of ring ``i >= 1`` and angle ``j`` (wrapped)."""
        return 1 + (np.asarray(i) - 1) * self.n_theta + np.mod(j, self.n_theta)

    @cached_property
    def edges(self):
        rows, cols = [], []
        I, J = np.meshgrid(np.arange(1, self.n_radial + 1), np.arange(self.n_theta), indexing="ij")
        I, J = I.ravel(), J.ravel()
        for di, dj in _stencil(self.reach_r, self.reach_theta):
            ok = I + di <= self.n_radial
            rows.append(self.index(I[ok], J[ok]))
            cols.append(self.index(I[ok] + di, J[ok] + dj))
        for i in range(1, min(self.reach_r, self.n_radial) + 1):
            rows.append(np.zeros(self.n_theta, int))
            cols.append(self.index(i, np.arange(self.n_theta)))
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        nz = self.nodes
        w = chord_length(self.rho, nz[rows], nz[cols])
        if self.parent is not None:
            pr, pc, pw = self.parent.edges
            rows = np.concatenate([rows, self._from_parent(pr)])
            cols = np.concatenate([cols, self._from_parent(pc)])
            w = np.concatenate([w, pw])
        return rows, cols, w

    def _from_parent(self, idx):
        """Map node indices of ``parent`` to this graph (ring i -> 2i, angle j -> 2j)."""
        idx = np.asarray(idx)
        n = self.parent.n_theta
        k = np.maximum(idx - 1, 0)
        return np.where(idx == 0, 0, self.index(2 * (k // n + 1), 2 * (k % n)))

    @cached_property
    def matrix(self):
        """Symmetric adjacency with one trailing empty row reserved for a source."""
        rows, cols, w = self.edges
        n = self.nodes.size
        r = np.concatenate([rows, cols])
        c = np.concatenate([cols, rows])
        return sparse.csr_matrix((np.concatenate([w, w]), (r, c)), shape=(n + 1, n + 1))

    def _locate(self, p: complex):
        if abs(p) > self.radius * (1 + 1e-12):
            raise ValueError(f"point {p} outside the mesh radius {self.radius:.6g}")
        # ring index of the last ring at or inside |p| (0 = centre)
        i0 = int(np.searchsorted(self.radii, abs(p), side="right"))
        th = math.atan2(p.imag, p.real) % (2 * math.pi)
        j0 = int(math.floor(th / (2 * math.pi / self.n_theta)))
        ii = np.arange(i0 - self.reach_r + 1, i0 + self.reach_r + 1)
        ii = ii[(ii >= 1) & (ii <= self.n_radial)]
        jj = np.arange(j0 - self.reach_theta + 1, j0 + self.reach_theta + 1)
        idx = self.index(ii[:, None], jj[None, :]).ravel()
        if i0 < self.reach_r:
            idx = np.append(idx, 0)
        if self.parent is not None:
            idx = np.concatenate([idx, self._from_parent(self.parent._locate(p))])
        return np.unique(idx)

    def attach(self, p: complex):
        """Nodes adjacent to an arbitrary point and the chord lengths to them."""
        idx = self._locate(complex(p))
        return idx, chord_length(self.rho, np.full(idx.size, complex(p)), self.nodes[idx])

    def halved(self) -> "PolarGraph":
        """Twice the angles and a ring between each pair of rings (midpoint in ``u``)."""
        u = -np.log1p(-np.asarray(self.radii))
        mid = np.concatenate([[0.5 * u[0]], 0.5 * (u[:-1] + u[1:])])
        new_u = np.sort(np.concatenate([u, mid]))
        return PolarGraph(self.rho, tuple(-np.expm1(-new_u)), 2 * self.n_theta,
                          self.reach_r, self.reach_theta, parent=self)


@dataclass
class DistanceField:
    """Graph distances from one source point to every node."""

    graph: PolarGraph
    source: complex
    limit: float = math.inf      # distances beyond this are left infinite
    dist: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        g = self.graph
        n = g.nodes.size
        base = g.matrix
        a_idx, a_w = g.attach(self.source)
        # fill the reserved last row with the source's outgoing edges
        indptr = base.indptr.copy()
        indptr[-1] += a_idx.size
        mat = sparse.csr_matrix((np.concatenate([base.data, a_w]),
                                 np.concatenate([base.indices, a_idx]), indptr),
                                shape=base.shape)
        self.dist = dijkstra(mat, directed=True, indices=n, limit=self.limit)[:n]

    def at(self, zeta: complex) -> float:
        """Distance to an arbitrary point, allowing the direct chord."""
        idx, w = self.graph.attach(zeta)
        via = float(np.min(self.dist[idx] + w))
        direct = segment_bound(self.graph.rho, self.source, zeta)
        return min(via, direct)


@dataclass(frozen=True)
class DRhoValue:
    value: float          # finest mesh
    coarse: float         # previous mesh
    extrapolated: float   # first-order Richardson

    @property
    def change(self) -> float:
        """Relative change under mesh halving."""
        return abs(self.coarse - self.value) / self.value if self.value > 0 else 0.0


def d_rho(spec_or_rho, z: complex, zeta: complex, graph: PolarGraph | None = None,
          richardson: bool = True):
    """Graph approximation of ``d_rho(z, zeta)``.

    Returns a :class:`DRhoValue` (value on the halved mesh, value on
    ``graph``, extrapolation) or a float when ``richardson`` is off.
    """
    rho = spec_or_rho.rho if isinstance(spec_or_rho, ClassESpec) else spec_or_rho
    graph = graph or PolarGraph.uniform_u(rho)
    z, zeta = complex(z), complex(zeta)
    for p in (z, zeta):
        if abs(p) > graph.radius:
            raise ValueError(f"point {p} outside the mesh radius {graph.radius:.6g}")
    if z == zeta:
        return DRhoValue(0.0, 0.0, 0.0) if richardson else 0.0
    coarse = DistanceField(graph, z).at(zeta)
    if not richardson:
        return coarse
    fine = DistanceField(graph.halved(), z).at(zeta)
    return DRhoValue(fine, coarse, 2 * fine - coarse)


def segment_bound(spec_or_rho, z, zeta) -> float:
    """Line integral of ``1/rho`` along the straight segment."""
    rho = spec_or_rho.rho if isinstance(spec_or_rho, ClassESpec) else spec_or_rho
    z, zeta = complex(z), complex(zeta)
    n = max(1, int(math.ceil(abs(zeta - z) / 0.01)))
    knots = z + (zeta - z) * np.linspace(0, 1, n + 1)
    return float(np.sum(chord_length(rho, knots[:-1], knots[1:])))


def random_disk_points(rng, n, r_max):
    r = r_max * np.sqrt(rng.uniform(size=n))
    return r * np.exp(2j * np.pi * rng.uniform(size=n))


@dataclass
class DRhoConsistency:
    pairs: np.ndarray
    values: np.ndarray
    coarse: np.ndarray
    bounds: np.ndarray
    forward: np.ndarray           # d(a, b) on the coarse mesh
    reverse: np.ndarray           # d(b, a) on the coarse mesh
    triangle_gap: np.ndarray      # (d(a,c) - d(a,b) - d(b,c)) / d(a,c), should be <= tol

    @property
    def max_change(self) -> float:
        return float(np.max(np.abs(self.values - self.coarse) / np.maximum(self.values, 1e-300)))

    @property
    def max_bound_excess(self) -> float:
        return float(np.max((self.values - self.bounds) / self.bounds))

    @property
    def max_asymmetry(self) -> float:
        return float(np.max(np.abs(self.forward - self.reverse) / np.maximum(self.forward, 1e-300)))

    @property
    def max_triangle_violation(self) -> float:
        return float(np.max(self.triangle_gap))

    def to_dict(self):
        return {"n_pairs": int(len(self.values)), "max_halving_change": self.max_change,
                "max_bound_excess": self.max_bound_excess, "max_asymmetry": self.max_asymmetry,
                "max_triangle_violation": self.max_triangle_violation}


def drho_consistency_check(spec: ClassESpec, n_pairs: int = 100, r_max: float = 0.95,
                           seed: int = 0, graph: PolarGraph | None = None) -> DRhoConsistency:
    """Segment bound, mesh halving, symmetry and triangle inequality on random pairs."""
    rng = np.random.default_rng(seed)
    graph = graph or PolarGraph.isotropic(spec.rho, n_theta=256, r_max=1 - 0.5 * (1 - r_max))
    fine = graph.halved()
    z = random_disk_points(rng, n_pairs, r_max)
    zeta = random_disk_points(rng, n_pairs, r_max)
    third = random_disk_points(rng, n_pairs, r_max)
    vals, coarse, bounds, rev, sym, tri = [], [], [], [], [], []
    for a, b, c in zip(z, zeta, third):
        # no path of interest is longer than the straight chords
        lim = 1.01 * max(chord_length(spec.rho, a, b), chord_length(spec.rho, a, c),
                         chord_length(spec.rho, b, c))
        fa = DistanceField(graph, a, lim)
        fb = DistanceField(graph, b, lim)
        d_ab, d_ac = fa.at(b), fa.at(c)
        vals.append(DistanceField(fine, a, lim).at(b))
        coarse.append(d_ab)
        bounds.append(segment_bound(spec, a, b))
        rev.append(fb.at(a))
        sym.append(d_ab)
        tri.append((d_ac - d_ab - fb.at(c)) / max(d_ac, 1e-300))
    return DRhoConsistency(np.stack([z, zeta], axis=1), np.array(vals), np.array(coarse),
                           np.array(bounds), np.array(sym), np.array(rev), np.array(tri))


# ---------------------------------------------------------------------------
# kernel decay
# ---------------------------------------------------------------------------


@dataclass
class KernelBoundFit:
    """Fit of ``log R = log C - alpha d_rho`` with ``R = |B| rho rho e^{-phi-phi}``."""

    d: np.ndarray
    log_ratio: np.ndarray
    slope: float
    intercept: float
    envelope_log_C: float           # smallest log C with R <= C e^{-alpha d} on all samples
    residual_std: float
    algebraic_log_sup: dict         # M -> log sup R (|z-zeta|/min rho)^M
    excluded: int

    @property
    def alpha(self) -> float:
        return -self.slope

    def to_dict(self):
        return {"alpha": self.alpha, "log_C": self.intercept, "envelope_log_C": self.envelope_log_C,
                "residual_std": self.residual_std, "n": int(self.d.size), "excluded": self.excluded,
                "algebraic_log_sup": {str(k): v for k, v in self.algebraic_log_sup.items()}}


def kernel_log_ratio(spec: ClassESpec, K: KernelEvaluator, z, zeta) -> float:
    val = K.eval(complex(z), complex(zeta))
    return (math.log(abs(val.value)) + math.log(spec.rho(abs(z)) * spec.rho(abs(zeta)))
            - float(spec.phi(abs(z))) - float(spec.phi(abs(zeta))))


def kernel_bound_fit(spec: ClassESpec, n_pairs: int = 1000, r_max: float = 0.95, seed: int = 0,
                     graph: PolarGraph | None = None, powers=(2, 4, 8)) -> KernelBoundFit:
    rng = np.random.default_rng(seed)
    K = KernelEvaluator(spec.omega)
    graph = graph or PolarGraph.isotropic(spec.rho, n_theta=128, r_max=1 - 0.5 * (1 - r_max))
    z = random_disk_points(rng, n_pairs, r_max)
    zeta = random_disk_points(rng, n_pairs, r_max)
    d, lr, alg_terms = [], [], []
    excluded = 0
    for a, b in zip(z, zeta):
        try:
            lrat = kernel_log_ratio(spec, K, a, b)
        except KernelConvergenceError:
            excluded += 1
            continue
        d.append(DistanceField(graph, a, 1.01 * chord_length(spec.rho, a, b)).at(b))
        lr.append(lrat)
        alg_terms.append(math.log(abs(a - b) / min(spec.rho(abs(a)), spec.rho(abs(b)))))
    d, lr, alg = np.array(d), np.array(lr), np.array(alg_terms)
    slope, icpt, _ = rep._linfit(d, lr)
    resid = lr - (slope * d + icpt)
    env = float(np.max(lr - slope * d))
    algebraic = {M: float(np.max(lr + M * alg)) for M in powers}
    return KernelBoundFit(d, lr, slope, icpt, env, float(np.std(resid)), algebraic, excluded)


def diagonal_bound_trace(spec: ClassESpec, r_grid=(0.0, 0.5, 0.75, 0.9, 0.95, 0.99)) -> np.ndarray:
    """``|B_z(z)| rho(z)^2 e^{-2 phi(z)}`` on a radial grid."""
    K = KernelEvaluator(spec.omega)
    return np.exp([kernel_log_ratio(spec, K, r, r) for r in r_grid])


# ---------------------------------------------------------------------------
# H-infinity scans for exponential pairs
# ---------------------------------------------------------------------------


def _tail_split_check(nu: WeightSpec, a: np.ndarray, depth: int):
    """Minimum of ``nu_hat((1+a)/2) / nu_hat(a)`` and the doubling bound ``1/C``."""
    ratio = np.exp(np.asarray(log_tail(nu, 0.5 * (1 + a))) - np.asarray(log_tail(nu, a)))
    C = dhat_classify(nu, depth=max(depth, 20)).dhat_constant
    return float(ratio.min()), (1.0 / C if C else math.nan)


def exp_family_scan(spec: ClassESpec, nu: WeightSpec | None = None, t: int = 0,
                    sigma: float = 0.0, depth: int = 12,
                          rules=rep.VerdictRules()) -> rep.CriterionReport:
    """H-infinity scan of ``P_{w^2}`` on the growth space of ``w nu_hat^t rho^sigma``."""
    v = spec.v(nu, t, sigma)
    r = hinf_norm_scan(spec.omega, v, depth, rules=rules)
    r.criterion = "exp_family_hinf"
    r.notes = [f"v = w * nu_hat^{t} * rho^{sigma:g}"]
    r.extra.update(family=spec.to_config(), t=t, sigma=sigma)
    if t and nu is not None:
        lo, bound = _tail_split_check(nu, r.grid, depth)
        r.extra["outer_region_tail_ratio_min"] = lo
        r.extra["outer_region_tail_bound"] = bound
        if lo < bound * (1 - 1e-9):
            r.notes.append("outer-region tail ratio below the doubling bound")
    return r


def mismatch_scan(alpha_tilde: float = 2.5, spec: ClassESpec = ClassESpec(), depth: int = 12,
                  rules=rep.VerdictRules()) -> rep.CriterionReport:
    """Projection with ``exp(-alpha_tilde/(1-r^ell)^beta)^2`` on the space of ``w``."""
    omega = Exponential(alpha=2 * alpha_tilde, beta=spec.beta, ell=spec.ell)
    r = hinf_norm_scan(omega, spec.w, depth, rules=rules)
    r.criterion = "exp_family_mismatch"
    r.notes = [f"omega exponent {alpha_tilde:g} against w exponent {spec.alpha:g}"]
    return r


def corrected_power_family_scan(alpha: float = 1.0, beta: float = 1.0, sigma: float = 0.0,
                                gamma: float = 0.0, depth: int = 12,
                       rules=rep.VerdictRules()) -> rep.CriterionReport:
    """``v = (1-r^2)^gamma w``, ``omega = (1-r^2)^{2 sigma} w^2``, ``w = exp(-alpha/(1-r^2)^beta)``."""
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")
    w = Exponential(alpha=alpha, beta=beta, ell=2.0)
    w2 = Exponential(alpha=2 * alpha, beta=beta, ell=2.0)
    v = Product(factors=(w, Power(a=gamma, form="one_minus_r2"))) if gamma else w
    omega = Product(factors=(w2, Power(a=2 * sigma, form="one_minus_r2"))) if sigma else w2
    r = hinf_norm_scan(omega, v, depth, rules=rules)
    r.criterion = "exp_family_perturbed"
    r.notes = [f"alpha={alpha:g} beta={beta:g} sigma={sigma:g} gamma={gamma:g}"]
    return r
