"""Bergman projection of sampled and harmonic functions; the Szegő projection.

Harmonic polynomials are projected mode by mode: angular orthogonality
leaves only ``m >= 0`` modes, each scaled by ``2 int r^(2m+1) w dr`` over the
kernel coefficient ``2 m_{2m+1}``.  The numerator is integrated on the polar
mesh while the denominator comes from the moment table, so any deviation
from the Szegő projection measures radial quadrature error alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .moments import moment_table
from .weights import WeightSpec

_GL20 = np.polynomial.legendre.leggauss(20)


@dataclass(frozen=True)
class PolarMesh:
    """Gauss-Legendre panels in ``u = -log(1-r)`` times uniform angles.

    ``u_max`` fixes the outer radius ``R = 1 - exp(-u_max)``.
    """

    n_theta: int = 64
    u_max: float = 40 * math.log(2.0)
    panel: float = 1.0

    def __post_init__(self):
        if self.n_theta < 2 or self.n_theta & (self.n_theta - 1):
            raise ValueError("angular node count must be a power of two")

    @property
    def radius(self) -> float:
        return -math.expm1(-self.u_max)

    def radial(self):
        """Radial nodes ``r_j``, their ``u_j`` and weights ``w_j`` for ``int_0^R . dr``."""
        x, w = _GL20
        edges = np.append(np.arange(0.0, self.u_max, self.panel), self.u_max)
        us, ws = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            if b - a <= 0:
                continue
            us.append(0.5 * (a + b) + 0.5 * (b - a) * x)
            ws.append(0.5 * (b - a) * w)
        u = np.concatenate(us)
        wu = np.concatenate(ws)
        # dr = e^{-u} du
        return -np.expm1(-u), u, wu * np.exp(-u)

    @property
    def theta(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_theta) / self.n_theta


@dataclass
class PolarFunctionSample:
    """Complex values on a :class:`PolarMesh`; ``values[j, k]`` at ``r_j e^{i theta_k}``."""

    mesh: PolarMesh
    values: np.ndarray
    r: np.ndarray = field(init=False, repr=False)
    u: np.ndarray = field(init=False, repr=False)
    w_r: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.r, self.u, self.w_r = self.mesh.radial()
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.r.size, self.mesh.n_theta):
            raise ValueError(f"values must have shape {(self.r.size, self.mesh.n_theta)}")

    @classmethod
    def from_function(cls, f, mesh: PolarMesh | None = None):
        mesh = mesh or PolarMesh()
        r, _, _ = mesh.radial()
        z = r[:, None] * np.exp(1j * mesh.theta)[None, :]
        return cls(mesh, f(z))

    @property
    def weights(self) -> np.ndarray:
        """Node weights for normalised area measure; they sum to ``R^2``."""
        return np.outer(2.0 * self.r * self.w_r, np.full(self.mesh.n_theta, 1.0 / self.mesh.n_theta))

    def integrate(self, g=None) -> complex:
        vals = self.values if g is None else self.values * g
        return complex(np.sum(self.weights * vals))


@dataclass(frozen=True)
class HarmonicPolynomial:
    """``f(r e^{it}) = sum_m f_m r^|m| e^{imt}`` with finitely many ``f_m``."""

    coeffs: dict

    def __post_init__(self):
        clean = {int(m): complex(c) for m, c in dict(self.coeffs).items() if c != 0}
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def monomial(cls, m: int, c: complex = 1.0):
        return cls({m: c})

    @property
    def degree(self) -> int:
        return max((abs(m) for m in self.coeffs), default=0)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for m, c in self.coeffs.items():
            out = out + c * (z ** m if m >= 0 else np.conj(z) ** (-m))
        return out

    def __add__(self, other):
        keys = set(self.coeffs) | set(other.coeffs)
        return HarmonicPolynomial({k: self.coeffs.get(k, 0) + other.coeffs.get(k, 0) for k in keys})

    def scale(self, a: complex):
        return HarmonicPolynomial({m: a * c for m, c in self.coeffs.items()})

    def rotate(self, phi: float):
        """``f(e^{-i phi} z)``, the rotation of ``f`` by ``phi``."""
        return HarmonicPolynomial({m: c * np.exp(-1j * m * phi) for m, c in self.coeffs.items()})


def szego_project(f: HarmonicPolynomial) -> HarmonicPolynomial:
    """Drop the negative modes."""
    return HarmonicPolynomial({m: c for m, c in f.coeffs.items() if m >= 0})


def _radial_moments(omega: WeightSpec, mesh: PolarMesh, powers) -> np.ndarray:
    """``2 int_0^R r^p w(r) dr`` on the mesh's radial rule, for each ``p``."""
    r, u, w = mesh.radial()
    lw = omega.log_density_u(u)
    p = np.asarray(powers, float)[:, None]
    with np.errstate(divide="ignore"):
        terms = np.exp(p * np.log(r)[None, :] + lw[None, :]) * w[None, :]
    return 2.0 * terms.sum(axis=1)


def _log_two_odd_moments(omega: WeightSpec, m) -> np.ndarray:
    """``log(2 w_{2m+1})``."""
    return math.log(2.0) + moment_table(omega).log(2.0 * np.asarray(m, float) + 1.0)


def project(omega: WeightSpec, f, z, mesh: PolarMesh | None = None, tol: float = 1e-10):
    """``P_w f(z)`` for a :class:`HarmonicPolynomial` or :class:`PolarFunctionSample`."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) >= 1):
        raise ValueError("z must lie in the open unit disk")
    if isinstance(f, HarmonicPolynomial):
        mesh = mesh or PolarMesh()
        modes = sorted(m for m in f.coeffs if m >= 0)
        out = np.zeros_like(z)
        if not modes:
            return out
        num = _radial_moments(omega, mesh, [2 * m + 1 for m in modes])
        den = np.exp(_log_two_odd_moments(omega, modes))
        for m, a, b in zip(modes, num, den):
            out = out + f.coeffs[m] * (a / b) * z ** m
        return out
    if isinstance(f, PolarFunctionSample):
        n_theta = f.mesh.n_theta
        n_modes = n_theta // 2
        # F[j, n] = (1/N) sum_k f_jk e^{-i n theta_k}
        F = np.fft.fft(f.values, axis=1)[:, :n_modes] / n_theta
        lw = omega.log_density_u(f.u)
        n = np.arange(n_modes)
        with np.errstate(divide="ignore"):
            radial = np.exp(n[None, :] * np.log(f.r)[:, None] + lw[:, None])
        g = np.sum((2.0 * f.r * f.w_r)[:, None] * radial * F, axis=0)
        coef = g * np.exp(-_log_two_odd_moments(omega, n))
        zz = z.reshape(-1)
        vals = np.polynomial.polynomial.polyval(zz, coef)
        return vals.reshape(z.shape)
    raise TypeError("f must be a HarmonicPolynomial or PolarFunctionSample")


def default_z_grid(n_radii: int = 4, n_angles: int = 8) -> np.ndarray:
    rad = np.linspace(0.15, 0.9, n_radii)
    ang = 2 * np.pi * (np.arange(n_angles) + 0.25) / n_angles
    return (rad[:, None] * np.exp(1j * ang)[None, :]).ravel()


@dataclass
class SzegoCheck:
    modes: np.ndarray
    z_grid: np.ndarray
    deviation: np.ndarray        # rows: modes, columns: z

    @property
    def max_deviation(self) -> float:
        return float(np.max(self.deviation))


def szego_agreement_check(omega: WeightSpec, M: int = 8, z_grid=None,
                          mesh: PolarMesh | None = None, method: str = "harmonic") -> SzegoCheck:
    """Deviation ``|P_w f - R f|`` over monomials ``r^|m| e^{imt}``, ``|m| <= M``.

    ``method="sampled"`` samples each monomial on the mesh and projects the
    samples instead of using mode orthogonality.
    """
    mesh = mesh or PolarMesh(n_theta=max(64, 1 << int(math.ceil(math.log2(2 * M + 2)))))
    if M > mesh.n_theta // 2:
        raise ValueError("M must not exceed half the angular node count")
    zg = default_z_grid() if z_grid is None else np.asarray(z_grid, dtype=complex)
    modes = np.arange(-M, M + 1)
    dev = np.zeros((modes.size, zg.size))
    for i, m in enumerate(modes):
        f = HarmonicPolynomial.monomial(int(m))
        exact = szego_project(f)(zg)
        if method == "harmonic":
            got = project(omega, f, zg, mesh)
        elif method == "sampled":
            got = project(omega, PolarFunctionSample.from_function(f, mesh), zg)
        else:
            raise ValueError(f"unknown method {method!r}")
        dev[i] = np.abs(got - exact)
    return SzegoCheck(modes, zg, dev)
