"""Radial weights on the unit disk: densities, tails, moments.

Every weight is evaluated through ``t = 1 - r`` so that radii such as
``1 - 2**-40`` keep full relative precision, and through logarithms so
that exponentially small weights stay representable.  The public helpers
(:func:`eval_weight`, :func:`tail`, :func:`moment`, :func:`mixed_tail`)
take ordinary radii in ``[0, 1)``.
"""

from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import betainc, betaln

from .quad import DivergentIntegral, QuadratureError, log_quad

# Moments below exp(_LOG_TINY) are not representable as doubles.
_LOG_TINY = math.log(np.finfo(float).tiny)

DEFAULT_RTOL = 1e-12


class WeightError(ValueError):
    """Invalid family parameters or evaluation outside ``[0, 1)``."""


class MomentUnderflow(ArithmeticError):
    """The requested moment is below the smallest positive double."""


def _as_t(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r >= 1):
        raise WeightError("radius must lie in [0, 1)")
    return 1.0 - r


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------


@dataclass(frozen=True, kw_only=True)
class WeightSpec:
    """A radial weight; subclasses implement ``_log_density_u``.

    ``scale`` multiplies the density.  All tails and moments are computed
    for the scaled weight.
    """

    scale: float = 1.0
    family: ClassVar[str] = "abstract"

    def __post_init__(self):
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise WeightError("scale must be a positive finite number")
        self._validate()

    def _validate(self):
        pass

    # log of the unscaled density at u = -log(1 - r); u may exceed 745,
    # where 1 - r itself is no longer representable
    def _log_density_u(self, u):
        raise NotImplementedError

    def log_density_u(self, u):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return self._log_density_u(np.asarray(u, dtype=float)) + math.log(self.scale)

    # log density = c*u + g(u), with the exact linear coefficient c kept apart
    # so that integrands like w e^{-u} cancel exactly for u near 1e20
    def _log_density_split_u(self, u):
        return 0.0, self._log_density_u(u)

    def log_density_split_u(self, u):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            c, g = self._log_density_split_u(np.asarray(u, dtype=float))
        return c, g + math.log(self.scale)

    def log_integrand_u(self, u, shift: float = -1.0):
        """log of ``w e^{shift u}``; ``shift=-1`` is the ``dr = e^-u du`` Jacobian."""
        u = np.asarray(u, dtype=float)
        c, g = self.log_density_split_u(u)
        return (c + shift) * u + g if c + shift != 0 else g + 0.0 * u

    def _log_tail_split_u(self, u):
        return None

    def log_density(self, t):
        """log density at ``t = 1 - r``."""
        with np.errstate(divide="ignore"):
            return self.log_density_u(-np.log(np.asarray(t, dtype=float)))

    # closed forms, unscaled; None when unavailable
    def _log_tail_closed_u(self, u):
        return None

    def _log_moment_closed(self, x):
        return None

    def log_tail_closed_u(self, u):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            v = self._log_tail_closed_u(np.asarray(u, dtype=float))
        return None if v is None else v + math.log(self.scale)

    def log_tail_closed(self, t):
        with np.errstate(divide="ignore"):
            return self.log_tail_closed_u(-np.log(np.asarray(t, dtype=float)))

    def log_moment_closed(self, x):
        v = self._log_moment_closed(np.asarray(x, dtype=float))
        return None if v is None else v + math.log(self.scale)

    @property
    def has_closed_tail(self) -> bool:
        return self._log_tail_closed_u(np.array([0.5])) is not None

    @property
    def has_closed_moments(self) -> bool:
        return self._log_moment_closed(np.array([1.0])) is not None

    def __call__(self, r):
        return np.exp(self.log_density(_as_t(r)))

    def to_config(self) -> dict:
        raise NotImplementedError

    def label(self) -> str:
        return self.family


@dataclass(frozen=True, kw_only=True)
class Power(WeightSpec):
    """``(1-r)^a`` or ``(1-r^2)^a`` with no integrability check (used as a factor)."""

    a: float
    form: str = "one_minus_r"
    family: ClassVar[str] = "power"

    def _validate(self):
        if self.form not in ("one_minus_r", "one_minus_r2"):
            raise WeightError(f"form must be 'one_minus_r' or 'one_minus_r2', got {self.form!r}")
        if not math.isfinite(self.a):
            raise WeightError("exponent a must be finite")

    def _log_density_u(self, u):
        c, g = self._log_density_split_u(u)
        return c * u + g if c else g

    def _log_density_split_u(self, u):
        if self.a == 0:
            return 0.0, np.zeros_like(u)
        if self.form == "one_minus_r2":
            return -self.a, self.a * np.log(2.0 - np.exp(-u))
        return -self.a, np.zeros_like(u)


    def _log_tail_closed_u(self, u):
        a = self.a
        if a <= -1:
            return None
        c, g = self._log_tail_split_u(u)
        return c * u + g

    def _log_tail_split_u(self, u):
        a = self.a
        if a <= -1:
            return None
        if self.form == "one_minus_r":
            return -(a + 1), np.full_like(u, -math.log(a + 1))
        # int_r^1 (1-s^2)^a ds = B(1/2, a+1)/2 * I_{1-r^2}(a+1, 1/2)
        t = np.exp(-u)
        x = t * (2.0 - t)
        near = np.minimum(u, 30.0)
        with np.errstate(divide="ignore"):
            exact = (math.log(0.5) + betaln(0.5, a + 1) + np.log(betainc(a + 1, 0.5, x))
                     + (a + 1) * near)
        # near the rim: 2^a t^(a+1)/(a+1) * (1 - a(a+1)t/(2(a+2)))
        rim = a * math.log(2.0) - math.log(a + 1) + np.log1p(-a * (a + 1) * t / (2 * (a + 2)))
        return -(a + 1), np.where(u > 30.0, rim, exact)

    def _log_moment_closed(self, x):
        a = self.a
        if a <= -1:
            return None
        if self.form == "one_minus_r":
            return betaln(x + 1, a + 1)
        return math.log(0.5) + betaln((x + 1) / 2, a + 1)

    def to_config(self):
        return {"family": self.family, "a": self.a, "form": self.form, "scale": self.scale}

    def label(self):
        base = "(1-r)" if self.form == "one_minus_r" else "(1-r^2)"
        return f"{base}^{self.a:g}"


@dataclass(frozen=True, kw_only=True)
class Standard(Power):
    """Standard weight ``(1-r)^a`` or ``(1-r^2)^a`` with ``a > -1``."""

    family: ClassVar[str] = "standard"

    def _validate(self):
        super()._validate()
        if not self.a > -1:
            raise WeightError(f"standard weight needs a > -1, got a={self.a}")


@dataclass(frozen=True, kw_only=True)
class LogPerturbed(WeightSpec):
    """``(1-r)^p * log(e/(1-r))^q``."""

    p: float
    q: float
    family: ClassVar[str] = "log_perturbed"

    def _validate(self):
        if not (self.p > -1 or (self.p == -1 and self.q < -1)):
            raise WeightError("log-perturbed weight is integrable only for p > -1, or p = -1 and q < -1")

    def _log_density_u(self, u):
        return -self.p * u + self.q * np.log1p(u)

    def _log_density_split_u(self, u):
        return -self.p, self.q * np.log1p(u)

    def _log_tail_closed_u(self, u):
        if self.p != -1:
            return None
        # int_u^inf (1+s)^q ds
        return (self.q + 1) * np.log1p(u) - math.log(-(self.q + 1))

    def _log_tail_split_u(self, u):
        v = self._log_tail_closed_u(u)
        return None if v is None else (0.0, v)

    def to_config(self):
        return {"family": self.family, "p": self.p, "q": self.q, "scale": self.scale}

    def label(self):
        return f"(1-r)^{self.p:g}log(e/(1-r))^{self.q:g}"


@dataclass(frozen=True, kw_only=True)
class Exponential(WeightSpec):
    """``exp(-alpha / (1 - r^ell)^beta)``."""

    alpha: float
    beta: float
    ell: float = 1.0
    family: ClassVar[str] = "exponential"

    def _validate(self):
        if not (self.alpha > 0 and self.beta > 0 and self.ell > 0):
            raise WeightError("exponential weight needs alpha, beta, ell > 0")

    def one_minus_r_ell_u(self, u):
        with np.errstate(divide="ignore"):
            return -np.expm1(self.ell * np.log1p(-np.exp(-np.asarray(u, dtype=float))))

    def _log_density_u(self, u):
        return -self.alpha * self.one_minus_r_ell_u(u) ** (-self.beta)

    def to_config(self):
        return {"family": self.family, "alpha": self.alpha, "beta": self.beta,
                "ell": self.ell, "scale": self.scale}

    def label(self):
        return f"exp(-{self.alpha:g}/(1-r^{self.ell:g})^{self.beta:g})"


@dataclass(frozen=True, kw_only=True)
class Product(WeightSpec):
    factors: tuple
    family: ClassVar[str] = "product"

    def _validate(self):
        if len(self.factors) < 1:
            raise WeightError("product needs at least one factor")
        object.__setattr__(self, "factors", tuple(self.factors))

    def _log_density_u(self, u):
        out = np.zeros_like(u)
        for f in self.factors:
            out = out + f.log_density_u(u)
        return out

    def _log_density_split_u(self, u):
        c, g = 0.0, np.zeros_like(u)
        for f in self.factors:
            cf, gf = f.log_density_split_u(u)
            c, g = c + cf, g + gf
        return c, g

    def _merged_power(self):
        forms = {f.form for f in self.factors if isinstance(f, Power)}
        if len(forms) != 1 or not all(isinstance(f, Power) for f in self.factors):
            return None
        a = sum(f.a for f in self.factors)
        scale = math.prod(f.scale for f in self.factors)
        return Power(a=a, form=forms.pop(), scale=scale)

    def _log_tail_closed_u(self, u):
        p = self._merged_power()
        return None if p is None else p.log_tail_closed_u(u)

    def _log_tail_split_u(self, u):
        p = self._merged_power()
        return None if p is None else log_tail_split_u(p, u)

    def _log_moment_closed(self, x):
        p = self._merged_power()
        return None if p is None else p.log_moment_closed(x)

    def to_config(self):
        return {"family": self.family, "factors": [f.to_config() for f in self.factors],
                "scale": self.scale}

    def label(self):
        return "*".join(f.label() for f in self.factors)


@dataclass(frozen=True, kw_only=True)
class TailOf(WeightSpec):
    """The function ``r -> base_hat(r)^power`` used as a density or factor."""

    base: WeightSpec
    power: float = 1.0
    family: ClassVar[str] = "tail_of"

    def _log_density_u(self, u):
        return self.power * log_tail_u(self.base, u)

    def _log_density_split_u(self, u):
        c, g = log_tail_split_u(self.base, u)
        return self.power * c, self.power * g

    def to_config(self):
        return {"family": self.family, "base": self.base.to_config(), "power": self.power,
                "scale": self.scale}

    def label(self):
        return f"hat({self.base.label()})^{self.power:g}"


@dataclass(frozen=True, kw_only=True)
class OmegaNu(WeightSpec):
    """``nu * nu_hat``; its tail is exactly ``nu_hat^2 / 2``."""

    base: WeightSpec
    family: ClassVar[str] = "omega_nu"

    def _log_density_u(self, u):
        return self.base.log_density_u(u) + log_tail_u(self.base, u)

    def _log_density_split_u(self, u):
        c1, g1 = self.base.log_density_split_u(u)
        c2, g2 = log_tail_split_u(self.base, u)
        return c1 + c2, g1 + g2

    def _log_tail_closed_u(self, u):
        return 2.0 * log_tail_u(self.base, u) - math.log(2.0)

    def _log_tail_split_u(self, u):
        c, g = log_tail_split_u(self.base, u)
        return 2.0 * c, 2.0 * g - math.log(2.0)

    def to_config(self):
        return {"family": self.family, "base": self.base.to_config(), "scale": self.scale}

    def label(self):
        return f"omega_nu[{self.base.label()}]"


@dataclass(frozen=True, kw_only=True)
class NuOmega(WeightSpec):
    """The weight whose tail is ``omega_hat^(1/2)``.

    Its density is the nonnegative derivative ``omega / (2 omega_hat^(1/2))``.
    """

    base: WeightSpec
    family: ClassVar[str] = "nu_omega"

    def _log_density_u(self, u):
        return self.base.log_density_u(u) - math.log(2.0) - 0.5 * log_tail_u(self.base, u)

    def _log_density_split_u(self, u):
        c1, g1 = self.base.log_density_split_u(u)
        c2, g2 = log_tail_split_u(self.base, u)
        return c1 - 0.5 * c2, g1 - math.log(2.0) - 0.5 * g2

    def _log_tail_closed_u(self, u):
        return 0.5 * log_tail_u(self.base, u)

    def _log_tail_split_u(self, u):
        c, g = log_tail_split_u(self.base, u)
        return 0.5 * c, 0.5 * g

    def to_config(self):
        return {"family": self.family, "base": self.base.to_config(), "scale": self.scale}

    def label(self):
        return f"nu_omega[{self.base.label()}]"


@dataclass(frozen=True, kw_only=True)
class Tabulated(WeightSpec):
    """Monotone piecewise-cubic interpolation of samples ``(r_i, w_i)``.

    The weight is held at its last sampled value on ``[r_last, 1)``.
    """

    r: tuple
    w: tuple
    family: ClassVar[str] = "tabulated"
    _interp: object = field(default=None, init=False, repr=False, compare=False, hash=False)

    def _validate(self):
        r = np.asarray(self.r, dtype=float)
        w = np.asarray(self.w, dtype=float)
        if r.ndim != 1 or r.size < 2 or r.size != w.size:
            raise WeightError("tabulated weight needs two equal-length columns with >= 2 rows")
        if np.any(np.diff(r) <= 0) or r[0] < 0 or r[-1] >= 1:
            raise WeightError("tabulated radii must be strictly increasing in [0, 1)")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise WeightError("tabulated weight values must be positive")
        object.__setattr__(self, "r", tuple(r.tolist()))
        object.__setattr__(self, "w", tuple(w.tolist()))
        object.__setattr__(self, "_interp", PchipInterpolator(r, w, extrapolate=False))

    def _log_density_u(self, u):
        rr = -np.expm1(-u)
        r0, r1 = self.r[0], self.r[-1]
        v = self._interp(np.clip(rr, r0, r1))
        return np.log(np.where(rr > r1, self.w[-1], np.where(rr < r0, self.w[0], v)))

    def _log_tail_closed_u(self, u):
        r0, r1 = self.r[0], self.r[-1]
        rr = -np.expm1(-u)
        anti = self._interp.antiderivative()
        inner = np.clip(rr, r0, r1)
        head = anti(r1) - anti(inner)
        below = self.w[0] * np.clip(r0 - rr, 0.0, None)
        # constant continuation on [max(r, r1), 1)
        log_rim = math.log(self.w[-1]) + np.where(rr < r1, math.log1p(-r1), -u)
        return np.logaddexp(log_rim, np.log(head + below))

    @classmethod
    def from_csv(cls, path, **kw):
        rows = []
        with open(path, newline="") as fh:
            for line_no, row in enumerate(csv.reader(fh), 1):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except (ValueError, IndexError):
                    if line_no == 1:
                        continue  # header
                    raise WeightError(f"{path}:{line_no}: expected two numeric columns")
        r, w = zip(*rows)
        return cls(r=r, w=w, **kw)

    def to_config(self):
        return {"family": self.family, "r": list(self.r), "w": list(self.w), "scale": self.scale}


# ---------------------------------------------------------------------------
# tails
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=65536)
def _log_tail_quad(spec: WeightSpec, u0: float, rtol: float) -> float:
    # int_r^1 w(s) ds = int_{u0}^inf w e^{-u} du
    def g(v):
        return spec.log_integrand_u(u0 + v)

    return log_quad(g, 0.0, rtol=rtol).log_value


def log_tail_u(spec: WeightSpec, u, rtol=DEFAULT_RTOL):
    """log of the tail integral at ``u = -log(1 - r)`` (array in, array out)."""
    u = np.asarray(u, dtype=float)
    closed = spec.log_tail_closed_u(u)
    if closed is not None:
        return closed
    flat = [_log_tail_quad(spec, float(uu), rtol) for uu in u.ravel()]
    return np.asarray(flat, dtype=float).reshape(u.shape)


def log_tail_split_u(spec: WeightSpec, u, rtol=DEFAULT_RTOL):
    """``(c, g)`` with ``log_tail_u = c*u + g``; ``c = 0`` without a closed form."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        split = spec._log_tail_split_u(u)
    if split is None:
        return 0.0, log_tail_u(spec, u, rtol)
    c, g = split
    return c, g + math.log(spec.scale)


def log_tail_t(spec: WeightSpec, t, rtol=DEFAULT_RTOL):
    """log of the tail integral at ``t = 1 - r``."""
    with np.errstate(divide="ignore"):
        return log_tail_u(spec, -np.log(np.asarray(t, dtype=float)), rtol)


def eval_weight(spec: WeightSpec, r: float) -> float:
    """Density of ``spec`` at radius ``r``."""
    t = _as_t(r)
    return float(np.exp(spec.log_density(t)))


def log_tail(spec: WeightSpec, r, rtol=DEFAULT_RTOL):
    return log_tail_t(spec, _as_t(r), rtol)


def tail(spec: WeightSpec, r, rtol=DEFAULT_RTOL):
    """Tail integral ``int_r^1 w(s) ds``."""
    v = np.exp(log_tail(spec, r, rtol))
    return float(v) if np.ndim(v) == 0 else v


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=65536)
def log_moment_quad(spec: WeightSpec, x: float, rtol: float = DEFAULT_RTOL) -> float:
    """log of ``int_0^1 r^x w(r) dr`` by quadrature in ``u = -log(1-r)``."""
    x = float(x)

    def g(u):
        with np.errstate(divide="ignore"):
            lr = x * np.log1p(-np.exp(-u)) if x != 0 else 0.0
        return lr + spec.log_integrand_u(u)

    return log_quad(g, 0.0, rtol=rtol).log_value


def log_moment(spec: WeightSpec, x, method="auto", rtol=DEFAULT_RTOL):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise WeightError("moment exponent must be >= 0")
    if method not in ("auto", "quad", "closed"):
        raise WeightError(f"unknown method {method!r}")
    if method != "quad":
        closed = spec.log_moment_closed(x)
        if closed is not None:
            return closed
        if method == "closed":
            raise WeightError(f"{spec.family} has no closed-form moments")
    flat = [log_moment_quad(spec, float(xx), rtol) for xx in x.ravel()]
    return np.asarray(flat, dtype=float).reshape(x.shape)


def moment(spec: WeightSpec, x, method="auto", rtol=DEFAULT_RTOL):
    """Moment ``int_0^1 r^x w(r) dr``; raises :class:`MomentUnderflow` below double range."""
    lm = np.asarray(log_moment(spec, x, method, rtol))
    if np.any(lm < _LOG_TINY):
        raise MomentUnderflow(f"moment underflows double precision (log value {np.min(lm):.6g})")
    v = np.exp(lm)
    return float(v) if v.ndim == 0 else v


# ---------------------------------------------------------------------------
# mixed tails and derived weights
# ---------------------------------------------------------------------------


def ratio_weight(omega: WeightSpec, nu: WeightSpec) -> WeightSpec:
    """The weight ``omega / nu_hat``."""
    if isinstance(omega, OmegaNu) and omega.base == nu and omega.scale == 1.0:
        return nu
    return Product(factors=(omega, TailOf(base=nu, power=-1.0)))


def log_mixed_tail(omega: WeightSpec, nu: WeightSpec, r, rtol=DEFAULT_RTOL) -> float:
    """log of ``int_r^1 omega/nu_hat``; ``+inf`` when the integral diverges."""
    try:
        return float(log_tail(ratio_weight(omega, nu), r, rtol))
    except DivergentIntegral:
        return math.inf


def mixed_tail(omega: WeightSpec, nu: WeightSpec, r, rtol=DEFAULT_RTOL) -> float:
    lv = log_mixed_tail(omega, nu, r, rtol)
    return math.exp(lv) if lv < 709 else math.inf


def make_omega_nu(nu: WeightSpec) -> OmegaNu:
    return OmegaNu(base=nu)


def make_nu_omega(omega: WeightSpec) -> NuOmega:
    return NuOmega(base=omega)


__all__ = [
    "WeightSpec", "Power", "Standard", "LogPerturbed", "Exponential", "Product", "TailOf",
    "OmegaNu", "NuOmega", "Tabulated", "WeightError", "MomentUnderflow", "QuadratureError",
    "DivergentIntegral", "eval_weight", "tail", "log_tail", "log_tail_t", "log_tail_u", "moment",
    "log_moment", "log_moment_quad", "log_tail_split_u", "mixed_tail", "log_mixed_tail", "ratio_weight",
    "make_omega_nu", "make_nu_omega", "weight_from_config",
]


# ---------------------------------------------------------------------------
# config round trip
# ---------------------------------------------------------------------------

_FAMILIES = {
    "standard": (Standard, {"a": float, "form": str}),
    "power": (Power, {"a": float, "form": str}),
    "log_perturbed": (LogPerturbed, {"p": float, "q": float}),
    "exponential": (Exponential, {"alpha": float, "beta": float, "ell": float}),
    "product": (Product, {"factors": "specs"}),
    "tail_of": (TailOf, {"base": "spec", "power": float}),
    "omega_nu": (OmegaNu, {"base": "spec"}),
    "nu_omega": (NuOmega, {"base": "spec"}),
    "tabulated": (Tabulated, {"r": "floats", "w": "floats"}),
}


def weight_from_config(cfg, where: str = "weight") -> WeightSpec:
    """Inverse of ``WeightSpec.to_config``; errors name the offending field."""
    if not isinstance(cfg, dict):
        raise WeightError(f"{where}: expected a table, got {type(cfg).__name__}")
    fam = cfg.get("family")
    if fam not in _FAMILIES:
        raise WeightError(f"{where}.family: unknown family {fam!r} "
                          f"(choose from {', '.join(sorted(_FAMILIES))})")
    cls, fields = _FAMILIES[fam]
    kw = {}
    for key, value in cfg.items():
        if key == "family":
            continue
        if key == "scale":
            kind = float
        elif key in fields:
            kind = fields[key]
        else:
            raise WeightError(f"{where}.{key}: unknown field for family {fam!r}")
        try:
            if kind == "spec":
                kw[key] = weight_from_config(value, f"{where}.{key}")
            elif kind == "specs":
                kw[key] = tuple(weight_from_config(v, f"{where}.{key}[{i}]")
                                for i, v in enumerate(value))
            elif kind == "floats":
                kw[key] = tuple(float(v) for v in value)
            else:
                kw[key] = kind(value)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, WeightError):
                raise
            raise WeightError(f"{where}.{key}: {exc}") from None
    try:
        return cls(**kw)
    except TypeError as exc:
        raise WeightError(f"{where}: {exc}") from None
