"""Unit-mean multi-path fading power distributions (Rayleigh and Rician)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel_models import Path
from .quadrature import QuadratureSpec, integrate_finite, integrate_semi_infinite

_SERIES_MAX = 15.0


def _i0_series(z):
    # sum_k (z^2/4)^k / (k!)^2, enough terms for z < 15 to reach double precision
    q = 0.25 * z * z
    term = np.ones_like(z)
    total = np.ones_like(z)
    for k in range(1, 80):
        term = term * q / (k * k)
        total = total + term
    return total


def _i0e_asymptotic(z):
    # e^{-z} I0(z) ~ (2 pi z)^{-1/2} sum_k c_k / z^k, c_k = ((2k-1)!!)^2 / (k! 8^k)
    total = np.ones_like(z)
    term = np.ones_like(z)
    for k in range(1, 30):
        term = term * (2 * k - 1) ** 2 / (8.0 * k * z)
        total = total + term
    return total / np.sqrt(2.0 * math.pi * z)


def bessel_i0(z, scaled: bool = False):
    """Modified Bessel function of the first kind, order 0, for z >= 0.

    With ``scaled=True`` returns ``exp(-z) I0(z)``, which stays finite for any
    z; the unscaled value overflows to inf beyond z ~ 713.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("bessel_i0 is implemented for z >= 0")
    small = z < _SERIES_MAX
    zs = np.where(small, z, 0.0)
    zl = np.where(small, _SERIES_MAX, z)
    with np.errstate(over="ignore"):
        if scaled:
            out = np.where(small, _i0_series(zs) * np.exp(-zs), _i0e_asymptotic(zl))
        else:
            out = np.where(small, _i0_series(zs), _i0e_asymptotic(zl) * np.exp(zl))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class FadingDist:
    """Power gain distribution of one link: ``rayleigh`` or ``rician`` with factor K (linear)."""

    kind: str = "rayleigh"
    K: float = 0.0

    def __post_init__(self):
        if self.kind not in ("rayleigh", "rician"):
            raise ValueError(f"unknown fading kind {self.kind!r}")
        if self.K < 0:
            raise ValueError("Rician K must be non-negative")
        if self.kind == "rayleigh" and self.K != 0:
            raise ValueError("Rayleigh fading takes no K factor")

    @property
    def is_rayleigh(self) -> bool:
        return self.kind == "rayleigh" or self.K == 0.0


RAYLEIGH = FadingDist("rayleigh")


def rician(K: float) -> FadingDist:
    return FadingDist("rician", float(K))


@dataclass(frozen=True)
class FadingModel:
    """Fading assignment per path type."""

    los: FadingDist = RAYLEIGH
    nlos: FadingDist = RAYLEIGH

    def for_path(self, path) -> FadingDist:
        return self.los if Path.coerce(path) is Path.LOS else self.nlos

    @property
    def all_rayleigh(self) -> bool:
        return self.los.is_rayleigh and self.nlos.is_rayleigh

    def to_dict(self) -> dict:
        def one(d):
            return d.kind
        out = {"los": one(self.los), "nlos": one(self.nlos)}
        if self.los.kind == "rician":
            out["k_db"] = 10.0 * math.log10(self.los.K) if self.los.K > 0 else None
            out["k_linear"] = self.los.K
        return out

    @classmethod
    def from_dict(cls, d: dict | None) -> "FadingModel":
        if not d:
            return cls()

        def one(kind):
            if kind == "rayleigh":
                return RAYLEIGH
            if kind == "rician":
                if d.get("k_linear") is not None:
                    return rician(d["k_linear"])
                return rician(10.0 ** (d.get("k_db", 10.0) / 10.0))
            raise ValueError(f"unknown fading kind {kind!r}")
        return cls(one(d.get("los", "rayleigh")), one(d.get("nlos", "rayleigh")))


def fading_pdf(dist: FadingDist, x):
    """Density of the unit-mean fading power at ``x >= 0``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("fading power must be non-negative")
    if dist.kind == "rayleigh":
        out = np.exp(-x)
    else:
        K = dist.K
        z = 2.0 * np.sqrt(K * (K + 1.0) * x)
        # fold exp(z) from I0 into the exponent to avoid overflow
        out = (K + 1.0) * np.exp(-K - (K + 1.0) * x + z) * bessel_i0(z, scaled=True)
    return out if out.ndim else float(out)


def fading_ccdf(dist: FadingDist, x, spec: QuadratureSpec = QuadratureSpec(rel_tol=1e-11, abs_tol=1e-14)):
    """Pr[h > x]; closed form for Rayleigh, quadrature of the density for Rician."""
    if dist.kind == "rayleigh":
        out = np.exp(-np.asarray(x, dtype=float))
        return out if out.ndim else float(out)

    def one(xv):
        if xv <= 0:
            return 1.0
        if xv < 1.0:
            return 1.0 - integrate_finite(lambda t: fading_pdf(dist, t), 0.0, xv, spec).value
        return integrate_semi_infinite(lambda t: fading_pdf(dist, t), xv, spec.with_(map_scale=1.0 / (dist.K + 1.0))).value

    xs = np.asarray(x, dtype=float)
    out = np.vectorize(one, otypes=[float])(xs)
    return out if out.ndim else float(out)


def fading_charfn(dist: FadingDist, t):
    """E[exp(j t h)] in closed form (used for interferer fading expectations)."""
    t = np.asarray(t, dtype=float)
    if dist.is_rayleigh:
        return 1.0 / (1.0 - 1j * t)
    K = dist.K
    d = (K + 1.0) - 1j * t
    return (K + 1.0) / d * np.exp(1j * t * K / d)


def sample_gain(dist: FadingDist, rng: np.random.Generator, size=None):
    """Draw fading powers; Rician via the complex-Gaussian construction."""
    if dist.kind == "rayleigh":
        return rng.standard_exponential(size)
    K = dist.K
    mu = math.sqrt(K / (K + 1.0))
    sd = 1.0 / math.sqrt(2.0 * (K + 1.0))
    re = mu + sd * rng.standard_normal(size)
    im = sd * rng.standard_normal(size)
    return re * re + im * im
