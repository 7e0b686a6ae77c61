"""Piecewise LoS/NLoS path-loss models and the geometry helpers used with them.

Distances are in km throughout. Reference gains ``A`` are linear and apply at
a 3D distance of 1 km, so a link gain is ``A * w**(-alpha)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.special import exp1

# evaluation floor for the 3D distance (1 mm); keeps w**(-alpha) finite when L = 0
W_FLOOR_KM = 1e-6

SQRT2 = math.sqrt(2.0)


class Path(str, Enum):
    LOS = "los"
    NLOS = "nlos"

    @classmethod
    def coerce(cls, value) -> "Path":
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("-", "").replace("_", "")
        if key in ("l", "los"):
            return cls.LOS
        if key in ("nl", "nlos"):
            return cls.NLOS
        raise ValueError(f"unknown path type {value!r}")

    @property
    def other(self) -> "Path":
        return Path.NLOS if self is Path.LOS else Path.LOS


@dataclass(frozen=True)
class PathSegment:
    """One piece of the path-loss model, valid for ``d_lo < w <= d_hi``."""

    d_lo: float
    d_hi: float
    A_los: float
    alpha_los: float
    A_nlos: float
    alpha_nlos: float

    def __post_init__(self):
        if not self.d_lo < self.d_hi:
            raise ValueError(f"segment bounds must satisfy d_lo < d_hi, got {self.d_lo}, {self.d_hi}")
        if min(self.A_los, self.A_nlos, self.alpha_los, self.alpha_nlos) <= 0:
            raise ValueError("reference gains and exponents must be positive")

    def params(self, path: Path) -> tuple[float, float]:
        if Path.coerce(path) is Path.LOS:
            return self.A_los, self.alpha_los
        return self.A_nlos, self.alpha_nlos

    def gain(self, w, path: Path):
        A, alpha = self.params(path)
        w = np.maximum(np.asarray(w, dtype=float), W_FLOOR_KM)
        return A * w ** (-alpha)


@dataclass(frozen=True)
class LosProbabilityFn:
    """Piecewise LoS probability of a link as a function of 3D distance.

    ``variant`` is one of ``always``, ``linear`` (d1), ``exp3gpp`` (R1, R2)
    or ``three_piece`` (d1, d2). Parameters are in km.
    """

    variant: str
    params: tuple = ()

    def __post_init__(self):
        v, p = self.variant, self.params
        n_expected = {"always": 0, "linear": 1, "exp3gpp": 2, "three_piece": 2}
        if v not in n_expected:
            raise ValueError(f"unknown LoS probability variant {v!r}")
        if len(p) != n_expected[v]:
            raise ValueError(f"{v} expects {n_expected[v]} parameters, got {len(p)}")
        if any(x <= 0 for x in p):
            raise ValueError(f"{v} parameters must be positive")
        if v == "three_piece" and not p[0] < p[1]:
            raise ValueError("three_piece breakpoints must satisfy d1 < d2")

    @property
    def breakpoints(self) -> tuple[float, ...]:
        if self.variant == "linear":
            return (self.params[0],)
        if self.variant == "exp3gpp":
            return (self.params[0] / math.log(10.0),)
        if self.variant == "three_piece":
            return tuple(self.params)
        return ()

    def raw(self, w):
        """Unclamped formula value."""
        w = np.asarray(w, dtype=float)
        v, p = self.variant, self.params
        if v == "always":
            return np.ones_like(w)
        if v == "linear":
            return np.where(w <= p[0], 1.0 - w / p[0], 0.0)
        if v == "three_piece":
            d1, d2 = p
            ramp = 1.0 - (w - d1) / (d2 - d1)
            return np.where(w <= d1, 1.0, np.where(w <= d2, ramp, 0.0))
        R1, R2 = p
        d1 = R1 / math.log(10.0)
        ws = np.maximum(w, 1e-300)
        with np.errstate(over="ignore"):
            near = 1.0 - 5.0 * np.exp(-R1 / ws)
        return np.where(w <= d1, near, 5.0 * np.exp(-w / R2))

    def __call__(self, w):
        return np.clip(self.raw(w), 0.0, 1.0)

    def _antiderivative(self, w):
        # P(w) = int_0^w Pr(t) t dt, with each branch formula continued down to 0
        w = np.asarray(w, dtype=float)
        v, p = self.variant, self.params
        if v == "always":
            return 0.5 * w * w
        if v == "linear":
            d1 = p[0]
            wc = np.minimum(w, d1)
            return 0.5 * wc**2 - wc**3 / (3.0 * d1)
        if v == "three_piece":
            d1, d2 = p
            wa = np.minimum(w, d1)
            wb = np.clip(w, d1, d2)
            ramp = (0.5 * d2 * (wb**2 - d1**2) - (wb**3 - d1**3) / 3.0) / (d2 - d1)
            return 0.5 * wa**2 + ramp
        R1, R2 = p
        d1 = R1 / math.log(10.0)

        def near(x):
            x = np.maximum(x, 1e-300)
            with np.errstate(over="ignore", under="ignore"):
                e = np.exp(-R1 / x)
                j = 0.5 * x * x * e - 0.5 * R1 * (x * e - R1 * exp1(R1 / x))
            return 0.5 * x * x - 5.0 * j

        def far(x):
            return -5.0 * R2 * np.exp(-x / R2) * (x + R2)

        wa = np.minimum(w, d1)
        out = near(wa)
        beyond = w > d1
        if np.any(beyond):
            wb = np.where(beyond, w, d1)
            out = out + np.where(beyond, far(wb) - far(d1), 0.0)
        return out

    def weighted_mass(self, w_lo, w_hi):
        """Closed-form ``int_{w_lo}^{w_hi} Pr(t) t dt`` (vectorised, ``w_hi`` may be inf)."""
        w_lo = np.asarray(w_lo, dtype=float)
        w_hi = np.asarray(w_hi, dtype=float)
        if self.variant == "always":
            return 0.5 * (w_hi**2 - w_lo**2)
        # every non-trivial variant is constant far out, so inf can be replaced
        hi = np.where(np.isinf(w_hi), 1e300, w_hi)
        return self._antiderivative(hi) - self._antiderivative(w_lo)


@dataclass(frozen=True)
class PathLossModel:
    """N-piece LoS/NLoS path-loss model with its LoS probability function."""

    segments: tuple[PathSegment, ...]
    los_prob: LosProbabilityFn
    height_diff_L: float
    kind: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ValueError("at least one segment is required")
        if self.height_diff_L < 0:
            raise ValueError("height difference L must be non-negative")
        if not math.isclose(segs[0].d_lo, self.height_diff_L, rel_tol=0, abs_tol=1e-15):
            raise ValueError("first segment must start at w = L")
        if not math.isinf(segs[-1].d_hi):
            raise ValueError("last segment must extend to infinity")
        for a, b in zip(segs[:-1], segs[1:]):
            if a.d_hi != b.d_lo:
                raise ValueError("segments must tile [L, inf) with matching breakpoints")

    @property
    def n_segments(self) -> int:
        return len(self.segments)

    @property
    def L(self) -> float:
        return self.height_diff_L

    @property
    def breakpoints(self) -> np.ndarray:
        """Upper 3D breakpoints d_1 .. d_{N-1} (without L and inf)."""
        return np.array([s.d_hi for s in self.segments[:-1]], dtype=float)

    def segment_index(self, w) -> np.ndarray:
        # w == d_n belongs to segment n (upper-closed pieces)
        return np.searchsorted(self.breakpoints, np.asarray(w, dtype=float), side="left")

    def segment_r_range(self, n: int) -> tuple[float, float]:
        """2D distance range covered by segment ``n`` (0-based)."""
        seg = self.segments[n]
        L2 = self.L**2
        lo = math.sqrt(max(seg.d_lo**2 - L2, 0.0))
        hi = math.inf if math.isinf(seg.d_hi) else math.sqrt(max(seg.d_hi**2 - L2, 0.0))
        return lo, hi

    def gain(self, w, path, segment: int | None = None):
        """Linear gain at 3D distance ``w``; composite unless ``segment`` is given."""
        path = Path.coerce(path)
        w = np.asarray(w, dtype=float)
        if segment is not None:
            return self.segments[segment].gain(w, path)
        if self.n_segments == 1:
            return self.segments[0].gain(w, path)
        A = np.array([s.params(path)[0] for s in self.segments])
        al = np.array([s.params(path)[1] for s in self.segments])
        idx = self.segment_index(w)
        wc = np.maximum(w, W_FLOOR_KM)
        return A[idx] * wc ** (-al[idx])

    def with_height(self, L: float) -> "PathLossModel":
        """Rebuild the same model for a different height difference."""
        d = model_to_dict(self)
        d["L_m"] = L * 1e3
        return model_from_dict(d)


@dataclass
class ModelValidationReport:
    continuous: dict
    monotone: dict
    max_jump: float
    prob_range_ok: bool
    prob_monotone: bool = True
    prob_clamped: bool = False
    los_dominates: bool = True
    prob_max_jump: float = 0.0

    @property
    def ok(self) -> bool:
        return (all(self.continuous.values()) and all(self.monotone.values())
                and self.prob_range_ok)


# -- builders -----------------------------------------------------------------

def _uniform_segments(bounds: Sequence[float], A_los, alpha_los, A_nlos, alpha_nlos):
    return tuple(PathSegment(lo, hi, A_los, alpha_los, A_nlos, alpha_nlos)
                 for lo, hi in zip(bounds[:-1], bounds[1:]))


def build_3gpp_case1(d1=0.3, A_los=10**-10.38, alpha_los=2.09, A_nlos=10**-14.54,
                     alpha_nlos=3.75, L=0.0085) -> PathLossModel:
    """Two-piece model with a linear LoS probability ``1 - w/d1`` up to ``d1``."""
    if not d1 > L:
        raise ValueError(f"3GPP Case 1 needs d1 > L (got d1={d1}, L={L})")
    segs = _uniform_segments([L, d1, math.inf], A_los, alpha_los, A_nlos, alpha_nlos)
    params = dict(d1=d1, A_los=A_los, alpha_los=alpha_los, A_nlos=A_nlos, alpha_nlos=alpha_nlos)
    return PathLossModel(segs, LosProbabilityFn("linear", (d1,)), L, "case1", params)


def build_3gpp_case2(R1=0.156, R2=0.030, A_los=10**-10.38, alpha_los=2.09,
                     A_nlos=10**-14.54, alpha_nlos=3.75, L=0.0085) -> PathLossModel:
    """Two-piece model with the exponential 3GPP LoS probability, split at R1/ln 10."""
    if R1 <= 0 or R2 <= 0:
        raise ValueError("R1 and R2 must be positive")
    d1 = R1 / math.log(10.0)
    if not d1 > L:
        raise ValueError(f"breakpoint R1/ln10 = {d1} must exceed L = {L}")
    segs = _uniform_segments([L, d1, math.inf], A_los, alpha_los, A_nlos, alpha_nlos)
    params = dict(R1=R1, R2=R2, A_los=A_los, alpha_los=alpha_los, A_nlos=A_nlos,
                  alpha_nlos=alpha_nlos)
    return PathLossModel(segs, LosProbabilityFn("exp3gpp", (R1, R2)), L, "case2", params)


def build_approx_case2(d1=0.0184, d2=0.1171, A_los=10**-10.38, alpha_los=2.09,
                       A_nlos=10**-14.54, alpha_nlos=3.75, L=0.0085) -> PathLossModel:
    """Three-piece linear fit of the exponential LoS probability."""
    if not L < d1 < d2:
        raise ValueError(f"breakpoints must satisfy L < d1 < d2 (got {L}, {d1}, {d2})")
    segs = _uniform_segments([L, d1, d2, math.inf], A_los, alpha_los, A_nlos, alpha_nlos)
    params = dict(d1=d1, d2=d2, A_los=A_los, alpha_los=alpha_los, A_nlos=A_nlos,
                  alpha_nlos=alpha_nlos)
    return PathLossModel(segs, LosProbabilityFn("three_piece", (d1, d2)), L,
                         "approx_case2", params)


def build_single_slope(A=10**-14.54, alpha=3.75, L=0.0) -> PathLossModel:
    """Single power law, every link treated as LoS with identical LoS/NLoS curves."""
    segs = (PathSegment(L, math.inf, A, alpha, A, alpha),)
    return PathLossModel(segs, LosProbabilityFn("always"), L, "single_slope",
                         dict(A=A, alpha=alpha))


# -- evaluation ---------------------------------------------------------------

def distance_3d(r, L):
    return np.hypot(np.asarray(r, dtype=float), L)


def path_gain(model: PathLossModel, w, path) -> np.ndarray:
    """Linear gain ``A_n w^(-alpha_n)`` of the segment containing ``w``."""
    w = np.asarray(w, dtype=float)
    if np.any(w < model.L * (1 - 1e-12)):
        raise ValueError(f"3D distance below L = {model.L} km is not reachable")
    out = model.gain(w, path)
    return out if out.ndim else float(out)


def approx_distance(r, L):
    """Three-branch approximation of ``sqrt(r^2 + L^2)`` that never exceeds it."""
    r = np.asarray(r, dtype=float)
    v1 = (SQRT2 - 1.0) * L
    v2 = (SQRT2 + 1.0) * L
    out = np.where(r <= v1, L, np.where(r <= v2, (r + L) / SQRT2, r))
    return out if out.ndim else float(out)


def equal_gain_radius(model: PathLossModel, n: int, r, signal_path, *, tol=1e-12,
                      max_iter=200):
    """2D radius at which the other path type matches segment ``n``'s gain at ``r``.

    For a LoS signal this is the radius inside which an NLoS BS would be
    stronger; for an NLoS signal, the radius inside which a LoS BS would be.
    Returns 0 where the other curve never reaches the target gain.
    """
    signal_path = Path.coerce(signal_path)
    other = signal_path.other
    r = np.asarray(r, dtype=float)
    L = model.L
    target = model.gain(distance_3d(r, L), signal_path, segment=n)

    def g(x):
        return model.gain(np.hypot(x, L), other)

    lo = np.zeros_like(target)
    reachable = g(lo) >= target
    hi = np.maximum(2.0 * r, 1e-3) * np.ones_like(target)
    for _ in range(2000):
        short = reachable & (g(hi) >= target)
        if not np.any(short):
            break
        hi = np.where(short, 2.0 * hi, hi)
    for _ in range(max_iter):
        if np.max(np.where(reachable, hi - lo, 0.0), initial=0.0) <= tol:
            break
        mid = 0.5 * (lo + hi)
        above = g(mid) >= target
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    out = np.where(reachable, 0.5 * (lo + hi), 0.0)
    return out if out.ndim else float(out)


def validate(model: PathLossModel, points_per_decade: int = 10_000,
             w_max: float = 100.0, jump_tol: float = 1e-9) -> ModelValidationReport:
    """Dense-grid check of continuity, monotonicity and the LoS probability range."""
    w_min = max(model.L, W_FLOOR_KM)
    decades = math.log10(w_max / w_min)
    w = np.logspace(math.log10(w_min), math.log10(w_max), int(points_per_decade * decades) + 1)
    w = np.unique(np.concatenate([w, model.breakpoints]))

    continuous, monotone = {}, {}
    max_jump = 0.0
    for path in Path:
        jump = 0.0
        for k, d in enumerate(model.breakpoints):
            left = model.segments[k].gain(d, path)
            right = model.segments[k + 1].gain(d, path)
            jump = max(jump, abs(float(left - right)) / max(float(left), float(right)))
        g = model.gain(w, path)
        continuous[path.value] = jump <= jump_tol
        monotone[path.value] = bool(np.all(np.diff(g) < 0))
        max_jump = max(max_jump, jump)

    raw = model.los_prob.raw(w)
    p = model.los_prob(w)
    prob_jump = 0.0
    for d in model.los_prob.breakpoints:
        eps = 1e-12 * max(d, 1.0)
        prob_jump = max(prob_jump, abs(float(model.los_prob(d + eps) - model.los_prob(d))))
    los_dom = bool(np.all(model.gain(w, Path.LOS) >= model.gain(w, Path.NLOS)))
    return ModelValidationReport(
        continuous=continuous,
        monotone=monotone,
        max_jump=max_jump,
        prob_range_ok=bool(np.all((p >= 0) & (p <= 1))),
        prob_monotone=bool(np.all(np.diff(p) <= 1e-12)),
        prob_clamped=bool(np.any((raw < 0) | (raw > 1))),
        los_dominates=los_dom,
        prob_max_jump=prob_jump,
    )


# -- serialisation ------------------------------------------------------------

def _db(x):
    return 10.0 * math.log10(x)


def _lin(x_db):
    return 10.0 ** (x_db / 10.0)


def model_to_dict(model: PathLossModel) -> dict:
    """JSON-ready description: distances in meters, gains in dB at 1 km."""
    p = model.params
    out = {"type": model.kind, "L_m": model.L * 1e3}
    if model.kind == "single_slope":
        out.update(A_db=_db(p["A"]), alpha=p["alpha"])
        return out
    if model.kind not in ("case1", "case2", "approx_case2"):
        raise ValueError(f"model kind {model.kind!r} is not serialisable")
    out.update(A_los_db=_db(p["A_los"]), alpha_los=p["alpha_los"],
               A_nlos_db=_db(p["A_nlos"]), alpha_nlos=p["alpha_nlos"])
    if model.kind == "case1":
        out["d1_m"] = p["d1"] * 1e3
    elif model.kind == "case2":
        out.update(R1_m=p["R1"] * 1e3, R2_m=p["R2"] * 1e3)
    else:
        out.update(d1_m=p["d1"] * 1e3, d2_m=p["d2"] * 1e3)
    return out


def model_from_dict(d: dict) -> PathLossModel:
    kind = d["type"]
    L = float(d.get("L_m", 0.0)) * 1e-3
    if kind == "single_slope":
        return build_single_slope(_lin(d.get("A_db", -145.4)), d.get("alpha", 3.75), L)
    pl = dict(A_los=_lin(d.get("A_los_db", -103.8)), alpha_los=d.get("alpha_los", 2.09),
              A_nlos=_lin(d.get("A_nlos_db", -145.4)), alpha_nlos=d.get("alpha_nlos", 3.75))
    if kind == "case1":
        return build_3gpp_case1(d.get("d1_m", 300.0) * 1e-3, L=L, **pl)
    if kind == "case2":
        return build_3gpp_case2(d.get("R1_m", 156.0) * 1e-3, d.get("R2_m", 30.0) * 1e-3, L=L, **pl)
    if kind == "approx_case2":
        return build_approx_case2(d.get("d1_m", 18.4) * 1e-3, d.get("d2_m", 117.1) * 1e-3, L=L, **pl)
    raise ValueError(f"unknown model type {kind!r}")
