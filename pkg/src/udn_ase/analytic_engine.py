"""Coverage probability and area spectral efficiency from stochastic geometry.

The typical UE sits at the origin and attaches to the BS with the smallest
path loss. Coverage is the sum over path-loss segments ``n`` and serving path
types of ``T_n = int cond_cov(r) * f_n(r) dr``, where ``f_n`` is the density
of the serving BS's 2D distance and ``cond_cov`` the probability that the
SINR clears the threshold given that distance.

Internally every integral over BS positions is written in the 3D distance
``v`` (so ``u du = v dv``); interferer shells start at the serving distance
for the serving path type and at the equal-gain radius for the other type.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .channel_models import Path, PathLossModel, W_FLOOR_KM, equal_gain_radius
from .fading import FadingDist, FadingModel, fading_charfn, fading_pdf
from .quadrature import (IntegrationResult, QuadratureSpec, integrate_finite, invert_cdf,
                         invert_characteristic_tail)

TWO_PI = 2.0 * math.pi
LN2 = math.log(2.0)
# Gaussian smoothing width of the inverted variable, relative to its scale
SMOOTHING_REL = 1e-3


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class Tolerances:
    """Quadrature settings for each nesting level of the engine."""

    inner: QuadratureSpec = QuadratureSpec(rel_tol=1e-8, abs_tol=1e-14)
    outer: QuadratureSpec = QuadratureSpec(rel_tol=1e-6, abs_tol=1e-11)
    ase: QuadratureSpec = QuadratureSpec(rel_tol=1e-5, abs_tol=1e-9)
    # the Rician path nests three integrals, so its outer levels are relaxed
    rician_outer: QuadratureSpec = QuadratureSpec(rel_tol=1e-4, abs_tol=1e-7)
    rician_ase: QuadratureSpec = QuadratureSpec(rel_tol=1e-4, abs_tol=1e-7)
    inversion: QuadratureSpec = QuadratureSpec(rel_tol=1e-6, abs_tol=1e-7, omega_max=1e9)
    survival_floor: float = 1e-12
    pcov_floor: float = 1e-4

    def to_dict(self) -> dict:
        return {"inner_rel_tol": self.inner.rel_tol, "outer_rel_tol": self.outer.rel_tol,
                "ase_rel_tol": self.ase.rel_tol, "rician_outer_rel_tol": self.rician_outer.rel_tol,
                "inversion_abs_tol": self.inversion.abs_tol}

    @classmethod
    def from_dict(cls, d: dict | None) -> "Tolerances":
        t = cls()
        if not d:
            return t
        return cls(
            inner=t.inner.with_(rel_tol=d.get("inner_rel_tol", t.inner.rel_tol)),
            outer=t.outer.with_(rel_tol=d.get("outer_rel_tol", t.outer.rel_tol)),
            ase=t.ase.with_(rel_tol=d.get("ase_rel_tol", t.ase.rel_tol)),
            rician_outer=t.rician_outer.with_(rel_tol=d.get("rician_outer_rel_tol", t.rician_outer.rel_tol)),
            rician_ase=t.rician_ase.with_(rel_tol=d.get("rician_outer_rel_tol", t.rician_ase.rel_tol)),
            inversion=t.inversion.with_(abs_tol=d.get("inversion_abs_tol", t.inversion.abs_tol)),
        )


@dataclass(frozen=True)
class AnalysisConfig:
    """Link budget, propagation model and numerical settings (linear units).

    The UE density only enters through the assumption that every BS has an
    active user, so it does not appear here.
    """

    model: PathLossModel
    tx_power: float = dbm_to_watt(24.0)
    noise_power: float = dbm_to_watt(-95.0)
    fading: FadingModel = FadingModel()
    quadrature: Tolerances = Tolerances()

    def __post_init__(self):
        if self.tx_power <= 0:
            raise ValueError("transmit power must be positive")
        if self.noise_power < 0:
            raise ValueError("noise power must be non-negative")


@dataclass
class CoveragePoint:
    lam: float
    gamma: float
    p_cov: float
    terms: dict = field(default_factory=dict)
    error: float = 0.0
    converged: bool = True


@dataclass
class AsePoint:
    lam: float
    gamma0: float
    ase: float
    p_cov_gamma0: float = float("nan")
    gamma_max: float = float("nan")
    tail_fraction: float = 0.0
    converged: bool = True


# -- geometry shared by association and interference ---------------------------

def _path_prob(model: PathLossModel, v, path: Path):
    p = model.los_prob(v)
    return p if path is Path.LOS else 1.0 - p


def _shell_mass(model: PathLossModel, v_lo, v_hi, path: Path):
    """int_{v_lo}^{v_hi} Pr_path(v) v dv."""
    m_los = model.los_prob.weighted_mass(v_lo, v_hi)
    if path is Path.LOS:
        return m_los
    return 0.5 * (np.asarray(v_hi, float) ** 2 - np.asarray(v_lo, float) ** 2) - m_los


def _exclusion_distance(model: PathLossModel, n: int, r, signal_path: Path):
    """3D distance from which BSs of the other path type can interfere."""
    return np.hypot(equal_gain_radius(model, n, r, signal_path), model.L)


def _check_r(model: PathLossModel, n: int, r):
    lo, hi = model.segment_r_range(n)
    r = np.asarray(r, dtype=float)
    slack = 1e-12 * max(1.0, lo)
    if np.any(r < lo - slack) or np.any(r > hi * (1 + 1e-12) + slack):
        raise ValueError(f"r outside segment {n} range [{lo}, {hi}]")


def _log_survival(model: PathLossModel, lam, r, w_excl, path: Path):
    L = model.L
    w = np.hypot(r, L)
    same = _shell_mass(model, L, w, path)
    cross = _shell_mass(model, L, w_excl, path.other)
    return -TWO_PI * lam * (same + cross)


def _density(model: PathLossModel, lam, r, w_excl, path: Path):
    w = np.hypot(r, model.L)
    surv = np.exp(_log_survival(model, lam, r, w_excl, path))
    return surv * _path_prob(model, w, path) * TWO_PI * lam * r


def association_density(config: AnalysisConfig, lam: float, n: int, r, path) -> np.ndarray:
    """Density (per km) that the serving BS is a ``path`` BS of segment ``n`` at 2D distance ``r``."""
    path = Path.coerce(path)
    model = config.model
    _check_r(model, n, r)
    r = np.asarray(r, dtype=float)
    out = _density(model, lam, r, _exclusion_distance(model, n, r, path), path)
    return out if out.ndim else float(out)


# -- interference functionals -------------------------------------------------

def _pieces(model: PathLossModel):
    edges = sorted(set(model.breakpoints.tolist()) | set(model.los_prob.breakpoints))
    return [0.0] + edges + [math.inf]


def _shell_integral(model: PathLossModel, lo_v, path: Path, kernel, spec: QuadratureSpec,
                    dtype=float):
    """Per component ``i``: int_{lo_v[i]}^inf Pr_path(v) v kernel(v, idx) dv.

    ``kernel`` receives distances of shape (k, nodes), the indices of the
    k active components and the path-loss segment of the current piece. The range is cut at the model breakpoints so each
    piece is smooth; the last piece uses the rational map with scale lo_v.
    """
    lo_v = np.maximum(np.asarray(lo_v, dtype=float).ravel(), W_FLOOR_KM)
    total = np.zeros(lo_v.shape, dtype=dtype)
    err = np.zeros(lo_v.shape)
    converged = True
    cuts = _pieces(model)
    for b0, b1 in zip(cuts[:-1], cuts[1:]):
        a = np.maximum(lo_v, b0)
        idx = np.nonzero(a < b1)[0]
        if idx.size == 0:
            continue
        a = a[idx]
        seg = int(model.segment_index(b0 + 0.5 * (min(b1, b0 + 1.0) - b0)))
        if math.isinf(b1):
            s = np.maximum(a, 1e-3)

            def g(tau, a=a, s=s, idx=idx, seg=seg):
                v = a[:, None] + s[:, None] * (tau / (1.0 - tau))[None, :]
                jac = s[:, None] / (1.0 - tau)[None, :] ** 2
                return _path_prob(model, v, path) * v * kernel(v, idx, seg) * jac
        else:
            width = b1 - a

            def g(tau, a=a, width=width, idx=idx, seg=seg):
                v = a[:, None] + width[:, None] * tau[None, :]
                return _path_prob(model, v, path) * v * kernel(v, idx, seg) * width[:, None]
        res = integrate_finite(g, 0.0, 1.0, spec, initial_panels=2)
        total[idx] += res.value
        err[idx] += res.error_estimate
        converged = converged and res.converged
    return total, err, converged


def _log_laplace(config: AnalysisConfig, lam, lo_v, c, path: Path):
    """-2 pi lam int Pr_path(v) v q/(1+q) dv with q = c * zeta_path(v), vectorised over components."""
    model = config.model
    c = np.asarray(c, dtype=float).ravel()

    def kernel(v, idx, seg):
        x = c[idx, None] * model.gain(v, path, segment=seg)
        return x / (1.0 + x)

    val, _, ok = _shell_integral(model, lo_v, path, kernel, config.quadrature.inner)
    return -TWO_PI * lam * val, ok


def _signal_geometry(config: AnalysisConfig, n: int, r, signal_path: Path):
    model = config.model
    r = np.asarray(r, dtype=float)
    w = np.hypot(r, model.L)
    zeta_n = model.gain(w, signal_path, segment=n)
    w_excl = _exclusion_distance(model, n, r, signal_path)
    return w, zeta_n, w_excl


def _interferer_limits(signal_path: Path, w, w_excl):
    """(LoS lower limit, NLoS lower limit) of the interferer shells."""
    if signal_path is Path.LOS:
        return w, w_excl
    return w_excl, w


def interference_laplace(config: AnalysisConfig, lam: float, r, s, signal_path, n: int | None = None):
    """Laplace transform of the aggregate interference at ``s`` for a serving BS at ``r``.

    ``n`` defaults to the segment containing the serving link.
    """
    signal_path = Path.coerce(signal_path)
    model = config.model
    r = np.asarray(r, dtype=float)
    if n is None:
        n = int(np.max(model.segment_index(np.hypot(r, model.L))))
    w, _, w_excl = _signal_geometry(config, n, r, signal_path)
    lo_los, lo_nlos = _interferer_limits(signal_path, w, w_excl)
    s = np.broadcast_to(np.asarray(s, dtype=float), np.broadcast_shapes(np.shape(s), r.shape))
    shape = s.shape
    cs = s.ravel() * config.tx_power
    ll, _ = _log_laplace(config, lam, np.broadcast_to(lo_los, shape).ravel(), cs, Path.LOS)
    ln, _ = _log_laplace(config, lam, np.broadcast_to(lo_nlos, shape).ravel(), cs, Path.NLOS)
    out = np.exp(ll + ln).reshape(shape)
    return out if out.ndim else float(out)


def _cond_cov_rayleigh(config: AnalysisConfig, lam, r, gammas, n, signal_path: Path):
    """Conditional coverage on the grid (gammas x r); returns (len(gammas), len(r))."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    gammas = np.atleast_1d(np.asarray(gammas, dtype=float))
    w, zeta_n, w_excl = _signal_geometry(config, n, r, signal_path)
    lo_los, lo_nlos = _interferer_limits(signal_path, w, w_excl)
    G = gammas[:, None] * np.ones_like(r)[None, :]
    c = G / zeta_n[None, :]
    shape = G.shape
    ll, ok1 = _log_laplace(config, lam, np.broadcast_to(lo_los, shape).ravel(), c, Path.LOS)
    ln, ok2 = _log_laplace(config, lam, np.broadcast_to(lo_nlos, shape).ravel(), c, Path.NLOS)
    noise = -c * config.noise_power / config.tx_power
    return np.exp(noise + (ll + ln).reshape(shape)), ok1 and ok2


def conditional_coverage_rayleigh(config: AnalysisConfig, lam: float, r, gamma, n: int, signal_path):
    """Pr[SINR > gamma] given a ``signal_path`` serving BS of segment ``n`` at 2D distance ``r``."""
    signal_path = Path.coerce(signal_path)
    r_arr = np.asarray(r, dtype=float)
    out, _ = _cond_cov_rayleigh(config, lam, r_arr.ravel(), [gamma], n, signal_path)
    out = out[0].reshape(r_arr.shape)
    return out if out.ndim else float(out)


# -- Rician signal: characteristic function of 1/SINR ----------------------------

def _hgrid(dist: FadingDist, nodes_per_panel: int = 10):
    """Quadrature nodes and density-weighted weights for the serving fading power."""
    K = dist.K if dist.kind == "rician" else 0.0
    sd = math.sqrt(2.0 * K + 1.0) / (K + 1.0)
    h_max = (math.sqrt(K / (K + 1.0)) + math.sqrt(36.0 / (K + 1.0))) ** 2
    core_hi = min(h_max, 1.0 + 5.0 * sd)
    step = min(0.25, 0.25 * sd)
    edges = np.concatenate([[0.0], np.geomspace(1e-7, 0.05, 14), np.arange(0.1, core_hi, step)])
    tail = np.linspace(core_hi, h_max, max(2, int(math.ceil(h_max - core_hi)) + 1))
    edges = np.unique(np.concatenate([edges, tail]))
    x, wt = np.polynomial.legendre.leggauss(nodes_per_panel)
    lo, hi = edges[:-1], edges[1:]
    h = (0.5 * (hi + lo))[:, None] + (0.5 * (hi - lo))[:, None] * x[None, :]
    wh = (0.5 * (hi - lo))[:, None] * wt[None, :]
    h, wh = h.ravel(), wh.ravel()
    return h, wh * fading_pdf(dist, h)


class _IsrTable:
    """Spline of the combined Campbell exponent Lambda(t) of the interference.

    ``exp(-Lambda(t))`` is the characteristic function at ``t`` of the aggregate
    interference normalised by the serving gain.
    """

    def __init__(self, config: AnalysisConfig, lam, zeta_n, lo_los, lo_nlos,
                 t_lo=1e-7, t_cap=1e13, per_decade=32):
        self.config = config
        self.lam = lam
        self.zeta_n = zeta_n
        self.lo = {Path.LOS: lo_los, Path.NLOS: lo_nlos}
        ts, vals = [], []
        t0 = t_lo
        while True:
            block = np.geomspace(t0, t0 * 100.0, 2 * per_decade + 1)
            if ts:
                block = block[1:]
            lam_t = self.exact(block)
            ts.append(block)
            vals.append(lam_t)
            t0 = block[-1]
            if np.real(lam_t[-1]) > 60.0 or t0 >= t_cap:
                break
        self.t = np.concatenate(ts)
        self.values = np.concatenate(vals)
        self.t_lo, self.t_hi = self.t[0], self.t[-1]
        self.slope0 = self.values[0] / self.t[0]
        self.spline = CubicSpline(np.log(self.t), self.values / self.t)

    def exact(self, t):
        t = np.asarray(t, dtype=float)
        total = np.zeros(t.shape, dtype=complex)
        model = self.config.model
        for path in Path:
            dist = self.config.fading.for_path(path)
            lo = np.full(t.shape, self.lo[path])

            def kernel(v, idx, seg, path=path, dist=dist):
                q = model.gain(v, path, segment=seg) / self.zeta_n
                return 1.0 - fading_charfn(dist, t[idx, None] * q)
            val, _, _ = _shell_integral(model, lo, path, kernel, self.config.quadrature.inner,
                                        dtype=complex)
            total += val
        return TWO_PI * self.lam * total

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        tc = np.clip(t, self.t_lo, self.t_hi)
        out = self.spline(np.log(tc)) * tc
        return np.where(t < self.t_lo, self.slope0 * t, out)


class _RicianLink:
    """Everything needed to evaluate F(omega) = E[exp(j omega / SINR)] for one serving link."""

    def __init__(self, config: AnalysisConfig, lam, r, n, signal_path: Path):
        self.config = config
        w, zeta_n, w_excl = _signal_geometry(config, n, np.asarray(r, float), signal_path)
        self.zeta_n = float(zeta_n)
        lo_los, lo_nlos = _interferer_limits(signal_path, float(w), float(w_excl))
        self.c0 = config.noise_power / (config.tx_power * self.zeta_n)
        self.isr = _IsrTable(config, lam, self.zeta_n, lo_los, lo_nlos)
        self.h, self.wh = _hgrid(config.fading.for_path(signal_path))
        # mean interference-plus-noise normalised by the serving gain, for scaling
        self.scale = abs(float(np.imag(self.isr.slope0))) + self.c0

    def charfn(self, omega):
        omega = np.asarray(omega, dtype=float)
        t = omega[:, None] / self.h[None, :]
        expo = 1j * t * self.c0 - self.isr(t)
        return np.exp(expo) @ self.wh


def characteristic_fn_inv_sinr(config: AnalysisConfig, lam: float, r: float, n: int,
                               signal_path, omega):
    """E[exp(j omega / SINR)] for a serving BS of segment ``n`` at 2D distance ``r``."""
    link = _RicianLink(config, lam, r, n, Path.coerce(signal_path))
    omega = np.asarray(omega, dtype=float)
    out = link.charfn(omega.ravel()).reshape(omega.shape)
    return out if out.ndim else complex(out)


def _cond_cov_inversion(config: AnalysisConfig, lam, r, gammas, n, signal_path: Path):
    """Rician-path conditional coverage for several thresholds at one radius.

    {SINR > gamma} is the event {gamma * Y - h < 0} with Y the interference
    plus noise normalised by ``P zeta_n``. Its characteristic function is the
    product of the serving-fading factor (closed form) and the Campbell
    factor of Y (tabulated), so the scale of the inverted variable is set by
    h and gamma * E[Y] rather than by the much smaller 1/gamma.
    """
    gammas = np.atleast_1d(np.asarray(gammas, dtype=float))
    link = _RicianLink(config, lam, r, n, signal_path)
    dist = config.fading.for_path(signal_path)
    K = dist.K if dist.kind == "rician" else 0.0
    spread = math.sqrt(2.0 * K + 1.0) / (K + 1.0)
    scale = spread + gammas * link.scale

    def charfn(omega):
        t = gammas[:, None] * omega[None, :]
        phi_y = np.exp(1j * t * link.c0 - link.isr(t))
        return phi_y * fading_charfn(dist, -omega)[None, :]

    spec = config.quadrature.inversion.with_(omega_start=1.0 / scale.max())
    res = invert_cdf(charfn, np.zeros_like(gammas), spec, smoothing=SMOOTHING_REL * scale)
    return np.atleast_1d(res.value), res.converged


def conditional_coverage_rician(config: AnalysisConfig, lam: float, r: float, gamma, n: int,
                                signal_path):
    """Pr[SINR > gamma] for a serving BS at 2D distance ``r`` under general fading."""
    val, _ = _cond_cov_inversion(config, lam, float(r), np.atleast_1d(gamma), n,
                                 Path.coerce(signal_path))
    return float(val[0]) if np.ndim(gamma) == 0 else val


def conditional_coverage_from_charfn(config: AnalysisConfig, lam: float, r: float, gamma, n: int,
                                     signal_path):
    """Same probability obtained by inverting E[exp(j w / SINR)] directly.

    Slower and only practical when 1/gamma is comparable to the typical
    1/SINR; kept as an independent route for cross-checks.
    """
    link = _RicianLink(config, lam, float(r), n, Path.coerce(signal_path))
    spec = config.quadrature.inversion.with_(omega_start=1.0 / max(link.scale, 1e-300))
    res = invert_characteristic_tail(link.charfn, gamma, spec)
    return res.value


# -- coverage and ASE -----------------------------------------------------------

def _r_upper(config: AnalysisConfig, lam, n, path: Path):
    model = config.model
    lo, hi = model.segment_r_range(n)
    if not math.isinf(hi):
        return hi
    floor = math.log(config.quadrature.survival_floor)
    r = max(2.0 * lo, 1.0 / math.sqrt(math.pi * lam), 1e-3)
    for _ in range(200):
        w_excl = _exclusion_distance(model, n, r, path)
        ls = float(_log_survival(model, lam, r, w_excl, path))
        if ls + math.log(TWO_PI * lam * r * r) < floor:
            return r
        r *= 1.5
    return r


def _coverage_terms(config: AnalysisConfig, lam, gammas):
    """T_n^path for every segment and path type, vectorised over thresholds."""
    gammas = np.atleast_1d(np.asarray(gammas, dtype=float))
    model = config.model
    rician = not config.fading.all_rayleigh
    spec = config.quadrature.rician_outer if rician else config.quadrature.outer
    terms, errs = {}, {}
    converged = True
    for n in range(model.n_segments):
        for path in Path:
            r_lo, _ = model.segment_r_range(n)
            r_hi = _r_upper(config, lam, n, path)
            if not r_hi > r_lo:
                terms[(n, path.value)] = np.zeros_like(gammas)
                continue

            def integrand(r, n=n, path=path):
                w_excl = _exclusion_distance(model, n, r, path)
                f = _density(model, lam, r, w_excl, path)
                out = np.zeros((gammas.size, r.size))
                live = f > 1e-300
                if not np.any(live):
                    return out
                if rician:
                    for j in np.nonzero(live)[0]:
                        out[:, j], _ = _cond_cov_inversion(config, lam, r[j], gammas, n, path)
                    out[:, live] *= f[live]
                else:
                    cc, _ = _cond_cov_rayleigh(config, lam, r[live], gammas, n, path)
                    out[:, live] = cc * f[live][None, :]
                return out

            res = integrate_finite(integrand, r_lo, r_hi, spec, initial_panels=2 if rician else 4)
            terms[(n, path.value)] = np.atleast_1d(res.value)
            errs[(n, path.value)] = np.atleast_1d(res.error_estimate)
            converged = converged and res.converged
    return terms, errs, converged


def coverage_probability(config: AnalysisConfig, lam: float, gamma: float) -> CoveragePoint:
    """Probability that the typical UE's SINR exceeds ``gamma`` at BS density ``lam``."""
    if lam <= 0 or gamma <= 0:
        raise ValueError("density and threshold must be positive")
    terms, errs, ok = _coverage_terms(config, lam, [gamma])
    t = {k: float(v[0]) for k, v in terms.items()}
    err = float(sum(e[0] for e in errs.values()))
    return CoveragePoint(lam, gamma, float(sum(t.values())), t, err, ok)


def coverage_curve(config: AnalysisConfig, lam: float, gammas) -> np.ndarray:
    """Coverage probability for many thresholds at once."""
    terms, _, _ = _coverage_terms(config, lam, gammas)
    return np.clip(sum(terms.values()), 0.0, 1.0)


def area_spectral_efficiency(config: AnalysisConfig, lam: float, gamma0: float,
                             pcov_fn=None) -> AsePoint:
    """ASE in bps/Hz/km^2 via integration by parts over the SINR CCDF.

    ``pcov_fn(gammas)`` may replace the engine's coverage curve (used to test
    the by-parts identity on synthetic distributions).
    """
    if gamma0 <= 0:
        raise ValueError("gamma0 must be positive")
    tol = config.quadrature
    spec = tol.rician_ase if not config.fading.all_rayleigh else tol.ase
    if pcov_fn is None:
        def pcov_fn(g):
            return coverage_curve(config, lam, g)

    # locate gamma_max with a decade scan; the floor is relative to p_cov(gamma0)
    # so that deep-outage densities still get a resolved gamma range
    scan = gamma0 * 10.0 ** np.arange(0, 16)
    p_scan = pcov_fn(scan)
    p0 = float(p_scan[0])
    if p0 <= 0.0:
        return AsePoint(lam, gamma0, 0.0, 0.0, gamma0, 0.0, True)
    below = np.nonzero(p_scan < tol.pcov_floor * p0)[0]
    gamma_max = float(scan[below[0]]) if below.size else float(scan[-1])
    gamma_max = max(gamma_max, gamma0)

    def integrand(x):
        g = np.exp(x)
        return pcov_fn(g) * g / (1.0 + g)

    x0, x1 = math.log(gamma0), math.log(gamma_max)
    decades = (x1 - x0) / math.log(10.0)
    if x1 > x0:
        main = integrate_finite(integrand, x0, x1, spec, initial_panels=max(2, int(math.ceil(2 * decades))))
    else:
        main = IntegrationResult(0.0, 0.0, 0, True)
    tail = integrate_finite(integrand, x1, x1 + math.log(4.0), spec, initial_panels=1)
    body = math.log2(1.0 + gamma0) * p0 + (main.value + tail.value) / LN2
    tail_fraction = (tail.value / LN2) / body if body > 0 else 0.0
    return AsePoint(lam, gamma0, lam * body, p0, gamma_max, tail_fraction,
                    main.converged and tail.converged and tail_fraction < 1e-3)


def sinr_pdf(config: AnalysisConfig, lam: float, gamma, ccdf=None, rel_step: float = 1e-3):
    """Density of the SINR from a central difference of the coverage curve (diagnostic)."""
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    if ccdf is None:
        def ccdf(g):
            return coverage_curve(config, lam, g)
    out = np.empty_like(gamma)
    for i, g in enumerate(gamma):
        h = rel_step * g
        if h <= 1e-300:
            raise ArithmeticError("finite-difference step underflow")
        # Richardson extrapolation of two central differences
        d1 = (ccdf(np.array([g - h]))[0] - ccdf(np.array([g + h]))[0]) / (2 * h)
        d2 = (ccdf(np.array([g - h / 2]))[0] - ccdf(np.array([g + h / 2]))[0]) / h
        out[i] = (4 * d2 - d1) / 3.0
    return out if out.size > 1 else float(out[0])
