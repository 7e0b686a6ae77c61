"""Monte Carlo system-level simulator of the typical UE's SINR.

Each trial draws its own Poisson network inside a disc centred on the UE,
using a Philox stream keyed by ``(seed, trial_index)``. Results therefore do
not depend on how trials are split across workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .analytic_engine import AnalysisConfig
from .antenna_pattern import AntennaSpec, downtilt_for_density, elevation_angle, total_gain
from .channel_models import W_FLOOR_KM, Path
from .fading import sample_gain

Z95 = 1.96
MIN_TRIALS = 1000


@dataclass(frozen=True)
class SimConfig:
    analysis: AnalysisConfig
    lam: float
    trials: int = 10_000
    seed: int = 0
    antenna: AntennaSpec | None = None
    sim_radius: float | None = None
    min_expected_bs: float = 100.0
    gamma_cap_db: float = 60.0

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("density must be positive")
        if self.trials < MIN_TRIALS:
            raise ValueError(f"need at least {MIN_TRIALS} trials")
        if self.radius <= 0:
            raise ValueError("simulation radius must be positive")
        if self.lam * math.pi * self.radius**2 < self.min_expected_bs:
            raise ValueError("simulation disc holds too few BSs on average")

    @property
    def radius(self) -> float:
        if self.sim_radius is not None:
            return self.sim_radius
        return default_radius(self.analysis.model, self.lam)

    @property
    def gamma_cap(self) -> float:
        return 10.0 ** (self.gamma_cap_db / 10.0)


def default_radius(model, lam: float) -> float:
    """max(5 x first LoS breakpoint, 20 / sqrt(pi lam)) km."""
    bps = model.los_prob.breakpoints or tuple(model.breakpoints)
    d1 = bps[0] if bps else 0.0
    return max(5.0 * d1, 20.0 / math.sqrt(math.pi * lam))


@dataclass
class NetworkSample:
    """BS radii and bearings around the UE plus per-link LoS flags."""

    radius: np.ndarray
    angle: np.ndarray
    los_flags: np.ndarray
    resampled_empty: int
    rng: np.random.Generator = field(repr=False)

    @property
    def positions(self) -> np.ndarray:
        return np.column_stack([self.radius * np.cos(self.angle), self.radius * np.sin(self.angle)])


@dataclass
class Snapshot:
    network: NetworkSample = field(repr=False)
    serving_index: int
    sinr: float
    link_gain: np.ndarray = field(repr=False)

    @property
    def bs_positions(self) -> np.ndarray:
        return self.network.positions

    @property
    def los_flags(self) -> np.ndarray:
        return self.network.los_flags


@dataclass
class Estimate:
    mean: float
    ci_half_width: float
    trials: int
    seed: int
    extra: dict = field(default_factory=dict)


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(trial_index),))
    return np.random.Generator(np.random.Philox(ss))


def sample_network(sim: SimConfig, trial_index: int) -> NetworkSample:
    """BS locations (UE at origin) and per-link LoS flags for one trial."""
    rng = trial_rng(sim.seed, trial_index)
    model = sim.analysis.model
    R = sim.radius
    mean_n = sim.lam * math.pi * R * R
    empty = 0
    while True:
        n = rng.poisson(mean_n)
        if n > 0:
            break
        empty += 1
    r2 = (R * R) * rng.random(n)
    angle = (2.0 * math.pi) * rng.random(n)
    w = np.sqrt(r2 + model.L**2)
    los = rng.random(n) < model.los_prob(w)
    return NetworkSample(np.sqrt(r2), angle, los, empty, rng)


def _gain_table(model):
    # rows: NLoS, LoS; columns: segments
    A = np.array([[seg.params(p)[0] for seg in model.segments] for p in (Path.NLOS, Path.LOS)])
    al = np.array([[seg.params(p)[1] for seg in model.segments] for p in (Path.NLOS, Path.LOS)])
    return A, al


def link_gains(sim: SimConfig, r, los):
    """Fading-free link gains, including the antenna pattern when configured."""
    model = sim.analysis.model
    w = np.maximum(np.hypot(r, model.L), W_FLOOR_KM)
    A, al = _gain_table(model)
    seg = model.segment_index(w) if model.n_segments > 1 else np.zeros(w.shape, dtype=int)
    row = los.astype(int)
    g = A[row, seg] * w ** (-al[row, seg])
    if sim.antenna is not None:
        tilt = downtilt_for_density(sim.lam, model.L, sim.antenna)
        g = g * 10.0 ** (total_gain(0.0, elevation_angle(r, model.L), tilt, sim.antenna) / 10.0)
    return g


def snapshot_sinr(sim: SimConfig, sample: NetworkSample, rng: np.random.Generator | None = None,
                  fading_override=None) -> Snapshot:
    """Associate without fading, then draw per-link fading and assemble the SINR."""
    rng = sample.rng if rng is None else rng
    cfg = sim.analysis
    los = sample.los_flags
    g = link_gains(sim, sample.radius, los)
    serving = int(np.argmax(g))
    if fading_override is not None:
        h = np.asarray(fading_override, dtype=float)
    else:
        h = np.empty(g.size)
        n_los = int(np.count_nonzero(los))
        h[los] = sample_gain(cfg.fading.los, rng, n_los)
        h[~los] = sample_gain(cfg.fading.nlos, rng, g.size - n_los)
    rx = g * h
    signal = cfg.tx_power * rx[serving]
    interference = cfg.tx_power * (rx.sum() - rx[serving])
    denom = interference + cfg.noise_power
    sinr = math.inf if denom <= 0.0 else signal / denom
    return Snapshot(sample, serving, sinr, g)


def _run_chunk(args):
    sim, start, stop = args
    out = np.empty(stop - start)
    empty = 0
    for k, i in enumerate(range(start, stop)):
        s = sample_network(sim, i)
        empty += s.resampled_empty
        out[k] = snapshot_sinr(sim, s).sinr
    return out, empty


@dataclass
class SinrSample:
    sinr: np.ndarray
    resampled_empty: int
    seed: int

    @property
    def trials(self) -> int:
        return self.sinr.size


def simulate_sinr(sim: SimConfig, workers: int = 1) -> SinrSample:
    """SINR of every trial, ordered by trial index regardless of ``workers``."""
    if workers <= 1:
        sinr, empty = _run_chunk((sim, 0, sim.trials))
        return SinrSample(sinr, empty, sim.seed)
    edges = np.linspace(0, sim.trials, workers + 1).astype(int)
    jobs = [(sim, int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]
    with ProcessPoolExecutor(workers) as ex:
        parts = list(ex.map(_run_chunk, jobs))
    return SinrSample(np.concatenate([p[0] for p in parts]), sum(p[1] for p in parts), sim.seed)


def _proportion(hits: np.ndarray, seed: int, exact: bool) -> Estimate:
    n = hits.size
    k = int(hits.sum())
    p = k / n
    if exact:
        lo = stats.beta.ppf(0.025, k, n - k + 1) if k > 0 else 0.0
        hi = stats.beta.ppf(0.975, k + 1, n - k) if k < n else 1.0
        half = max(p - lo, hi - p)
    else:
        half = Z95 * math.sqrt(p * (1.0 - p) / n)
    return Estimate(p, half, n, seed)


def estimate_coverage(sim: SimConfig, gamma: float, sample: SinrSample | None = None,
                      exact: bool = False) -> Estimate:
    """Fraction of trials with SINR above ``gamma`` (95% normal or Clopper-Pearson CI)."""
    sample = simulate_sinr(sim) if sample is None else sample
    est = _proportion(sample.sinr > gamma, sample.seed, exact)
    est.extra["resampled_empty"] = sample.resampled_empty
    return est


def estimate_ase(sim: SimConfig, gamma0: float, sample: SinrSample | None = None) -> Estimate:
    """lam * mean(log2(1 + SINR) 1[SINR > gamma0]), SINR capped at ``gamma_cap``."""
    sample = simulate_sinr(sim) if sample is None else sample
    s = sample.sinr
    capped = np.minimum(s, sim.gamma_cap)
    rate = np.where(s > gamma0, np.log2(1.0 + capped), 0.0) * sim.lam
    n = rate.size
    se = rate.std(ddof=1) / math.sqrt(n) if n > 1 else math.inf
    est = Estimate(float(rate.mean()), Z95 * se, n, sample.seed)
    est.extra["resampled_empty"] = sample.resampled_empty
    est.extra["capped_fraction"] = float(np.mean(s > sim.gamma_cap))
    return est


def point_report(sim: SimConfig, gamma: float, gamma0: float | None = None,
                 sample: SinrSample | None = None) -> dict:
    """Per-density summary in the JSON layout used by the sweep tables."""
    sample = simulate_sinr(sim) if sample is None else sample
    cov = estimate_coverage(sim, gamma, sample)
    ase = estimate_ase(sim, gamma if gamma0 is None else gamma0, sample)
    return {"lambda": sim.lam, "p_cov": cov.mean, "p_cov_ci": cov.ci_half_width,
            "ase": ase.mean, "ase_ci": ase.ci_half_width, "trials": sample.trials,
            "seed": sample.seed, "resampled_empty": sample.resampled_empty}
