import math

import numpy as np
import pytest
from scipy import stats

from udn_ase.analytic_engine import AnalysisConfig, coverage_curve
from udn_ase.antenna_pattern import AntennaSpec
from udn_ase.asymptotics import pairwise_sir
from udn_ase.channel_models import build_single_slope
from udn_ase.montecarlo import (MIN_TRIALS, NetworkSample, SimConfig, SinrSample, default_radius,
                                estimate_ase, estimate_coverage, link_gains, point_report,
                                sample_network, simulate_sinr, snapshot_sinr)


@pytest.fixture(scope="module")
def sim100(case1_cfg):
    return SimConfig(case1_cfg, 100.0, trials=MIN_TRIALS, seed=3)


def test_config_validation(case1_cfg):
    with pytest.raises(ValueError):
        SimConfig(case1_cfg, 100.0, trials=999)
    with pytest.raises(ValueError):
        SimConfig(case1_cfg, 100.0, sim_radius=0.05)
    with pytest.raises(ValueError):
        SimConfig(case1_cfg, 0.0)
    assert SimConfig(case1_cfg, 100.0).radius == default_radius(case1_cfg.model, 100.0) == 1.5
    flat = AnalysisConfig(build_single_slope(L=0.0))
    assert SimConfig(flat, 1e4).radius == pytest.approx(20 / math.sqrt(math.pi * 1e4))


def test_poisson_count_and_los_fraction(sim100):
    model = sim100.analysis.model
    counts, w_all, los_all = [], [], []
    for i in range(10_000):
        s = sample_network(sim100, i)
        counts.append(s.radius.size)
        if i < 500:
            w_all.append(np.hypot(s.radius, model.L))
            los_all.append(s.los_flags)
    mean = sim100.lam * math.pi * sim100.radius**2
    assert abs(np.mean(counts) - mean) < 3 * math.sqrt(mean / len(counts))
    w, los = np.concatenate(w_all), np.concatenate(los_all)
    edges = np.linspace(model.L, 0.3, 11)
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (w >= lo) & (w < hi)
        p = float(np.mean(model.los_prob(w[sel])))
        sd = math.sqrt(p * (1 - p) / sel.sum())
        assert abs(los[sel].mean() - p) < 3 * sd
    assert not np.any(los[w > 0.3])


def test_network_deterministic(sim100):
    a, b = sample_network(sim100, 17), sample_network(sim100, 17)
    np.testing.assert_array_equal(a.positions, b.positions)
    np.testing.assert_array_equal(a.los_flags, b.los_flags)
    assert not np.array_equal(a.radius[:5], sample_network(sim100, 18).radius[:5])


def test_worker_count_invariance(sim100):
    one = simulate_sinr(sim100, workers=1)
    two = simulate_sinr(sim100, workers=2)
    np.testing.assert_array_equal(one.sinr, two.sinr)
    assert one.resampled_empty == two.resampled_empty


def _manual(radius, los=None):
    radius = np.asarray(radius, dtype=float)
    los = np.ones(radius.size, bool) if los is None else np.asarray(los)
    return NetworkSample(radius, np.zeros(radius.size), los, 0, np.random.default_rng(0))


def test_single_bs_gives_infinite_sinr():
    cfg = AnalysisConfig(build_single_slope(L=0.0085), noise_power=0.0)
    sim = SimConfig(cfg, 100.0, trials=MIN_TRIALS)
    snap = snapshot_sinr(sim, _manual([0.0]))
    assert snap.sinr == math.inf and snap.serving_index == 0
    cov = estimate_coverage(sim, 1e6, sample=SinrSample(np.full(MIN_TRIALS, math.inf), 0, 0))
    assert cov.mean == 1.0
    ase = estimate_ase(sim, 1.0, sample=SinrSample(np.full(MIN_TRIALS, math.inf), 0, 0))
    assert ase.mean == pytest.approx(100.0 * math.log2(1 + 1e6))
    assert ase.extra["capped_fraction"] == 1.0


def test_two_bs_sir():
    tau, r = 4.0, 0.03
    flat = AnalysisConfig(build_single_slope(L=0.0), noise_power=0.0)
    sim = SimConfig(flat, 100.0, trials=MIN_TRIALS)
    snap = snapshot_sinr(sim, _manual([tau * r, r]), fading_override=[0.7, 0.7])
    assert snap.serving_index == 1
    assert snap.sinr == pytest.approx(tau**3.75, rel=1e-12)
    tall = AnalysisConfig(build_single_slope(L=0.0085), noise_power=0.0)
    sim = SimConfig(tall, 100.0, trials=MIN_TRIALS)
    snap = snapshot_sinr(sim, _manual([1e-9, tau * 1e-9]), fading_override=[1.0, 1.0])
    assert snap.sinr == pytest.approx(1.0, abs=1e-6)
    snap = snapshot_sinr(sim, _manual([r, tau * r]), fading_override=[1.0, 1.0])
    assert snap.sinr == pytest.approx(pairwise_sir(r, tau, 0.0085, 3.75), rel=1e-12)


@pytest.mark.parametrize("antenna", [None, AntennaSpec()], ids=["plain", "antenna"])
def test_association_picks_strongest_link(case1_cfg, antenna):
    sim = SimConfig(case1_cfg, 3e3, trials=MIN_TRIALS, seed=9, antenna=antenna)
    for i in range(200):
        s = sample_network(sim, i)
        snap = snapshot_sinr(sim, s)
        g = link_gains(sim, s.radius, s.los_flags)
        assert snap.serving_index == int(np.flatnonzero(g == g.max())[0])


def test_boundary_bias(case1_cfg):
    for lam in (10.0, 1e3):
        base = SimConfig(case1_cfg, lam, trials=4000, seed=21)
        wide = SimConfig(case1_cfg, lam, trials=4000, seed=21, sim_radius=2 * base.radius)
        a, b = estimate_coverage(base, 1.0), estimate_coverage(wide, 1.0)
        # the two runs are independent, so their difference carries the joint CI
        assert abs(a.mean - b.mean) < math.hypot(a.ci_half_width, b.ci_half_width)


def test_estimators_on_synthetic_samples(sim100):
    zero = SinrSample(np.zeros(2000), 0, 0)
    assert estimate_ase(sim100, 1.0, sample=zero).mean == 0.0
    hits = np.r_[np.full(7, 10.0), np.zeros(1993)]
    cov = estimate_coverage(sim100, 1.0, sample=SinrSample(hits, 0, 0), exact=True)
    ci = stats.binomtest(7, 2000).proportion_ci(confidence_level=0.95, method="exact")
    assert cov.mean == 7 / 2000
    assert cov.ci_half_width == pytest.approx(max(cov.mean - ci.low, ci.high - cov.mean), rel=1e-9)
    normal = estimate_coverage(sim100, 1.0, sample=SinrSample(hits, 0, 0))
    assert normal.ci_half_width == pytest.approx(1.96 * math.sqrt(cov.mean * (1 - cov.mean) / 2000))


def test_zero_threshold_always_covered(sim100):
    assert estimate_coverage(sim100, 1e-300).mean == 1.0


def test_point_report_layout(sim100):
    rep = point_report(sim100, 1.0)
    assert set(rep) == {"lambda", "p_cov", "p_cov_ci", "ase", "ase_ci", "trials", "seed", "resampled_empty"}
    assert rep["trials"] == MIN_TRIALS


def test_ccdf_matches_analytic(case1_cfg):
    sim = SimConfig(case1_cfg, 100.0, trials=10_000, seed=4)
    sample = simulate_sinr(sim)
    gammas = np.geomspace(0.05, 100.0, 20)
    emp = np.array([np.mean(sample.sinr > g) for g in gammas])
    assert np.max(np.abs(emp - coverage_curve(case1_cfg, 100.0, gammas))) <= 0.02


def test_single_slope_density_invariance_mc():
    cfg = AnalysisConfig(build_single_slope(L=0.0), noise_power=0.0)
    a = estimate_coverage(SimConfig(cfg, 1e2, trials=5000, seed=1), 1.0)
    b = estimate_coverage(SimConfig(cfg, 1e4, trials=5000, seed=2), 1.0)
    assert abs(a.mean - b.mean) < math.hypot(a.ci_half_width, b.ci_half_width)
