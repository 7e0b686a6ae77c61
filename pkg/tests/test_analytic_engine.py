import math

import numpy as np
import pytest
from scipy import integrate

from udn_ase.analytic_engine import (AnalysisConfig, area_spectral_efficiency, association_density,
                                     characteristic_fn_inv_sinr, conditional_coverage_rayleigh,
                                     conditional_coverage_rician, coverage_curve, coverage_probability,
                                     interference_laplace, sinr_pdf)
from udn_ase.channel_models import (Path, build_3gpp_case1, build_3gpp_case2, build_approx_case2,
                                    build_single_slope, equal_gain_radius)
from udn_ase.fading import RAYLEIGH, FadingModel, rician


def _association_mass(cfg, lam):
    model = cfg.model
    total = 0.0
    for n in range(model.n_segments):
        lo, hi = model.segment_r_range(n)
        for path in Path:
            f = lambda r: association_density(cfg, lam, n, r, path)
            if math.isinf(hi):
                # split at a few nearest-neighbour scales so quad sees the bulk
                edges = [lo] + [lo + k / math.sqrt(lam) for k in (0.5, 2.0, 8.0)]
                m = sum(integrate.quad(f, a, b, limit=200, epsabs=1e-12)[0] for a, b in zip(edges[:-1], edges[1:]))
                m += integrate.quad(f, edges[-1], np.inf, limit=200, epsabs=1e-12)[0]
            else:
                m = integrate.quad(f, lo, hi, limit=400, epsabs=1e-12,
                                   points=[lo + k * (hi - lo) / 64 for k in (1, 4, 16)])[0]
            total += m
    return total


NORMALISATION_CASES = [
    ("case1", 100.0, 0.0085), ("case1", 1e4, 0.0085), ("case1", 1e3, 0.0),
    ("case2", 100.0, 0.0085), ("approx_case2", 1e3, 0.0035), ("single_slope", 1e3, 0.0085),
]
BUILDERS = {"case1": build_3gpp_case1, "case2": build_3gpp_case2,
            "approx_case2": build_approx_case2, "single_slope": build_single_slope}


@pytest.mark.parametrize("name,lam,L", NORMALISATION_CASES)
def test_association_density_normalises(name, lam, L):
    cfg = AnalysisConfig(BUILDERS[name](L=L))
    assert _association_mass(cfg, lam) == pytest.approx(1.0, abs=1e-6)


def test_single_slope_is_nearest_neighbour_density():
    cfg = AnalysisConfig(build_single_slope(L=0.0))
    lam = 300.0
    r = np.linspace(1e-4, 0.1, 50)
    ref = np.exp(-math.pi * lam * r * r) * 2 * math.pi * lam * r
    np.testing.assert_allclose(association_density(cfg, lam, 0, r, "los"), ref, rtol=1e-10)
    np.testing.assert_allclose(association_density(cfg, lam, 0, r, "nlos"), 0.0, atol=1e-300)


def test_nlos_association_vanishes_when_dense(case1_cfg):
    lam = 1e4
    f = lambda r, n: association_density(case1_cfg, lam, n, r, "nlos")
    lo, hi = case1_cfg.model.segment_r_range(0)
    m = integrate.quad(f, lo, hi, args=(0,), limit=200)[0]
    lo1, _ = case1_cfg.model.segment_r_range(1)
    m += integrate.quad(f, lo1, np.inf, args=(1,), limit=200)[0]
    assert m < 1e-3


def test_association_rejects_radius_outside_segment(case1_cfg):
    with pytest.raises(ValueError):
        association_density(case1_cfg, 100.0, 0, 0.5, "los")


# -- Laplace transform and conditional coverage -----------------------------------

def test_laplace_limits(case1_cfg):
    assert interference_laplace(case1_cfg, 100.0, 0.05, 1e-30, "los") == pytest.approx(1.0, abs=1e-12)
    s = 1.0 / (case1_cfg.tx_power * case1_cfg.model.gain(math.hypot(0.05, 0.0085), Path.LOS))
    assert interference_laplace(case1_cfg, 1e-12, 0.05, s, "los") == pytest.approx(1.0, abs=1e-9)
    v = interference_laplace(case1_cfg, 100.0, 0.05, s, "los")
    assert 0.0 < v < 1.0


def _interferers(model, lam, r_serv, rng, n_snap, radius=1.5):
    """Flattened interferer gains plus their snapshot index, with the exclusion geometry."""
    L = model.L
    w_serv = math.hypot(r_serv, L)
    w_excl = math.hypot(float(equal_gain_radius(model, 0, r_serv, Path.LOS)), L)
    counts = rng.poisson(lam * math.pi * radius**2, n_snap)
    owner = np.repeat(np.arange(n_snap), counts)
    r = radius * np.sqrt(rng.random(owner.size))
    w = np.hypot(r, L)
    los = rng.random(owner.size) < model.los_prob(w)
    keep = np.where(los, w > w_serv, w > w_excl)
    g = np.where(los, model.gain(w, Path.LOS), model.gain(w, Path.NLOS))
    return g[keep], owner[keep]


def test_laplace_matches_poisson_snapshots(case1_cfg):
    lam, r = 100.0, 0.05
    model = case1_cfg.model
    zeta = model.gain(math.hypot(r, model.L), Path.LOS)
    s = 1.0 / (case1_cfg.tx_power * zeta)
    rng = np.random.default_rng(5)
    n = 100_000
    # Rayleigh fading averaged in closed form per snapshot
    g, owner = _interferers(model, lam, r, rng, n)
    logs = np.bincount(owner, weights=-np.log1p(s * case1_cfg.tx_power * g), minlength=n)
    sample = np.exp(logs)
    est, sd = sample.mean(), sample.std(ddof=1) / math.sqrt(n)
    assert abs(interference_laplace(case1_cfg, lam, r, s, "los") - est) < 3 * sd


def test_conditional_coverage_matches_direct_simulation(case1_cfg):
    lam, r, gamma = 100.0, 0.05, 1.0
    model = case1_cfg.model
    P, N = case1_cfg.tx_power, case1_cfg.noise_power
    zeta = model.gain(math.hypot(r, model.L), Path.LOS)
    rng = np.random.default_rng(6)
    n = 100_000
    g, owner = _interferers(model, lam, r, rng, n)
    interference = np.bincount(owner, weights=P * g * rng.standard_exponential(g.size), minlength=n)
    sinr = P * zeta * rng.standard_exponential(n) / (interference + N)
    p = np.mean(sinr > gamma)
    sd = math.sqrt(p * (1 - p) / n)
    assert abs(conditional_coverage_rayleigh(case1_cfg, lam, r, gamma, 0, "los") - p) < 3 * sd


def test_conditional_coverage_limits(case1):
    cfg = AnalysisConfig(case1)
    assert conditional_coverage_rayleigh(cfg, 100.0, 0.05, 1e-12, 0, "los") == pytest.approx(1.0, abs=1e-9)
    loud = AnalysisConfig(case1, noise_power=1e3)
    assert conditional_coverage_rayleigh(loud, 100.0, 0.05, 1.0, 0, "los") < 1e-300


def test_exclusion_geometry_shared(case1_cfg):
    # noiseless conditional coverage is exactly the Laplace transform at s = gamma / (P zeta)
    quiet = AnalysisConfig(case1_cfg.model, noise_power=0.0)
    for path, n, r in [("los", 0, 0.05), ("nlos", 0, 0.05), ("nlos", 1, 0.5)]:
        zeta = quiet.model.gain(math.hypot(r, quiet.model.L), Path.coerce(path), segment=n)
        s = 2.0 / (quiet.tx_power * zeta)
        a = conditional_coverage_rayleigh(quiet, 300.0, r, 2.0, n, path)
        b = interference_laplace(quiet, 300.0, r, s, path, n=n)
        assert a == pytest.approx(b, rel=1e-12)


def test_rician_k0_matches_rayleigh(case1):
    ray = AnalysisConfig(case1)
    ric = AnalysisConfig(case1, fading=FadingModel(rician(0.0), RAYLEIGH))
    gammas = np.array([0.3, 1.0, 3.0])
    for lam in (10.0, 100.0, 1000.0):
        for r in (0.01, 0.05, 0.2):
            a = np.array([conditional_coverage_rayleigh(ray, lam, r, g, 0, "los") for g in gammas])
            b = conditional_coverage_rician(ric, lam, r, gammas, 0, "los")
            assert np.max(np.abs(a - b)) < 1e-2


def test_rician_small_threshold(case1):
    ric = AnalysisConfig(case1, fading=FadingModel(rician(10.0), RAYLEIGH))
    assert conditional_coverage_rician(ric, 100.0, 0.05, 1e-6, 0, "los") == pytest.approx(1.0, abs=1e-4)


def test_characteristic_function_properties(case1):
    ric = AnalysisConfig(case1, fading=FadingModel(rician(10.0), RAYLEIGH))
    omega = np.concatenate([[0.0], np.geomspace(1e-3, 1e6, 40)])
    F = characteristic_fn_inv_sinr(ric, 100.0, 0.05, 0, "los", omega)
    assert F[0] == pytest.approx(1.0, abs=1e-9)
    assert np.all(np.abs(F) <= 1.0 + 1e-9)
    silent = AnalysisConfig(case1, noise_power=0.0, fading=ric.fading)
    F0 = characteristic_fn_inv_sinr(silent, 1e-12, 0.05, 0, "los", omega)
    np.testing.assert_allclose(F0, 1.0, atol=1e-8)


# -- coverage ---------------------------------------------------------------------

def test_coverage_monotone_in_threshold(case1_cfg):
    gammas = np.geomspace(0.05, 200.0, 20)
    for lam in (10.0, 100.0, 300.0, 1e3, 3e3, 1e4):
        p = coverage_curve(case1_cfg, lam, gammas)
        assert np.all(np.diff(p) <= 1e-12)
        assert np.all((p >= 0) & (p <= 1))


def test_terms_sum_and_association_limit(case1_cfg):
    cp = coverage_probability(case1_cfg, 100.0, 1.0)
    assert cp.p_cov == pytest.approx(sum(cp.terms.values()), abs=1e-9)
    assert all(0.0 <= t <= 1.0 for t in cp.terms.values())
    tiny = coverage_probability(case1_cfg, 100.0, 1e-12)
    assert sum(tiny.terms.values()) == pytest.approx(1.0, abs=1e-6)


def test_single_slope_density_invariance():
    cfg = AnalysisConfig(build_single_slope(L=0.0), noise_power=0.0)
    p = [coverage_probability(cfg, lam, 1.0).p_cov for lam in (1e2, 1e3, 1e4)]
    assert max(p) - min(p) < 1e-3


def test_coverage_falls_with_density(case1_cfg):
    assert coverage_probability(case1_cfg, 1e4, 1.0).p_cov < coverage_probability(case1_cfg, 1e2, 1.0).p_cov


def test_invalid_inputs(case1_cfg):
    with pytest.raises(ValueError):
        coverage_probability(case1_cfg, 0.0, 1.0)
    with pytest.raises(ValueError):
        area_spectral_efficiency(case1_cfg, 100.0, 0.0)
    with pytest.raises(ValueError):
        AnalysisConfig(case1_cfg.model, tx_power=0.0)


# -- ASE ----------------------------------------------------------------------------

def test_ase_step_function_identity(case1_cfg):
    g1, lam = 7.0, 250.0
    step = lambda g: np.where(np.asarray(g) < g1, 1.0, 0.0)
    ase = area_spectral_efficiency(case1_cfg, lam, 1.0, pcov_fn=step)
    assert ase.ase == pytest.approx(lam * math.log2(1 + g1), rel=1e-5)


def test_ase_non_increasing_in_threshold(case1_cfg):
    vals = [area_spectral_efficiency(case1_cfg, 300.0, g0).ase for g0 in (0.1, 0.5, 1.0, 4.0, 20.0)]
    assert all(v >= 0 for v in vals)
    assert all(b <= a * (1 + 1e-6) for a, b in zip(vals, vals[1:]))


def test_sinr_pdf_of_exponential_ccdf(case1_cfg):
    g = np.array([0.1, 0.5, 1.0, 2.0, 5.0])
    pdf = sinr_pdf(case1_cfg, 100.0, g, ccdf=lambda x: np.exp(-x))
    np.testing.assert_allclose(pdf, np.exp(-g), atol=1e-6)


def test_sinr_pdf_consistent_with_ccdf_and_ase(case1_cfg):
    lam = 100.0
    ase = area_spectral_efficiency(case1_cfg, lam, 1.0)
    x = np.linspace(math.log(1e-2), math.log(ase.gamma_max), 57)
    g = np.exp(x)
    pdf = sinr_pdf(case1_cfg, lam, g)
    assert np.all(pdf >= -1e-6)
    mass = integrate.simpson(pdf * g, x=x)
    p = coverage_curve(case1_cfg, lam, g[[0, -1]])
    assert mass == pytest.approx(p[0] - p[-1], abs=1e-3)
    # ASE written directly as the rate averaged over the SINR density
    sel = g >= 1.0 - 1e-12
    xs = np.concatenate([[0.0], x[sel]])
    ys = np.concatenate([[sinr_pdf(case1_cfg, lam, 1.0)], pdf[sel] * g[sel]]) * np.log2(1 + np.exp(xs))
    direct = lam * integrate.simpson(ys, x=xs)
    assert direct == pytest.approx(ase.ase, rel=1e-2)
