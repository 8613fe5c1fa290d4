"""Monte-Carlo machinery: estimator calibration, test power, rate checks."""

import math

import numpy as np
import pytest

from rsuq import mc
from rsuq.bounds import LOG2E, gaussian_delta_eps, gaussian_layered_entropy, log2_kappa
from rsuq.dither import stream_uniforms
from rsuq.lattices import builtin_lattice
from rsuq.layered import GaussianNoise
from rsuq.quantizer import RsuqConfig

Z2 = builtin_lattice("Zn", 2)


def test_plan_validation():
    with pytest.raises(ValueError):
        mc.TrialPlan(samples=0)
    with pytest.raises(ValueError):
        mc.TrialPlan(samples=10, input_law="cauchy")


def test_kolmogorov_sf_reference_points():
    # classic critical points of the asymptotic law
    assert mc.kolmogorov_sf(1.3581) == pytest.approx(0.05, abs=2e-4)
    assert mc.kolmogorov_sf(1.6276) == pytest.approx(0.01, abs=2e-4)
    assert mc.kolmogorov_sf(0.0) == 1.0
    assert mc.kolmogorov_sf(0.1) == 1.0  # CDF underflows below lam ~ 0.2
    assert mc.kolmogorov_sf(8.0) < 1e-16
    # median of the limiting distribution
    assert mc.kolmogorov_sf(0.82757356) == pytest.approx(0.5, abs=1e-4)


def test_ks_statistic_tiny_case():
    # hand value: samples {0.1, 0.9} against U[0,1]
    d = mc.ks_statistic(None, cdf_values=np.array([0.1, 0.9]))
    assert d == pytest.approx(0.4, abs=1e-12)


def test_ks_calibration_uniform_passes_and_shifted_fails():
    u = stream_uniforms([5], 0, 20000)[0]
    assert mc.ks_test(u, "uniform").verdict
    assert not mc.ks_test(np.clip(u * 0.9, 0, 1), "shifted").verdict


def test_ks_sample_floor():
    with pytest.raises(mc.InsufficientSamplesError):
        mc.ks_test(np.array([0.5]), "one")


def test_two_sample_ks_power():
    a = stream_uniforms([10], 0, 20000)[0]
    b = stream_uniforms([110], 0, 20000)[0]
    assert mc.ks_two_sample(a, b, "same-law").verdict
    assert not mc.ks_two_sample(a, 0.9 * b, "scaled").verdict


def test_chi_square_gof_calibration():
    counts = np.array([1020, 980, 1001, 999], dtype=float)
    assert mc.chi_square_gof(counts, np.full(4, 1000.0), "flat").verdict
    assert not mc.chi_square_gof(np.array([1300, 700, 1000, 1000.0]),
                                 np.full(4, 1000.0), "skewed").verdict


def test_plugin_entropy_fair_coin_calibration():
    bits = (stream_uniforms([123], 0, 10 ** 6)[0] > 0.5).astype(np.int64)
    h = mc.plugin_entropy(bits)
    assert h == pytest.approx(1.0, abs=0.01)
    # bias shrinks with more samples on the fixed stream
    biases = [1.0 - mc.plugin_entropy(bits[:n]) for n in (10 ** 3, 10 ** 4, 10 ** 6)]
    assert abs(biases[0]) >= abs(biases[1]) >= abs(biases[2])


def test_plugin_entropy_rows():
    rows = np.array([[0, 0], [0, 1], [0, 0], [1, 1]])
    # frequencies 1/2, 1/4, 1/4
    assert mc.plugin_entropy(rows) == pytest.approx(1.5, abs=1e-12)


def test_sample_inputs_laws():
    plan = mc.TrialPlan(samples=50000, tau=3.0, seed_base=9)
    X = mc.sample_inputs(plan, 2)
    r = np.linalg.norm(X, axis=1)
    assert r.max() <= 3.0
    # radial CDF of the uniform ball: (r/tau)^n uniform
    assert mc.ks_test((r / 3.0) ** 2, "ball-radial").verdict
    # determinism
    assert np.array_equal(X, mc.sample_inputs(plan, 2))

    plang = mc.TrialPlan(samples=50000, tau=2.0, seed_base=9, input_law="gaussian")
    G = mc.sample_inputs(plang, 2)
    assert G[:, 0].std() == pytest.approx(2.0, rel=0.02)

    planf = mc.TrialPlan(samples=10, input_law="fixed-point",
                         point=np.array([1.0, -2.0]))
    F = mc.sample_inputs(planf, 2)
    assert np.all(F == [1.0, -2.0])


def test_estimate_rate_and_mse():
    cfg = RsuqConfig(Z2, r=0.5, seed=808)
    plan = mc.TrialPlan(samples=50000, tau=50.0, seed_base=11)
    est = mc.estimate_rate(cfg, plan)
    # stopping index entropy near the geometric value
    from rsuq.bounds import geometric_entropy

    assert est.h_k == pytest.approx(geometric_entropy(math.pi / 4), abs=0.02)
    assert est.mean_code_len >= est.h_k  # realized code cannot beat entropy
    assert mc.estimate_mse(cfg, plan) == pytest.approx(0.125, rel=0.01)
    with pytest.raises(ValueError):
        mc.estimate_rate(cfg, mc.TrialPlan(samples=5000, tau=1.0, seed_base=1))


def test_degenerate_full_cell_acceptance():
    # 1-D with r = packing radius: the ball is the whole cell, K is constant 1
    z1 = builtin_lattice("Zn", 1)
    cfg = RsuqConfig(z1, r=0.5, seed=3)
    plan = mc.TrialPlan(samples=20000, tau=25.0, seed_base=5)
    _, K, _, _ = mc.run_quantizer(cfg, plan)
    assert np.all(K == 1)
    assert mc.plugin_entropy(K) == 0.0


def test_uniform_ball_test_pass_and_fail():
    cfg = RsuqConfig(Z2, r=0.5, seed=21)
    plan = mc.TrialPlan(samples=100000, tau=50.0, seed_base=22)
    _, Z = mc.error_batch(cfg, plan)
    assert mc.test_uniform_ball(Z, 0.5, 2).verdict
    # adversarial: inputs uniform over a 0.9 r ball must fail the radial test
    shrunk = mc.sample_inputs(mc.TrialPlan(samples=20000, tau=0.45, seed_base=8), 2)
    assert not mc.test_uniform_ball(shrunk, 0.5, 2).verdict
    with pytest.raises(mc.InsufficientSamplesError):
        mc.test_uniform_ball(Z[:1], 0.5, 2)


def test_independence_pass_fail_and_vacuous():
    cfg = RsuqConfig(Z2, r=0.5, seed=31)
    plan = mc.TrialPlan(samples=100000, tau=50.0, seed_base=32)
    X, Z = mc.error_batch(cfg, plan)
    assert mc.test_independence(X, Z).verdict
    # deterministic (non-dithered) lattice quantizer: error is a function of x
    Xs = mc.sample_inputs(mc.TrialPlan(samples=20000, tau=2.0, seed_base=33), 2)
    Zdet = Z2.embed_rows(Z2.nearest_rows(Xs)) - Xs
    assert not mc.test_independence(Xs, Zdet).verdict
    # constant input: vacuous pass by contract
    Xc = np.zeros((20000, 2))
    _, _, Yc = mc.encode_batch(cfg, Xc)
    assert mc.test_independence(Xc, Yc - Xc).verdict


def test_gaussian_test_pass_and_fail():
    g = GaussianNoise(2, Z2)
    plan = mc.TrialPlan(samples=100000, tau=50.0, seed_base=44)
    _, Z, _ = mc.lrsuq_error_batch(g, Z2, 444, plan)
    assert mc.test_gaussian(Z, 2).verdict
    # ball-uniform errors must fail the norm test
    ball = mc.sample_inputs(mc.TrialPlan(samples=20000, tau=1.0, seed_base=45), 2)
    assert not mc.test_gaussian(ball, 2).verdict


def test_estimate_mse_dimensions_and_scaling():
    e8 = builtin_lattice("E8", 8)
    plan = mc.TrialPlan(samples=50000, tau=20.0, seed_base=57)
    # n r^2 / (n+2) at n=8, r=1 is 0.8
    assert mc.estimate_mse(RsuqConfig(e8, r=1.0, seed=56), plan) == \
        pytest.approx(0.8, rel=0.01)
    tiny = mc.estimate_mse(RsuqConfig(Z2, r=0.01, seed=56),
                           mc.TrialPlan(samples=5000, tau=5.0, seed_base=57))
    assert tiny == pytest.approx(0.01 ** 2 * 0.5, rel=0.05)  # -> 0 as r -> 0


def test_gaussian_test_one_dimensional_degenerate_cov():
    # at n=1 the covariance band reduces to a variance-near-1 check
    z1 = builtin_lattice("Zn", 1)
    g = GaussianNoise(1, z1)
    from rsuq.layered import lrsuq_encode_batch

    _, _, Y, _ = lrsuq_encode_batch(g, z1, 58, np.zeros((50000, 1)))
    res = mc.test_gaussian(Y, 1)
    cov = [s for s in res.subresults if s.test == "gaussian[cov]"][0]
    assert res.verdict
    assert abs(cov.statistic - abs(float(Y.var() - 1.0))) < 1e-9


def test_rsuq_redundancies_nonnegative():
    from rsuq.bounds import rsuq_red_per_dim

    for n in range(1, 49):
        assert rsuq_red_per_dim(n) >= 0.0
    for delta in (1e-6, 0.1, 0.62, 0.91, 1.0):
        assert rsuq_red_per_dim(4, delta) >= 0.0


def test_k_distribution_and_estimator():
    cfg = RsuqConfig(Z2, r=0.5, seed=52)
    plan = mc.TrialPlan(samples=100000, tau=50.0, seed_base=53)
    mean_k, res = mc.k_statistics(cfg, plan)
    assert res.verdict
    assert mean_k == pytest.approx(4.0 / math.pi, rel=0.02)
    assert mc.estimate_k_distribution(cfg, plan).verdict


def test_rate_checks():
    plan = mc.TrialPlan(samples=100000, tau=50.0, seed_base=61)
    for family, n in (("Zn", 2), ("A2", 2), ("Dn", 4)):
        lat = builtin_lattice(family, n)
        cfg = RsuqConfig(lat, r=0.5, seed=606)
        res = mc.rsuq_rate_check(cfg, plan)
        assert res.verdict, (family, res.statistic, res.threshold)
    g = GaussianNoise(2, Z2)
    res = mc.lrsuq_rate_check(g, Z2, 607, plan, gaussian_layered_entropy(2))
    assert res.verdict, (res.statistic, res.threshold)


def test_rate_tau_convergence():
    # the normalized plug-in rate is defined through a large-tau limit; the
    # snapshot at growing tau stays under the bound and tightens (the large
    # alphabet at tau=200 adds downward plug-in bias, absorbed one-sidedly)
    cfg = RsuqConfig(Z2, r=0.5, seed=81)
    rhs = -(2 * math.log2(0.5) + log2_kappa(2)) + LOG2E
    lhs = []
    for tau in (10.0, 50.0, 200.0):
        plan = mc.TrialPlan(samples=100000, tau=tau, seed_base=82)
        est = mc.estimate_rate(cfg, plan)
        lhs.append(est.h_k + est.h_m - (2 * math.log2(tau) + log2_kappa(2)))
    assert all(v <= rhs for v in lhs), (lhs, rhs)
    assert lhs[0] >= lhs[1] >= lhs[2]


def test_estimate_rate_sample_floor():
    cfg = RsuqConfig(Z2, r=0.5, seed=1)
    with pytest.raises(mc.InsufficientSamplesError):
        mc.estimate_rate(cfg, mc.TrialPlan(samples=100, tau=50.0, seed_base=1))


def test_high_resolution_gaussian_input_check():
    # scaled quantizers on a Gaussian source: the normalized plug-in rate
    # approaches the differential entropy within log2 e plus the smoothness
    # penalty at the error diameter
    sigma = 2.0
    n = 2
    h_x = (n / 2.0) * math.log2(2 * math.pi * math.e * sigma ** 2)
    mean_norm = sigma * math.sqrt(2.0) * math.gamma(1.5) / math.gamma(1.0)
    plan = mc.TrialPlan(samples=100000, tau=sigma, seed_base=71,
                        input_law="gaussian")
    vals = []
    for alpha in (1.0, 0.5, 0.25):
        r = 0.5 * alpha
        cfg = RsuqConfig(Z2, r=r, seed=700 + int(4 * alpha))
        est = mc.estimate_rate(cfg, plan)
        v = est.h_k + est.h_m + (n * math.log2(r) + log2_kappa(n)) - h_x
        bound = LOG2E + gaussian_delta_eps(2 * r, sigma ** 2, mean_norm)
        assert v <= bound + 0.05, (alpha, v, bound)
        vals.append(v)
    assert vals[-1] <= vals[0] + 0.02


def test_result_csv_shape():
    res = mc.TestResult(test="demo", statistic=1.0, threshold=2.0, p_value=0.5,
                        verdict=True, n_samples=10, seed=3)
    assert res.csv_row() == "demo,1,2,pass,10,3"
    assert mc.TestResult.CSV_HEADER.split(",") == [
        "test", "statistic", "threshold", "verdict", "samples", "seed"]
