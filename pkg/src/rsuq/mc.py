"""Monte-Carlo estimators and hypothesis tests for the quantizer claims.

Every routine is a pure function of its plan and configuration seeds: the
input sampler runs on the same counter-based generator as the dither
streams (auxiliary stream indices live above 2**62 so they never collide
with per-vector encode streams), reductions are order-independent sums,
and re-running reproduces identical statistics bit for bit.

Significance tests use the asymptotic Kolmogorov distribution for KS
p-values and the chi-square upper tail for goodness of fit; sample floors
are enforced wherever a significance level is quoted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammainc, gammaincc, ndtr

from .bounds import LOG2E, log2_kappa
from .coding import coord_width_for_bound, golomb_for_lattice
from .dither import derive_seed, stream_uniforms
from .lattices import Lattice
from .layered import NoiseModel, lrsuq_encode_batch
from .quantizer import RsuqConfig, encode_batch

_AUX_BASE = 1 << 62
_INPUT_LAWS = ("uniform-ball", "fixed-point", "gaussian")
_MIN_SAMPLES = 1000


class InsufficientSamplesError(ValueError):
    """Too few samples for a significance-quoting test."""


@dataclass
class TrialPlan:
    """Trial sizing and input law for one Monte-Carlo run."""

    samples: int
    tau: float = 50.0
    seed_base: int = 0
    input_law: str = "uniform-ball"
    point: np.ndarray | None = None  # fixed-point law only

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("need at least one sample")
        if self.input_law not in _INPUT_LAWS:
            raise ValueError(f"unknown input law {self.input_law!r}")


@dataclass
class TestResult:
    """Outcome of one check; verdict = statistic-vs-threshold decision."""

    test: str
    statistic: float
    threshold: float
    p_value: float | None
    verdict: bool
    n_samples: int
    seed: int = 0
    subresults: list = field(default_factory=list)

    def csv_row(self) -> str:
        return (f"{self.test},{self.statistic:.6g},{self.threshold:.6g},"
                f"{'pass' if self.verdict else 'fail'},{self.n_samples},{self.seed}")

    CSV_HEADER = "test,statistic,threshold,verdict,samples,seed"


def _require_samples(n, quoted=_MIN_SAMPLES):
    if n < quoted:
        raise InsufficientSamplesError(
            f"{n} samples; significance-quoting tests need >= {quoted}")


# -- distribution helpers ------------------------------------------------------


def kolmogorov_sf(lam: float, terms: int = 101) -> float:
    """Asymptotic Kolmogorov survival function 2 sum (-1)^(j-1) exp(-2 j^2 lam^2)."""
    if lam <= 0.2:
        # CDF(0.2) ~ exp(-pi^2/0.32) underflows; the series converges slowly here
        return 1.0
    total = 0.0
    for j in range(1, terms):
        term = math.exp(-2.0 * (j * lam) ** 2)
        total += -term if j % 2 == 0 else term
        if term < 1e-16:
            break
    return min(1.0, max(0.0, 2.0 * total))


def ks_statistic(samples, cdf_values=None) -> float:
    """One-sample KS statistic; pass transformed values if cdf_values given."""
    u = np.sort(np.asarray(cdf_values if cdf_values is not None else samples))
    n = u.size
    grid = np.arange(1, n + 1) / n
    return float(max((grid - u).max(), (u - (grid - 1.0 / n)).max()))


def ks_test(cdf_values, name: str, alpha: float = 0.01, seed: int = 0) -> TestResult:
    """KS test of probability-integral-transformed samples against U[0,1]."""
    u = np.asarray(cdf_values, dtype=np.float64)
    _require_samples(u.size)
    d = ks_statistic(u)
    p = kolmogorov_sf(math.sqrt(u.size) * d)
    return TestResult(test=name, statistic=d, threshold=alpha, p_value=p,
                      verdict=p >= alpha, n_samples=u.size, seed=seed)


def ks_two_sample(a, b, name: str, alpha: float = 0.01, seed: int = 0) -> TestResult:
    """Two-sample KS with the asymptotic null distribution."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    _require_samples(min(a.size, b.size))
    allv = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, allv, side="right") / a.size
    cdf_b = np.searchsorted(b, allv, side="right") / b.size
    d = float(np.abs(cdf_a - cdf_b).max())
    n_eff = a.size * b.size / (a.size + b.size)
    p = kolmogorov_sf(math.sqrt(n_eff) * d)
    return TestResult(test=name, statistic=d, threshold=alpha, p_value=p,
                      verdict=p >= alpha, n_samples=a.size + b.size, seed=seed)


def chi_square_gof(observed, expected, name: str, alpha: float = 0.01,
                   seed: int = 0) -> TestResult:
    """Chi-square goodness of fit; degrees of freedom = bins - 1."""
    obs = np.asarray(observed, dtype=np.float64)
    exp = np.asarray(expected, dtype=np.float64)
    if np.any(exp <= 0):
        raise ValueError("expected counts must be positive")
    stat = float(((obs - exp) ** 2 / exp).sum())
    df = obs.size - 1
    p = float(gammaincc(df / 2.0, stat / 2.0))
    return TestResult(test=name, statistic=stat, threshold=alpha, p_value=p,
                      verdict=p >= alpha, n_samples=int(obs.sum()), seed=seed)


def plugin_entropy(values) -> float:
    """Empirical-frequency entropy in bits; rows are treated as symbols."""
    arr = np.asarray(values)
    if arr.ndim == 1:
        _, counts = np.unique(arr, return_counts=True)
    else:
        flat = np.ascontiguousarray(arr).view(
            np.dtype((np.void, arr.dtype.itemsize * arr.shape[1]))).ravel()
        _, counts = np.unique(flat, return_counts=True)
    p = counts / counts.sum()
    return float(-(p * np.log2(p)).sum())


# -- input sampling -------------------------------------------------------------


def _aux_uniforms(plan: TrialPlan, stream: int, count: int, width: int):
    seed = derive_seed(plan.seed_base, _AUX_BASE + stream)
    u = stream_uniforms([seed], 0, count * width)
    return u.reshape(count, width)


def _standard_normals(plan: TrialPlan, stream: int, count: int, n: int):
    pairs = (n + 1) // 2
    u = _aux_uniforms(plan, stream, count, 2 * pairs)
    u1 = u[:, 0::2]
    u2 = u[:, 1::2]
    rad = np.sqrt(-2.0 * np.log1p(-u1))
    ang = 2.0 * math.pi * u2
    g = np.empty((count, 2 * pairs))
    g[:, 0::2] = rad * np.cos(ang)
    g[:, 1::2] = rad * np.sin(ang)
    return g[:, :n]


def sample_inputs(plan: TrialPlan, n: int) -> np.ndarray:
    """Deterministic input batch for the plan's law, shape (samples, n)."""
    N = plan.samples
    if plan.input_law == "fixed-point":
        point = np.zeros(n) if plan.point is None else np.asarray(plan.point, dtype=np.float64)
        if point.shape != (n,):
            raise ValueError(f"fixed point must have dimension {n}")
        return np.tile(point, (N, 1))
    g = _standard_normals(plan, 0, N, n)
    if plan.input_law == "gaussian":
        return plan.tau * g
    norm = np.sqrt(np.einsum("ij,ij->i", g, g))
    norm[norm == 0.0] = 1.0
    u = _aux_uniforms(plan, 1, N, 1)[:, 0]
    radius = plan.tau * u ** (1.0 / n)
    return (radius / norm)[:, None] * g


# -- quantizer-driving estimators ------------------------------------------------


@dataclass
class RateEstimate:
    """Plug-in entropies of the description and the realized code length."""

    h_k: float
    h_m: float
    mean_code_len: float
    coord_bound: int
    n_samples: int


def run_quantizer(cfg: RsuqConfig, plan: TrialPlan):
    """Encode a planned batch; returns (X, K, J, Y)."""
    X = sample_inputs(plan, cfg.lat.n)
    K, J, Y = encode_batch(cfg, X)
    return X, K, J, Y


def estimate_rate(cfg: RsuqConfig, plan: TrialPlan) -> RateEstimate:
    """Plug-in entropies of K and M plus the mean Golomb+fixed-width length."""
    if plan.input_law == "uniform-ball" and plan.tau < 10.0 * cfg.r:
        raise ValueError("high-resolution regime needs tau >= 10 r")
    _require_samples(plan.samples)
    _, K, J, _ = run_quantizer(cfg, plan)
    return rate_from_descriptions(cfg.lat, K, J)


def rate_from_descriptions(lat, K, J) -> RateEstimate:
    code = golomb_for_lattice(lat)
    bound = int(np.abs(J).max()) if J.size else 0
    width = coord_width_for_bound(bound)
    mean_len = float(code.length(K).mean()) + lat.n * width
    return RateEstimate(h_k=plugin_entropy(K), h_m=plugin_entropy(J),
                        mean_code_len=mean_len, coord_bound=bound,
                        n_samples=int(K.size))


def estimate_mse(cfg: RsuqConfig, plan: TrialPlan) -> float:
    """Mean squared reconstruction error over the planned batch."""
    X, _, _, Y = run_quantizer(cfg, plan)
    err = Y - X
    return float(np.einsum("ij,ij->i", err, err).mean())


def error_batch(cfg: RsuqConfig, plan: TrialPlan):
    """(X, errors) for the planned batch."""
    X, _, _, Y = run_quantizer(cfg, plan)
    return X, Y - X


def lrsuq_error_batch(noise: NoiseModel, lat: Lattice, seed: int, plan: TrialPlan):
    """(X, errors, levels) for a layered run on the planned batch."""
    X = sample_inputs(plan, lat.n)
    _, _, Y, levels = lrsuq_encode_batch(noise, lat, seed, X)
    return X, Y - X, levels


# -- distributional tests ---------------------------------------------------------


def test_uniform_ball(errors, r: float, n: int, alpha: float = 0.01,
                      seed: int = 0) -> TestResult:
    """Radial KS against the uniform-ball law plus a 3-sigma mean-vector band."""
    Z = np.atleast_2d(np.asarray(errors, dtype=np.float64))
    _require_samples(Z.shape[0])
    radial = (np.sqrt(np.einsum("ij,ij->i", Z, Z)) / r) ** n
    ks = ks_test(radial, "uniform-ball[radial-ks]", alpha, seed)
    sigma = r / math.sqrt(n + 2)
    band = 3.0 * sigma / math.sqrt(Z.shape[0])
    dev = float(np.abs(Z.mean(axis=0)).max())
    mean_ok = TestResult(test="uniform-ball[mean]", statistic=dev, threshold=band,
                         p_value=None, verdict=dev <= band,
                         n_samples=Z.shape[0], seed=seed)
    subs = [ks, mean_ok]
    bad = [s for s in subs if not s.verdict]
    worst = bad[0] if bad else subs[0]
    return TestResult(test="uniform-ball", statistic=worst.statistic,
                      threshold=worst.threshold, p_value=ks.p_value,
                      verdict=not bad, n_samples=Z.shape[0], seed=seed,
                      subresults=subs)


def test_gaussian(errors, n: int, alpha: float = 0.01, seed: int = 0) -> TestResult:
    """Per-coordinate KS vs the standard normal, covariance band, norm2 KS."""
    Z = np.atleast_2d(np.asarray(errors, dtype=np.float64))
    _require_samples(Z.shape[0])
    N = Z.shape[0]
    subs = []
    for c in range(n):
        subs.append(ks_test(ndtr(Z[:, c]), f"gaussian[coord{c}-ks]", alpha, seed))
    cov = (Z.T @ Z) / N - np.outer(Z.mean(axis=0), Z.mean(axis=0))
    dev = float(np.abs(cov - np.eye(n)).max())
    cov_tol = max(0.02, 6.0 * math.sqrt(2.0 / N))
    subs.append(TestResult(test="gaussian[cov]", statistic=dev, threshold=cov_tol,
                           p_value=None, verdict=dev <= cov_tol, n_samples=N, seed=seed))
    norm2 = np.einsum("ij,ij->i", Z, Z)
    subs.append(ks_test(gammainc(n / 2.0, norm2 / 2.0), "gaussian[norm2-ks]",
                        alpha, seed))
    bad = [s for s in subs if not s.verdict]
    worst = bad[0] if bad else subs[0]
    return TestResult(test="gaussian", statistic=worst.statistic,
                      threshold=worst.threshold, p_value=worst.p_value,
                      verdict=not bad, n_samples=N, seed=seed, subresults=subs)


def test_independence(xs, errors, alpha: float = 0.01, seed: int = 0) -> TestResult:
    """Cross-correlation band plus a two-sample KS across input halves.

    Inputs with (near-)constant coordinates make both checks vacuous
    passes; that degenerate case is the documented contract.
    """
    X = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    Z = np.atleast_2d(np.asarray(errors, dtype=np.float64))
    if X.shape[0] != Z.shape[0]:
        raise ValueError("inputs and errors must pair up")
    N = X.shape[0]
    _require_samples(N)
    xc = X - X.mean(axis=0)
    zc = Z - Z.mean(axis=0)
    sx = np.sqrt(np.einsum("ij,ij->j", xc, xc))
    sz = np.sqrt(np.einsum("ij,ij->j", zc, zc))
    corr_bound = 4.0 / math.sqrt(N)
    live = (sx > 0)[:, None] & (sz > 0)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = np.where(live, (xc.T @ zc) / np.outer(sx, sz), 0.0)
    max_corr = float(np.abs(corr).max()) if corr.size else 0.0
    subs = [TestResult(test="independence[corr]", statistic=max_corr,
                       threshold=corr_bound, p_value=None,
                       verdict=max_corr <= corr_bound, n_samples=N, seed=seed)]
    split = X[:, 0] > np.median(X[:, 0])
    norms = np.sqrt(np.einsum("ij,ij->i", Z, Z))
    if split.sum() >= _MIN_SAMPLES and (~split).sum() >= _MIN_SAMPLES:
        subs.append(ks_two_sample(norms[split], norms[~split],
                                  "independence[region-ks]", alpha, seed))
    bad = [s for s in subs if not s.verdict]
    worst = bad[0] if bad else subs[0]
    return TestResult(test="independence", statistic=worst.statistic,
                      threshold=worst.threshold, p_value=worst.p_value,
                      verdict=not bad, n_samples=N, seed=seed, subresults=subs)


# -- stopping-index statistics -----------------------------------------------------


def k_statistics(cfg: RsuqConfig, plan: TrialPlan, mass_points: int = 10):
    """(mean K, chi-square TestResult against the geometric law)."""
    _require_samples(plan.samples)
    _, K, _, _ = run_quantizer(cfg, plan)
    p = cfg.acceptance_probability
    return float(K.mean()), _geometric_gof(K, p, mass_points, plan.seed_base)


def _geometric_gof(K, p, mass_points, seed):
    N = K.size
    obs = np.asarray([(K == k).sum() for k in range(1, mass_points + 1)]
                     + [(K > mass_points).sum()], dtype=np.float64)
    pmf = p * (1.0 - p) ** (np.arange(1, mass_points + 1) - 1)
    exp = N * np.concatenate([pmf, [(1.0 - p) ** mass_points]])
    return chi_square_gof(obs, exp, "stopping-index[geometric-chi2]", seed=seed)


def estimate_k_distribution(cfg: RsuqConfig, plan: TrialPlan) -> TestResult:
    """Chi-square fit of the stopping index to its geometric law."""
    _, result = k_statistics(cfg, plan)
    return result


# -- rate-bound checks ---------------------------------------------------------------


def rsuq_rate_check(cfg: RsuqConfig, plan: TrialPlan, slack: float = 0.1) -> TestResult:
    """Normalized plug-in rate against the ball quantizer's entropy bound.

    Passes when Hhat(K) + Hhat(M) - log2 vol(tau ball) stays below
    -log2 vol(r ball) + log2 e + slack.
    """
    est = estimate_rate(cfg, plan)
    n = cfg.lat.n
    lhs = est.h_k + est.h_m - (n * math.log2(plan.tau) + log2_kappa(n))
    rhs = -(n * math.log2(cfg.r) + log2_kappa(n)) + LOG2E + slack
    return TestResult(test=f"rate-bound[{cfg.lat.name}]", statistic=lhs,
                      threshold=rhs, p_value=None, verdict=lhs <= rhs,
                      n_samples=est.n_samples, seed=plan.seed_base)


def lrsuq_rate_check(noise: NoiseModel, lat: Lattice, seed: int,
                     plan: TrialPlan, layered_entropy_bits: float,
                     slack: float = 0.1) -> TestResult:
    """Layered rate check: plug-in rate vs -h_layered + log2 e + support term.

    The support term n E[log2(1 + 3 eta beta / tau)] uses the sampled cell
    scales; eta is the circumradius of the unscaled Voronoi cell.
    """
    _require_samples(plan.samples)
    X = sample_inputs(plan, lat.n)
    K, J, _, levels = lrsuq_encode_batch(noise, lat, seed, X)
    est = rate_from_descriptions(lat, K, J)
    n = lat.n
    lhs = est.h_k + est.h_m - (n * math.log2(plan.tau) + log2_kappa(n))
    levels = np.atleast_1d(levels)
    try:
        beta = np.asarray(noise.beta(levels), dtype=np.float64)
        if beta.shape != levels.shape:
            raise TypeError
    except TypeError:
        beta = np.asarray([float(noise.beta(t)) for t in levels])
    eta = lat.covering_radius if lat.covering_radius is not None else \
        math.sqrt(n) * max(np.linalg.norm(lat.G[:, k]) for k in range(n))
    support = n * float(np.log2(1.0 + 3.0 * eta * beta / plan.tau).mean())
    rhs = -layered_entropy_bits + LOG2E + support + slack
    return TestResult(test=f"layered-rate-bound[{lat.name}]", statistic=lhs,
                      threshold=rhs, p_value=None, verdict=lhs <= rhs,
                      n_samples=est.n_samples, seed=plan.seed_base)
