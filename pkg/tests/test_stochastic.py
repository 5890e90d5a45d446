"""Samplers and reference distributions."""

import math

import numpy as np
import pytest
import scipy.integrate as si

from vrjplab.stats import ks_one_sample, moment_ci
from vrjplab.stochastic import (IGParams, PathKind, SampledPath,
                                gamma_half_cdf, gbm_from_brownian,
                                inverse_gamma_half_cdf, inverse_gaussian_cdf,
                                new_stream, sample_brownian_path,
                                sample_gamma_half, sample_inverse_gaussian)


def test_stream_determinism():
    a = new_stream(42, 0).gen.uniform(size=100)
    b = new_stream(42, 0).gen.uniform(size=100)
    assert np.array_equal(a, b)


def test_stream_zero_seed_ok():
    s = new_stream(0, 0)
    assert 0.0 <= s.gen.uniform() < 1.0


def test_substreams_uncorrelated():
    u = new_stream(42, 0).gen.uniform(size=100_000)
    v = new_stream(42, 1).gen.uniform(size=100_000)
    assert abs(np.corrcoef(u, v)[0, 1]) < 0.01


def test_ig_params_validation():
    with pytest.raises(ValueError):
        IGParams(-1.0, 2.0)
    with pytest.raises(ValueError):
        IGParams(1.0, 0.0)


def test_ig_moments():
    s = new_stream(7, 0)
    x = sample_inverse_gaussian(IGParams(1.0, 4.0), s, size=100_000)
    m1, h1 = moment_ci(x, 1, 0.01)
    m2, h2 = moment_ci(x, 2, 0.01)
    assert abs(m1 - 1.0) < h1
    assert abs(m2 - 1.25) < h2


def test_ig_large_shape_concentration():
    s = new_stream(8, 0)
    x = sample_inverse_gaussian(IGParams(1.0, 1e8), s, size=10_000)
    assert np.all(np.abs(x - 1.0) < 1e-3)


def test_ig_ks_against_closed_form_cdf():
    s = new_stream(9, 0)
    x = sample_inverse_gaussian(IGParams(1.0, 2.0), s, size=10_000)
    rep = ks_one_sample(x, lambda v: inverse_gaussian_cdf(v, IGParams(1.0, 2.0)), 0.01)
    assert rep.passed, rep


def test_ig_log_moment_asymptotics():
    # mean of ln IG(1,n) ~ -1/(2n), variance ~ 1/n
    for n in (16, 64, 256):
        s = new_stream(100 + n, 0)
        x = np.log(sample_inverse_gaussian(IGParams(1.0, float(n)), s, size=20_000))
        se = x.std(ddof=1) / math.sqrt(x.size)
        assert abs(x.mean() + 1.0 / (2 * n)) < 3 * se, n
        assert abs(x.var(ddof=1) - 1.0 / n) < 0.10 / n, n


def test_gamma_half():
    s = new_stream(10, 0)
    x = sample_gamma_half(s, size=100_000)
    assert np.all(x > 0)
    m, h = moment_ci(x, 1, 0.01)
    assert abs(m - 0.5) < h
    rep = ks_one_sample(x[:10_000], gamma_half_cdf, 0.01)
    assert rep.passed and rep.statistic < 0.0163


def test_brownian_marginal_variance():
    s = new_stream(11, 0)
    vals = np.array([sample_brownian_path(0.0, 1.0, 0.01, s).values[-1]
                     for _ in range(10_000)])
    v = vals.var(ddof=1)
    assert abs(v - 1.0) < 4 * math.sqrt(2.0 / vals.size)


def test_brownian_two_sided_independence():
    s = new_stream(12, 0)
    left, right = [], []
    for _ in range(4000):
        p = sample_brownian_path(-1.0, 1.0, 0.1, s)
        assert p.values[p.index_of(0.0)] == 0.0
        left.append(p.values[0])
        right.append(p.values[-1])
    cov = np.mean(np.array(left) * np.array(right))
    assert abs(cov) < 4.0 / math.sqrt(len(left))


def test_brownian_preconditions():
    s = new_stream(13, 0)
    with pytest.raises(ValueError):
        sample_brownian_path(0.0, 1.0, 0.0, s)
    with pytest.raises(ValueError):
        sample_brownian_path(1.0, 1.0, 0.1, s)


def test_gbm_deterministic_transform():
    n = 200
    b = SampledPath(0.0, 0.01, np.zeros(n + 1), PathKind.BROWNIAN)
    g = gbm_from_brownian(b)
    assert g.kind is PathKind.GBM
    assert abs(g.values[-1] - math.exp(-1.0)) < 1e-12


def test_gbm_martingale_and_log_moment():
    s = new_stream(14, 0)
    ends = np.array([gbm_from_brownian(sample_brownian_path(0.0, 1.0, 0.01, s)).values[-1]
                     for _ in range(10_000)])
    m, h = moment_ci(ends, 1, 0.01)
    assert abs(m - 1.0) < h
    lm, lh = moment_ci(np.log(ends), 1, 0.01)
    assert abs(lm + 0.5) < lh


def test_gbm_grid_identity():
    s = new_stream(15, 0)
    b = sample_brownian_path(-2.0, 3.0, 0.05, s)
    g = gbm_from_brownian(b)
    rec = np.log(g.values) + g.times / 2.0
    assert np.max(np.abs(rec - b.values)) < 1e-12


def test_gbm_requires_brownian():
    g = SampledPath(0.0, 0.1, np.ones(5), PathKind.GBM)
    with pytest.raises(ValueError):
        gbm_from_brownian(g)


def test_inverse_gamma_half_cdf_values():
    assert abs(inverse_gamma_half_cdf(2.1981) - 0.5) < 1e-4
    assert inverse_gamma_half_cdf(1e12) > 1 - 1e-5
    assert inverse_gamma_half_cdf(1e-12) < 1e-10
    with pytest.raises(ValueError):
        inverse_gamma_half_cdf(0.0)
    x = np.linspace(0.1, 50, 200)
    assert np.all(np.diff(inverse_gamma_half_cdf(x)) > 0)


def test_inverse_gamma_half_cdf_matches_quadrature():
    # density of 1/(2g): integrate the Gamma(1/2,1) density transformed
    def dens(x):
        return math.exp(-1.0 / (2 * x)) / (math.sqrt(2.0 * math.pi) * x ** 1.5)

    for x0 in (0.5, 2.0, 10.0):
        val, _ = si.quad(dens, 0, x0, limit=200)
        assert abs(val - inverse_gamma_half_cdf(x0)) < 1e-9
