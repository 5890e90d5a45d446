"""Limiting kernel, quadratic form, operator checks, line kernel, identities."""

import math

import numpy as np
import pytest

from vrjplab.continuum_kernel import (CircleKernel, DegeneratePathError,
                                      LineKernel, apply_kernel,
                                      dufresne_ratio_check, flux_closed_form,
                                      flux_fd, kernel_eval, kernel_matrix,
                                      line_kernel_eval, mbg_transform_check,
                                      operator_residual, quadratic_form,
                                      quadratic_form_double_route,
                                      sample_kernel_diagonal,
                                      sample_line_diagonal,
                                      sample_quadratic_form, two_sided_gbm,
                                      twisted_neumann_mismatch)
from vrjplab.stats import ks_one_sample, ks_two_sample
from vrjplab.stochastic import (PathKind, SampledPath, inverse_gamma_half_cdf,
                                new_stream, scaled_inverse_gamma_half_cdf)


def _flat_gbm(lam, step):
    half = int(round(lam / step))
    h = lam / half
    times = -lam + h * np.arange(2 * half + 1)
    return SampledPath(-lam, h, np.exp(-times / 2.0), PathKind.GBM)


def test_kernel_deterministic_value():
    k = CircleKernel.from_path(_flat_gbm(2.0, 1e-3))
    expect = (math.e ** 2 - math.e ** -2) / (math.e - math.e ** -1) ** 2
    assert kernel_eval(k, 0.0, 0.0) == pytest.approx(expect, rel=1e-6)


def test_kernel_symmetry_and_positivity():
    k = CircleKernel.sample(1.0, 1e-3, new_stream(1, 0))
    for (t, t2) in ((0.3, -0.4), (-0.9, 0.9), (0.0, 0.5)):
        a = kernel_eval(k, t, t2)
        assert a == kernel_eval(k, t2, t)
        assert a > 0


def test_kernel_range_and_degenerate_errors():
    k = CircleKernel.sample(1.0, 1e-3, new_stream(2, 0))
    with pytest.raises(ValueError):
        kernel_eval(k, 1.5, 0.0)
    flat = SampledPath(-1.0, 1e-2, np.ones(201), PathKind.GBM)
    with pytest.raises(DegeneratePathError):
        CircleKernel.from_path(flat)


def test_diagonal_law_and_t_invariance():
    s0 = sample_kernel_diagonal(1.0, 0.0, 1e-3, 4000, new_stream(3, 0))
    s_half = sample_kernel_diagonal(1.0, 0.5, 1e-3, 4000, new_stream(3, 50))
    assert ks_one_sample(s0, inverse_gamma_half_cdf, 0.01).passed
    assert ks_two_sample(s0, s_half, 0.01).passed


def test_quadratic_form_zero_and_positive():
    k = CircleKernel.sample(1.0, 1e-3, new_stream(4, 0))
    assert quadratic_form(k, np.zeros(k.gbm.values.size)) == 0.0
    t = k.gbm.times
    for f in (np.sin(np.pi * t), t ** 2, np.cos(3 * t) + 0.1):
        assert quadratic_form(k, f) > 0


def test_quadratic_form_double_route_oracle():
    k = CircleKernel.sample(1.0, 1e-3, new_stream(5, 3))
    f = np.cos(np.pi * k.gbm.times) + 2.0
    q1 = quadratic_form(k, f)
    q2 = quadratic_form_double_route(k, f)
    assert abs(q1 - q2) / abs(q2) < 1e-6


def test_quadratic_form_law_f_one():
    lam = 1.0
    qf = sample_quadratic_form(lam, lambda t: np.ones_like(t), 1e-3, 4000,
                               new_stream(6, 0))
    cdf = lambda x: scaled_inverse_gamma_half_cdf(x, (2 * lam) ** 2)
    assert ks_one_sample(qf, cdf, 0.01).passed


def test_apply_kernel_matches_matrix_route():
    k = CircleKernel.sample(1.0, 1e-3, new_stream(7, 0))
    f = np.cos(np.pi * k.gbm.times) + 2.0
    g = apply_kernel(k, f)
    gm = kernel_matrix(k)
    w = np.full(f.size, k.gbm.step)
    w[0] = w[-1] = 0.5 * k.gbm.step
    g2 = gm @ (w * f)
    assert np.max(np.abs(g - g2)) < 1e-10 * np.max(np.abs(g2))


def test_apply_kernel_boundary_and_neumann():
    k = CircleKernel.sample(1.0, 1e-3, new_stream(8, 0))
    f = np.sin(2 * np.pi * k.gbm.times) + 1.5
    g = apply_kernel(k, f)
    assert abs(g[0] - g[-1]) < 1e-8 * max(abs(g[0]), abs(g[-1]))
    assert twisted_neumann_mismatch(k, g) < 1e-3


def test_apply_kernel_linearity():
    k = CircleKernel.sample(0.5, 1e-3, new_stream(9, 0))
    t = k.gbm.times
    f1, f2 = np.cos(t), np.exp(-t * t)
    lhs = apply_kernel(k, 2.0 * f1 + 3.0 * f2)
    rhs = 2.0 * apply_kernel(k, f1) + 3.0 * apply_kernel(k, f2)
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * np.max(np.abs(rhs))


def test_operator_residual_small():
    k = CircleKernel.sample(1.0, 1e-3, new_stream(10, 0))
    f = np.cos(np.pi * k.gbm.times) + 2.0
    assert operator_residual(k, f) < 1e-2
    assert operator_residual(k, np.zeros_like(f) + 1e-300) == pytest.approx(0.0, abs=1e-6)


def test_flux_fd_matches_closed_form():
    k = CircleKernel.sample(1.0, 1e-3, new_stream(11, 0))
    f = np.cos(np.pi * k.gbm.times) + 2.0
    g = apply_kernel(k, f)
    a = flux_fd(k, g)
    b = flux_closed_form(k, f)
    assert np.max(np.abs(a - b)) / np.max(np.abs(b)) < 1e-3


def test_line_kernel_diag_law():
    s = sample_line_diagonal(40.0, 1e-3, 4000, new_stream(12, 0))
    assert ks_one_sample(s, inverse_gamma_half_cdf, 0.01).passed


def test_line_kernel_truncation_bias_pathwise():
    gbm = two_sided_gbm(40.0, 1e-3, new_stream(13, 0))
    ck = CircleKernel.from_path(gbm)
    lk = LineKernel.from_path(gbm)
    worst = 0.0
    for t in np.linspace(-2, 2, 7):
        for t2 in np.linspace(-2, 2, 7):
            worst = max(worst, abs(kernel_eval(ck, t, t2) - line_kernel_eval(lk, t, t2)))
    assert worst < 1e-3


def test_line_kernel_ratio_is_geometric_path():
    lk = LineKernel.sample(20.0, 1e-3, new_stream(14, 0))
    g00 = line_kernel_eval(lk, 0.0, 0.0)
    for t in (0.5, 1.0, 3.0):
        ratio = line_kernel_eval(lk, 0.0, t) / g00
        m_t, _ = lk._read(t)
        assert ratio == pytest.approx(m_t, rel=1e-12)


def test_line_kernel_range_guard():
    lk = LineKernel.sample(10.0, 1e-2, new_stream(15, 0))
    with pytest.raises(ValueError):
        line_kernel_eval(lk, 6.0, 0.0)


def test_dufresne_ratio_small_lambda():
    rep = dufresne_ratio_check(0.1, new_stream(16, 0), n_rep=4000)
    assert rep.passed, rep


def test_mbg_transform():
    rep = mbg_transform_check(new_stream(17, 0), n_rep=4000, step=2e-3, tail=30.0)
    assert rep.passed
    assert abs(rep.mean_log[1] + 0.5) < 3 * rep.se_mean[1]
    assert abs(rep.var_log[2] - 2.0) < 0.2


def test_mbg_v_at_zero_is_one():
    # V_0 is the ratio of identical integrals
    gen = new_stream(20, 0).gen
    alpha = np.concatenate([[0.0], np.cumsum(gen.standard_normal(2000) * math.sqrt(1e-2))])
    t = 1e-2 * np.arange(2001)
    integrand = np.exp(2 * alpha - t)
    total = np.trapezoid(integrand, dx=1e-2)
    v0 = math.exp(0.0) * total / total
    assert v0 == 1.0


def test_interpolated_discrete_matches_kernel_law():
    # interpolated discrete entries at (0.3, -0.4), n = 256, vs kernel samples
    from vrjplab.green_circle import green_entries_from_a
    from vrjplab.stochastic import IGParams, sample_inverse_gaussian

    n, nrep = 256, 3000
    size = n
    dim = 2 * size + 1
    a = sample_inverse_gaussian(IGParams(1.0, float(n)), new_stream(18, 0),
                                size=nrep * dim).reshape(nrep, dim)
    t, t2 = 0.3, -0.4
    x, y = t * n + size, t2 * n + size
    ix, iy = int(math.floor(x)), int(math.floor(y))
    fx, fy = x - ix, y - iy
    corner = {}
    for dx in (0, 1):
        for dy in (0, 1):
            corner[(dx, dy)] = green_entries_from_a(a, float(n),
                                                    (ix + dx) % dim, (iy + dy) % dim)
    disc = ((1 - fx) * (1 - fy) * corner[(0, 0)] + fx * (1 - fy) * corner[(1, 0)]
            + (1 - fx) * fy * corner[(0, 1)] + fx * fy * corner[(1, 1)])

    cont = np.empty(nrep)
    s = new_stream(19, 0)
    for r in range(nrep):
        k = CircleKernel.sample(1.0, 2e-3, s.substream(r + 1))
        cont[r] = kernel_eval(k, t, t2)
    rep = ks_two_sample(disc, cont, 0.01)
    assert rep.passed, rep
