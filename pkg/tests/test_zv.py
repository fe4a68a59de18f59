import warnings

import numpy as np
import pytest
from scipy.special import digamma

from gjrzv.model import GjrPosterior, PriorSpec
from gjrzv.samplers import ChainSample, HmcConfig, hmc_sample
from gjrzv.simulate import DEFAULT_TRUTH, simulate_series
from gjrzv.zv import (
    ZvWarning,
    apply,
    control_variates,
    estimate,
    fit_linear,
    fit_quadratic,
    quadratic_covariates,
    renormalize,
)


def gaussian_chain(rng, m=1.5, s2=0.7, n=2000, d=1):
    th = m + np.sqrt(s2) * rng.standard_normal((n, d))
    grads = -(th - m) / s2
    lp = -0.5 * np.sum((th - m) ** 2, axis=1) / s2
    return ChainSample(th, lp, grads, 1.0)


@pytest.fixture(scope="module")
def garch_chains():
    rng = np.random.default_rng(3)
    x = simulate_series(DEFAULT_TRUTH, 400, rng)
    post = GjrPosterior(x, "normal", PriorSpec.all(1000.0))
    cfg = HmcConfig(n_draws=1500, n_burnin=500, seed=1)
    c1 = hmc_sample(post, cfg, post.initial_point())
    c2 = hmc_sample(post, HmcConfig(n_draws=1500, n_burnin=500, seed=2, epsilon=c1.epsilon), post.initial_point())
    return post, c1, c2


class TestControlVariates:
    def test_zero_gradient(self):
        c = ChainSample(np.ones((4, 2)), np.zeros(4), np.zeros((4, 2)), 1.0)
        np.testing.assert_array_equal(control_variates(c), 0.0)

    def test_gaussian_closed_form(self, rng):
        c = gaussian_chain(rng, m=1.5, s2=0.7)
        np.testing.assert_allclose(control_variates(c), (c.draws - 1.5) / (2 * 0.7), rtol=1e-14)

    def test_matches_model_gradient(self, garch_chains):
        post, c1, _ = garch_chains
        for th, z in zip(c1.draws[:5], control_variates(c1)[:5]):
            np.testing.assert_array_equal(z, -0.5 * post.grad(th))

    def test_missing_gradients(self):
        class Bare:
            draws = np.zeros((3, 1))
            grads = None

        with pytest.raises(ValueError):
            control_variates(Bare())


class TestLinear:
    def test_gaussian_exact(self, rng):
        m, s2 = 1.5, 0.7
        c = gaussian_chain(rng, m, s2)
        a = fit_linear(c, c.draws[:, 0])
        assert a[0] == pytest.approx(-2 * s2, rel=1e-12)
        ft = renormalize(c, a, c.draws[:, 0])
        np.testing.assert_allclose(ft, m, atol=1e-12)

    def test_constant_f(self, rng):
        c = gaussian_chain(rng, d=3)
        np.testing.assert_allclose(fit_linear(c, np.full(c.n_draws, 4.2)), 0.0, atol=1e-14)

    def test_equals_ols(self, garch_chains):
        post, c1, _ = garch_chains
        f = post.to_natural(c1.draws)[:, 1]
        z = control_variates(c1)
        X = np.column_stack([np.ones(c1.n_draws), z])
        beta = np.linalg.lstsq(X, f, rcond=None)[0]
        np.testing.assert_allclose(fit_linear(c1, f), -beta[1:], rtol=1e-8, atol=1e-10)

    def test_collinear_design_warns(self, rng):
        th = rng.standard_normal((500, 1))
        th2 = np.hstack([th, th])
        g = np.hstack([-th, -th])
        c = ChainSample(th2, np.zeros(500), g, 1.0)
        with pytest.warns(ZvWarning, match="ill-conditioned"):
            a = fit_linear(c, th[:, 0])
        assert np.all(np.isfinite(a))


class TestQuadratic:
    def test_gaussian_second_moment_exact(self, rng):
        c = gaussian_chain(rng, m=0.4, s2=1.3)
        f = c.draws[:, 0] ** 2
        coef = fit_quadratic(c, f)
        ft = renormalize(c, coef, f)
        assert ft.var() < 1e-16 * f.var()
        assert ft.mean() == pytest.approx(0.4**2 + 1.3, rel=1e-10)

    def test_b_symmetric_and_sizes(self, garch_chains):
        post, c1, _ = garch_chains
        a, B = fit_quadratic(c1, post.to_natural(c1.draws))
        d = c1.dim
        assert a.shape == (d, d) and B.shape == (d, d, d)
        np.testing.assert_array_equal(B, np.swapaxes(B, 1, 2))
        assert quadratic_covariates(c1.draws, control_variates(c1)).shape[1] == d + d * (d + 1) // 2
        _, Bd = fit_quadratic(c1, post.to_natural(c1.draws)[:, 0], diagonal=True)
        np.testing.assert_array_equal(Bd, np.diag(np.diag(Bd)))

    def test_covariates_have_zero_mean_on_gaussian(self, rng):
        c = gaussian_chain(rng, n=200000, d=2)
        G = quadratic_covariates(c.draws, control_variates(c))
        assert np.all(np.abs(G.mean(axis=0)) < 0.02)

    def test_variance_ordering_same_chain(self, garch_chains):
        post, c1, _ = garch_chains
        f = post.to_natural(c1.draws)
        fl = renormalize(c1, fit_linear(c1, f), f)
        fq = renormalize(c1, fit_quadratic(c1, f), f)
        v, vl, vq = f.var(axis=0), fl.var(axis=0), fq.var(axis=0)
        assert np.all(vq <= vl * (1 + 1e-9)) and np.all(vl <= v * (1 + 1e-9))


class TestApply:
    def test_zero_coefficients_give_raw_mean(self, rng):
        c = gaussian_chain(rng, d=2)
        f = c.draws ** 3
        est = apply(c, f, linear=np.zeros((2, 2)), quadratic=(np.zeros((2, 2)), np.zeros((2, 2, 2))))
        np.testing.assert_array_equal(est.linear, f.mean(axis=0))
        np.testing.assert_allclose(est.quadratic, f.mean(axis=0), rtol=1e-15)

    def test_gaussian_two_chain_exact(self, rng):
        fit, ev = gaussian_chain(rng, m=-0.3, s2=2.0), gaussian_chain(rng, m=-0.3, s2=2.0)
        est = estimate(fit, ev, names=["theta"])
        assert est.linear[0] == pytest.approx(-0.3, abs=1e-12)
        assert est.linear_se[0] < 1e-12
        assert not est.same_chain

    def test_constant_shift(self, garch_chains):
        post, c1, c2 = garch_chains
        f1, f2 = post.to_natural(c1.draws), post.to_natural(c2.draws)
        a = estimate(c1, c2, f1, f2)
        b = estimate(c1, c2, f1 + 5.0, f2 + 5.0)
        for field in ("raw", "linear", "quadratic"):
            np.testing.assert_allclose(getattr(b, field) - getattr(a, field), 5.0, atol=1e-9)

    def test_same_chain_flagged(self, rng):
        c = gaussian_chain(rng)
        with pytest.warns(ZvWarning, match="estimation chain"):
            est = estimate(c, c)
        assert est.same_chain

    def test_table_rows(self, garch_chains):
        post, c1, c2 = garch_chains
        est = estimate(c1, c2, to_natural=post.to_natural, names=post.names)
        rows = est.table()
        assert [r["parameter"] for r in rows] == list(post.names)
        assert all(r["raw_se"] >= 0 and r["zv_q_se"] >= 0 for r in rows)


def test_unbiased_on_known_posterior():
    # theta = log X with X ~ Gamma(a, 1): E[theta] = digamma(a)
    a = 2.5
    hits = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        chains = []
        for _ in range(2):
            th = np.log(rng.gamma(a, size=(3000, 1)))
            grads = a - np.exp(th)
            chains.append(ChainSample(th, np.zeros(3000), grads, 1.0))
        est = estimate(*chains)
        for mean, se in ((est.linear, est.linear_se), (est.quadratic, est.quadratic_se)):
            hits += abs(mean[0] - digamma(a)) < 3 * se[0]
    assert hits >= 36  # 40 checks at roughly 99.7% coverage each
