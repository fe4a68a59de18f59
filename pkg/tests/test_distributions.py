import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats
from scipy.special import gamma as G

from gjrzv.distributions import (
    ErrorDist,
    gt_moment,
    kernel_constants,
    log_density,
    log_density_grad,
    sample,
)

from conftest import DISTS

VARIANTS = [
    ErrorDist.normal(),
    ErrorDist.student_t(2.5),
    ErrorDist.student_t(8.0),
    ErrorDist.ged(0.8),
    ErrorDist.ged(1.4),
    ErrorDist.ged(3.0),
    ErrorDist.generalized_t(1.0, 4.0),
    ErrorDist.generalized_t(2.0, 8.0),
    ErrorDist.generalized_t(3.5, 1.5),
]


def _quad(fn):
    # split at 0 because GED/GT have a kink there
    left = integrate.quad(fn, -np.inf, 0, epsabs=1e-13, epsrel=1e-12, limit=400)[0]
    right = integrate.quad(fn, 0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=400)[0]
    return left + right


def test_normal_at_zero():
    assert log_density(0.0, ErrorDist.normal()) == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-15)


def test_ged_two_is_normal_on_grid():
    e = np.linspace(-8, 8, 2001)
    diff = log_density(e, ErrorDist.ged(2.0)) - log_density(e, ErrorDist.normal())
    assert np.max(np.abs(diff)) < 1e-12


def test_student_t_matches_brute_force_formula():
    nu, e = 8.0, 0.7
    raw = lambda u: (1 + u * u / (nu - 2)) ** (-(nu + 1) / 2)
    z = _quad(raw)
    assert log_density(e, ErrorDist.student_t(nu)) == pytest.approx(math.log(raw(e) / z), abs=1e-10)


def test_student_t_agrees_with_scipy():
    nu = 5.0
    s = math.sqrt((nu - 2) / nu)
    e = np.linspace(-6, 6, 101)
    ref = stats.t.logpdf(e / s, nu) - math.log(s)
    np.testing.assert_allclose(log_density(e, ErrorDist.student_t(nu)), ref, atol=1e-12)


def test_ged_agrees_with_scipy_gennorm():
    nu = 1.3
    scale = math.sqrt(G(1 / nu) / G(3 / nu))
    e = np.linspace(-6, 6, 101)
    ref = stats.gennorm.logpdf(e, nu, scale=scale)
    np.testing.assert_allclose(log_density(e, ErrorDist.ged(nu)), ref, atol=1e-12)


@pytest.mark.parametrize("dist", VARIANTS, ids=repr)
def test_density_integrates_to_one_with_unit_variance(dist):
    f = lambda u: math.exp(log_density(u, dist))
    assert _quad(f) == pytest.approx(1.0, abs=1e-6)
    assert _quad(lambda u: u * u * f(u)) == pytest.approx(1.0, abs=1e-6)


def test_student_t_large_nu_close_to_normal():
    e = np.linspace(-4, 4, 801)
    diff = log_density(e, ErrorDist.student_t(1e6)) - log_density(e, ErrorDist.normal())
    assert np.max(np.abs(diff)) < 1e-4


def _fd_shape(e, dist, k, step=1e-5):
    shape = dist.shape.copy()
    up, dn = shape.copy(), shape.copy()
    up[k] += step
    dn[k] -= step
    fu = log_density(e, ErrorDist.from_shape(dist.kind, up))
    fd = log_density(e, ErrorDist.from_shape(dist.kind, dn))
    return (fu - fd) / (2 * step)


@pytest.mark.parametrize("dist", VARIANTS, ids=repr)
def test_gradients_match_finite_differences(dist):
    e = np.array([-3.1, -0.9, -0.05, 0.3, 1.0, 2.4])
    de, dshape = log_density_grad(e, dist)
    step = 1e-5
    fd_e = (log_density(e + step, dist) - log_density(e - step, dist)) / (2 * step)
    np.testing.assert_allclose(de, fd_e, rtol=1e-6, atol=1e-8)
    for k in range(dist.n_shape):
        np.testing.assert_allclose(dshape[k], _fd_shape(e, dist, k), rtol=1e-6, atol=1e-8)


def test_spec_gradient_examples():
    de, _ = log_density_grad(0.0, ErrorDist.normal())
    assert de == 0.0
    t8 = ErrorDist.student_t(8.0)
    de, _ = log_density_grad(1.0, t8)
    fd = (log_density(1.0 + 1e-5, t8) - log_density(1.0 - 1e-5, t8)) / 2e-5
    assert de == pytest.approx(fd, rel=1e-6)
    g = ErrorDist.ged(1.4)
    _, dnu = log_density_grad(0.5, g)
    assert dnu[0] == pytest.approx(float(_fd_shape(0.5, g, 0)), rel=1e-6)


@pytest.mark.parametrize("dist", [ErrorDist.ged(1.4), ErrorDist.generalized_t(2.0, 3.0)], ids=repr)
def test_gradient_at_zero_is_zero(dist):
    de, _ = log_density_grad(0.0, dist)
    assert de == 0.0


@settings(max_examples=40, deadline=None)
@given(
    e=st.floats(-6, 6).filter(lambda v: abs(v) > 1e-3),
    nu=st.floats(2.2, 40),
)
def test_student_t_kernel_constants_consistent(e, nu):
    # the compiled kernel and the numpy density share their constants
    from gjrzv._recursion import _logf

    dist = ErrorDist.student_t(nu)
    code, c = kernel_constants(dist)
    ld, ge, gnu, _ = _logf(e, code, c)
    de, dshape = log_density_grad(e, dist)
    assert ld == pytest.approx(float(log_density(e, dist)), abs=1e-12)
    assert ge == pytest.approx(float(de), rel=1e-10, abs=1e-12)
    assert gnu == pytest.approx(float(dshape[0]), rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("name", list(DISTS))
def test_compiled_kernel_matches_numpy(name):
    from gjrzv._recursion import _logf

    dist = DISTS[name]
    code, c = kernel_constants(dist)
    for e in (-2.5, -0.3, 0.7, 1.9):
        ld, ge, g1, g2 = _logf(e, code, c)
        de, ds = log_density_grad(e, dist)
        assert ld == pytest.approx(float(log_density(e, dist)), abs=1e-12)
        assert ge == pytest.approx(float(de), rel=1e-10)
        got = [g1, g2][: dist.n_shape]
        np.testing.assert_allclose(got, np.ravel(ds), rtol=1e-9, atol=1e-12)


def test_sampling_is_reproducible():
    a = sample(ErrorDist.normal(), np.random.default_rng(5))
    b = sample(ErrorDist.normal(), np.random.default_rng(5))
    assert a == b


def test_student_t_sample_variance():
    x = sample(ErrorDist.student_t(8.0), np.random.default_rng(1), size=1_000_000)
    assert 0.98 <= x.var() <= 1.02


def test_ged_sample_kurtosis():
    nu = 0.8
    x = sample(ErrorDist.ged(nu), np.random.default_rng(2), size=1_000_000)
    target = G(1 / nu) * G(5 / nu) / G(3 / nu) ** 2 - 3
    assert stats.kurtosis(x) == pytest.approx(target, abs=0.3)


@pytest.mark.parametrize("dist", [ErrorDist.ged(1.4), ErrorDist.generalized_t(2.0, 6.0)], ids=repr)
def test_samplers_match_density(dist):
    x = sample(dist, np.random.default_rng(3), size=200_000)
    cdf = np.vectorize(lambda q: _quad_cdf(dist, q))
    res = stats.kstest(x[:5000], cdf)
    assert res.pvalue > 1e-3
    assert x.var() == pytest.approx(1.0, abs=0.03)


def _quad_cdf(dist, q):
    f = lambda u: math.exp(log_density(u, dist))
    if q <= 0:
        return integrate.quad(f, -np.inf, q, epsabs=1e-12)[0]
    return 0.5 + integrate.quad(f, 0, q, epsabs=1e-12)[0]


def test_gt_moment_second_moment_scales_to_one():
    for eta, nu in [(1.0, 4.0), (2.0, 8.0)]:
        dist = ErrorDist.generalized_t(eta, nu)
        f = lambda u: abs(u) * math.exp(log_density(u, dist))
        first = _quad(f)
        assert first == pytest.approx(gt_moment(1.0, eta, nu) / math.sqrt(gt_moment(2.0, eta, nu)), rel=1e-8)


@pytest.mark.parametrize(
    "kind,kw",
    [("t", {"nu": 2.0}), ("ged", {"nu": 0.0}), ("gt", {"eta": 2.0, "nu": 1.0}), ("normal", {"nu": 3.0}), ("cauchy", {})],
)
def test_invalid_shapes_rejected(kind, kw):
    with pytest.raises(ValueError):
        ErrorDist(kind, **kw)
