import math

import numpy as np
import pytest

from vbnet.errors import ShapeError
from vbnet.ndcore import RngState, softplus
from vbnet.variational import (GaussianVariational, Mode, VariationalState, grad_log_terms,
                               init_state, log_q, reparam_sample)
from conftest import central_diff, max_rel_err

HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


def test_reparam_zero_noise_returns_mu():
    v = GaussianVariational([1.0, -2.0], [0.3, -1.0])
    assert np.array_equal(reparam_sample(v, [0.0, 0.0]), v.mu)


def test_reparam_vanishing_scale():
    v = GaussianVariational([0.7], [-50.0])
    assert abs(reparam_sample(v, [3.0])[0] - 0.7) < 1e-15


def test_reparam_example():
    v = GaussianVariational([1.0], [0.0])
    assert reparam_sample(v, [2.0])[0] == pytest.approx(1 + 2 * math.log(2), abs=1e-15)


def test_reparam_shape_error():
    with pytest.raises(ShapeError):
        reparam_sample(GaussianVariational([0.0, 0.0], [0.0, 0.0]), [1.0])


def test_reparam_moments():
    mu = np.array([0.5, -1.0, 3.0])
    rho = np.array([-1.0, 0.0, 1.5])
    v = GaussianVariational(mu, rho)
    n = 10**5
    eps = RngState(99).std_normal(n * 3).reshape(n, 3)
    draws = np.array([reparam_sample(v, e) for e in eps[:2000]])  # call-path check
    assert draws.shape == (2000, 3)
    draws = mu + eps * softplus(rho)
    sigma = softplus(rho)
    assert np.all(np.abs(draws.mean(axis=0) - mu) < 4 * sigma / math.sqrt(n))
    assert np.all(np.abs(draws.std(axis=0) / sigma - 1) < 0.05)


def test_log_q_at_mean_unit_scale():
    rho1 = math.log(math.e - 1)  # softplus(rho1) == 1
    assert log_q(GaussianVariational([0.2], [rho1]), [0.2]) == pytest.approx(-HALF_LOG_2PI, abs=1e-14)


def test_log_q_factorizes(np_rng):
    mu, rho, th = np_rng.normal(size=(3, 2))
    joint = log_q(GaussianVariational(mu, rho), th)
    parts = sum(log_q(GaussianVariational([mu[i]], [rho[i]]), [th[i]]) for i in range(2))
    assert joint == pytest.approx(parts, abs=1e-12)


def test_log_q_example_sigma_ln2():
    # logpdf N(0.5; 0, (ln 2)^2) evaluated with mpmath
    assert log_q(GaussianVariational([0.0], [0.0]), [0.5]) == pytest.approx(-0.812596735248709389, abs=1e-12)


def test_log_q_maximized_at_mean(np_rng):
    v = GaussianVariational(np_rng.normal(size=4), np_rng.normal(size=4))
    top = log_q(v, v.mu)
    for _ in range(50):
        delta = np_rng.normal(size=4)
        assert log_q(v, v.mu + delta) <= top


def test_grad_log_terms_zero_eps_kills_rho_path():
    v = GaussianVariational([0.3, -0.2], [0.1, 0.4])
    _, d_rho = grad_log_terms(v, [0.0, 0.0], [5.0, -7.0], include_log_q=False)
    assert np.array_equal(d_rho, [0.0, 0.0])


@pytest.mark.parametrize("coef", [0.0, 1.7])
def test_grad_log_terms_finite_difference(coef):
    """f(mu, rho) = log q(theta) + coef * theta^2 / 2 with theta = mu + eps softplus(rho)."""
    eps = np.array([0.8])

    def f(params):
        v = GaussianVariational(params[:1], params[1:])
        th = reparam_sample(v, eps)
        return log_q(v, th) + coef * 0.5 * float(th @ th)

    p0 = np.array([0.4, -0.6])
    v0 = GaussianVariational(p0[:1], p0[1:])
    th0 = reparam_sample(v0, eps)
    d_mu, d_rho = grad_log_terms(v0, eps, coef * th0)
    fd = central_diff(f, p0)
    assert abs(d_mu[0] - fd[0]) <= 1e-5 * max(abs(fd[0]), 1e-3)
    assert max_rel_err(d_rho, fd[1:]) < 1e-5


def test_grad_log_terms_total_log_q_derivative():
    # log q at a reparameterized draw depends on rho only through -log sigma
    v = GaussianVariational([0.0, 1.0], [-1.0, 2.0])
    d_mu, d_rho = grad_log_terms(v, [0.3, -1.2], np.zeros(2))
    np.testing.assert_allclose(d_mu, 0.0, atol=1e-12)
    from vbnet.ndcore import softplus_deriv
    np.testing.assert_allclose(d_rho, -softplus_deriv(v.rho) / v.sigma, rtol=1e-12)


def test_state_vector_roundtrip():
    st = init_state(np.arange(5.0), Mode.SVAR, init_variance=0.4)
    assert st.mode is Mode.SVAR
    assert softplus(st.variance_param.mu[0]) == pytest.approx(0.4)
    back = st.from_vector(st.to_vector())
    assert np.array_equal(back.to_vector(), st.to_vector())
    fixed = init_state(np.zeros(3), Mode.FIXED)
    assert fixed.variance_param is None and fixed.to_vector().size == 6
    assert np.all(fixed.weights.rho == -3.0)
