import math

import numpy as np
import pytest

from vbnet.errors import ConfigError, ShapeError
from vbnet.likelihood import (FixedVarianceLik, LearnedVarianceLik, grad_log_lik,
                              log_lik_fixed, log_lik_learned)
from vbnet.ndcore import softplus
from conftest import central_diff, max_rel_err

S_UNIT = math.log(math.e - 1)


def test_fixed_examples():
    assert log_lik_fixed(FixedVarianceLik(1.0), [[2.0]], [[2.0]]) == pytest.approx(-0.5 * math.log(2 * math.pi))
    assert log_lik_fixed(0.5, [[1.0]], [[0.0]]) == pytest.approx(-1.57236494292470009, abs=1e-12)


def test_fixed_additive_in_rows(np_rng):
    y, yh = np_rng.normal(size=(2, 3, 2))
    one = log_lik_fixed(0.3, y, yh)
    assert log_lik_fixed(0.3, np.vstack([y, y]), np.vstack([yh, yh])) == pytest.approx(2 * one)


def test_fixed_permutation_invariant(np_rng):
    y, yh = np_rng.normal(size=(2, 9, 1))
    perm = np_rng.permutation(9)
    assert log_lik_fixed(0.4, y[perm], yh[perm]) == pytest.approx(log_lik_fixed(0.4, y, yh), abs=1e-12)


def test_shape_mismatch():
    with pytest.raises(ShapeError):
        log_lik_fixed(1.0, np.zeros((3, 1)), np.zeros((2, 1)))
    with pytest.raises(ConfigError):
        FixedVarianceLik(-1.0)


def test_learned_examples():
    assert log_lik_learned(S_UNIT, [[0.0]], [[0.0]]) == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-12)
    assert log_lik_learned(0.0, [[1.0]], [[0.0]]) == pytest.approx(-1.45702959335832228, abs=1e-12)
    assert LearnedVarianceLik(0.0).variance == pytest.approx(math.log(2))


def test_learned_equals_fixed(np_rng):
    for _ in range(10):
        s = np_rng.normal()
        y, yh = np_rng.normal(size=(2, 6, 2))
        assert log_lik_learned(s, y, yh) == pytest.approx(log_lik_fixed(softplus(s), y, yh), abs=1e-12)


def test_grad_zero_residual():
    d_yhat, d_s = grad_log_lik([[1.0], [2.0]], [[1.0], [2.0]], s=0.1)
    assert np.array_equal(d_yhat, np.zeros((2, 1)))
    assert d_s < 0  # zero residual pulls the variance down


def test_grad_sign_large_residuals():
    _, d_s = grad_log_lik([[10.0], [-10.0]], [[0.0], [0.0]], s=-2.0)
    assert d_s > 0


def test_grad_requires_one_mode():
    with pytest.raises(ConfigError):
        grad_log_lik([[0.0]], [[0.0]])
    with pytest.raises(ConfigError):
        grad_log_lik([[0.0]], [[0.0]], s=0.0, sigma0_sq=1.0)
    d_yhat, d_s = grad_log_lik([[1.0]], [[0.0]], sigma0_sq=0.5)
    assert d_s is None and d_yhat[0, 0] == 2.0


def test_grad_finite_difference_20_instances(np_rng):
    for _ in range(20):
        n, q = np_rng.integers(1, 6), np_rng.integers(1, 3)
        y, yh = np_rng.normal(size=(2, n, q))
        s = np_rng.normal()
        d_yhat, d_s = grad_log_lik(y, yh, s=s)
        fd_y = central_diff(lambda v: log_lik_learned(s, y, v.reshape(n, q)), yh.ravel())
        fd_s = central_diff(lambda v: log_lik_learned(v[0], y, yh), [s])
        assert max_rel_err(d_yhat.ravel(), fd_y) < 1e-6
        assert max_rel_err([d_s], fd_s) < 1e-6


def test_learned_maximized_at_mean_squared_residual(np_rng):
    y, yh = np_rng.normal(size=(2, 12, 2))
    target = float(np.mean((y - yh) ** 2))
    f = lambda s: -log_lik_learned(s, y, yh)
    # golden-section search on s
    a, b = -10.0, 10.0
    g = (math.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    while b - a > 1e-10:
        if f(c) < f(d):
            b, d = d, c
            c = b - g * (b - a)
        else:
            a, c = c, d
            d = a + g * (b - a)
    assert softplus(0.5 * (a + b)) == pytest.approx(target, abs=1e-6)
