import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csdlab.density import CondGaussian, csd_distance, fit_step, nll

LOG_2PI = math.log(2 * math.pi)


def fixed_model(dim, logvar, normalize=False):
    """Model with mu(s) = s and a constant per-dim log-variance."""
    m = CondGaussian(dim, hidden=(4,), normalize=normalize, rng=0)
    for net in (m.mu_net, m.logvar_net):
        net.weights[-1].data[:] = 0.0
        net.biases[-1].data[:] = 0.0
    m.logvar_net.biases[-1].data[:] = logvar
    return m


def test_nll_standard_normal_at_mean():
    m = fixed_model(2, 0.0)
    assert nll(m, [0.3, -0.2], [0.3, -0.2]) == pytest.approx(LOG_2PI, abs=1e-12)


def test_nll_unit_residual():
    m = fixed_model(2, 0.0)
    assert nll(m, [0.0, 0.0], [1.0, 1.0]) == pytest.approx(2.8378770664, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-2, 2))
def test_nll_matches_scalar_log_pdf(x, y, logvar):
    m = fixed_model(1, logvar)
    sigma = math.exp(0.5 * logvar)
    # independent oracle: textbook univariate normal density
    pdf = math.exp(-0.5 * ((y - x) / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
    assert nll(m, [x], [y]) == pytest.approx(-math.log(pdf), rel=1e-12, abs=1e-12)


def test_csd_distance_unit_residual():
    assert csd_distance(fixed_model(2, 0.0), [0.0, 0.0], [1.0, 1.0]) == pytest.approx(2.0, abs=1e-12)


def test_csd_distance_zero_at_mean():
    assert csd_distance(fixed_model(3, [0.5, -1.0, 2.0], True), [0.1, 0.2, 0.3], [0.1, 0.2, 0.3]) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_csd_is_twice_nll_minus_constant_for_unit_variance(seed):
    rng = np.random.default_rng(seed)
    m = fixed_model(3, 0.0)
    s, s2 = rng.normal(size=3), rng.normal(size=3)
    assert csd_distance(m, s, s2) == pytest.approx(2 * nll(m, s, s2) - 3 * LOG_2PI, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_csd_nonnegative_and_grows_with_residual(seed):
    rng = np.random.default_rng(seed)
    m = CondGaussian(3, hidden=(8,), rng=seed)
    s = rng.normal(size=3)
    mu, _ = m.predict(s)
    direction = rng.normal(size=3)
    values = [csd_distance(m, s, mu + t * direction) for t in (0.0, 0.5, 1.0, 2.0)]
    assert values[0] == pytest.approx(0.0, abs=1e-20)
    assert all(v >= 0 for v in values)
    assert values == sorted(values)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_normalized_variances_have_unit_product(seed):
    m = CondGaussian(4, hidden=(8,), rng=seed)
    s = np.random.default_rng(seed).normal(size=(5, 4))
    var = m.distance_variances(s)
    np.testing.assert_allclose(np.log(var).mean(axis=-1), 0.0, atol=1e-9)


def test_variance_normalization_scale_invariant():
    a = fixed_model(2, [0.0, 1.0], True)
    b = fixed_model(2, [3.0, 4.0], True)
    assert csd_distance(a, [0, 0], [1.0, 2.0]) == pytest.approx(csd_distance(b, [0, 0], [1.0, 2.0]), abs=1e-12)


def test_zero_lr_step_leaves_model():
    m = CondGaussian(2, hidden=(8,), rng=1)
    before = [p.data.copy() for p in m.parameters()]
    rng = np.random.default_rng(0)
    fit_step(m, rng.normal(size=(16, 2)), rng.normal(size=(16, 2)), lr=0.0)
    for p, b in zip(m.parameters(), before):
        np.testing.assert_array_equal(p.data, b)


def test_fit_rejects_empty_batch():
    with pytest.raises(ValueError):
        fit_step(CondGaussian(2, rng=0), np.zeros((0, 2)), np.zeros((0, 2)))


def test_recovers_noiseless_identity_dynamics():
    rng = np.random.default_rng(0)
    m = CondGaussian(2, hidden=(32, 32), lr=3e-3, rng=1)
    s = rng.uniform(-1, 1, size=(4000, 2))
    for _ in range(1500):
        idx = rng.integers(0, len(s), 256)
        fit_step(m, s[idx], s[idx])
    probe = rng.uniform(-1, 1, size=(500, 2))
    mu, _ = m.predict(probe)
    assert np.max(np.abs(mu - probe)) <= 1e-2


def test_recovers_noise_variance():
    rng = np.random.default_rng(0)
    sigma = np.array([0.05, 0.2])
    m = CondGaussian(2, hidden=(32, 32), lr=3e-3, rng=1)
    s = rng.uniform(-1, 1, size=(4000, 2))
    s_next = s + rng.normal(size=s.shape) * sigma
    for k in range(2000):
        idx = rng.integers(0, len(s), 256)
        fit_step(m, s[idx], s_next[idx], lr=3e-3 if k < 1500 else 3e-4)
    _, var = m.predict(rng.uniform(-0.8, 0.8, size=(200, 2)))
    np.testing.assert_allclose(var.mean(axis=0), sigma**2, rtol=0.1)
