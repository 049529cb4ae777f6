import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from moddeepesn.errors import ConfigError, DataError, NumericalError
from moddeepesn.ip import IpConfig, activations, ip_update, kl_estimate, pretrain


def test_ip_update_at_origin():
    db, dg = ip_update(0.0, 1.0, 0.0, IpConfig(eta=0.01, mu=0.0, sigma=1.0))
    assert db == pytest.approx(0.0, abs=1e-12)
    assert dg == pytest.approx(0.01, abs=1e-12)


def test_ip_update_shifted_mean():
    db, dg = ip_update(0.0, 1.0, 0.0, IpConfig(eta=0.01, mu=0.5, sigma=1.0))
    assert db == pytest.approx(0.005, abs=1e-12)
    assert dg == pytest.approx(0.01, abs=1e-12)


@given(st.floats(-5, 5), st.floats(0.01, 5), st.floats(-3, 3), st.floats(-0.9, 0.9), st.floats(0.01, 2))
def test_ip_update_zero_rate(x, g, b, mu, sigma):
    db, dg = ip_update(x, g, b, IpConfig(eta=0.0, mu=mu, sigma=sigma))
    assert db == 0.0 and dg == 0.0


@given(st.floats(-5, 5), st.floats(0.01, 5), st.floats(-3, 3), st.floats(-0.9, 0.9), st.floats(0.01, 2))
def test_ip_update_matches_scalar_oracle(x, g, b, mu, sigma):
    eta = 1e-3
    y = math.tanh(g * x + b)
    s2 = sigma * sigma
    db = -eta * (-mu / s2 + (y / s2) * (2 * s2 + 1 - y * y + mu * y))
    dg = eta / g + db * x
    got_b, got_g = ip_update(x, g, b, IpConfig(eta=eta, mu=mu, sigma=sigma))
    # rounding scales with the summed terms (about eta / sigma^2), not with db
    slack = 1e-14 * eta / s2
    assert got_b == pytest.approx(db, rel=1e-12, abs=slack)
    assert got_g == pytest.approx(dg, rel=1e-12, abs=slack * (1 + abs(x)))


def test_ip_update_vectorised():
    x = np.array([-1.0, 0.0, 2.0])
    g = np.array([1.0, 2.0, 0.5])
    b = np.array([0.1, 0.0, -0.2])
    cfg = IpConfig(eta=0.01, sigma=0.3)
    db, dg = ip_update(x, g, b, cfg)
    for i in range(3):
        sb, sg = ip_update(x[i], g[i], b[i], cfg)
        assert db[i] == pytest.approx(sb, rel=1e-14)
        assert dg[i] == pytest.approx(sg, rel=1e-14)


@pytest.mark.parametrize("kwargs", [dict(eta=-1e-3), dict(sigma=0.0), dict(epochs=0)])
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        IpConfig(**kwargs)


def test_zero_rate_leaves_model(small_model):
    m = small_model(n_r=5)
    out = pretrain(m, np.sin(np.arange(50.0)), IpConfig(eta=0.0, epochs=3))
    assert out is m


def test_zero_input_keeps_bias_zero(small_model):
    m = small_model("layered:2", n_r=6)
    out = pretrain(m, np.zeros(80), IpConfig(eta=1e-2, mu=0.0, sigma=0.3, epochs=3))
    for b in out.bias:
        np.testing.assert_array_equal(b, 0.0)
    # gains still grow by eta / g every step
    assert all(np.all(g > 1.0) for g in out.gain)


def test_pretrain_touches_only_gain_and_bias(small_model):
    m = small_model("crisscross:2", n_r=5, rho_hat=0.9, sigma_in=0.5, sigma_l=0.5)
    out = pretrain(m, np.sin(np.arange(100.0) / 4), IpConfig(eta=1e-3, epochs=2))
    for a, b in zip(m.w_rec, out.w_rec):
        np.testing.assert_array_equal(a, b)
    for key in m.w_in:
        np.testing.assert_array_equal(m.w_in[key], out.w_in[key])
    for key in m.w_ff:
        np.testing.assert_array_equal(m.w_ff[key], out.w_ff[key])
    assert any(not np.array_equal(a, b) for a, b in zip(m.gain, out.gain))


def test_pretrain_reproducible(small_model):
    u = np.sin(np.arange(100.0) / 4)
    cfg = IpConfig(eta=1e-3, epochs=2)
    a = pretrain(small_model(n_r=5), u, cfg)
    b = pretrain(small_model(n_r=5), u, cfg)
    for x, y in zip(a.gain + a.bias, b.gain + b.bias):
        assert x.tobytes() == y.tobytes()


def test_pretrain_matches_loop_oracle(small_model):
    m = small_model("layered:2", n_r=3, rho_hat=0.8, sigma_in=1.0, sigma_l=0.7, alpha=0.5)
    u = np.sin(np.arange(25.0))
    cfg = IpConfig(eta=5e-3, mu=0.1, sigma=0.3, epochs=2)
    out = pretrain(m, u, cfg)
    g = [np.ones(3), np.ones(3)]
    b = [np.zeros(3), np.zeros(3)]
    for _ in range(2):
        x = [np.zeros(3), np.zeros(3)]
        for ut in u:
            for i in range(2):
                if i == 0:
                    net = m.w_in[1][:, 0] * ut
                else:
                    net = m.w_ff[(1, 2)] @ x[0]
                net = net + m.w_rec[i] @ x[i]
                for k in range(3):
                    y = math.tanh(g[i][k] * net[k] + b[i][k])
                    s2 = cfg.sigma**2
                    db = -cfg.eta * (-cfg.mu / s2 + (y / s2) * (2 * s2 + 1 - y * y + cfg.mu * y))
                    dg = cfg.eta / g[i][k] + db * net[k]
                    x[i][k] = 0.5 * x[i][k] + 0.5 * y
                    b[i][k] += db
                    g[i][k] += dg
    for i in range(2):
        np.testing.assert_allclose(out.gain[i], g[i], rtol=1e-12)
        np.testing.assert_allclose(out.bias[i], b[i], rtol=1e-12, atol=1e-15)


def test_pretrain_divergence(small_model):
    m = small_model("wide:1", n_r=4, sigma_in=5.0)
    with pytest.raises(NumericalError):
        pretrain(m, np.full(50, 3.0), IpConfig(eta=50.0, sigma=0.05, epochs=1))


def test_pretrain_rejects_trained_model(small_model):
    m = small_model(n_r=3)
    m = m.with_readout(np.zeros((1, m.state_dim)))
    with pytest.raises(ConfigError):
        pretrain(m, np.ones(5), IpConfig())


def test_activations_shape(small_model):
    m = small_model("wide:2", n_r=4)
    assert activations(m, np.ones(9)).shape == (9, 8)


def test_kl_identical_moments():
    samples = np.array([-1.0, 1.0]) * 0.3 + 0.2
    assert kl_estimate(samples, 0.2, 0.3) == pytest.approx(0.0, abs=1e-12)


def test_kl_narrow_sample():
    sigma = 0.5
    samples = np.array([-1.0, 1.0]) * sigma / math.e
    # log(e) + 1 / (2 e^2) - 1/2
    expected = 1 + 1 / (2 * math.e**2) - 0.5
    assert kl_estimate(samples, 0.0, sigma) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.5677, abs=1e-4)


@given(st.lists(st.floats(-1, 1), min_size=2, max_size=50), st.floats(-0.5, 0.5), st.floats(0.01, 2))
def test_kl_nonnegative(samples, mu, sigma):
    if np.std(samples) == 0:
        with pytest.raises(DataError):
            kl_estimate(samples, mu, sigma)
    else:
        assert kl_estimate(samples, mu, sigma) >= 0.0


def test_kl_degenerate():
    with pytest.raises(DataError):
        kl_estimate([0.3], 0.0, 1.0)
    with pytest.raises(DataError):
        kl_estimate([0.3, 0.3], 0.0, 1.0)
