import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from moddeepesn.errors import ConfigError, NumericalError
from moddeepesn.initialization import (
    XAVIER,
    InitSpec,
    apply_sparsity,
    build_model,
    effective_radius,
    normalize_l2,
    scale_to_effective_radius,
    xavier_matrix,
)
from moddeepesn.numerics import RngStream
from moddeepesn.topology import TopologyKind, build_connectivity

MG_SPEC = InitSpec(rho_hat=XAVIER, sigma_in=0.1, sigma_l=XAVIER, s_in=0.1, s_hat_l=0.1, s_l=0.7, alpha=0.6)


def brute_radius(m, a):
    # independent route: eigenvalues of the full leaky matrix
    lam = np.linalg.eigvals((1 - a) * np.eye(len(m)) + a * m)
    return max(abs(lam))


@pytest.mark.parametrize("n_in, n_out, sigma", [(1, 1, 1.0), (256, 256, 0.0625)])
def test_xavier_sigma(n_in, n_out, sigma):
    assert math.sqrt(2.0 / (n_in + n_out)) == pytest.approx(sigma)
    w = xavier_matrix(n_in, n_out, 400, 250, RngStream(0, "xavier"))
    assert w.std() == pytest.approx(sigma, rel=0.02)
    assert abs(w.mean()) < 5 * sigma / math.sqrt(w.size)


def test_xavier_zero_fan():
    with pytest.raises(ConfigError):
        xavier_matrix(0, 0, 2, 2, RngStream(0))


def test_scale_diag_full_leak():
    out = scale_to_effective_radius(np.diag([2.0, 1.0]), 1.0, 0.9)
    np.testing.assert_allclose(out, np.diag([0.9, 0.45]), atol=1e-7)


def test_scale_diag_half_leak():
    out = scale_to_effective_radius(np.eye(2), 0.5, 0.9)
    np.testing.assert_allclose(out, np.diag([0.8, 0.8]), atol=1e-7)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(2, 12),
    st.sampled_from([0.3, 0.6, 1.0]),
    st.floats(0.75, 0.99),
    st.integers(0, 2**32 - 1),
)
def test_scale_hits_target(n, a, rho_hat, seed):
    m = np.random.default_rng(seed).uniform(-1, 1, (n, n))
    out = scale_to_effective_radius(m, a, rho_hat)
    assert brute_radius(out, a) == pytest.approx(rho_hat, abs=1e-6)
    assert effective_radius(out, a) == pytest.approx(brute_radius(out, a), rel=1e-10)
    # projection: applying twice is a no-op
    again = scale_to_effective_radius(out, a, rho_hat)
    assert np.max(np.abs(again - out)) <= 1e-6


@pytest.mark.parametrize("a, rho_hat", [(0.3, 0.7), (0.5, 0.5), (0.2, 0.1)])
def test_scale_infeasible(a, rho_hat):
    with pytest.raises(NumericalError):
        scale_to_effective_radius(np.eye(3), a, rho_hat)


def test_scale_zero_matrix():
    with pytest.raises(NumericalError):
        scale_to_effective_radius(np.zeros((3, 3)), 1.0, 0.9)


def test_normalize_l2_examples():
    np.testing.assert_allclose(normalize_l2(np.diag([3.0, 4.0]), 1.0), np.diag([0.75, 1.0]), atol=1e-12)
    np.testing.assert_allclose(normalize_l2(np.array([[1.0]]), 0.1), [[0.1]], atol=1e-12)


def test_normalize_l2_fixed_point(rng):
    m = rng.normal(size=(5, 3))
    m = m / np.linalg.norm(m, 2) * 0.4
    np.testing.assert_allclose(normalize_l2(m, 0.4), m, atol=1e-8)


def test_normalize_l2_zero():
    with pytest.raises(NumericalError):
        normalize_l2(np.zeros((2, 2)), 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 9), st.integers(1, 9), st.floats(1e-3, 10), st.integers(0, 2**32 - 1))
def test_normalize_l2_norm(r, c, sigma, seed):
    m = np.random.default_rng(seed).normal(size=(r, c))
    assert np.linalg.norm(normalize_l2(m, sigma), 2) == pytest.approx(sigma, abs=1e-8)


def test_sparsity_edges(rng):
    m = rng.normal(size=(6, 6))
    np.testing.assert_array_equal(apply_sparsity(m, 0.0, RngStream(0)), m)
    np.testing.assert_array_equal(apply_sparsity(m, 1.0, RngStream(0)), 0.0)


def test_sparsity_fraction():
    m = np.ones((256, 256))
    zeros = np.mean(apply_sparsity(m, 0.7, RngStream(5, "mask")) == 0)
    assert abs(zeros - 0.7) < 0.02


def test_sparsity_deterministic(rng):
    m = rng.normal(size=(10, 10))
    a = apply_sparsity(m, 0.5, RngStream(9, "x"))
    b = apply_sparsity(m, 0.5, RngStream(9, "x"))
    assert a.tobytes() == b.tobytes()


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(rho_hat=1.0),
        dict(rho_hat=0.0),
        dict(sigma_in=0.0),
        dict(sigma_l=-1.0),
        dict(s_in=1.5),
        dict(s_l=-0.1),
        dict(alpha=0.0),
        dict(alpha=1.2),
        dict(rho_hat="Y"),
    ],
)
def test_init_spec_validation(kwargs):
    with pytest.raises(ConfigError):
        InitSpec(**kwargs)


def test_build_mackey_glass_wide():
    model = build_model(build_connectivity(TopologyKind.wide(3)), 1, 64, MG_SPEC, RngStream(0))
    assert sorted(model.w_in) == [1, 2, 3]
    assert model.w_ff == {}
    for w in model.w_in.values():
        assert w.shape == (64, 1)
        assert np.linalg.norm(w, 2) == pytest.approx(0.1, abs=1e-8)
    for w in model.w_rec:
        # Xavier recurrent weights are sparsified but not rescaled
        nz = w[w != 0]
        assert nz.std() == pytest.approx(math.sqrt(2 / 128), rel=0.1)
        assert abs(np.mean(w == 0) - 0.1) < 0.05
    assert all(np.all(g == 1) for g in model.gain)
    assert all(np.all(b == 0) for b in model.bias)
    assert model.leak == (0.6, 0.6, 0.6)
    assert model.state_dim == 1 + 3 * 64


def test_build_temperature_layered():
    spec = InitSpec(rho_hat=XAVIER, sigma_in=0.4, sigma_l=XAVIER, s_in=0.6, s_hat_l=0.3, s_l=0.6, alpha=1.0)
    model = build_model(build_connectivity(TopologyKind.layered(2)), 1, 32, spec, RngStream(1))
    assert list(model.w_in) == [1]
    assert np.linalg.norm(model.w_in[1], 2) == pytest.approx(0.4, abs=1e-8)
    assert list(model.w_ff) == [(1, 2)]


@pytest.mark.parametrize("kind", ["wide:2", "layered:3", "crisscross:2", "wide+layered:2x2"])
@pytest.mark.parametrize("a", [0.3, 1.0])
def test_build_numeric_radius(kind, a):
    spec = InitSpec(rho_hat=0.9, sigma_in=0.5, sigma_l=0.3, s_hat_l=0.2, s_l=0.4, alpha=a)
    model = build_model(build_connectivity(TopologyKind.parse(kind)), 2, 20, spec, RngStream(3))
    for w in model.w_rec:
        assert brute_radius(w, a) <= 0.9 + 1e-6
        assert brute_radius(w, a) == pytest.approx(0.9, abs=1e-6)
    for w in model.w_ff.values():
        assert np.linalg.norm(w, 2) == pytest.approx(0.3, abs=1e-8)


def test_build_reproducible():
    conn = build_connectivity(TopologyKind.crisscross(2))
    a = build_model(conn, 1, 16, MG_SPEC, RngStream(11))
    b = build_model(conn, 1, 16, MG_SPEC, RngStream(11))
    c = build_model(conn, 1, 16, MG_SPEC, RngStream(12))
    for x, y in zip(a.w_rec, b.w_rec):
        assert x.tobytes() == y.tobytes()
    for k in a.w_ff:
        assert a.w_ff[k].tobytes() == b.w_ff[k].tobytes()
    assert not np.array_equal(a.w_rec[0], c.w_rec[0])


def test_model_is_read_only():
    model = build_model(build_connectivity(TopologyKind.wide(1)), 1, 4, MG_SPEC, RngStream(0))
    with pytest.raises(ValueError):
        model.w_rec[0][0, 0] = 1.0


def test_model_rejects_nonpositive_gain():
    model = build_model(build_connectivity(TopologyKind.wide(1)), 1, 4, MG_SPEC, RngStream(0))
    with pytest.raises(NumericalError):
        model.with_ip([np.zeros(4)], [np.zeros(4)])
