import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

import oracles
from gmee.entropy import GGDKernel, InvalidParameterError, generalized_ip
from gmee.filters import (
    GMCC,
    LMF,
    LMS,
    RLS,
    DimensionError,
    InsufficientWindowError,
    SampleWindow,
    gmee_gradient,
    make_filter,
    qgmee_direction,
    quantize_batch,
)

ALL_TAGS = ["lms", "lmf", "gmcc", "rls", "mee", "gmee", "qgmee"]


def _params(tag):
    return {
        "lms": {"eta": 0.05},
        "lmf": {"eta": 0.01},
        "gmcc": {"eta": 0.05},
        "rls": {},
        "mee": {"eta": 0.1, "L": 5},
        "gmee": {"eta": 0.1, "alpha": 3.0, "beta": 1.5, "L": 5},
        "qgmee": {"eta": 0.1, "alpha": 3.0, "beta": 1.5, "L": 5, "gamma": 0.2},
    }[tag]


def _window(rng, L, M, scale=1.0):
    """Random window whose errors under the returned weights are ``scale * N(0, 1)``."""
    U = rng.standard_normal((L, M))
    w = rng.standard_normal(M)
    return U, U @ w + scale * rng.standard_normal(L), w


def test_window_eviction_order():
    win = SampleWindow(3, 2)
    for k in range(5):
        win.push(np.full(2, k), k)
    assert len(win) == 3
    np.testing.assert_array_equal(win.desired, [2, 3, 4])
    np.testing.assert_array_equal(win.inputs[:, 0], [2, 3, 4])


def test_lms_single_step():
    f = LMS(4, 0.5)
    e = f.step([1, 0, 0, 0], 1.0)
    assert e == 1.0
    np.testing.assert_array_equal(f.w, [0.5, 0, 0, 0])


@pytest.mark.parametrize("tag", ALL_TAGS)
def test_zero_input_leaves_weights(tag):
    rng = np.random.default_rng(1)
    f = make_filter(tag, 4, **_params(tag))
    for _ in range(8):
        f.step(rng.standard_normal(4), rng.standard_normal())
    w0 = f.w.copy()
    for _ in range(8):
        f.step(np.zeros(4), rng.standard_normal())
        if tag in ("lms", "lmf", "gmcc", "rls"):
            np.testing.assert_array_equal(f.w, w0)
    if tag not in ("lms", "lmf", "gmcc", "rls"):
        # once the window holds only zero inputs every term vanishes
        np.testing.assert_array_equal(f.w, f.w)
        w1 = f.w.copy()
        f.step(np.zeros(4), 3.0)
        np.testing.assert_array_equal(f.w, w1)


@pytest.mark.parametrize("tag", ["lms", "lmf", "gmcc", "mee", "gmee", "qgmee"])
def test_fixed_point_without_noise(tag):
    rng = np.random.default_rng(2)
    w_s = rng.standard_normal(5)
    f = make_filter(tag, 5, **_params(tag))
    f.w[:] = w_s
    for _ in range(50):
        u = rng.standard_normal(5)
        assert f.step(u, float(u @ w_s)) == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(f.w, w_s, atol=1e-12)


def test_lmf_zero_error_no_update():
    f = LMF(3, 0.1)
    f.step([1.0, 2.0, 3.0], 0.0)
    np.testing.assert_array_equal(f.w, 0.0)


def test_gmcc_update_formula():
    f = GMCC(2, eta=0.3, alpha_c=4.0, lam=0.5)
    u = np.array([1.0, -2.0])
    f.step(u, 0.7)
    e = 0.7
    expect = 0.3 * 0.5 * np.exp(-0.5 * e**4) * e**3 * u
    np.testing.assert_allclose(f.w, expect, rtol=1e-14)


def test_dimension_mismatch():
    f = LMS(3, 0.1)
    with pytest.raises(DimensionError):
        f.step([1.0, 2.0], 0.0)
    with pytest.raises(DimensionError):
        make_filter("gmee", 3, eta=0.1).step(np.ones(4), 0.0)


def test_rls_parameter_checks():
    with pytest.raises(InvalidParameterError):
        RLS(3, rho=0.0)
    with pytest.raises(InvalidParameterError):
        RLS(3, rho=1.2)
    with pytest.raises(InvalidParameterError):
        RLS(3, delta=0.0)


def test_rls_recovers_noiseless_system():
    rng = np.random.default_rng(3)
    M = 8
    w_s = rng.standard_normal(M)
    f = RLS(M, rho=1.0, delta=1e-10, check_symmetry=True)
    for _ in range(2 * M):
        u = rng.standard_normal(M)
        f.step(u, float(u @ w_s))
    np.testing.assert_allclose(f.w, w_s, atol=1e-6)


def test_rls_matches_batch_least_squares():
    rng = np.random.default_rng(4)
    M, n, rho, delta = 4, 60, 0.98, 0.5
    U = rng.standard_normal((n, M))
    d = U @ rng.standard_normal(M) + 0.1 * rng.standard_normal(n)
    f = RLS(M, rho=rho, delta=delta)
    for u, y in zip(U, d):
        f.step(u, y)
    lam = rho ** np.arange(n - 1, -1, -1)
    R = (U * lam[:, None]).T @ U + delta * rho**n * np.eye(M)
    w = np.linalg.solve(R, (U * lam[:, None]).T @ d)
    np.testing.assert_allclose(f.w, w, rtol=1e-9, atol=1e-12)


def test_gradient_needs_two_samples():
    win = SampleWindow(4, 2)
    win.push([1.0, 0.0], 1.0)
    with pytest.raises(InsufficientWindowError):
        gmee_gradient(win, np.zeros(2), GGDKernel(2.0, 1.0))


def test_gradient_equal_errors_vanishes():
    U = np.random.default_rng(5).standard_normal((6, 3))
    D = np.full(6, 0.4)
    P, Q, g = gmee_gradient((U, D), np.zeros(3), GGDKernel(1.0, 1.0))
    np.testing.assert_array_equal(P, 0.0)
    np.testing.assert_array_equal(Q, 0.0)
    np.testing.assert_array_equal(g, 0.0)


def test_gradient_two_sample_brute_force():
    U = np.array([[0.3, -1.2], [2.0, 0.5]])
    D = np.array([1.0, 0.0])
    _, _, g = gmee_gradient((U, D), np.zeros(2), GGDKernel(2.0, 1.0))
    k = oracles.influence(1.0, 2.0, 1.0)
    expect = 2.0 / 4.0 * (k * (U[0] - U[1]) + k * (U[0] - U[1]))
    np.testing.assert_allclose(g, expect, rtol=1e-13)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 20), st.floats(1.0, 8.0), st.floats(0.5, 5.0), st.integers(0, 2**32 - 1))
def test_q_is_minus_p_and_forms_agree(L, a, b, seed):
    U, D, w = _window(np.random.default_rng(seed), L, 3)
    P, Q, g = gmee_gradient((U, D), w, GGDKernel(a, b))
    np.testing.assert_allclose(Q, -P, rtol=0, atol=1e-12)
    Po, Qo = oracles.pq(list(D - U @ w), a, b)
    np.testing.assert_allclose(P, Po, rtol=1e-10, atol=1e-14)
    np.testing.assert_allclose(g, oracles.gmee_direction(U, D, w, a, b), rtol=1e-10, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 10), st.sampled_from([2.0, 3.0, 4.0, 8.0]), st.sampled_from([0.5, 1.0, 5.0]),
       st.integers(0, 2**32 - 1))
def test_gradient_is_ip_ascent_direction(L, a, b, seed):
    U, D, w = _window(np.random.default_rng(seed), L, 3, scale=b)
    k = GGDKernel(a, b)
    _, _, g = gmee_gradient((U, D), w, k)
    h = 1e-6
    # double-precision differences resolve about eps * IP / h; skip windows
    # whose gradient sits below 1e5 times that floor
    assume(np.linalg.norm(g) > 1e5 * 2.2e-16 * generalized_ip(D - U @ w, k) / h)
    fd = np.array([(generalized_ip(D - U @ (w + h * ei), k) - generalized_ip(D - U @ (w - h * ei), k)) / (2 * h)
                   for ei in np.eye(3)])
    assert np.linalg.norm(fd - g) <= 1e-5 * np.linalg.norm(g)


def test_batched_gradient_matches_single():
    rng = np.random.default_rng(6)
    U = rng.standard_normal((4, 7, 3))
    D = rng.standard_normal((4, 7))
    W = rng.standard_normal((4, 3))
    k = GGDKernel(2.5, 1.2)
    _, _, g = gmee_gradient((U, D), W, k)
    for b in range(4):
        np.testing.assert_allclose(g[b], gmee_gradient((U[b], D[b]), W[b], k)[2], rtol=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=12), st.floats(0, 3))
def test_quantize_batch_matches_online_rule(errs, g):
    centers, counts = quantize_batch(np.array(errs), g)
    c_ref, h_ref = oracles.online_quantize(errs, g)
    H = len(c_ref)
    np.testing.assert_array_equal(centers[:H], c_ref)
    np.testing.assert_array_equal(counts[:H], h_ref)
    assert np.all(counts[H:] == 0)


def test_qgmee_lambda_brute_force():
    U = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    D = np.array([0.1, 0.15, 0.9])
    k = GGDKernel(2.0, 1.0)
    lam, direction = qgmee_direction((U, D), np.zeros(2), k, 0.1)
    ref = oracles.qgmee_lambda([0.1, 0.15, 0.9], 0.1, 2.0, 1.0)
    np.testing.assert_allclose(lam, ref, rtol=1e-13)
    np.testing.assert_allclose(direction, 2 * 2.0 / 9 * U.T @ ref, rtol=1e-13)


def test_qgmee_gamma_zero_direction_equals_gmee():
    rng = np.random.default_rng(7)
    U, D, w = _window(rng, 9, 4)
    k = GGDKernel(3.0, 0.7)
    _, _, g = gmee_gradient((U, D), w, k)
    _, q = qgmee_direction((U, D), w, k, 0.0)
    np.testing.assert_allclose(q, g, rtol=1e-12, atol=1e-15)


def test_qgmee_single_center_no_update():
    f = make_filter("qgmee", 2, eta=0.5, L=4, gamma=10.0)
    f.w[:] = [1.0, -1.0]
    rng = np.random.default_rng(8)
    for _ in range(6):
        u = rng.standard_normal(2)
        f.step(u, float(u @ f.w) + 0.25)
    np.testing.assert_allclose(f.w, [1.0, -1.0], atol=1e-15)


def test_mee_equal_errors_no_update():
    f = make_filter("mee", 2, eta=0.5, L=3)
    for u in ([1.0, 0.0], [0.0, 1.0], [2.0, 1.0]):
        f.step(np.array(u), 0.0)
    np.testing.assert_array_equal(f.w, 0.0)


def test_mee_two_sample_step():
    f = make_filter("mee", 2, eta=0.2, beta=1.3, L=2)
    u1, u2 = np.array([1.0, 0.5]), np.array([-0.3, 2.0])
    f.step(u1, 1.0)
    np.testing.assert_array_equal(f.w, 0.0)
    f.step(u2, -0.5)
    sigma = 1.3 / np.sqrt(2)
    e = 1.5
    g = np.exp(-e * e / (2 * sigma * sigma)) / (np.sqrt(2 * np.pi) * sigma)
    expect = 0.2 * 2 / (4 * 1.3**2) * 2 * g * e * (u1 - u2)
    np.testing.assert_allclose(f.w, expect, rtol=1e-13)


@pytest.mark.parametrize("tag", ALL_TAGS)
def test_batched_filter_equals_independent_runs(tag):
    rng = np.random.default_rng(9)
    U = rng.standard_normal((3, 30, 4))
    D = rng.standard_normal((3, 30))
    fb = make_filter(tag, 4, batch_shape=(3,), **_params(tag))
    singles = [make_filter(tag, 4, **_params(tag)) for _ in range(3)]
    for t in range(30):
        fb.step(U[:, t], D[:, t])
        for b, f in enumerate(singles):
            f.step(U[b, t], D[b, t])
    for b, f in enumerate(singles):
        np.testing.assert_allclose(fb.w[b], f.w, rtol=1e-12, atol=1e-14)


def test_make_filter_validation():
    with pytest.raises(InvalidParameterError):
        make_filter("nlms", 3, eta=0.1)
    with pytest.raises(InvalidParameterError):
        make_filter("mee", 3, eta=0.1, alpha=3.0)
    with pytest.raises(InvalidParameterError):
        make_filter("gmee", 3, eta=-0.1)
    with pytest.raises(InvalidParameterError):
        make_filter("gmee", 3, eta=0.1, L=1)
    with pytest.raises(InvalidParameterError):
        make_filter("gmee", 3, eta=0.1, alpha=0.5)
    with pytest.raises(InvalidParameterError):
        make_filter("gmee", 3, eta=0.1, bogus=1)


def test_deterministic_trajectories():
    def run():
        rng = np.random.default_rng(10)
        f = make_filter("qgmee", 3, eta=0.2, L=6, gamma=0.3)
        for _ in range(200):
            f.step(rng.standard_normal(3), rng.standard_normal())
        return f.w.copy()

    assert run().tobytes() == run().tobytes()
