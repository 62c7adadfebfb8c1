import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from gmee.entropy import (
    GGDKernel,
    InvalidParameterError,
    gamma,
    gaussian_kernel,
    generalized_ip,
    ggd_eval,
    parzen_pdf,
    quadratic_ip,
    quantize,
    quantized_ip,
    renyi_entropy,
)

finite = st.floats(-50, 50, allow_nan=False)
alphas = st.floats(1.0, 12.0)
betas = st.floats(0.1, 10.0)


@pytest.mark.parametrize("x", np.linspace(0.05, 20, 97))
def test_gamma_matches_scipy(x):
    assert gamma(x) == pytest.approx(special.gamma(x), rel=1e-10)


def test_gamma_known_values():
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-13)
    assert gamma(1.0) == pytest.approx(1.0, rel=1e-13)
    assert gamma(5.0) == pytest.approx(24.0, rel=1e-13)


def test_gaussian_kernel_values():
    assert gaussian_kernel(0.0, 1.0) == pytest.approx(0.398942, abs=1e-6)
    # frozen from a direct evaluation of exp(-1/2)/sqrt(2 pi)
    assert gaussian_kernel(1.0, 1.0) == pytest.approx(0.241971, abs=1e-6)
    with pytest.raises(InvalidParameterError):
        gaussian_kernel(0.0, 0.0)


@given(finite, st.floats(0.01, 10))
def test_gaussian_kernel_symmetric(x, s):
    assert gaussian_kernel(x, s) == gaussian_kernel(-x, s)


def test_ggd_peaks():
    assert ggd_eval(GGDKernel(1.0, 1.0), 0.0) == pytest.approx(0.5, rel=1e-12)
    assert ggd_eval(GGDKernel(2.0, 1.0), 0.0) == pytest.approx(0.564190, abs=1e-6)


def test_ggd_rejects_bad_shape():
    with pytest.raises(InvalidParameterError):
        GGDKernel(0.5, 1.0)
    with pytest.raises(InvalidParameterError):
        GGDKernel(2.0, 0.0)


@settings(max_examples=40, deadline=None)
@given(alphas, betas, finite)
def test_ggd_matches_gennorm(a, b, x):
    k = GGDKernel(a, b)
    assert ggd_eval(k, x) == pytest.approx(stats.gennorm.pdf(x, a, scale=b), rel=1e-9, abs=1e-300)


@pytest.mark.parametrize("a,b", [(1.0, 1.0), (2.0, 0.5), (3.5, 2.0), (8.0, 5.0)])
def test_ggd_integrates_to_one(a, b):
    k = GGDKernel(a, b)
    val, _ = integrate.quad(lambda x: float(k(x)), -np.inf, np.inf)
    assert val == pytest.approx(1.0, abs=1e-8)


@settings(max_examples=50, deadline=None)
@given(alphas, betas, st.floats(0.0, 30.0))
def test_ggd_even_and_nonincreasing(a, b, x):
    k = GGDKernel(a, b)
    assert k(x) == k(-x)
    assert k(x) <= k(x / 2) + 1e-300


def test_influence_zero_at_origin():
    for a in (1.0, 1.5, 2.0, 4.0):
        assert GGDKernel(a, 1.0).influence(0.0) == 0.0


def test_parzen_pdf():
    k = GGDKernel(2.0, 1.0)
    assert parzen_pdf([0.0], k, 0.0) == pytest.approx(ggd_eval(k, 0.0))
    assert parzen_pdf([-0.7, 0.7], k, 0.0) == pytest.approx(ggd_eval(k, 0.7))
    errs = [0.1, 0.3, -0.2]
    brute = sum(math.exp(-(e * e)) / math.sqrt(math.pi) for e in errs) / 3
    assert parzen_pdf(errs, k, 0.0) == pytest.approx(brute, rel=1e-12)
    with pytest.raises(InvalidParameterError):
        parzen_pdf([], k, 0.0)


def test_quadratic_ip_values():
    assert quadratic_ip([0.4] * 5, 1.0) == pytest.approx(gaussian_kernel(0.0, 1.0))
    assert quadratic_ip([0.0, 1.0], 1.0) == pytest.approx(0.320457, abs=1e-6)


@given(st.lists(finite, min_size=1, max_size=8), st.randoms())
def test_quadratic_ip_permutation_invariant(errs, rnd):
    perm = list(errs)
    rnd.shuffle(perm)
    assert quadratic_ip(perm, 1.3) == pytest.approx(quadratic_ip(errs, 1.3), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(alphas, betas, finite, finite)
def test_generalized_ip_two_samples(a, b, e1, e2):
    k = GGDKernel(a, b)
    expect = (2 * ggd_eval(k, 0.0) + 2 * ggd_eval(k, e1 - e2)) / 4
    assert generalized_ip([e1, e2], k) == pytest.approx(expect, rel=1e-12)


def test_generalized_ip_constant_errors():
    k = GGDKernel(3.0, 2.0)
    assert generalized_ip([1.5] * 4, k) == pytest.approx(ggd_eval(k, 0.0))


def test_renyi_entropy():
    assert renyi_entropy(1.0, 3.0) == 0.0
    assert renyi_entropy(0.5, 2.0) == pytest.approx(0.693147, abs=1e-6)
    grid = np.linspace(0.05, 5.0, 50)
    h = [renyi_entropy(v, 2.0) for v in grid]
    assert np.all(np.diff(h) < 0)
    with pytest.raises(InvalidParameterError):
        renyi_entropy(0.5, 1.0)
    with pytest.raises(InvalidParameterError):
        renyi_entropy(0.0, 2.0)


def test_quantize_hand_trace():
    cb = quantize([0.1, 0.15, 0.9], 0.1)
    assert cb.centers == (0.1, 0.9)
    assert cb.counts == (2, 1)


def test_quantize_wide_threshold():
    cb = quantize([0.3, -1.0, 2.0, 0.5], 100.0)
    assert cb.centers == (0.3,)
    assert cb.counts == (4,)


def test_quantize_rejects_negative_gamma():
    with pytest.raises(InvalidParameterError):
        quantize([0.0, 1.0], -0.1)


@given(st.lists(finite, min_size=1, max_size=15), st.floats(0, 5))
def test_quantize_invariants(errs, g):
    cb = quantize(errs, g)
    assert cb.n_samples == len(errs)
    assert 1 <= cb.size <= len(errs)
    for x in errs:
        assert min(abs(c - x) for c in cb.centers) <= g or x in cb.centers
    c = np.asarray(cb.centers)
    if cb.size > 1:
        gaps = np.abs(c[:, None] - c[None, :])[~np.eye(cb.size, dtype=bool)]
        assert gaps.min() > g


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=12, unique=True), alphas, betas)
def test_quantized_ip_gamma_zero_is_exact(errs, a, b):
    k = GGDKernel(a, b)
    cb = quantize(errs, 0.0)
    assert cb.size == len(errs) and set(cb.counts) == {1}
    assert quantized_ip(errs, cb, k) == pytest.approx(generalized_ip(errs, k), rel=1e-14, abs=1e-300)


def test_quantized_ip_brute_force():
    k = GGDKernel(2.5, 0.8)
    errs = [0.1, 0.15, 0.9]
    cb = quantize(errs, 0.1)
    brute = 0.0
    for e in errs:
        brute += 2 * float(k(e - 0.1)) + 1 * float(k(e - 0.9))
    assert quantized_ip(errs, cb, k) == pytest.approx(brute / 9, rel=1e-13)


def test_quantized_ip_single_center():
    k = GGDKernel(2.0, 1.0)
    cb = quantize([0.2, 0.2, 0.2], 0.5)
    assert quantized_ip([0.2, 0.2, 0.2], cb, k) == pytest.approx(ggd_eval(k, 0.0))


def test_quantized_ip_length_mismatch():
    k = GGDKernel(2.0, 1.0)
    cb = quantize([0.0, 1.0], 0.0)
    with pytest.raises(InvalidParameterError):
        quantized_ip([0.0, 1.0, 2.0], cb, k)
