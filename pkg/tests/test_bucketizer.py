import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from conftest import random_complex
from msfft.bucketizer import (
    BucketSet,
    bucket_of,
    bucketize,
    bucketize_matrix,
    make_params,
    mod_inverse,
    predict_buckets,
    random_params,
    sample_indices,
    subtract,
)
from msfft.flat_window import get_window
from msfft.signal_model import ComplexSignal, SparseSpectrum, dft_dense, generate_test_signal, synthesize


def test_mod_inverse_examples():
    assert mod_inverse(1, 64) == 1
    assert mod_inverse(3, 8) == 3
    assert mod_inverse(5, 16) == 13
    with pytest.raises(ValueError):
        mod_inverse(4, 16)


@settings(max_examples=200)
@given(e=st.integers(1, 40), s=st.integers(0, 2**40))
def test_mod_inverse_property(e, s):
    n = 2**e
    sigma = (2 * s + 1) % n or 1
    inv = mod_inverse(sigma, n)
    assert 0 <= inv < n and (sigma * inv) % n == 1 % n


def test_mod_inverse_exhaustive_small():
    for n in (8, 16, 64):
        for s in range(1, n, 2):
            brute = next(t for t in range(n) if (s * t) % n == 1)
            assert mod_inverse(s, n) == brute


def test_random_params_contract():
    rng = np.random.default_rng(1)
    draws = [random_params(1024, rng) for _ in range(10_000)]
    sig = np.array([p.sigma for p in draws])
    assert np.all(sig % 2 == 1)
    assert all((p.sigma * p.sigma_inv) % 1024 == 1 for p in draws)
    counts = np.bincount(sig // 2, minlength=512)
    assert chisquare(counts).pvalue > 0.01
    taus = np.array([p.tau for p in draws])
    assert taus.min() >= 0 and taus.max() < 1024
    a = random_params(1024, np.random.default_rng(5))
    b = random_params(1024, np.random.default_rng(5))
    assert (a.sigma, a.tau) == (b.sigma, b.tau)
    assert random_params(1024, rng, tau_override=77).tau == 77


def test_permutation_property(rng):
    # spectrum of x'[j] = x[sigma (j - tau)] sits at sigma*i with twiddle w^(sigma tau i)
    n = 256
    x = random_complex(rng, n)
    for _ in range(10):
        p = random_params(n, rng)
        j = np.arange(n)
        xp = x[(p.sigma * (j - p.tau)) % n]
        lhs = dft_dense(xp)
        i = np.arange(n)
        rhs = dft_dense(x) * np.exp(-2j * np.pi * ((p.sigma * p.tau * i) % n) / n)
        assert np.max(np.abs(lhs[(p.sigma * i) % n] - rhs)) < 1e-9


@pytest.mark.parametrize("n", [16, 256, 4096])
def test_index_map_is_bijection(n):
    rng = np.random.default_rng(n)
    for _ in range(5):
        p = random_params(n, rng)
        j = np.arange(n)
        assert np.unique((p.sigma * (j - p.tau)) % n).size == n


@pytest.mark.parametrize("n, b", [(64, 8), (256, 16), (1024, 32)])
def test_matches_matrix_pipeline(n, b):
    rng = np.random.default_rng(n + b)
    win = get_window(n, b, 1e-8)
    for _ in range(20):
        x = random_complex(rng, n)
        p = random_params(n, rng)
        got = bucketize(ComplexSignal(x), win, p).values
        assert np.max(np.abs(got - bucketize_matrix(x, win, p))) < 1e-9


def test_zero_signal_reads_w_samples():
    win = get_window(8192, 256, 1e-8)
    out = bucketize(ComplexSignal(np.zeros(8192)), win, make_params(8192, 1, 0))
    assert np.all(out.values == 0) and out.samples_read == win.w


def test_samples_read_is_w_and_distinct(rng):
    win = get_window(65536, 256, 1e-8)
    for _ in range(5):
        p = random_params(65536, rng)
        idx = sample_indices(win, p)
        assert idx.size == win.w == np.unique(idx).size


@pytest.mark.parametrize("f", [0, 1, 15, 16, 17, 100, 4095, 8191])
def test_single_tone_energy(f):
    n, b, delta = 8192, 256, 1e-8
    win = get_window(n, b, delta)
    x = synthesize(SparseSpectrum(n, [f], [1.0]))
    vals = bucketize(x, win, make_params(n, 1, 0)).values
    i = int(bucket_of(f, n, b))
    assert abs(vals[i]) >= 1 - delta
    dist = np.minimum((np.arange(b) - i) % b, (i - np.arange(b)) % b)
    assert np.max(np.abs(vals[dist >= 2])) <= delta


def test_bucket_of_convention():
    # bucket i owns [iL - L/2, iL + L/2)
    n, b = 1024, 32
    assert bucket_of(0, n, b) == 0
    assert bucket_of(15, n, b) == 0
    assert bucket_of(16, n, b) == 1
    assert bucket_of(n - 16, n, b) == 0
    assert bucket_of(n - 17, n, b) == b - 1


def test_predict_empty():
    win = get_window(4096, 64, 1e-8)
    out = predict_buckets(SparseSpectrum.empty(4096), win, make_params(4096, 3, 5))
    assert np.all(out.values == 0) and out.samples_read == 0


def test_predict_single_tone(rng):
    n, b, delta = 8192, 256, 1e-8
    win = get_window(n, b, delta)
    for _ in range(20):
        f = int(rng.integers(n))
        truth = SparseSpectrum(n, [f], [np.exp(1j * rng.uniform(0, 6.28))])
        p = random_params(n, rng)
        diff = bucketize(synthesize(truth), win, p).values - predict_buckets(truth, win, p).values
        assert np.max(np.abs(diff)) <= 5 * delta


def test_predict_k50_residual(rng):
    n, delta = 8192, 1e-8
    win = get_window(n, 256, delta)
    x, truth = generate_test_signal(n, 50, 4)
    for _ in range(5):
        p = random_params(n, rng)
        res = bucketize(x, win, p).values - predict_buckets(truth, win, p).values
        assert np.max(np.abs(res)) <= 50 * 5 * delta


def test_subtract():
    p = make_params(64, 1, 0)
    a = BucketSet(4, np.arange(4) + 1j, p, 7)
    b = BucketSet(4, np.ones(4), p, 0)
    zero = BucketSet(4, np.zeros(4), p, 0)
    assert np.array_equal(subtract(a, zero).values, a.values)
    assert np.all(subtract(a, a).values == 0)
    assert np.max(np.abs(subtract(a, b).values + b.values - a.values)) < 1e-12
    assert subtract(a, b).samples_read == 7
    with pytest.raises(ValueError):
        subtract(a, BucketSet(4, np.ones(4), make_params(64, 3, 0), 0))


def test_params_validation():
    with pytest.raises(ValueError):
        make_params(64, 2, 0)
    with pytest.raises(ValueError):
        make_params(60, 1, 0)
    assert make_params(64, 3, 70).tau == 6
    assert math.gcd(make_params(64, 5).sigma_inv, 64) == 1


def test_size_mismatch():
    win = get_window(256, 16, 1e-8)
    with pytest.raises(ValueError):
        bucketize(ComplexSignal(np.zeros(512)), win, make_params(512, 1))
