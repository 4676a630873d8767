"""Frequency bucketization: permute, window, fold, size-b FFT.

For permutation ``(sigma, tau)`` the permuted signal is
``x'[j] = x[sigma * (j - tau) mod n]`` and its spectrum is
``x'^[u] = x^[sigma^-1 u] * w**(tau*u)``. Bucket ``i`` of a round collects

    y^[i] = sum_u G^[i*L - u] * x'^[u],

which needs only the ``w`` samples under the window's support. The transform
of the folded taps is scaled by 1/n (not 1/b) so that the bucket values are
the spectrum of the windowed signal sampled at multiples of L.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flat_window import FlatWindow
from .signal_model import ComplexSignal, SparseSpectrum, is_power_of_two, make_rng

__all__ = [
    "PermutationParams",
    "BucketSet",
    "mod_inverse",
    "random_params",
    "make_params",
    "sample_indices",
    "bucketize",
    "bucketize_samples",
    "bucketize_matrix",
    "predict_buckets",
    "subtract",
    "bucket_of",
]


def mod_inverse(sigma: int, n: int) -> int:
    """Inverse of odd ``sigma`` modulo the power of two ``n`` (extended Euclid)."""
    if sigma % 2 == 0:
        raise ValueError(f"sigma must be odd, got {sigma}")
    if not is_power_of_two(n):
        raise ValueError("n must be a power of two")
    old_r, r = sigma % n, n
    old_s, s = 1, 0
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
    if n == 1:
        return 0
    return old_s % n


@dataclass(frozen=True)
class PermutationParams:
    n: int
    sigma: int
    sigma_inv: int
    tau: int

    def __post_init__(self):
        if self.sigma % 2 == 0:
            raise ValueError("sigma must be odd")
        if (self.sigma * self.sigma_inv) % self.n != 1 % self.n:
            raise ValueError("sigma_inv is not the inverse of sigma")
        if not 0 <= self.tau < self.n:
            raise ValueError("tau must lie in [0, n)")

    def with_tau(self, tau: int) -> "PermutationParams":
        return PermutationParams(self.n, self.sigma, self.sigma_inv, int(tau) % self.n)


def make_params(n: int, sigma: int, tau: int = 0) -> PermutationParams:
    sigma %= n
    return PermutationParams(n, sigma, mod_inverse(sigma, n), tau % n)


def random_params(n: int, rng=None, tau_override: int | None = None) -> PermutationParams:
    """Uniform odd ``sigma`` in [1, n) and uniform ``tau`` unless overridden."""
    if not is_power_of_two(n) or n < 2:
        raise ValueError("n must be a power of two >= 2")
    rng = make_rng(rng)
    sigma = 2 * int(rng.integers(0, n // 2)) + 1
    tau = int(rng.integers(0, n)) if tau_override is None else int(tau_override) % n
    return PermutationParams(n, sigma, mod_inverse(sigma, n), tau)


@dataclass(frozen=True, eq=False)
class BucketSet:
    b: int
    values: np.ndarray
    params: PermutationParams
    samples_read: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != (self.b,):
            raise ValueError("values must have length b")
        object.__setattr__(self, "values", v)


def sample_indices(win: FlatWindow, params: PermutationParams) -> np.ndarray:
    """Time indices of ``x`` read by one round, in tap order."""
    n = win.n
    return (params.sigma * ((win.offsets - params.tau) % n)) % n


def bucketize_samples(samples: np.ndarray, win: FlatWindow, params: PermutationParams) -> BucketSet:
    """Bucketize from the samples ``x[sample_indices(win, params)]``."""
    vals = win.g_time * samples
    fold = np.bincount(win.fold_index, weights=vals.real, minlength=win.b) + 1j * np.bincount(
        win.fold_index, weights=vals.imag, minlength=win.b
    )
    return BucketSet(win.b, np.fft.fft(fold) / win.n, params, int(win.w))


def bucketize(x, win: FlatWindow, params: PermutationParams) -> BucketSet:
    """One bucketization round reading only ``w`` samples of ``x``."""
    samples = x.samples if isinstance(x, ComplexSignal) else np.asarray(x, dtype=np.complex128)
    if samples.size != win.n or params.n != win.n:
        raise ValueError("signal, window and permutation sizes differ")
    return bucketize_samples(samples[sample_indices(win, params)], win, params)


def bucketize_matrix(x, win: FlatWindow, params: PermutationParams) -> np.ndarray:
    """Explicit ``(1/L) F_B U_L Q_L S_tau P_sigma x`` with dense matrices.

    Test oracle; O(n^2) memory.
    """
    xs = x.samples if isinstance(x, ComplexSignal) else np.asarray(x, dtype=np.complex128)
    n, b = win.n, win.b
    L = n // b
    j = np.arange(n)
    P = np.zeros((n, n))
    P[j, (params.sigma * j) % n] = 1.0
    S = np.zeros((n, n))
    S[j, (j - params.tau) % n] = 1.0
    g = np.zeros(n)
    g[win.offsets % n] = win.g_time
    Q = np.diag(g)
    U = np.zeros((b, n))
    U[j % b, j] = 1.0
    F = np.exp(-2j * np.pi * np.outer(np.arange(b), np.arange(b)) / b) / b
    return (F @ U @ Q @ S @ P @ xs) / L


def bucket_of(u, n: int, b: int):
    """Owning bucket ``round(u / L) mod b``, ties rounded half up."""
    L = n // b
    u = np.asarray(u, dtype=np.int64) % n
    return ((u + L // 2) // L) % b


def predict_buckets(known: SparseSpectrum, win: FlatWindow, params: PermutationParams) -> BucketSet:
    """Bucket values a round would produce for a known spectrum.

    Each tone lands in its owning bucket and in any neighbour whose centre is
    within L of it (the window's transition band); contributions further away
    are below delta and dropped. No samples are read.
    """
    if known.n != win.n:
        raise ValueError("spectrum and window sizes differ")
    n, b = win.n, win.b
    L = n // b
    values = np.zeros(b, dtype=np.complex128)
    if len(known):
        u = (params.sigma * known.positions) % n
        i0 = bucket_of(u, n, b)
        rot = known.coeffs * np.exp(-2j * np.pi * ((params.tau * u) % n) / n)
        for shift in (-1, 0, 1):
            i = (i0 + shift) % b
            d = (i * L - u) % n
            near = np.minimum(d, n - d) < L
            np.add.at(values, i[near], win.g_freq[d[near]] * rot[near])
    return BucketSet(b, values, params, 0)


def subtract(a: BucketSet, b_set: BucketSet) -> BucketSet:
    if a.b != b_set.b or a.params != b_set.params:
        raise ValueError("bucket sets come from different rounds")
    return BucketSet(a.b, a.values - b_set.values, a.params, a.samples_read)
