"""Signals, sparse spectra, the dense DFT oracle and error metrics.

DFT convention: the forward transform carries the 1/n factor,

    xhat[i] = (1/n) * sum_j x[j] * w**(i*j),   w = exp(-2j*pi/n),

and synthesis is the unnormalized inverse x[j] = sum_f xhat[f] * w**(-j*f).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "ComplexSignal",
    "SparseSpectrum",
    "EvalMetrics",
    "is_power_of_two",
    "make_rng",
    "dft_dense",
    "idft_dense",
    "dft_literal",
    "synthesize",
    "generate_test_signal",
    "add_awgn",
    "error_metrics",
    "L0_THRESHOLD",
]

L0_THRESHOLD = 1e-6


def is_power_of_two(n) -> bool:
    return isinstance(n, (int, np.integer)) and n > 0 and (int(n) & (int(n) - 1)) == 0


def _check_length(n: int, minimum: int = 4) -> None:
    if not is_power_of_two(n) or n < minimum:
        raise ValueError(f"signal length must be a power of two >= {minimum}, got {n}")


def make_rng(seed=None) -> np.random.Generator:
    """Return a PCG64 generator; passes an existing generator through unchanged."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class ComplexSignal:
    """Length-n complex time-domain vector, n a power of two >= 4."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.ascontiguousarray(self.samples, dtype=np.complex128)
        if s.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        _check_length(s.size)
        if not np.all(np.isfinite(s)):
            raise ValueError("samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def n(self) -> int:
        return int(self.samples.size)

    def __len__(self):
        return self.n


@dataclass(frozen=True)
class SparseSpectrum:
    """Map from frequency position to complex coefficient.

    Stored as parallel arrays sorted by position. Positions are distinct and
    lie in ``[0, n)``.
    """

    n: int
    positions: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.complex128))

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.int64).ravel()
        val = np.asarray(self.coeffs, dtype=np.complex128).ravel()
        if pos.size != val.size:
            raise ValueError("positions and coeffs must have equal length")
        if self.n <= 0:
            raise ValueError("n must be positive")
        if pos.size and (pos.min() < 0 or pos.max() >= self.n):
            raise ValueError("positions must lie in [0, n)")
        order = np.argsort(pos, kind="stable")
        pos, val = pos[order], val[order]
        if pos.size > 1 and np.any(np.diff(pos) == 0):
            raise ValueError("positions must be distinct")
        pos.setflags(write=False)
        val.setflags(write=False)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "coeffs", val)

    @classmethod
    def empty(cls, n: int) -> "SparseSpectrum":
        return cls(n)

    @classmethod
    def from_dict(cls, n: int, entries: dict) -> "SparseSpectrum":
        if not entries:
            return cls(n)
        pos = np.fromiter(entries.keys(), dtype=np.int64, count=len(entries))
        val = np.fromiter(entries.values(), dtype=np.complex128, count=len(entries))
        return cls(n, pos, val)

    @classmethod
    def accumulate(cls, n: int, positions, coeffs) -> "SparseSpectrum":
        """Build a spectrum, summing coefficients at repeated positions."""
        positions = np.asarray(positions, dtype=np.int64) % n
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if positions.size == 0:
            return cls(n)
        uniq, inv = np.unique(positions, return_inverse=True)
        summed = np.zeros(uniq.size, dtype=np.complex128)
        np.add.at(summed, inv, coeffs)
        return cls(n, uniq, summed)

    def to_dict(self) -> dict:
        return {int(p): complex(c) for p, c in zip(self.positions, self.coeffs)}

    def dense(self) -> np.ndarray:
        out = np.zeros(self.n, dtype=np.complex128)
        out[self.positions] = self.coeffs
        return out

    def __len__(self):
        return int(self.positions.size)

    def merge(self, other: "SparseSpectrum") -> "SparseSpectrum":
        """Sum of two spectra; coefficients at shared positions add."""
        if other.n != self.n:
            raise ValueError("spectra have different n")
        return SparseSpectrum.accumulate(
            self.n,
            np.concatenate([self.positions, other.positions]),
            np.concatenate([self.coeffs, other.coeffs]),
        )

    def top_k(self, k: int) -> "SparseSpectrum":
        """Keep the k entries of largest magnitude (ties broken by position)."""
        if k >= len(self):
            return self
        order = np.lexsort((self.positions, -np.abs(self.coeffs)))[:k]
        return SparseSpectrum(self.n, self.positions[order], self.coeffs[order])


@dataclass
class EvalMetrics:
    l0_err: int = 0
    l1_err: float = 0.0
    l2_err: float = 0.0
    runtime_ms: float = 0.0
    samples_used: int = 0
    sample_fraction: float = 0.0


def _as_array(x) -> np.ndarray:
    if isinstance(x, ComplexSignal):
        return x.samples
    return np.asarray(x, dtype=np.complex128)


def dft_dense(x) -> np.ndarray:
    """Full spectrum of ``x`` with the 1/n forward normalization."""
    a = _as_array(x)
    _check_length(a.size, minimum=1)
    return np.fft.fft(a) / a.size


def idft_dense(xhat) -> np.ndarray:
    """Inverse of :func:`dft_dense` (no normalization factor)."""
    a = np.asarray(xhat, dtype=np.complex128)
    _check_length(a.size, minimum=1)
    return np.fft.ifft(a) * a.size


def dft_literal(x) -> np.ndarray:
    """O(n^2) evaluation of the defining double sum. Only for n <= 1024."""
    a = _as_array(x)
    n = a.size
    _check_length(n, minimum=1)
    if n > 1024:
        raise ValueError("literal DFT limited to n <= 1024")
    out = np.empty(n, dtype=np.complex128)
    for i in range(n):
        acc = 0j
        for j in range(n):
            # exact reduction of the exponent keeps the twiddle accurate
            acc += a[j] * np.exp(-2j * math.pi * ((i * j) % n) / n)
        out[i] = acc / n
    return out


def synthesize(spec: SparseSpectrum) -> ComplexSignal:
    """Time-domain signal whose dense DFT is exactly ``spec``."""
    _check_length(spec.n)
    return ComplexSignal(idft_dense(spec.dense()))


@lru_cache(maxsize=4)
def _roots_of_unity(n: int) -> np.ndarray:
    """``exp(2j*pi*k/n)`` for k in [0, n)."""
    return np.exp(2j * np.pi * np.arange(n) / n)


def sample_at(spec: SparseSpectrum, indices) -> np.ndarray:
    """Evaluate the synthesized signal at selected time indices only.

    Cost is O(len(indices) * len(spec)); used where only a few samples of a
    long signal are ever read.
    """
    idx = np.asarray(indices, dtype=np.int64)
    if len(spec) == 0:
        return np.zeros(idx.shape, dtype=np.complex128)
    phase = np.multiply.outer(idx, spec.positions) % spec.n
    return _roots_of_unity(spec.n)[phase] @ spec.coeffs


def generate_test_signal(n: int, k: int, seed=None):
    """K unit-magnitude tones at distinct uniform positions with uniform phase.

    Returns ``(signal, truth)``.
    """
    _check_length(n)
    if not 0 <= k <= n:
        raise ValueError(f"k must lie in [0, n], got {k}")
    rng = make_rng(seed)
    positions = rng.choice(n, size=k, replace=False)
    phases = rng.uniform(0.0, 2 * np.pi, size=k)
    truth = SparseSpectrum(n, positions, np.exp(1j * phases))
    return synthesize(truth), truth


def add_awgn(x, snr_db: float, seed=None, reference_power: float | None = None) -> ComplexSignal:
    """Add circular complex white Gaussian noise at the requested SNR.

    The realized noise is rescaled so that
    ``10*log10(P_ref / ||g||^2) == snr_db`` exactly, where ``P_ref`` is the
    time-domain energy ``||x||^2`` unless ``reference_power`` (an energy over
    all n samples) is given. ``snr_db = inf`` returns ``x`` unchanged.
    """
    sig = x if isinstance(x, ComplexSignal) else ComplexSignal(x)
    if snr_db == math.inf:
        return sig
    if not math.isfinite(snr_db):
        raise ValueError("snr_db must be finite or +inf")
    rng = make_rng(seed)
    n = sig.n
    g = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    p_ref = float(np.vdot(sig.samples, sig.samples).real) if reference_power is None else reference_power
    target = p_ref / 10.0 ** (snr_db / 10.0)
    g *= math.sqrt(target / float(np.vdot(g, g).real))
    return ComplexSignal(sig.samples + g)


def error_metrics(truth: SparseSpectrum, estimate: SparseSpectrum, k: int) -> EvalMetrics:
    """L0/L1/L2 errors over the union of both supports.

    ``l1 = sum|t - e| / k``, ``l2 = sqrt(sum|t - e|^2 / k)``, and ``l0`` counts
    positions whose error exceeds ``L0_THRESHOLD``.
    """
    if truth.n != estimate.n:
        raise ValueError("truth and estimate have different n")
    union = np.union1d(truth.positions, estimate.positions)
    if union.size == 0:
        return EvalMetrics()
    if k <= 0:
        raise ValueError("k must be positive when either spectrum is non-empty")
    t = np.zeros(union.size, dtype=np.complex128)
    e = np.zeros(union.size, dtype=np.complex128)
    t[np.searchsorted(union, truth.positions)] = truth.coeffs
    e[np.searchsorted(union, estimate.positions)] = estimate.coeffs
    diff = np.abs(t - e)
    return EvalMetrics(
        l0_err=int(np.count_nonzero(diff > L0_THRESHOLD)),
        l1_err=float(diff.sum() / k),
        l2_err=float(math.sqrt(float(np.sum(diff**2)) / k)),
    )
