"""The iterative multiscale sparse FFT.

Each iteration draws a fresh odd ``sigma``, runs one ``tau = 0`` round plus
one round per location stage, removes the contribution of everything found
so far from the buckets, locates and estimates the strongest residual
buckets, and adds the new coefficients to the running estimate.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .bucketizer import bucketize_samples, predict_buckets, random_params, sample_indices
from .flat_window import DEFAULT_DELTA_EXACT, FlatWindow, get_window
from .locator import MultiscaleConfig, locate_many, stage_lengths, tau_schedule
from .signal_model import ComplexSignal, SparseSpectrum, make_rng

__all__ = [
    "IterationState",
    "IterationLog",
    "RunStats",
    "LocationError",
    "estimate_value",
    "initial_state",
    "run_iteration",
    "sfft4",
    "B_MIN",
    "THRESHOLD_FRACTION",
]

B_MIN = 32
THRESHOLD_FRACTION = 0.2
# max relative misfit of the located tone's rotation across rounds
ISOLATION_TOL = 0.5


class LocationError(ValueError):
    """A located position falls outside its bucket's pass region."""


@dataclass(frozen=True)
class IterationLog:
    m: int
    k_m: int
    b: int
    w: int
    stages: int
    sigma: int
    taus: tuple
    samples: int
    found: int


@dataclass
class IterationState:
    n: int
    k_total: int
    m: int
    k_m: int
    b_m: int
    b_min: int
    delta: float
    accumulated: SparseSpectrum
    samples: int = 0
    runtime_s: float = 0.0
    log: list = field(default_factory=list)
    touched: np.ndarray | None = None  # optional mask of every index read

    @property
    def l_width_m(self) -> int:
        return self.n // self.b_m

    def advance(self) -> None:
        self.m += 1
        self.k_m = max(1, math.ceil(self.k_m / 2))
        self.b_m = max(self.b_min, self.b_m // 2)


@dataclass
class RunStats:
    samples_used: int  # summed per round, the (R_m + 1) * w_m total
    distinct_samples: int  # size of the union of indices read over the whole run
    runtime_ms: float
    iterations: list

    def sample_fraction(self, n: int) -> float:
        return self.distinct_samples / n


def estimate_value(y0_bucket: complex, u: int, win: FlatWindow, bucket: int | None = None) -> complex:
    """Coefficient of the tone at permuted position ``u`` from a ``tau = 0`` bucket."""
    n, L = win.n, win.l_width
    if bucket is None:
        bucket = ((u % n + L // 2) // L) % win.b
    g = win.g_freq[(bucket * L - u) % n]
    if abs(g) < 0.5:
        raise LocationError(f"u={u} lies outside the pass region of bucket {bucket}")
    return complex(y0_bucket) / g


def _first_bucket_count(n: int, k: int) -> int:
    b = 1 << max(2, (4 * k - 1).bit_length())
    return min(b, n // 4)


def initial_state(n: int, k: int, delta: float = DEFAULT_DELTA_EXACT, b_min: int = B_MIN) -> IterationState:
    b1 = _first_bucket_count(n, k)
    b_min = min(b_min, b1)
    return IterationState(n, k, 1, k, b1, b_min, delta, SparseSpectrum.empty(n))


def _select(mags: np.ndarray, k_m: int) -> np.ndarray:
    take = min(k_m, mags.size)
    order = np.argsort(-mags, kind="stable")[:take]
    theta = THRESHOLD_FRACTION * mags[order[-1]]
    return order[mags[order] > theta]


def _isolated(vals: np.ndarray, u: np.ndarray, taus, n: int) -> np.ndarray:
    """Worst relative misfit of ``y_m = y_0 * w**(tau_m * u)`` over the rounds.

    Zero for a bucket holding one tone; large when tones collide.
    """
    rot = np.exp(-2j * np.pi * (np.multiply.outer(np.asarray(taus, dtype=np.int64), u) % n) / n)
    y0 = vals[0]
    misfit = np.abs(vals - y0 * rot).max(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(y0 != 0, misfit / np.abs(y0), np.inf)


def _aliased(values: np.ndarray, chosen, u, taus, n: int, b: int) -> np.ndarray:
    """Flag candidates that are really a neighbour's tone seen one bucket over.

    Every round's offset is a multiple of n/L, so positions ``u`` and
    ``u -+ L`` rotate identically. A tone in bucket ``j`` near its edge leaks
    into bucket ``j +- 1`` through the transition band and is located there at
    the alias position. The alias explains bucket ``i`` but predicts nothing
    in the opposite neighbour; the true tone does. So a candidate is rejected
    when the opposite neighbour carries a component with the same rotation and
    at least half the magnitude.
    """
    L = n // b
    off = (u - chosen * L + n // 2) % n - n // 2
    side = np.sign(off)
    j = (chosen - side) % b
    rot = np.exp(-2j * np.pi * (np.multiply.outer(np.asarray(taus, dtype=np.int64), u) % n) / n)
    v = values[:, j]
    a = np.mean(v * np.conj(rot), axis=0)
    fit = np.abs(v - a * rot).max(axis=0)
    strong = np.abs(a) >= 0.5 * np.abs(values[0, chosen])
    return (side != 0) & strong & (fit <= ISOLATION_TOL * np.abs(a))


def run_iteration(x: ComplexSignal, state: IterationState, cfg: MultiscaleConfig, rng=None):
    """One encode/subtract/locate/estimate pass.

    Mutates ``state`` (accumulated spectrum, counters, log, schedule) and
    returns the spectrum found in this iteration.
    """
    if x.n != state.n:
        raise ValueError("signal length does not match the state")
    rng = make_rng(rng)
    t0 = time.perf_counter()
    n, b = state.n, state.b_m
    win = get_window(n, b, state.delta)
    lengths = stage_lengths(n // b, cfg)
    taus = [0] + [tau_schedule(L_m, n) for L_m in lengths]
    base = random_params(n, rng, tau_override=0)

    values = np.empty((len(taus), b), dtype=np.complex128)
    samples = 0
    for r, tau in enumerate(taus):
        params = base.with_tau(tau)
        idx = sample_indices(win, params)
        if state.touched is not None:
            state.touched[idx] = True
        rnd = bucketize_samples(x.samples[idx], win, params)
        samples += rnd.samples_read
        values[r] = rnd.values
        if len(state.accumulated):
            values[r] -= predict_buckets(state.accumulated, win, params).values

    chosen = _select(np.abs(values[0]), state.k_m)
    found = SparseSpectrum.empty(n)
    if chosen.size:
        u, ok = locate_many(chosen, values, taus, cfg, n, b)
        L = n // b
        g = win.g_freq[(chosen * L - u) % n]
        ok &= np.abs(g) >= 0.5
        ok &= _isolated(values[:, chosen], u, taus, n) <= ISOLATION_TOL
        ok &= ~_aliased(values, chosen, u, taus, n, b)
        f = (base.sigma_inv * u[ok]) % n
        found = SparseSpectrum.accumulate(n, f, values[0, chosen[ok]] / g[ok])

    state.accumulated = state.accumulated.merge(found)
    state.samples += samples
    state.runtime_s += time.perf_counter() - t0
    state.log.append(
        IterationLog(state.m, state.k_m, b, win.w, len(lengths), base.sigma, tuple(taus), samples, len(found))
    )
    state.advance()
    return found, state


def sfft4(
    x: ComplexSignal,
    k: int,
    cfg: MultiscaleConfig | None = None,
    seed=None,
    delta: float = DEFAULT_DELTA_EXACT,
    b_min: int = B_MIN,
):
    """K-sparse approximation of the spectrum of ``x``.

    Returns ``(spectrum, RunStats)``. Sample counts are summed per round
    without deduplicating indices shared between rounds.
    """
    cfg = cfg or MultiscaleConfig()
    n = x.n
    if not 1 <= k <= n // 8:
        raise ValueError(f"k must lie in [1, n/8], got {k}")
    rng = make_rng(seed)
    state = initial_state(n, k, delta, b_min)
    state.touched = np.zeros(n, dtype=bool)
    # windows are designed outside the timed region
    b = state.b_m
    for _ in range(math.ceil(math.log2(k)) + 2 if k > 1 else 2):
        get_window(n, b, delta)
        b = max(state.b_min, b // 2)

    t0 = time.perf_counter()
    max_iter = math.ceil(math.log2(k)) + 2 if k > 1 else 2
    while state.m <= max_iter:
        run_iteration(x, state, cfg, rng)
    result = state.accumulated.top_k(k)
    result = SparseSpectrum(n, result.positions[result.coeffs != 0], result.coeffs[result.coeffs != 0])
    elapsed = time.perf_counter() - t0
    distinct = int(np.count_nonzero(state.touched))
    return result, RunStats(state.samples, distinct, elapsed * 1e3, state.log)
