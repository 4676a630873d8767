"""Monte-Carlo study of the inter-round phase error of an isolated tone.

For a bucket holding exactly one tone at permuted position ``u``, the noise-
free ratio of the ``tau = 0`` and ``tau`` rounds has phase
``(tau * u mod n) * 2*pi / n``. Noise perturbs the measured phase; the
circular difference is the phase error ``dphi`` that bounds the usable block
count ``l`` and the extension ``q`` of the multiscale locator.

Noise level convention: ``snr_db`` is measured against the per-sample power
of a single unit tone (``reference="tone"``, the default) or against the
whole signal (``reference="total"``). Noise is drawn only at the time indices
the two rounds read, which is distributed identically to drawing it for the
whole signal and reading those entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bucketizer import bucketize_samples, random_params, sample_indices
from .flat_window import DEFAULT_DELTA_NOISY, get_window
from .locator import (
    MultiscaleConfig,
    check_parameter_bounds,
    circular_distance,
    initial_region,
    _select_blocks,
    stage_lengths,
    tau_schedule,
)
from .signal_model import SparseSpectrum, idft_dense, make_rng, sample_at

__all__ = [
    "PhaseErrorSample",
    "PhaseErrorHistogram",
    "sample_phase_error",
    "run_phase_experiment",
    "locator_stage_success",
    "BIN_EDGES",
]

BIN_WIDTH = 0.1
BIN_EDGES = np.round(np.arange(-6.0, 1.0 + BIN_WIDTH / 2, BIN_WIDTH), 10)
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PhaseErrorSample:
    dphi: float
    bucket: int
    u: int

    @property
    def log10_dphi(self) -> float:
        return math.log10(self.dphi) if self.dphi > 0 else -math.inf


@dataclass
class PhaseErrorHistogram:
    snr_db: float
    n: int
    k: int
    l_width: int
    trials: int
    bin_centers: np.ndarray
    masses: np.ndarray
    p50: float
    p99: float
    max: float
    dphi: np.ndarray = field(repr=False)

    @property
    def median_log10(self) -> float:
        return math.log10(self.p50) if self.p50 > 0 else -math.inf

    @property
    def l_max(self) -> int:
        """Largest block count admissible at the 0.99 phase-error level."""
        return int(math.floor(math.pi / self.p99)) if self.p99 > 0 else 10**9

    def bounds(self, l: int, q: float = 0.0):
        return check_parameter_bounds(self.p99, l, q)


def _noise_std(snr_db: float, coeffs: np.ndarray, k: int, reference: str) -> float:
    if snr_db == math.inf:
        return 0.0
    power = float(np.sum(np.abs(coeffs) ** 2))
    if reference == "tone":
        power /= max(k, 1)
    elif reference != "total":
        raise ValueError("reference must be 'tone' or 'total'")
    return math.sqrt(power / 10.0 ** (snr_db / 10.0))


def _isolated_buckets(u: np.ndarray, n: int, b: int) -> tuple[np.ndarray, np.ndarray]:
    """Buckets with exactly one tone closer than L to their centre.

    Returns ``(buckets, u_of_that_tone)``; the tone also lies in the bucket's
    own pass region.
    """
    L = n // b
    owner = ((u + L // 2) // L) % b
    counts = np.zeros(b, dtype=np.int64)
    for shift in (-1, 0, 1):
        i = (owner + shift) % b
        d = (i * L - u) % n
        near = np.minimum(d, n - d) < L
        np.add.at(counts, i[near], 1)
    good = counts[owner] == 1
    return owner[good], u[good]


def _draw_rounds(n, k, b, snr_db, rng, delta, reference, taus):
    """One noisy signal bucketized at each offset in ``taus`` (shared sigma)."""
    win = get_window(n, b, delta)
    positions = rng.choice(n, size=k, replace=False)
    coeffs = np.exp(1j * rng.uniform(0.0, TWO_PI, size=k))
    truth = SparseSpectrum(n, positions, coeffs)
    base = random_params(n, rng, tau_override=0)
    idx = [sample_indices(win, base.with_tau(t)) for t in taus]
    union, inverse = np.unique(np.concatenate(idx), return_inverse=True)
    if union.size * k > 4 * n * max(1, int(math.log2(n))):
        x = idft_dense(truth.dense())[union]
    else:
        x = sample_at(truth, union)
    std = _noise_std(snr_db, coeffs, k, reference)
    if std:
        x = x + (std / math.sqrt(2.0)) * (rng.standard_normal(union.size) + 1j * rng.standard_normal(union.size))
    vals = []
    offset = 0
    for t, ix in zip(taus, idx):
        sub = x[inverse[offset : offset + ix.size]]
        offset += ix.size
        vals.append(bucketize_samples(sub, win, base.with_tau(t)).values)
    u = (base.sigma * positions) % n
    return np.array(vals), u


def sample_phase_error(
    n: int,
    k: int,
    b: int,
    snr_db: float,
    rng=None,
    delta: float = DEFAULT_DELTA_NOISY,
    reference: str = "tone",
):
    """One phase-error draw, or ``None`` when no bucket holds a lone tone."""
    rng = make_rng(rng)
    L = n // b
    tau = tau_schedule(L, n)
    vals, u = _draw_rounds(n, k, b, snr_db, rng, delta, reference, [0, tau])
    buckets, u_iso = _isolated_buckets(u, n, b)
    if buckets.size == 0:
        return None
    pick = int(rng.integers(buckets.size))
    i, ui = int(buckets[pick]), int(u_iso[pick])
    y0, yt = vals[0, i], vals[1, i]
    if yt == 0 or y0 == 0:
        return PhaseErrorSample(math.pi, i, ui)
    measured = np.angle(y0 / yt) % TWO_PI
    ideal = ((tau * ui) % n) * TWO_PI / n
    return PhaseErrorSample(float(circular_distance(measured, ideal)), i, ui)


def _histogram(dphi: np.ndarray):
    logs = np.log10(np.maximum(dphi, 1e-300))
    logs = np.clip(logs, BIN_EDGES[0], BIN_EDGES[-1] - 1e-12)
    counts, _ = np.histogram(logs, bins=BIN_EDGES)
    return 0.5 * (BIN_EDGES[:-1] + BIN_EDGES[1:]), counts / counts.sum()


def run_phase_experiment(
    n: int,
    k: int,
    b: int,
    snr_list,
    trials: int,
    seed=None,
    delta: float = DEFAULT_DELTA_NOISY,
    reference: str = "tone",
    max_rejections: int | None = None,
):
    """Histogram of ``log10(dphi)`` over ``trials`` accepted draws per SNR."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    max_rejections = b if max_rejections is None else max_rejections
    seeds = np.random.SeedSequence(seed).spawn(len(snr_list))
    out = []
    for snr, ss in zip(snr_list, seeds):
        rng = np.random.default_rng(ss)
        dphi = np.empty(trials)
        got, rejected = 0, 0
        while got < trials:
            s = sample_phase_error(n, k, b, snr, rng, delta, reference)
            if s is None:
                rejected += 1
                if rejected > max_rejections * trials:
                    raise RuntimeError("no isolated buckets; geometry too crowded")
                continue
            dphi[got] = s.dphi
            got += 1
        centers, masses = _histogram(dphi)
        out.append(
            PhaseErrorHistogram(
                snr_db=snr,
                n=n,
                k=k,
                l_width=n // b,
                trials=trials,
                bin_centers=centers,
                masses=masses,
                p50=float(np.quantile(dphi, 0.5)),
                p99=float(np.quantile(dphi, 0.99)),
                max=float(dphi.max()),
                dphi=dphi,
            )
        )
    return out


def locator_stage_success(
    n: int,
    k: int,
    b: int,
    snr_db: float,
    cfg: MultiscaleConfig,
    stages: int,
    seed=None,
    delta: float = DEFAULT_DELTA_NOISY,
    reference: str = "tone",
):
    """Fraction of locator stages whose refined region still contains ``u``.

    Runs isolated-tone locations until ``stages`` stage outcomes are
    collected. A location stops at its first failed stage.
    """
    rng = make_rng(seed)
    L = n // b
    lengths = stage_lengths(L, cfg)
    taus = [0] + [tau_schedule(Lm, n) for Lm in lengths]
    ok = total = 0
    while total < stages:
        vals, u = _draw_rounds(n, k, b, snr_db, rng, delta, reference, taus)
        buckets, u_iso = _isolated_buckets(u, n, b)
        for i, ui in zip(buckets, u_iso):
            region = initial_region(int(i), n, b)
            u_min = region.u_min
            y0 = vals[0, i]
            for m, length in enumerate(lengths):
                if total >= stages:
                    break
                phi = np.angle(y0 * np.conj(vals[m + 1, i])) % TWO_PI
                lr, r = _select_blocks(u_min, length, taus[m + 1], phi, cfg, n)
                u_min = u_min + (int(lr) - cfg.q / 2) * r
                new_len = length * (cfg.q + 1) / cfg.l
                if m == 0:
                    # the first stage spans a full phase period, so u is only
                    # defined modulo L there (see wrap_into_bucket)
                    ui = u_min + (ui - u_min) % L
                inside = ((ui - u_min) % n) < new_len
                total += 1
                ok += bool(inside)
                if not inside:
                    break
            if total >= stages:
                break
    return ok / total
