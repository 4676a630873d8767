"""Multiscale phase location of an isolated frequency within its bucket.

The bucket's pass region is split into ``l`` blocks. Comparing the bucket
value of the ``tau = 0`` round with a round at offset ``tau`` gives the phase
``(tau * u mod n) * 2*pi/n``; choosing ``tau ~ n / L_m`` spreads the current
region over the whole circle, so the nearest block centre (in circular phase
distance) identifies the block holding ``u``. That block, widened by ``q/2``
blocks on each side, becomes the next region, shrinking the length by a factor
``(q + 1) / l`` per stage until it is at most one bin wide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bucketizer import BucketSet
from .flat_window import FlatWindow

__all__ = [
    "MultiscaleConfig",
    "LocateRegion",
    "PhaseMeasurement",
    "UnlocatableBucket",
    "phase_of",
    "circular_distance",
    "tau_schedule",
    "stage_lengths",
    "stage_count",
    "initial_region",
    "locate_step",
    "locate_frequency",
    "locate_many",
    "check_parameter_bounds",
]

TWO_PI = 2.0 * math.pi
_LEN_EPS = 1e-9


class UnlocatableBucket(ValueError):
    """A round saw a zero bucket value, so no phase is defined."""


@dataclass(frozen=True)
class MultiscaleConfig:
    l: int = 16
    q: float = 1.0

    def __post_init__(self):
        if int(self.l) != self.l or self.l < 2:
            raise ValueError("l must be an integer >= 2")
        if self.q < 0:
            raise ValueError("q must be non-negative")
        if self.shrink <= 1:
            raise ValueError("l / (q + 1) must exceed 1")
        object.__setattr__(self, "l", int(self.l))

    @property
    def shrink(self) -> float:
        return self.l / (self.q + 1)


@dataclass(frozen=True)
class LocateRegion:
    u_min: float
    u_max: float
    stage: int = 1

    def __post_init__(self):
        if not self.u_max > self.u_min:
            raise ValueError("empty region")

    @property
    def length(self) -> float:
        return self.u_max - self.u_min

    def block(self, l: int) -> float:
        return self.length / l

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.u_min + self.u_max)

    def contains(self, u: float, n: int) -> bool:
        """Membership of ``u`` taken mod n."""
        off = (u - self.u_min) % n
        return off < self.length


def phase_of(z) -> float:
    """Phase of ``z`` mapped into ``[0, 2*pi)``."""
    if z == 0:
        raise UnlocatableBucket("phase of zero is undefined")
    p = math.atan2(z.imag, z.real) % TWO_PI
    return 0.0 if p >= TWO_PI else p


def circular_distance(a, b):
    d = np.abs(np.asarray(a) - np.asarray(b)) % TWO_PI
    return np.minimum(d, TWO_PI - d)


@dataclass(frozen=True)
class PhaseMeasurement:
    y0: complex
    y_tau: complex
    tau: int

    @property
    def phi(self) -> float:
        if self.y_tau == 0:
            raise UnlocatableBucket("zero bucket in the offset round")
        return phase_of(self.y0 / self.y_tau)


def tau_schedule(L_m: float, n: int) -> int:
    """Offset that stretches a region of length ``L_m`` over the phase circle."""
    if not 1 <= L_m <= n:
        raise ValueError("L_m must lie in [1, n]")
    return int(min(max(math.floor(n / L_m + 0.5), 1), n - 1))


def stage_lengths(L: float, cfg: MultiscaleConfig) -> list[float]:
    """Region lengths ``L_1 = L, L_2, ...`` for every stage that is run."""
    ratio = Fraction(cfg.q).limit_denominator(10**6) + 1
    ratio = ratio / cfg.l
    out, length = [], Fraction(L)
    while length > 1 + _LEN_EPS:
        out.append(float(length))
        length *= ratio
    return out


def stage_count(L: float, cfg: MultiscaleConfig) -> int:
    """``ceil(log_{l/(q+1)} L)`` computed exactly."""
    return len(stage_lengths(L, cfg))


def wrap_into_bucket(u, bucket, n: int, b: int):
    """Representative of ``u`` modulo L inside the bucket's own region.

    Every offset is a multiple of n/L, so u and u + L share all phases; the
    locator can only resolve u modulo L and ownership picks the copy.
    """
    L = n // b
    lo = np.asarray(bucket, dtype=np.int64) * L - L // 2
    return (lo + (np.asarray(u, dtype=np.int64) - lo) % L) % n


def initial_region(bucket: int, n: int, b: int) -> LocateRegion:
    L = n // b
    return LocateRegion(bucket * L - L / 2, bucket * L + L / 2, 1)


def _select_blocks(u_min, length, tau, phi, cfg: MultiscaleConfig, n: int):
    r = length / cfg.l
    centers = np.asarray(u_min, dtype=float)[..., None] + (np.arange(cfg.l) + 0.5) * r
    cand = np.mod(centers * tau, n) * (TWO_PI / n)
    dist = circular_distance(cand, np.asarray(phi, dtype=float)[..., None])
    return np.argmin(dist, axis=-1), r


def locate_step(meas: PhaseMeasurement, region: LocateRegion, cfg: MultiscaleConfig, n: int) -> LocateRegion:
    """Pick the block whose centre phase is nearest the measured phase, widen by q."""
    lr, r = _select_blocks(region.u_min, region.length, meas.tau, meas.phi, cfg, n)
    lr = int(lr)
    return LocateRegion(
        region.u_min + (lr - cfg.q / 2) * r,
        region.u_min + (lr + 1 + cfg.q / 2) * r,
        region.stage + 1,
    )


def locate_frequency(bucket_i: int, rounds: list[BucketSet], cfg: MultiscaleConfig, win: FlatWindow) -> int:
    """Permuted position ``u`` of the tone isolated in bucket ``bucket_i``.

    ``rounds[0]`` must be the ``tau = 0`` round and ``rounds[m]`` the round
    for stage ``m``. Raises :class:`UnlocatableBucket` on a zero bucket.
    """
    n, b = win.n, win.b
    lengths = stage_lengths(n // b, cfg)
    if len(rounds) < len(lengths) + 1:
        raise ValueError(f"need {len(lengths) + 1} rounds, got {len(rounds)}")
    if rounds[0].params.tau != 0:
        raise ValueError("first round must have tau = 0")
    region = initial_region(bucket_i, n, b)
    y0 = complex(rounds[0].values[bucket_i])
    for m in range(len(lengths)):
        rnd = rounds[m + 1]
        meas = PhaseMeasurement(y0, complex(rnd.values[bucket_i]), rnd.params.tau)
        if y0 == 0:
            raise UnlocatableBucket("zero bucket in the tau = 0 round")
        region = locate_step(meas, region, cfg, n)
    return int(wrap_into_bucket(math.floor(region.midpoint + 0.5), bucket_i, n, b))


def locate_many(buckets, values: np.ndarray, taus, cfg: MultiscaleConfig, n: int, b: int):
    """Vectorized :func:`locate_frequency` over several buckets.

    ``values`` has shape ``(R + 1, b)`` with row 0 the ``tau = 0`` round.
    Returns ``(u, ok)``; ``ok`` is False where some round value was zero.
    """
    buckets = np.asarray(buckets, dtype=np.int64)
    L = n // b
    lengths = stage_lengths(L, cfg)
    u_min = buckets * L - L / 2.0
    y0 = values[0, buckets]
    ok = y0 != 0
    for m, length in enumerate(lengths):
        yt = values[m + 1, buckets]
        ok &= yt != 0
        ratio = np.where(ok, y0 * np.conj(yt), 1.0)
        phi = np.mod(np.angle(ratio), TWO_PI)
        lr, r = _select_blocks(u_min, length, taus[m + 1], phi, cfg, n)
        u_min = u_min + (lr - cfg.q / 2) * r
    final_len = lengths[-1] * (cfg.q + 1) / cfg.l if lengths else float(L)
    u = np.floor(u_min + final_len / 2 + 0.5).astype(np.int64)
    return wrap_into_bucket(u, buckets, n, b), ok


def check_parameter_bounds(max_dphi: float, l: int, q: float):
    """Admissibility of ``(l, q)`` for a worst-case phase error ``max_dphi``.

    Returns ``(l <= pi / max_dphi, max_dphi * l / pi)``.
    """
    if max_dphi <= 0:
        raise ValueError("max_dphi must be positive")
    return l <= math.pi / max_dphi, max_dphi * l / math.pi
