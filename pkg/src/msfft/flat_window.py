"""Flat window filters: a Gaussian convolved with a boxcar.

A window for geometry ``(n, b)`` has pass width ``L = n / b``. Its frequency
response satisfies, for every integer frequency ``i`` (taken mod n):

* ``|G^_i|`` in ``[1 - delta, 1 + delta]`` when ``|i| <= L/2``
* ``|G^_i| <= delta`` when ``|i| >= L``
* ``|G^_i| <= 1 + delta`` everywhere

Construction: in frequency, a boxcar of half-width ``3L/4`` smoothed by a
Gaussian of standard deviation ``s_f`` bins; in time this is a sinc times a
Gaussian, truncated to ``w`` taps centred on zero. ``s_f`` is tuned per ``w``
and ``w`` is the smallest odd support whose measured response passes all three
bands. When no truncated support below ``n`` passes, the untruncated
(circular, ``w = n``) window is used.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import erf, erfcinv

from .signal_model import is_power_of_two

__all__ = [
    "FlatWindow",
    "WindowDesignError",
    "design_flat_window",
    "get_window",
    "window_response",
    "check_bands",
    "DEFAULT_DELTA_EXACT",
    "DEFAULT_DELTA_NOISY",
]

DEFAULT_DELTA_EXACT = 1e-8
DEFAULT_DELTA_NOISY = 1e-6


class WindowDesignError(ValueError):
    """No window with support <= n meets the requested bounds."""


@dataclass(frozen=True, eq=False)
class FlatWindow:
    n: int
    b: int
    delta: float
    w: int
    g_time: np.ndarray  # taps for offsets t = -(w//2) .. w - 1 - w//2
    g_freq: np.ndarray  # response on all n integer frequencies
    gauss_std: float  # s_f in frequency bins

    @property
    def l_width(self) -> int:
        return self.n // self.b

    @property
    def eps(self) -> float:
        return self.l_width / self.n

    @property
    def eps_prime(self) -> float:
        return self.l_width / (2 * self.n)

    @property
    def full_support(self) -> bool:
        return self.w == self.n

    @cached_property
    def offsets(self) -> np.ndarray:
        """Signed time offsets of the taps, centred on zero."""
        half = self.w // 2
        return np.arange(-half, self.w - half, dtype=np.int64)

    @cached_property
    def fold_index(self) -> np.ndarray:
        """Bucket-domain index ``t mod b`` of each tap."""
        return self.offsets % self.b

    def g_freq_at(self, i):
        return self.g_freq[np.asarray(i, dtype=np.int64) % self.n]


def window_response(win: FlatWindow, i):
    """Frequency response ``G^_{i mod n}`` (scalar or array)."""
    out = win.g_freq_at(i)
    return complex(out) if np.ndim(out) == 0 else out


def _circ_dist(n: int) -> np.ndarray:
    i = np.arange(n)
    return np.minimum(i, n - i)


def check_bands(g_freq: np.ndarray, n: int, b: int, delta: float) -> dict:
    """Measure the three band conditions on every integer frequency."""
    L = n // b
    d = _circ_dist(n)
    mag = np.abs(g_freq)
    pass_dev = float(np.max(np.abs(mag[d <= L // 2] - 1.0)))
    stop = mag[d >= L]
    stop_max = float(stop.max()) if stop.size else 0.0
    overall = float(mag.max())
    return {
        "pass_dev": pass_dev,
        "stop_max": stop_max,
        "overall_max": overall,
        "ok": pass_dev <= delta and stop_max <= delta and overall <= 1.0 + delta,
    }


def _boxcar_gauss(n: int, b: int, s_f: float) -> np.ndarray:
    L = n / b
    a = 0.75 * L
    d = _circ_dist(n).astype(float)
    c = 1.0 / (math.sqrt(2.0) * s_f)
    return 0.5 * (erf((a - d) * c) + erf((a + d) * c))


def _truncated(n: int, b: int, w: int, s_f: float):
    """Time taps and normalized response for support ``w`` (odd, < n)."""
    full = np.fft.ifft(_boxcar_gauss(n, b, s_f)).real * n
    half = w // 2
    taps = np.concatenate([full[n - half :], full[: w - half]])
    g = np.zeros(n)
    g[: w - half] = taps[half:]
    if half:
        g[n - half :] = taps[:half]
    resp = np.fft.fft(g).real / n
    d = _circ_dist(n)
    pas = np.abs(resp[d <= (n // b) // 2])
    scale = 0.5 * (pas.max() + pas.min())
    return taps / scale, resp / scale


def _violation(n, b, w, s_f, delta) -> float:
    _, resp = _truncated(n, b, w, s_f)
    m = check_bands(resp, n, b, delta)
    return max(m["pass_dev"], m["stop_max"], m["overall_max"] - 1.0) / delta


def _best_std(n, b, w, delta):
    """Gaussian width minimizing the worst band violation at support ``w``."""
    L = n / b
    res = minimize_scalar(
        lambda ls: math.log(_violation(n, b, w, math.exp(ls), delta) + 1e-300),
        bounds=(math.log(L / 200.0), math.log(L / 2.0)),
        method="bounded",
        options={"xatol": 1e-3},
    )
    s_f = math.exp(res.x)
    return s_f, math.exp(res.fun)


def _full_window(n, b, delta) -> FlatWindow:
    L = n / b
    s_f = (L / 4.0) / (math.sqrt(2.0) * float(erfcinv(delta)))
    resp = _boxcar_gauss(n, b, s_f)
    taps_full = np.fft.ifft(resp).real * n
    half = n // 2
    taps = np.concatenate([taps_full[n - half :], taps_full[: n - half]])
    g_freq = np.fft.fft(taps_full).real / n
    if not check_bands(g_freq, n, b, delta)["ok"]:
        raise WindowDesignError(f"no flat window for n={n}, b={b}, delta={delta}")
    return _make(n, b, delta, n, taps, g_freq, s_f)


def _make(n, b, delta, w, taps, g_freq, s_f) -> FlatWindow:
    taps = np.ascontiguousarray(taps, dtype=np.float64)
    g_freq = np.ascontiguousarray(g_freq, dtype=np.float64)
    taps.setflags(write=False)
    g_freq.setflags(write=False)
    return FlatWindow(n=n, b=b, delta=delta, w=w, g_time=taps, g_freq=g_freq, gauss_std=s_f)


def _design_grid(n: int, b: int) -> int:
    # the response shape depends on (b, w) only; search on a coarser grid
    return min(n, max(4096, 1 << (128 * b - 1).bit_length()))


def design_flat_window(n: int, b: int, delta: float) -> FlatWindow:
    """Smallest-support flat window for ``(n, b, delta)``.

    The support is searched on a reduced frequency grid (the response is a
    function of ``i / n`` at fixed ``b``) and then verified exhaustively on
    all ``n`` frequencies, growing ``w`` if the fine grid reveals a violation.
    """
    if not is_power_of_two(n) or not is_power_of_two(b) or n % b:
        raise ValueError("n and b must be powers of two with b | n")
    if not 4 <= b <= n // 4:
        raise ValueError(f"b must lie in [4, n/4], got b={b}, n={n}")
    if not 0.0 < delta < 0.1:
        raise ValueError("delta must lie in (0, 0.1)")

    nd = _design_grid(n, b)

    def feasible(w):
        s_f, v = _best_std(nd, b, w, delta)
        return v <= 0.9, s_f

    lo, hi = 1, 2 * b + 1
    hi_s = None
    while lo < nd - 1:
        hi = min(hi, nd - 1)
        ok, s_f = feasible(hi)
        if ok:
            hi_s = s_f
            break
        lo, hi = hi, 2 * hi + 1
    if hi_s is None:
        return _full_window(n, b, delta)
    # invariant: lo infeasible, hi feasible, both odd
    while hi - lo > 2:
        mid = (lo + hi) // 2
        mid |= 1
        if mid >= hi:
            mid -= 2
        if mid <= lo:
            break
        ok, s_f = feasible(mid)
        if ok:
            hi, hi_s = mid, s_f
        else:
            lo = mid

    w, s_f = hi, hi_s * (n / nd)
    while w < n:
        taps, resp = _truncated(n, b, w, s_f)
        if check_bands(resp, n, b, delta)["ok"]:
            return _make(n, b, delta, w, taps, resp, s_f)
        s_f, _ = _best_std(n, b, w, delta)
        taps, resp = _truncated(n, b, w, s_f)
        if check_bands(resp, n, b, delta)["ok"]:
            return _make(n, b, delta, w, taps, resp, s_f)
        w = int(w * 1.05) | 1
    return _full_window(n, b, delta)


_cache: dict = {}
_cache_lock = threading.Lock()


def get_window(n: int, b: int, delta: float) -> FlatWindow:
    """Process-wide cached :func:`design_flat_window`."""
    key = (int(n), int(b), float(delta))
    with _cache_lock:
        win = _cache.get(key)
    if win is None:
        win = design_flat_window(n, b, delta)
        with _cache_lock:
            win = _cache.setdefault(key, win)
    return win
