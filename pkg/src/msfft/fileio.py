"""Binary signal files and truth sidecars.

Signal file layout (little-endian)::

    b"MSFT" + 4 zero bytes | u64 n | n x (f64 re, f64 im)

The truth sidecar is a CSV with header ``position,re,im``.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .signal_model import ComplexSignal, SparseSpectrum, is_power_of_two

MAGIC = b"MSFT"
_HEADER = struct.Struct("<4s4xQ")


class SignalFileError(ValueError):
    pass


def save_signal(path, x: ComplexSignal) -> None:
    data = np.empty(2 * x.n, dtype="<f8")
    data[0::2] = x.samples.real
    data[1::2] = x.samples.imag
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, x.n))
        fh.write(data.tobytes())


def load_signal(path) -> ComplexSignal:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise SignalFileError(f"{path}: truncated header")
    magic, n = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SignalFileError(f"{path}: bad magic {magic!r}")
    if not is_power_of_two(n) or n < 4:
        raise SignalFileError(f"{path}: length {n} is not a power of two >= 4")
    body = raw[_HEADER.size :]
    if len(body) != 16 * n:
        raise SignalFileError(f"{path}: expected {16 * n} body bytes, found {len(body)}")
    data = np.frombuffer(body, dtype="<f8")
    samples = data[0::2] + 1j * data[1::2]
    if not np.all(np.isfinite(samples)):
        raise SignalFileError(f"{path}: non-finite samples")
    return ComplexSignal(samples)


def truth_path(signal_path) -> Path:
    p = Path(signal_path)
    return p.with_name(p.name + ".truth.csv")


def save_truth(path, spec: SparseSpectrum) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["position", "re", "im"])
        for pos, c in zip(spec.positions, spec.coeffs):
            w.writerow([int(pos), repr(float(c.real)), repr(float(c.imag))])


def load_truth(path, n: int) -> SparseSpectrum:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    pos = [int(r["position"]) for r in rows]
    val = [complex(float(r["re"]), float(r["im"])) for r in rows]
    return SparseSpectrum(n, pos, val)
