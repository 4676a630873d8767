"""Benchmark cells, sweeps and the flat CSV schema they emit."""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .flat_window import DEFAULT_DELTA_EXACT, DEFAULT_DELTA_NOISY
from .locator import MultiscaleConfig
from .pipeline import sfft4
from .signal_model import (
    ComplexSignal,
    SparseSpectrum,
    add_awgn,
    dft_dense,
    error_metrics,
    generate_test_signal,
)

CSV_COLUMNS = [
    "algo",
    "n",
    "k",
    "l",
    "q",
    "snr_db",
    "trial",
    "seed",
    "runtime_ms",
    "samples_used",
    "sample_fraction",
    "l0_err",
    "l1_err",
    "l2_err",
    "status",
]

ALGOS = ("sfft4", "dense")
AXES = ("size", "sparsity", "snr", "params")
DEFAULTS = {"n": 2**17, "k": 50, "snr": math.inf, "l": 16, "q": 1.0}


@dataclass
class BenchRecord:
    algo: str
    n: int
    k: int
    l: int
    q: float
    snr_db: float
    trial: object  # int, or "median" on summary rows
    seed: object  # int, or "" on summary rows
    runtime_ms: float = math.nan
    samples_used: float = math.nan
    sample_fraction: float = math.nan
    l0_err: float = math.nan
    l1_err: float = math.nan
    l2_err: float = math.nan
    status: str = "ok"

    def cell(self):
        return (self.algo, self.n, self.k, self.l, self.q, self.snr_db)


@dataclass(frozen=True)
class Cell:
    algo: str
    n: int
    k: int
    l: int
    q: float
    snr_db: float


def derive_seed(base: int, trial: int) -> int:
    """Per-trial seed; independent of the cell so trials share signals."""
    return int(np.random.SeedSequence([int(base), int(trial)]).generate_state(1, np.uint64)[0] >> 1)


def dense_transform(x: ComplexSignal, k: int) -> SparseSpectrum:
    """The k largest coefficients of the full transform."""
    spec = dft_dense(x)
    if k >= spec.size:
        top = np.arange(spec.size)
    else:
        top = np.argpartition(-np.abs(spec), k - 1)[:k]
    return SparseSpectrum(x.n, top, spec[top])


def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def _parse_float(s: str) -> float:
    return math.nan if s == "" else float(s)


def _parse_maybe_int(s: str):
    try:
        return int(s)
    except ValueError:
        return s


def run_cell(
    cell: Cell,
    trial: int,
    seed: int,
    x: ComplexSignal | None = None,
    truth: SparseSpectrum | None = None,
    delta: float | None = None,
) -> BenchRecord:
    """Generate, perturb, transform and score one (cell, trial).

    With an explicit ``x`` (e.g. loaded from a file) no signal is generated;
    errors are scored only when ``truth`` is also given.
    """
    rec = BenchRecord(cell.algo, cell.n, cell.k, cell.l, cell.q, cell.snr_db, trial, seed)
    if x is None:
        x, truth = generate_test_signal(cell.n, cell.k, seed)
        x = add_awgn(x, cell.snr_db, seed + 1)
    if delta is None:
        delta = DEFAULT_DELTA_EXACT if cell.snr_db == math.inf else DEFAULT_DELTA_NOISY

    if cell.algo == "sfft4":
        est, stats = sfft4(x, cell.k, MultiscaleConfig(cell.l, cell.q), seed=seed + 2, delta=delta)
        rec.runtime_ms = stats.runtime_ms
        rec.samples_used = stats.samples_used
        rec.sample_fraction = stats.sample_fraction(x.n)
    elif cell.algo == "dense":
        t0 = time.perf_counter()
        est = dense_transform(x, cell.k)
        rec.runtime_ms = (time.perf_counter() - t0) * 1e3
        rec.samples_used = x.n
        rec.sample_fraction = 1.0
    else:
        raise ValueError(f"unknown algorithm {cell.algo!r}")

    if truth is not None:
        m = error_metrics(truth, est, cell.k)
        rec.l0_err, rec.l1_err, rec.l2_err = m.l0_err, m.l1_err, m.l2_err
    return rec


def build_cells(axis: str, algos, n_list, k_list, snr_list, l_list, q_list) -> list[Cell]:
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}")
    sweep = {"size": "n", "sparsity": "k", "snr": "snr", "params": None}[axis]
    vals = {"n": n_list, "k": k_list, "snr": snr_list, "l": l_list, "q": q_list}
    for name, v in vals.items():
        if not v:
            raise ValueError(f"empty sweep for {name}")
        if name != sweep and not (axis == "params" and name in ("l", "q")) and len(v) > 1:
            raise ValueError(f"--{name} takes a single value unless sweeping axis {axis!r}")
    cells = []
    for algo in algos:
        for n in n_list:
            for k in k_list:
                for snr in snr_list:
                    for l in l_list:
                        for q in q_list:
                            cells.append(Cell(algo, int(n), int(k), int(l), float(q), float(snr)))
    return cells


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("MSFFT_THREADS", "1")))
    except ValueError:
        return 1


def run_sweep(cells, trials: int, seed: int, workers: int | None = None) -> list[BenchRecord]:
    """Run every (cell, trial); rows come back sorted by (cell, trial)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    jobs = [(ci, c, t) for ci, c in enumerate(cells) for t in range(trials)]

    def one(job):
        ci, c, t = job
        s = derive_seed(seed, t)
        try:
            return ci, t, run_cell(c, t, s)
        except Exception as exc:  # reported per cell, the sweep continues
            rec = BenchRecord(c.algo, c.n, c.k, c.l, c.q, c.snr_db, t, s, status=f"error: {exc}")
            return ci, t, rec

    workers = workers or _workers()
    if workers == 1:
        done = [one(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(one, jobs))
    done.sort(key=lambda r: (r[0], r[1]))
    return [r for _, _, r in done]


def summarize(records) -> list[BenchRecord]:
    """One median row per cell over its successful trials."""
    groups: dict = {}
    for r in records:
        if r.status == "ok" and r.trial != "median":
            groups.setdefault(r.cell(), []).append(r)
    out = []
    for key, rows in groups.items():
        s = BenchRecord(*key, trial="median", seed="", status="summary")
        for name in ("runtime_ms", "samples_used", "sample_fraction", "l0_err", "l1_err", "l2_err"):
            vals = [getattr(r, name) for r in rows]
            vals = [v for v in vals if not (isinstance(v, float) and math.isnan(v))]
            setattr(s, name, float(np.median(vals)) if vals else math.nan)
        out.append(s)
    return out


def write_csv(records, fh) -> None:
    w = csv.writer(fh)
    w.writerow(CSV_COLUMNS)
    for r in records:
        d = asdict(r)
        w.writerow([_fmt(d[c]) for c in CSV_COLUMNS])


def read_csv(fh) -> list[BenchRecord]:
    out = []
    for row in csv.DictReader(fh):
        out.append(
            BenchRecord(
                algo=row["algo"],
                n=int(row["n"]),
                k=int(row["k"]),
                l=int(row["l"]),
                q=float(row["q"]),
                snr_db=float(row["snr_db"]),
                trial=_parse_maybe_int(row["trial"]),
                seed=_parse_maybe_int(row["seed"]),
                runtime_ms=_parse_float(row["runtime_ms"]),
                samples_used=_parse_float(row["samples_used"]),
                sample_fraction=_parse_float(row["sample_fraction"]),
                l0_err=_parse_float(row["l0_err"]),
                l1_err=_parse_float(row["l1_err"]),
                l2_err=_parse_float(row["l2_err"]),
                status=row["status"],
            )
        )
    return out


_PLOT_X = {"size": ("n", "signal size N", True), "sparsity": ("k", "sparsity K", False),
           "snr": ("snr_db", "SNR (dB)", False), "params": ("l", "multiscale parameter l", False)}


def plot_script(csv_path: str, axis: str) -> str:
    """Gnuplot script plotting median runtime and L1 error along ``axis``."""
    col, label, logx = _PLOT_X[axis]
    ci = CSV_COLUMNS.index(col) + 1
    rt = CSV_COLUMNS.index("runtime_ms") + 1
    l1 = CSV_COLUMNS.index("l1_err") + 1
    status = CSV_COLUMNS.index("status") + 1
    algo = CSV_COLUMNS.index("algo") + 1
    lines = [
        "set datafile separator ','",
        f"set xlabel '{label}'",
        "set logscale y",
        "set key left top",
    ]
    if logx:
        lines.append("set logscale x 2")
    sel = f'(strcol({status}) eq "summary" && strcol({algo}) eq "%s" ? ${ci} : 1/0)'
    for ycol, ylabel, out in ((rt, "runtime (ms)", "runtime"), (l1, "L1 error", "l1")):
        lines += [
            "set terminal pngcairo size 800,600",
            f"set output '{out}_vs_{axis}.png'",
            f"set ylabel '{ylabel}'",
            "plot "
            + ", ".join(
                f"'{csv_path}' every ::1 using {sel % a}:{ycol} with linespoints title '{a}'" for a in ALGOS
            ),
        ]
    return "\n".join(lines) + "\n"
