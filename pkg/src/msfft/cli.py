"""Command-line entry point: ``msfft run | bench | phase-mc | gen``."""

from __future__ import annotations

import argparse
import csv
import math
import re
import sys
from pathlib import Path

from . import bench, fileio
from .phase_mc import run_phase_experiment
from .signal_model import generate_test_signal, is_power_of_two

PANELS = {
    "a": (8192, 50, 32),
    "b": (131072, 50, 2048),
    "c": (1048576, 50, 2048),
    "d": (4194304, 50, 8192),
}

EXIT_USAGE = 2
EXIT_CELL_FAILED = 1
EXIT_BAD_FILE = 3


class UsageError(Exception):
    pass


def _number(tok: str) -> float:
    tok = tok.strip()
    if tok.lower() in ("inf", "exact", "+inf"):
        return math.inf
    m = re.fullmatch(r"(-?\d+)\^(\d+)", tok)
    if m:
        return float(int(m.group(1)) ** int(m.group(2)))
    return float(tok)


def parse_values(spec: str, default_step: float = 10.0) -> list[float]:
    """Parse ``a,b,c``, ``lo..hi[:step]`` or ``2^a..2^b`` (doubling)."""
    out: list[float] = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            rng, _, step = part.partition(":")
            lo_s, hi_s = rng.split("..", 1)
            lo, hi = _number(lo_s), _number(hi_s)
            if "^" in lo_s and "^" in hi_s and not step:
                v = lo
                while v <= hi:
                    out.append(v)
                    v *= 2
            else:
                st = float(step) if step else default_step
                if st <= 0:
                    raise UsageError(f"bad step in {part!r}")
                v = lo
                while v <= hi + 1e-9:
                    out.append(v)
                    v += st
        else:
            out.append(_number(part))
    if not out:
        raise UsageError(f"empty value list {spec!r}")
    return out


def _ints(spec: str) -> list[int]:
    vals = parse_values(spec)
    if any(v != int(v) for v in vals):
        raise UsageError(f"expected integers in {spec!r}")
    return [int(v) for v in vals]


def _check_n(n_list):
    for n in n_list:
        if not is_power_of_two(n) or n < 16:
            raise UsageError(f"n must be a power of two >= 16, got {n}")


def _emit(records, csv_path):
    if csv_path:
        with open(csv_path, "w", newline="") as fh:
            bench.write_csv(records, fh)
    else:
        bench.write_csv(records, sys.stdout)


def cmd_run(args) -> int:
    if args.exact and args.snr is not None:
        raise UsageError("--exact and --snr are mutually exclusive")
    snr = math.inf if args.snr is None else _number(args.snr)
    if args.signal:
        try:
            x = fileio.load_signal(args.signal)
        except (OSError, fileio.SignalFileError) as exc:
            print(f"msfft: cannot read signal: {exc}", file=sys.stderr)
            return EXIT_BAD_FILE
        n = x.n
        truth = None
        tp = fileio.truth_path(args.signal)
        if args.truth:
            truth = fileio.load_truth(args.truth, n)
        elif tp.exists():
            truth = fileio.load_truth(tp, n)
    else:
        x = truth = None
        n = args.n
        _check_n([n])
    if not 1 <= args.k <= n // 8 and args.algo == "sfft4":
        raise UsageError(f"k must lie in [1, n/8] for sfft4, got k={args.k}, n={n}")
    cell = bench.Cell(args.algo, n, args.k, args.l, args.q, snr)
    try:
        rec = bench.run_cell(cell, 0, args.seed, x=x, truth=truth, delta=args.delta)
    except Exception as exc:
        rec = bench.BenchRecord(args.algo, n, args.k, args.l, args.q, snr, 0, args.seed, status=f"error: {exc}")
    _emit([rec], args.csv)
    return 0 if rec.status == "ok" else EXIT_CELL_FAILED


def cmd_bench(args) -> int:
    n_list = _ints(args.n)
    k_list = _ints(args.k)
    snr_list = parse_values(args.snr)
    l_list = _ints(args.l)
    q_list = parse_values(args.q, default_step=0.5)
    _check_n(n_list)
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    for a in algos:
        if a not in bench.ALGOS:
            raise UsageError(f"unknown algorithm {a!r}")
    try:
        cells = bench.build_cells(args.axis, algos, n_list, k_list, snr_list, l_list, q_list)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.csv:
        try:
            Path(args.csv).open("a").close()
        except OSError as exc:
            print(f"msfft: cannot write {args.csv}: {exc}", file=sys.stderr)
            return EXIT_USAGE
    records = bench.run_sweep(cells, args.trials, args.seed)
    records += bench.summarize(records)
    _emit(records, args.csv)
    if args.plot_script:
        Path(args.plot_script).write_text(bench.plot_script(args.csv or "bench.csv", args.axis))
    failed = [r for r in records if r.status.startswith("error")]
    for r in failed:
        print(f"msfft: cell {r.cell()} trial {r.trial}: {r.status}", file=sys.stderr)
    return EXIT_CELL_FAILED if failed else 0


def cmd_phase_mc(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    n, k, L = PANELS[args.panel] if args.panel else (None, 50, None)
    n = args.n or n
    k = args.k or k
    L = args.L or L
    if n is None or L is None:
        raise UsageError("give --panel or both --n and --L")
    _check_n([n])
    if not is_power_of_two(L) or n % L or not 4 <= n // L <= n // 4:
        raise UsageError(f"L must be a power of two with 4 <= n/L <= n/4, got L={L}")
    snrs = parse_values(args.snr)
    hists = run_phase_experiment(n, k, n // L, snrs, args.trials, args.seed, reference=args.reference)
    fh = open(args.csv, "w", newline="") if args.csv else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["snr_db", "bin_center", "mass", "p50", "p99", "trials"])
        for h in hists:
            for c, m in zip(h.bin_centers, h.masses):
                w.writerow([repr(h.snr_db), f"{c:.2f}", repr(float(m)), repr(h.p50), repr(h.p99), h.trials])
    finally:
        if args.csv:
            fh.close()
    for h in hists:
        _, q_min = h.bounds(args.l_check)
        print(
            f"snr={h.snr_db:g} dB: p50={h.p50:.4g} p99={h.p99:.4g} l_max={h.l_max} "
            f"q_min(l={args.l_check})={q_min:.3g}",
            file=sys.stderr,
        )
    return 0


def cmd_gen(args) -> int:
    _check_n([args.n])
    if not 0 <= args.k <= args.n:
        raise UsageError("k must lie in [0, n]")
    x, truth = generate_test_signal(args.n, args.k, args.seed)
    try:
        fileio.save_signal(args.output, x)
        fileio.save_truth(fileio.truth_path(args.output), truth)
    except OSError as exc:
        print(f"msfft: cannot write {args.output}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="msfft", description="Multiscale sparse FFT benchmarks")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one cell and print one CSV row")
    r.add_argument("--algo", choices=bench.ALGOS, default="sfft4")
    r.add_argument("--n", type=lambda s: int(_number(s)), default=bench.DEFAULTS["n"])
    r.add_argument("--k", type=int, default=bench.DEFAULTS["k"])
    r.add_argument("--l", type=int, default=bench.DEFAULTS["l"])
    r.add_argument("--q", type=float, default=bench.DEFAULTS["q"])
    r.add_argument("--snr", help="SNR in dB (omit for the exact case)")
    r.add_argument("--exact", action="store_true")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--delta", type=float)
    r.add_argument("--signal", help="MSFT signal file instead of a generated signal")
    r.add_argument("--truth", help="truth CSV (defaults to the signal's sidecar)")
    r.add_argument("--csv")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="sweep one axis")
    b.add_argument("--axis", choices=bench.AXES, required=True)
    b.add_argument("--n", default="2^17")
    b.add_argument("--k", default="50")
    b.add_argument("--snr", default="inf")
    b.add_argument("--l", default="16")
    b.add_argument("--q", default="1")
    b.add_argument("--algos", default="sfft4,dense")
    b.add_argument("--trials", type=int, default=5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--csv")
    b.add_argument("--plot-script")
    b.set_defaults(func=cmd_bench)

    m = sub.add_parser("phase-mc", help="phase-error Monte Carlo")
    m.add_argument("--panel", choices=sorted(PANELS))
    m.add_argument("--n", type=lambda s: int(_number(s)))
    m.add_argument("--k", type=int)
    m.add_argument("--L", type=lambda s: int(_number(s)))
    m.add_argument("--snr", default="-20,-10,0,20,40")
    m.add_argument("--trials", type=int, default=200)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--reference", choices=("tone", "total"), default="tone")
    m.add_argument("--l-check", type=int, default=16, help="block count for the reported q_min")
    m.add_argument("--csv")
    m.set_defaults(func=cmd_phase_mc)

    g = sub.add_parser("gen", help="write a test signal and its truth sidecar")
    g.add_argument("--n", type=lambda s: int(_number(s)), required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"msfft: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
