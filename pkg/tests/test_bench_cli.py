import io
import math
import statistics
import subprocess
import sys

import numpy as np
import pytest

from msfft import bench, fileio
from msfft.cli import PANELS, main, parse_values
from msfft.signal_model import dft_dense


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return bench.read_csv(io.StringIO(text))


def test_run_exact(capsys):
    code, out, _ = run_cli(["run", "--algo", "sfft4", "--n", "8192", "--k", "50", "--l", "16", "--q", "1", "--exact", "--seed", "7"], capsys)
    (r,) = rows(out)
    assert code == 0 and r.l0_err == 0 and r.status == "ok"
    assert out.splitlines()[0] == ",".join(bench.CSV_COLUMNS)


def test_run_dense(capsys):
    code, out, _ = run_cli(["run", "--algo", "dense", "--n", "8192", "--k", "50", "--exact", "--seed", "7"], capsys)
    (r,) = rows(out)
    assert code == 0 and r.sample_fraction == 1.0 and r.l0_err == 0


def test_run_defaults(capsys):
    args = __import__("msfft.cli", fromlist=["build_parser"]).build_parser().parse_args(["run"])
    assert (args.l, args.q) == (16, 1.0)


def test_run_bad_flags(capsys):
    code, _, err = run_cli(["run", "--exact", "--snr", "10", "--n", "1024", "--k", "4"], capsys)
    assert code == 2 and "exclusive" in err
    code, _, _ = run_cli(["run", "--n", "1000", "--k", "4"], capsys)
    assert code == 2
    code, _, _ = run_cli(["run", "--n", "1024", "--k", "500"], capsys)
    assert code == 2


def test_gen_and_run_from_file(tmp_path, capsys):
    path = tmp_path / "s.msft"
    assert main(["gen", "--n", "8192", "--k", "50", "--seed", "1", "-o", str(path)]) == 0
    assert path.stat().st_size == 8 + 8 + 8192 * 16
    first = path.read_bytes()
    assert main(["gen", "--n", "8192", "--k", "50", "--seed", "1", "-o", str(path)]) == 0
    assert path.read_bytes() == first

    x = fileio.load_signal(path)
    truth = fileio.load_truth(fileio.truth_path(path), 8192)
    assert np.max(np.abs(dft_dense(x) - truth.dense())) < 1e-9

    code, out, _ = run_cli(["run", "--signal", str(path), "--k", "50", "--seed", "3"], capsys)
    (r,) = rows(out)
    assert code == 0 and r.n == 8192 and r.l0_err == 0

    fileio.truth_path(path).unlink()
    code, out, _ = run_cli(["run", "--signal", str(path), "--k", "50"], capsys)
    (r,) = rows(out)
    assert code == 0 and math.isnan(r.l1_err)


@pytest.mark.parametrize("blob", [b"", b"MSFT", b"XXXX" + bytes(12), b"MSFT" + bytes(4) + (8).to_bytes(8, "little") + bytes(10), b"MSFT" + bytes(4) + (12).to_bytes(8, "little")])
def test_malformed_signal_file(tmp_path, capsys, blob):
    path = tmp_path / "bad.msft"
    path.write_bytes(blob)
    code, _, err = run_cli(["run", "--signal", str(path), "--k", "1"], capsys)
    assert code == 3 and "cannot read signal" in err


def test_gen_unwritable(tmp_path, capsys):
    code, _, _ = run_cli(["gen", "--n", "64", "--k", "2", "-o", str(tmp_path / "no" / "such" / "f")], capsys)
    assert code != 0


def test_parse_values():
    assert parse_values("2^13..2^16") == [8192, 16384, 32768, 65536]
    assert parse_values("-20..40") == [-20, -10, 0, 10, 20, 30, 40]
    assert parse_values("0..10:5") == [0, 5, 10]
    assert parse_values("1,2, 4") == [1, 2, 4]
    assert parse_values("inf") == [math.inf]


def test_bench_size_rows(tmp_path, capsys):
    csv_path = tmp_path / "b.csv"
    plot = tmp_path / "p.gp"
    code = main(["bench", "--axis", "size", "--n", "2^13..2^15", "--trials", "2", "--csv", str(csv_path), "--plot-script", str(plot)])
    assert code == 0
    recs = bench.read_csv(open(csv_path))
    raw = [r for r in recs if r.status == "ok"]
    summ = [r for r in recs if r.status == "summary"]
    assert len(raw) == 3 * 2 * 2 and len(summ) == 3 * 2
    assert all(r.sample_fraction == 1.0 for r in raw if r.algo == "dense")
    # summaries equal recomputation from the raw rows
    for s in summ:
        mine = [r.runtime_ms for r in raw if r.cell() == s.cell()]
        assert s.runtime_ms == pytest.approx(statistics.median(mine))
    # rows sorted by cell then trial
    keys = [(r.algo, r.n, r.trial) for r in raw]
    assert keys == sorted(keys, key=lambda t: (["sfft4", "dense"].index(t[0]), t[1], t[2]))
    assert str(csv_path) in plot.read_text()


def test_bench_row_count_contract():
    cells = bench.build_cells("size", ["sfft4", "dense"], [2**e for e in range(13, 21)], [50], [math.inf], [16], [1.0])
    assert len(cells) == 16  # 8 sizes x 2 algorithms; x trials rows each


def test_bench_params_and_snr_axes(capsys):
    code, out, _ = run_cli(["bench", "--axis", "params", "--n", "8192", "--l", "4,16", "--q", "1", "--trials", "1", "--algos", "sfft4"], capsys)
    assert code == 0
    assert sorted({r.l for r in rows(out)}) == [4, 16]
    code, out, _ = run_cli(["bench", "--axis", "snr", "--n", "8192", "--snr", "0..20", "--trials", "1", "--algos", "sfft4"], capsys)
    assert code == 0
    assert sorted({r.snr_db for r in rows(out)}) == [0.0, 10.0, 20.0]


def test_bench_errors(capsys):
    assert main(["bench", "--axis", "size", "--trials", "0"]) == 2
    assert main(["bench", "--axis", "size", "--k", "10,20"]) == 2
    assert main(["bench", "--axis", "size", "--n", ""]) == 2
    assert main(["bench", "--axis", "size", "--n", "8192", "--csv", "/nonexistent/dir/x.csv"]) == 2
    capsys.readouterr()


def test_bench_failed_cell_exit_code(capsys):
    # l = 2, q = 1 is an invalid config -> the cell errors, sweep reports it
    code, out, err = run_cli(["bench", "--axis", "params", "--n", "8192", "--l", "2,16", "--q", "1", "--trials", "1", "--algos", "sfft4"], capsys)
    assert code == 1
    st = {r.l: r.status for r in rows(out) if r.trial == 0}
    assert st[2].startswith("error") and st[16] == "ok"


def test_csv_roundtrip():
    recs = [
        bench.BenchRecord("sfft4", 8192, 50, 16, 1.0, math.inf, 0, 12, 1.5, 100, 0.01, 0, 1e-9, 2e-9),
        bench.BenchRecord("dense", 8192, 50, 16, 1.0, -3.5, 1, 2**62, status="error: boom, bad"),
    ]
    buf = io.StringIO()
    bench.write_csv(recs, buf)
    back = bench.read_csv(io.StringIO(buf.getvalue()))
    assert back[0] == recs[0]
    assert back[1].status == recs[1].status and math.isnan(back[1].runtime_ms) and back[1].seed == 2**62


def test_sweep_parallel_matches_serial():
    cells = bench.build_cells("sparsity", ["sfft4"], [8192], [10, 20], [math.inf], [16], [1.0])
    a = bench.run_sweep(cells, 2, 5, workers=1)
    b = bench.run_sweep(cells, 2, 5, workers=3)
    strip = lambda rs: [(r.cell(), r.trial, r.seed, r.l1_err, r.samples_used) for r in rs]
    assert strip(a) == strip(b)


def test_phase_mc_cli(tmp_path, capsys):
    assert PANELS["a"] == (8192, 50, 32) and PANELS["d"] == (4194304, 50, 8192)
    code, _, err = run_cli(["phase-mc", "--panel", "a", "--trials", "0"], capsys)
    assert code == 2
    out_csv = tmp_path / "mc.csv"
    code, _, err = run_cli(["phase-mc", "--panel", "a", "--trials", "30", "--snr", "0,20", "--csv", str(out_csv)], capsys)
    assert code == 0 and "p99" in err
    lines = out_csv.read_text().splitlines()
    assert lines[0] == "snr_db,bin_center,mass,p50,p99,trials"
    assert len(lines) == 1 + 2 * 70


def test_console_script_entry():
    out = subprocess.run([sys.executable, "-m", "msfft.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "phase-mc" in out.stdout
