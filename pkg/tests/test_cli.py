import numpy as np
import pytest

import randskel as rs
from randskel.cli import main, parse_recipe


def run(argv):
    return main([str(a) for a in argv])


# ---------------------------------------------------------------------------
# parsing

def test_parse_recipe_forms(tmp_path):
    r = parse_recipe("fastdecay:m=500,n=400,beta=1e-12")
    assert (r.kind, r.m, r.n, r.beta) == ("fastdecay", 500, 400, 1e-12)
    r = parse_recipe("kahan:n=64,zeta=0.5")
    assert (r.kind, r.n, r.zeta) == ("kahan", 64, 0.5)
    r = parse_recipe("chan:n=16")
    assert (r.kind, r.n) == ("chan", 16)
    r = parse_recipe("file:path=a.f64,format=raw,m=10,n=5")
    assert (r.kind, r.path, r.format, r.m, r.n) == ("file", "a.f64", "raw", 10, 5)
    r = parse_recipe("data.mtx")
    assert (r.kind, r.path) == ("file", "data.mtx")
    with pytest.raises(ValueError):
        parse_recipe("fastdecay:m500")


def test_config_file_merge(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# experiment\nmatrix=fastdecay:m=120,n=120\nb=20\ntrials=2\nseed=9\n"
        "max-rank=60\n"
    )
    out = tmp_path / "acc.csv"
    code = run(["accuracy", "--config", cfg, "--trials", 1, "--out", out])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "# randskel-accuracy v1"
    header = lines[2].split(",")
    assert header[:4] == ["trial", "k_t", "svdTail", "eSchur"]
    # flags override config: 1 trial x 3 grid points
    assert len(lines) == 3 + 3


def test_config_file_rejects_unknown_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("matrx=chan:n=4\n")
    assert run(["accuracy", "--config", cfg]) == 1


# ---------------------------------------------------------------------------
# commands

def test_accuracy_byte_identical_reruns(tmp_path):
    args = ["accuracy", "--matrix", "fastdecay:m=100,n=100", "--b", 20,
            "--p", 5, "--trials", 2, "--seed", 3, "--max-rank", 40]
    out1, out2 = tmp_path / "a1.csv", tmp_path / "a2.csv"
    assert run(args + ["--out", out1]) == 0
    assert run(args + ["--out", out2]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    m1 = tmp_path / "a1.means.csv"
    assert m1.exists()


def test_growth_command(tmp_path):
    out = tmp_path / "g.csv"
    code = run(["growth", "--matrix", "fastdecay:m=150,n=150", "--b", 25,
                "--p", 6, "--trials", 1, "--seed", 2, "--max-rank", 75,
                "--out", out])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "# randskel-growth v1"
    assert lines[2] == "sketch,trial,k,ratioNorm,ratioMax,reference"
    assert len(lines) == 3 + 3 * 3  # three kinds x three grid points


def test_bench_command(tmp_path):
    out = tmp_path / "b.csv"
    code = run(["bench", "--matrix", "fastdecay:m=80,n=80", "--b", 16,
                "--p", 4, "--seed", 1, "--max-rank", 48, "--runs", 5,
                "--tau", 1e-4, "--relative", "--out", out, "--threads", 2])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[2].split(",")[0] == "method"
    assert len(lines) == 3 + 5


def test_threads_request_above_core_count_is_clamped(tmp_path):
    # BLAS pools oversubscribed past the physical cores can crash; the CLI
    # must clamp rather than pass the raw request through
    out = tmp_path / "b.csv"
    code = run(["bench", "--matrix", "fastdecay:m=64,n=64", "--b", 8,
                "--p", 4, "--seed", 1, "--max-rank", 32, "--runs", 5,
                "--tau", 1e-3, "--relative", "--out", out, "--threads", 64])
    assert code == 0


def test_factor_converged_exact_rank(tmp_path):
    g = np.random.default_rng(0)
    a = g.standard_normal((80, 40)) @ g.standard_normal((40, 60))
    src = tmp_path / "in.f64"
    rs.write_raw_f64(src, a)
    out = tmp_path / "fac"
    code = run(["factor", "--matrix", f"file:path={src},format=raw,m=80,n=60",
                "--b", 20, "--tau", 1e-8, "--relative", "--seed", 4,
                "--out", out])
    assert code == 0
    idx = [int(s) for s in (tmp_path / "fac.indices.txt").read_text().split()]
    assert len(idx) == 40  # exact rank recovered
    w = rs.read_raw_f64(tmp_path / "fac.w.f64", 80, 40)
    assert np.linalg.norm(a - w @ a[idx]) <= 1e-6 * np.linalg.norm(a)
    trace = (tmp_path / "fac.trace.csv").read_text().splitlines()
    assert trace[1] == "k,e_schur,est_norm_ur,est_max_ur"
    assert len(trace) == 2 + len(idx) // 20


def test_factor_not_converged_exit_2(tmp_path):
    out = tmp_path / "nc"
    code = run(["factor", "--matrix", "fastdecay:m=60,n=60", "--b", 10,
                "--tau", 1e-300, "--seed", 1, "--max-rank", 30, "--out", out])
    assert code == 2
    assert (tmp_path / "nc.trace.csv").exists()  # trace still written
    assert len((tmp_path / "nc.indices.txt").read_text().split()) == 30


def test_factor_rank_exhausted_exit_3(tmp_path):
    g = np.random.default_rng(7)
    a = np.zeros((50, 40))
    a[:12] = g.standard_normal((12, 40))
    src = tmp_path / "low.f64"
    rs.write_raw_f64(src, a)
    code = run(["factor", "--matrix", f"file:path={src},format=raw,m=50,n=40",
                "--b", 8, "--tau", 1e-300, "--seed", 2,
                "--out", tmp_path / "rx"])
    assert code == 3
    assert len((tmp_path / "rx.indices.txt").read_text().split()) == 12


def test_factor_missing_file_exit_1(tmp_path):
    code = run(["factor", "--matrix", f"{tmp_path}/nope.mtx", "--b", 4,
                "--tau", 1.0, "--out", tmp_path / "x"])
    assert code == 1


def test_gen_roundtrip(tmp_path):
    out = tmp_path / "gen.csv"
    assert run(["gen", "--matrix", "kahan:n=8", "--out", out]) == 0
    a = rs.read_csv_matrix(out)
    assert np.array_equal(a, rs.gen_kahan(8))
    raw = tmp_path / "gen.f64"
    assert run(["gen", "--matrix", "chan:n=5", "--out", raw, "--format", "raw"]) == 0
    assert np.array_equal(rs.read_raw_f64(raw, 5, 5), rs.gen_chan(5))


def test_gen_deterministic_given_seed(tmp_path):
    a_path, b_path = tmp_path / "a.f64", tmp_path / "b.f64"
    run(["gen", "--matrix", "fastdecay:m=30,n=20", "--seed", 11, "--out", a_path,
         "--format", "raw"])
    run(["gen", "--matrix", "fastdecay:m=30,n=20", "--seed", 11, "--out", b_path,
         "--format", "raw"])
    assert a_path.read_bytes() == b_path.read_bytes()


def test_bare_path_with_format_flag(tmp_path):
    src = tmp_path / "m.dat"  # extension gives no hint; --format decides
    g = np.random.default_rng(1)
    rs.write_csv_matrix(src, g.standard_normal((30, 4)) @ g.standard_normal((4, 24)))
    code = run(["factor", "--matrix", src, "--format", "csv", "--b", 4,
                "--tau", 1e-6, "--relative", "--seed", 3,
                "--out", tmp_path / "bp"])
    assert code == 0
    assert len((tmp_path / "bp.indices.txt").read_text().split()) == 4


def test_malformed_matrix_market_exit_1(tmp_path):
    src = tmp_path / "bad.mtx"
    src.write_text("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 x\n")
    code = run(["factor", "--matrix", src, "--b", 1, "--tau", 1.0,
                "--out", tmp_path / "x"])
    assert code == 1


def test_accuracy_computes_spectrum_when_unknown(tmp_path):
    # kahan has no generator-supplied spectrum; the driver falls back to a
    # dense SVD for the optimal-error column
    out = tmp_path / "k.csv"
    code = run(["accuracy", "--matrix", "kahan:n=60", "--b", 10, "--p", 4,
                "--trials", 1, "--seed", 0, "--max-rank", 30, "--out", out])
    assert code == 0
    lines = out.read_text().splitlines()
    tail_col = lines[2].split(",").index("svdTail")
    tails = [float(ln.split(",")[tail_col]) for ln in lines[3:]]
    assert all(t > 0 for t in tails) and tails == sorted(tails, reverse=True)


def test_gen_unknown_format_exit_1(tmp_path):
    assert run(["gen", "--matrix", "chan:n=4", "--out", tmp_path / "m.xyz"]) == 1
