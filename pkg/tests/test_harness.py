import numpy as np
import pytest

import randskel as rs
from randskel.harness import (
    ACCURACY_COLUMNS,
    ExperimentConfig,
    accuracy_experiment,
    aggregate_means,
    bench_experiment,
    estimate_fro_norm,
    growth_experiment,
    load_matrix,
)


def small_config(**overrides):
    kwargs = dict(
        recipe=rs.MatrixRecipe(kind="fastdecay", m=200, n=200, beta=1e-16),
        b=25, p=6, trials=3, seed=5, max_rank=100, out="unused.csv",
    )
    kwargs.update(overrides)
    return ExperimentConfig(**kwargs)


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(trials=0)
    with pytest.raises(ValueError):
        small_config(p=25)
    with pytest.raises(ValueError):
        small_config(sketch="hadamard")


def test_load_matrix_transposes_wide():
    cfg = small_config(recipe=rs.MatrixRecipe(kind="file", path="x",
                                              format="csv"))
    # write a wide csv next to nothing: use kahan instead via tmp? simpler:
    # build directly from a wide fastdecay by flipping dims is rejected, so
    # exercise the transpose through a file recipe
    import tempfile, os

    with tempfile.TemporaryDirectory() as d:
        p = os.path.join(d, "wide.csv")
        rs.write_csv_matrix(p, np.arange(12.0).reshape(3, 4))
        cfg = small_config(recipe=rs.MatrixRecipe(kind="file", path=p))
        a, sigma, transposed = load_matrix(cfg, transpose_wide=True)
        assert transposed and a.shape == (4, 3)
        a2, _, t2 = load_matrix(cfg)
        assert not t2 and a2.shape == (3, 4)


def test_estimate_fro_norm_close():
    a, _ = rs.gen_fast_decay(100, 100, 1e-10, rs.RngStream(1))
    est = estimate_fro_norm(a, rs.RngStream(2))
    assert 0.8 * np.linalg.norm(a) <= est <= 1.2 * np.linalg.norm(a)


def test_accuracy_experiment_structure_and_optimality():
    cfg = small_config()
    a, sigma, _ = load_matrix(cfg)
    rows, (mean_cols, mean_rows) = accuracy_experiment(a, sigma, cfg)
    # grid: k = 25, 50, 75, 100 for each of 3 trials
    assert len(rows) == 12
    ks = sorted({r[1] for r in rows})
    assert ks == [25, 50, 75, 100]
    cols = {c: i for i, c in enumerate(ACCURACY_COLUMNS)}
    for r in rows:
        tail = r[cols["svdTail"]]
        for name in ("eSchur", "idErrLUPP", "sIdErrLUPP", "idErrCPQR", "sIdErrCPQR"):
            assert tail <= r[cols[name]] + 1e-12  # Eckart-Young optimality
    assert mean_cols[0] == "k_t"
    assert len(mean_rows) == 4


def test_accuracy_experiment_reproducible():
    cfg = small_config(trials=2)
    a, sigma, _ = load_matrix(cfg)
    rows1, _ = accuracy_experiment(a, sigma, cfg)
    rows2, _ = accuracy_experiment(a, sigma, cfg)
    assert rows1 == rows2
    # worker-thread trials: bitwise identical on reruns at the same thread
    # count; equal to the serial rows up to BLAS reduction-order roundoff
    cfg4 = small_config(trials=2, threads=4)
    rows3, _ = accuracy_experiment(a, sigma, cfg4)
    rows4, _ = accuracy_experiment(a, sigma, cfg4)
    assert rows3 == rows4
    np.testing.assert_allclose(np.array(rows1), np.array(rows3), rtol=1e-10)


def test_growth_experiment_all_kinds_finite():
    cfg = small_config(trials=2, max_rank=75)
    a, sigma, _ = load_matrix(cfg)
    rows, (mean_cols, mean_rows) = growth_experiment(a, sigma, cfg)
    kinds = {r[0] for r in rows}
    assert kinds == {"gaussian", "srtt", "sparsesign"}
    for r in rows:
        assert np.isfinite(r[3]) and r[3] > 0  # ratioNorm
        assert np.isfinite(r[4]) and r[4] > 0  # ratioMax
        assert r[5] > 0
    # gaussian ratios sit below the reference curve on decaying spectra
    for r in rows:
        if r[0] == "gaussian":
            assert r[3] <= r[5]


def test_bench_experiment_rows():
    cfg = small_config(
        recipe=rs.MatrixRecipe(kind="fastdecay", m=96, n=96, beta=1e-16),
        b=16, p=4, trials=1, tau=1e-6, relative=True, max_rank=64,
    )
    a, _, _ = load_matrix(cfg)
    rows = bench_experiment(a, cfg, runs=5)
    methods = [r[0] for r in rows]
    assert methods == ["lupp", "cpqr", "randLUPP", "randCPQR", "randLUPPadap"]
    for method, n, k_or_b, seconds in rows:
        assert n == 96 and seconds > 0
    by = {r[0]: r for r in rows}
    assert by["lupp"][2] == 96
    assert by["randLUPP"][2] == by["randCPQR"][2]
    assert by["randLUPPadap"][2] == 16


def test_aggregate_means_groups_and_sorts():
    rows = [
        (1, 20, 4.0), (0, 10, 1.0), (0, 20, 2.0), (1, 10, 3.0),
    ]
    cols, means = aggregate_means(rows, ("trial", "k", "v"), group_by=("k",),
                                  drop=("trial",))
    assert cols == ["k", "v"]
    assert means == [(10, 2.0), (20, 3.0)]


@pytest.mark.parametrize("kind", ["srtt", "sparsesign"])
def test_accuracy_experiment_other_sketches(kind):
    cfg = small_config(trials=1, sketch=kind, max_rank=75)
    a, sigma, _ = load_matrix(cfg)
    rows, _ = accuracy_experiment(a, sigma, cfg)
    cols = {c: i for i, c in enumerate(ACCURACY_COLUMNS)}
    for r in rows:
        tail = r[cols["svdTail"]]
        for name in ("eSchur", "idErrLUPP", "sIdErrLUPP", "idErrCPQR", "sIdErrCPQR"):
            assert tail <= r[cols[name]] + 1e-12
        # the estimator still tracks the plain ID error for these operators
        assert 0.2 <= r[cols["eSchur"]] / r[cols["idErrLUPP"]] <= 5.0


def test_growth_on_adversarial_matrix_logged_not_asserted():
    # The adversarial unit-lower matrix breaks the growth-factor heuristic;
    # its ratios are recorded for inspection but only well-formedness is
    # checked (the reference curve is not a bound here).
    cfg = small_config(recipe=rs.MatrixRecipe(kind="chan", n=150, m=150),
                       b=25, p=6, trials=1, max_rank=75)
    a, sigma, _ = load_matrix(cfg)
    rows, _ = growth_experiment(a, sigma, cfg)
    exceeded = sum(1 for r in rows if r[0] == "gaussian" and r[3] > r[5])
    print(f"adversarial growth ratios above reference: {exceeded} of "
          f"{sum(1 for r in rows if r[0] == 'gaussian')} gaussian points")
    for r in rows:
        assert np.isfinite(r[3]) and np.isfinite(r[4])


def test_adaptive_time_within_factor_of_fixed_rank():
    import time

    a, _ = rs.gen_fast_decay(640, 640, 1e-16, rs.RngStream(21))
    na = np.linalg.norm(a)
    spec = rs.SketchSpec("gaussian", n=640, ell=128)
    rng = rs.RngStream(22)
    res = rs.rand_lupp_adaptive(a, b=128, tau=1e-8 * na, spec=spec, rng=rng)
    k = res.rank

    def med(fn, runs=5):
        fn()
        times = []
        for _ in range(runs):
            t0 = time.perf_counter()
            fn()
            times.append(time.perf_counter() - t0)
        return float(np.median(times))

    t_fixed = med(lambda: rs.rand_lupp(a, k, spec, rng.child(1)))
    t_adapt = med(lambda: rs.rand_lupp_adaptive(a, b=128, tau=1e-8 * na,
                                                spec=spec, rng=rng.child(2)))
    assert t_adapt <= 3.0 * t_fixed, (t_adapt, t_fixed)
