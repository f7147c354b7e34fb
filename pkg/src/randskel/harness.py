"""Experiment drivers behind the command-line harness.

Each driver is a plain function from (matrix, config) to CSV-ready rows
so that tests can call it directly. Reproducibility contract: the same
config and seed produce identical rows (timing excluded); trials use
independent child streams and may therefore run on worker threads
without changing the output.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dense import _lupp_partial, cpqr, frobenius_norm, lupp, svd_tail_norm
from .sketching import RngStream, SketchSpec, make_gaussian
from .skeleton import (
    SkeletonResult,
    _draw_block,
    _extend_state,
    _schur_of_block,
    adaptive_init,
    cpqr_skeleton,
    draw_residual_sample,
    interpolation_matrix,
    rand_cpqr,
    rand_lupp,
    rand_lupp_adaptive,
    residual_ur_estimates,
    row_id_error,
    stable_row_id_error,
)
from .zoo import MatrixRecipe, materialize

__all__ = [
    "ExperimentConfig",
    "ACCURACY_COLUMNS",
    "GROWTH_COLUMNS",
    "BENCH_COLUMNS",
    "load_matrix",
    "estimate_fro_norm",
    "accuracy_experiment",
    "growth_experiment",
    "bench_experiment",
    "factor_run",
    "aggregate_means",
    "write_rows",
]

# Stream offsets reserved for non-trial draws.
_MATRIX_STREAM = 1 << 41
_NORM_STREAM = 1 << 42

ACCURACY_COLUMNS = (
    "trial", "k_t", "svdTail", "eSchur", "idErrLUPP", "sIdErrLUPP",
    "idErrCPQR", "sIdErrCPQR", "estNormUr", "estMaxUr",
)
GROWTH_COLUMNS = ("sketch", "trial", "k", "ratioNorm", "ratioMax", "reference")
BENCH_COLUMNS = ("method", "n", "k_or_b", "seconds")

SKETCH_KINDS = ("gaussian", "srtt", "sparsesign")


@dataclass
class ExperimentConfig:
    """Harness configuration; defaults suit the accuracy experiment."""

    recipe: MatrixRecipe
    sketch: str = "gaussian"
    b: int = 50
    p: int = 10
    tau: float = 1e-8
    relative: bool = False
    trials: int = 50
    seed: int = 0
    max_rank: int | None = None
    out: str = "results.csv"
    threads: int = 1
    zeta: int = 8

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.p < self.b:
            raise ValueError(f"need p < b, got p={self.p}, b={self.b}")
        if self.sketch not in SKETCH_KINDS:
            raise ValueError(f"unknown sketch kind {self.sketch!r}")

    def base_rng(self):
        return RngStream(self.seed)

    def spec_for(self, n, kind=None):
        return SketchSpec(kind or self.sketch, n=n, ell=self.b, zeta=self.zeta,
                          seed=self.seed)


def load_matrix(config, transpose_wide=False):
    """Materialize the config's matrix.

    Returns
    -------
    (a, sigma, transposed)
        ``sigma`` is the exact spectrum when known (else None);
        ``transposed`` records whether a wide input was flipped so the
        experiment operates on a tall matrix.
    """
    a, sigma = materialize(config.recipe, config.base_rng().child(_MATRIX_STREAM))
    transposed = False
    if transpose_wide and a.shape[0] < a.shape[1]:
        a = np.ascontiguousarray(a.T)
        transposed = True
    return a, sigma, transposed


def estimate_fro_norm(a, rng, ell=32):
    """Sketch-based Frobenius norm estimate ``||a @ Omega||_F``.

    With variance-1/ell Gaussian entries the squared estimate is unbiased
    for ``||a||_F^2``.
    """
    n = a.shape[1]
    ell = min(ell, n)
    omega = make_gaussian(SketchSpec("gaussian", n=n, ell=ell), rng.child(_NORM_STREAM))
    return frobenius_norm(a @ omega)


def resolve_tau(a, config):
    """Absolute tolerance; relative mode scales by a sketched norm estimate."""
    if config.relative:
        return config.tau * estimate_fro_norm(a, config.base_rng())
    return config.tau


def _sigma_or_compute(a, sigma):
    if sigma is None:
        sigma = np.linalg.svd(a, compute_uv=False)
    return sigma


def _run_trials(fn, trials, workers):
    """Run per-trial closures, optionally on worker threads.

    Output order is by trial index either way; when workers > 1 the BLAS
    pools inside each worker are pinned to one thread to avoid
    oversubscription.
    """
    if workers <= 1:
        return [fn(t) for t in range(trials)]
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=1):
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, range(trials)))


def _rank_grid_cap(shape, b, max_rank, default_half=False):
    m, n = shape
    cap = max_rank if max_rank is not None else (min(m, n) // 2 if default_half
                                                 else min(m, n) - b)
    cap = min(cap, min(m, n) - b)
    return max(cap, b)


def accuracy_experiment(a, sigma, config):
    """Per-iteration error quantities of the adaptive run, against
    reference selectors, per trial.

    Each iteration contributes one row: rank so far, the optimal
    (singular value tail) error, the Schur estimate, plain and stable row
    ID errors of the adaptive skeletons, the same two errors for CPQR
    pivots on the accumulated sample (isolating the selector), and the
    residual-factor estimates. Returns (rows, means) where means
    aggregates over trials at each rank.
    """
    sigma = _sigma_or_compute(a, sigma)
    spec = config.spec_for(a.shape[1])
    base = config.base_rng()
    max_k = _rank_grid_cap(a.shape, config.b, config.max_rank, default_half=True)

    def one_trial(trial):
        rng = base.child(trial)
        state = adaptive_init(a, config.b, spec, rng)
        y_r = draw_residual_sample(a, config.p, spec, rng)
        rows = []
        while True:
            k = state.rank
            y = _draw_block(a, spec, rng.child(state.t), config.b)
            u2, s = _schur_of_block(state, y)
            e_schur = frobenius_norm(s)
            w = interpolation_matrix(state)
            res_lu = SkeletonResult(rank=k, row_idx=state.perm[:k], w=w)
            qr_idx, qr_w = cpqr_skeleton(state.ysofar)
            res_qr = SkeletonResult(rank=k, row_idx=qr_idx, w=qr_w)
            est = residual_ur_estimates(state, a, config.p, spec, rng, sample_r=y_r)
            rows.append((
                trial, k, svd_tail_norm(sigma, k), e_schur,
                row_id_error(a, res_lu), stable_row_id_error(a, res_lu),
                row_id_error(a, res_qr), stable_row_id_error(a, res_qr),
                est.est_norm, est.est_max,
            ))
            if k + config.b > max_k:
                break
            sub, ncols = _lupp_partial(s)
            state = _extend_state(state, y, u2, sub, ncols)
            if ncols < config.b:
                break
        return rows

    per_trial = _run_trials(one_trial, config.trials, config.threads)
    rows = [row for trial_rows in per_trial for row in trial_rows]
    means = aggregate_means(rows, ACCURACY_COLUMNS, group_by=("k_t",), drop=("trial",))
    return rows, means


def growth_reference(k, m, p, kind):
    """Reciprocal asymptotic growth-factor curve ``(4 log k / k) sqrt(m - k)``,
    with the sqrt(p) correction for the norm-preserving operators."""
    ref = (4.0 * math.log(k) / k) * math.sqrt(m - k)
    if kind != "gaussian":
        ref *= math.sqrt(p)
    return ref


def growth_experiment(a, sigma, config):
    """Ratio of the optimal error to the residual-factor magnitudes, per
    sketch distribution, against the reciprocal growth-factor curve.

    Emits one row per (sketch kind, trial, rank on the block grid) with
    ``svdTail / ||U_r||_F``, ``svdTail / max|U_r|``, and the reference
    curve those ratios are measured against.
    """
    sigma = _sigma_or_compute(a, sigma)
    base = config.base_rng()
    m = a.shape[0]
    max_k = _rank_grid_cap(a.shape, config.b, config.max_rank)

    rows = []
    for kind_i, kind in enumerate(SKETCH_KINDS):
        spec = config.spec_for(a.shape[1], kind)

        def one_trial(trial, kind=kind, spec=spec, kind_i=kind_i):
            rng = base.child(1_000_003 * kind_i + trial)
            state = adaptive_init(a, config.b, spec, rng)
            y_r = draw_residual_sample(a, config.p, spec, rng)
            out = []
            while True:
                k = state.rank
                est = residual_ur_estimates(a=a, state=state, p=config.p,
                                            spec=spec, rng=rng, sample_r=y_r)
                tail = svd_tail_norm(sigma, k)
                ratio_norm = tail / est.norm_ur if est.norm_ur > 0 else math.inf
                ratio_max = tail / est.max_ur if est.max_ur > 0 else math.inf
                out.append((kind, trial, k, ratio_norm, ratio_max,
                            growth_reference(k, m, config.p, kind)))
                if k + config.b > max_k:
                    break
                y = _draw_block(a, spec, rng.child(state.t), config.b)
                u2, s = _schur_of_block(state, y)
                sub, ncols = _lupp_partial(s)
                state = _extend_state(state, y, u2, sub, ncols)
                if ncols < config.b:
                    break
            return out

        per_trial = _run_trials(one_trial, config.trials, config.threads)
        rows.extend(row for trial_rows in per_trial for row in trial_rows)
    means = aggregate_means(rows, GROWTH_COLUMNS, group_by=("sketch", "k"),
                            drop=("trial",))
    return rows, means


def _median_time(fn, runs):
    fn()  # warm-up, discarded
    times = []
    for _ in range(max(runs, 5)):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def bench_experiment(a, config, runs=5):
    """Wall-clock medians for the factorizations at matched ranks.

    The adaptive run fixes the rank used by the fixed-rank skeleton
    selectors; the dense factorizations run at full width.
    """
    m, n = a.shape
    spec = config.spec_for(n)
    rng = config.base_rng()
    tau = resolve_tau(a, config)
    adaptive = rand_lupp_adaptive(a, config.b, tau, spec, rng,
                                  max_rank=config.max_rank)
    k = adaptive.rank
    full = min(m, n)
    rows = [
        ("lupp", n, full, _median_time(lambda: lupp(a), runs)),
        ("cpqr", n, full, _median_time(lambda: cpqr(a), runs)),
        ("randLUPP", n, k,
         _median_time(lambda: rand_lupp(a, k, spec, rng.child(1)), runs)),
        ("randCPQR", n, k,
         _median_time(lambda: rand_cpqr(a, k, spec, rng.child(2)), runs)),
        ("randLUPPadap", n, config.b,
         _median_time(lambda: rand_lupp_adaptive(a, config.b, tau, spec,
                                                 rng.child(3),
                                                 max_rank=config.max_rank), runs)),
    ]
    return rows


def factor_run(a, config):
    """Production adaptive factorization with the config's tolerance."""
    spec = config.spec_for(a.shape[1])
    tau = resolve_tau(a, config)
    return rand_lupp_adaptive(a, config.b, tau, spec, config.base_rng(),
                              max_rank=config.max_rank)


def aggregate_means(rows, columns, group_by, drop=()):
    """Average numeric columns over trials, grouped and sorted by key.

    Non-numeric, non-key columns are carried through (they are constant
    within a group). Returns (header, mean_rows).
    """
    key_pos = [columns.index(c) for c in group_by]
    drop_pos = {columns.index(c) for c in drop}
    out_cols = [c for i, c in enumerate(columns) if i not in drop_pos]
    buckets = {}
    for row in rows:
        key = tuple(row[i] for i in key_pos)
        buckets.setdefault(key, []).append(row)
    mean_rows = []
    for key in sorted(buckets):
        group = buckets[key]
        mean_row = []
        for i, c in enumerate(columns):
            if i in drop_pos:
                continue
            vals = [row[i] for row in group]
            if isinstance(vals[0], (int, float)) and c not in group_by:
                mean_row.append(float(np.mean(vals)))
            else:
                mean_row.append(vals[0])
        mean_rows.append(tuple(mean_row))
    return out_cols, mean_rows


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_rows(path, schema, header, rows, comments=()):
    """CSV writer: versioned schema comment, header row, %.17g floats."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# {schema}\n")
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
