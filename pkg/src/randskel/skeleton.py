"""Randomized skeleton selection and error certificates.

The main entry points are:

* ``rand_lupp`` / ``rand_cpqr``: fixed-rank row skeleton selection by
  pivoted factorization of a random column sketch.
* ``rand_lupp_adaptive``: blockwise adaptive selection. Each iteration
  draws a fresh sketch block, measures the Frobenius norm of its Schur
  complement against the factorization built so far (an unbiased estimate
  of the squared interpolation error), and either stops or absorbs the
  block into the growing partial-pivoting LU.
* ``residual_ur_estimates``: cheaper error proxies from the trailing
  p x p upper-triangular factor of a small dedicated sample, scaled by
  the reciprocal asymptotic growth factor ``(4 log k) / k``.
* ``column_id`` / ``two_sided_id`` / ``cur_decompose``: column-side and
  two-sided decompositions derived from the selected rows.

Interpolation matrices are always assembled through triangular solves
against the unit-lower factor; no inverse is ever formed.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .dense import (
    cpqr,
    frobenius_norm,
    lupp,
    _lupp_partial,
    pinv_apply,
    qr_unpivoted,
    triangular_solve,
)
from .errors import DimensionError
from .sketching import apply_sketch, make_gaussian, make_sketch

__all__ = [
    "STATUS_OK",
    "STATUS_NOT_CONVERGED",
    "STATUS_RANK_EXHAUSTED",
    "STATUS_ILL_CONDITIONED",
    "BlockedLUState",
    "TraceRecord",
    "ErrorTrace",
    "SkeletonResult",
    "CurFactors",
    "ResidualEstimates",
    "rand_lupp",
    "rand_cpqr",
    "cpqr_skeleton",
    "adaptive_init",
    "adaptive_step",
    "rand_lupp_adaptive",
    "residual_ur_estimates",
    "row_id_error",
    "stable_row_id_error",
    "column_id",
    "two_sided_id",
    "cur_decompose",
    "interpolation_matrix",
]

STATUS_OK = "ok"
STATUS_NOT_CONVERGED = "not_converged"
STATUS_RANK_EXHAUSTED = "rank_exhausted"
STATUS_ILL_CONDITIONED = "ill_conditioned"

# Condition-estimate threshold above which a two-sided ID is flagged.
_COND_LIMIT = 1e14

# Stream offset reserved for the dedicated residual-estimation sample.
_RESIDUAL_STREAM = 1 << 40


@dataclass
class TraceRecord:
    """One adaptive iteration: rank so far and the error estimates at it."""

    k: int
    e_schur: float
    est_norm_ur: float | None = None
    est_max_ur: float | None = None


@dataclass
class ErrorTrace:
    """Per-iteration error-estimate records, ranks strictly increasing."""

    records: list = field(default_factory=list)

    def append(self, record):
        if self.records and record.k <= self.records[-1].k:
            raise ValueError("trace ranks must be strictly increasing")
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


@dataclass
class SkeletonResult:
    """Outcome of a skeleton-selection run.

    ``w`` is the row interpolation matrix (identity exactly on the rows
    indexed by ``row_idx``); ``x`` the column interpolation matrix
    (identity on the columns indexed by ``col_idx``). Either side may be
    absent depending on the operation.
    """

    rank: int
    row_idx: np.ndarray | None = None
    col_idx: np.ndarray | None = None
    w: np.ndarray | None = None
    x: np.ndarray | None = None
    trace: ErrorTrace = field(default_factory=ErrorTrace)
    status: str = STATUS_OK

    @property
    def w_max(self):
        """Largest interpolation-entry magnitude; O(1) in practice."""
        if self.w is None:
            return None
        return float(np.abs(self.w).max())


@dataclass
class CurFactors:
    """CUR factors; C = a[:, col_idx] and R = a[row_idx, :] are implied."""

    row_idx: np.ndarray
    col_idx: np.ndarray
    u_mid: np.ndarray
    status: str = STATUS_OK


@dataclass
class ResidualEstimates:
    """Error proxies from the trailing p x p factor of a dedicated sample."""

    norm_ur: float
    max_ur: float
    est_norm: float
    est_max: float


@dataclass
class BlockedLUState:
    """Growing partial-pivoting LU of the accumulated sample.

    Maintains ``ysofar[perm] = [[L1], [L2]] @ U1`` with L1 unit lower
    triangular. The state owns its arrays; it may be handed between
    threads but not shared mutably.
    """

    t: int
    b: int
    m: int
    L1: np.ndarray
    L2: np.ndarray
    U1: np.ndarray
    perm: np.ndarray
    ysofar: np.ndarray
    rng: object

    @property
    def rank(self):
        return self.U1.shape[0]


def _w_from_parts(perm, k, t_block):
    """Assemble W with W[perm[:k]] = I and W[perm[k:]] = t_block."""
    m = perm.shape[0]
    w = np.zeros((m, k))
    w[perm[:k], np.arange(k)] = 1.0
    w[perm[k:]] = t_block
    return w


def _w_from_lu(L, perm):
    """Row interpolation matrix from LU factors of a sample: L2 @ L1^{-1} rows."""
    k = L.shape[1]
    t_block = triangular_solve(L[:k], L[k:], side="right", uplo="lower", unit_diagonal=True)
    return _w_from_parts(perm, k, t_block)


def interpolation_matrix(state):
    """Row interpolation matrix of the current adaptive state."""
    t_block = triangular_solve(
        state.L1, state.L2, side="right", uplo="lower", unit_diagonal=True
    )
    return _w_from_parts(state.perm, state.rank, t_block)


def _require_2d(a):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"matrix must be 2-dimensional, got shape {a.shape}")
    return a


def rand_lupp(a, k, spec, rng):
    """Row skeleton selection by partial-pivoting LU of a random sketch.

    Sketches ``y = a @ Omega`` with an (n, k) embedding described by
    ``spec`` (resized to these dimensions), factors y by LUPP, and reads
    the first k pivot rows as skeletons. The interpolation matrix is
    recovered from the L factor with a triangular solve.

    Returns
    -------
    SkeletonResult
        With ``row_idx`` (k,), ``w`` (m, k) satisfying
        ``w[row_idx] = I_k`` exactly.

    Raises
    ------
    RankDeficientError
        If the sketch is exactly rank deficient (propagated from LUPP).
    """
    a = _require_2d(a)
    m, n = a.shape
    if not 1 <= k <= min(m, n):
        raise DimensionError(f"k must be in [1, {min(m, n)}], got {k}")
    op = make_sketch(spec.with_dims(n, k), rng)
    y = apply_sketch(a, op)
    f = lupp(y)
    w = _w_from_lu(f.L, f.perm)
    return SkeletonResult(rank=k, row_idx=f.perm[:k].copy(), w=w)


def cpqr_skeleton(sample, k=None):
    """Row skeletons and interpolation matrix from a sample via pivoted QR.

    Runs column-pivoted QR on ``sample.T``; the first k column pivots are
    row indices of the matrix the sample was sketched from. Rows outside
    the skeleton are interpolated through ``R11^{-1} R12`` (triangular
    solve; least-squares fallback when R11 is numerically singular).
    """
    y = _require_2d(sample)
    m = y.shape[0]
    if k is None:
        k = y.shape[1]
    q = cpqr(y.T, k=k)
    r11 = q.R[:, :k]
    r12 = q.R[:, k:]
    diag = np.abs(np.diagonal(r11))
    if diag.min() > 1e-12 * max(diag.max(), 1e-300):
        t_block = triangular_solve(r11, r12, uplo="upper")
    else:
        t_block = pinv_apply(r11, r12)
    return q.perm[:k].copy(), _w_from_parts(q.perm, k, t_block.T)


def rand_cpqr(a, k, spec, rng):
    """Row skeleton selection by column-pivoted QR of a random sketch.

    The reference selector: sketches ``y = a @ Omega`` exactly as
    ``rand_lupp`` does, then picks pivot rows by CPQR on ``y.T``.
    """
    a = _require_2d(a)
    m, n = a.shape
    if not 1 <= k <= min(m, n):
        raise DimensionError(f"k must be in [1, {min(m, n)}], got {k}")
    op = make_sketch(spec.with_dims(n, k), rng)
    y = apply_sketch(a, op)
    row_idx, w = cpqr_skeleton(y, k)
    return SkeletonResult(rank=k, row_idx=row_idx, w=w)


def _sized_spec(spec, n, ell, scale=None):
    """Resize a spec to (n, ell); sparse-sign rows saturate when ell < zeta."""
    kwargs = {"n": n, "ell": ell}
    if scale is not None:
        kwargs["scale"] = scale
    if spec.kind == "sparsesign" and spec.zeta > ell:
        kwargs["zeta"] = ell
    return replace(spec, **kwargs)


def _block_spec(spec, n, ell):
    """Per-block sketch spec: estimator-consistent Gaussian normalization."""
    if spec.kind == "gaussian":
        return _sized_spec(spec, n, ell, scale="inv_sqrt_ell")
    return _sized_spec(spec, n, ell)


def _draw_block(a, spec, stream, b):
    op = make_sketch(_block_spec(spec, a.shape[1], b), stream)
    return apply_sketch(a, op)


def adaptive_init(a, b, spec, rng):
    """First adaptive iteration: sketch one block and factor it.

    Returns a ``BlockedLUState`` holding the rank-b factorization of the
    first sample block, with stream bookkeeping for subsequent blocks.
    """
    a = _require_2d(a)
    m, n = a.shape
    if not 1 <= b <= min(m, n):
        raise DimensionError(f"block size must be in [1, {min(m, n)}], got {b}")
    y = _draw_block(a, spec, rng.child(0), b)
    f = lupp(y)
    return BlockedLUState(
        t=1, b=b, m=m,
        L1=f.L[:b].copy(), L2=f.L[b:].copy(), U1=f.U,
        perm=f.perm, ysofar=y, rng=rng,
    )


def _schur_of_block(state, y):
    """Reduce a fresh block against the state: returns (U2, Schur complement)."""
    k = state.rank
    py = y[state.perm]
    u2 = scipy.linalg.solve_triangular(state.L1, py[:k], lower=True, unit_diagonal=True)
    s = py[k:] - state.L2 @ u2
    return u2, s


def _extend_state(state, y, u2, sub, ncols):
    """Absorb the factored Schur block (first ncols columns) into the state."""
    if ncols == 0:
        return state
    k = state.rank
    kn = k + ncols
    L1 = np.zeros((kn, kn))
    L1[:k, :k] = state.L1
    l2p = state.L2[sub.perm]
    L1[k:, :k] = l2p[:ncols]
    L1[k:, k:] = sub.L[:ncols]
    L2 = np.empty((state.m - kn, kn))
    L2[:, :k] = l2p[ncols:]
    L2[:, k:] = sub.L[ncols:]
    U1 = np.zeros((kn, kn))
    U1[:k, :k] = state.U1
    U1[:k, k:] = u2[:, :ncols]
    U1[k:, k:] = sub.U
    perm = state.perm.copy()
    perm[k:] = perm[k:][sub.perm]
    return BlockedLUState(
        t=state.t + 1, b=state.b, m=state.m,
        L1=L1, L2=L2, U1=U1, perm=perm,
        ysofar=np.hstack([state.ysofar, y[:, :ncols]]),
        rng=state.rng,
    )


def adaptive_step(state, a, spec, rng=None):
    """One adaptive iteration: estimate the current error, then grow.

    Draws an independent block ``y = a @ Omega``, reduces it against the
    accumulated factorization, and takes the Frobenius norm of the Schur
    complement as the error estimate for the current rank. The Schur
    block is then eliminated by LUPP and merged, extending the state by b
    columns.

    Returns
    -------
    (float, BlockedLUState)
        The estimate ``e_schur`` for the *incoming* state's rank, and the
        extended state.

    Raises
    ------
    RankDeficientError
        If the Schur block is exactly rank deficient (numerical rank
        reached mid-block); the caller may truncate instead via
        ``rand_lupp_adaptive``.
    """
    a = _require_2d(a)
    m, n = a.shape
    k = state.rank
    if k + state.b > min(m, n):
        raise DimensionError(
            f"cannot extend rank {k} by block {state.b} beyond min(m, n) = {min(m, n)}"
        )
    stream = (rng or state.rng).child(state.t)
    y = _draw_block(a, spec, stream, state.b)
    u2, s = _schur_of_block(state, y)
    e_schur = frobenius_norm(s)
    sub = lupp(s)
    return e_schur, _extend_state(state, y, u2, sub, state.b)


def rand_lupp_adaptive(a, b, tau, spec, rng, max_rank=None):
    """Adaptive randomized row-skeleton selection (blockwise LUPP).

    Grows the factorization b columns at a time until the Schur-complement
    estimate of the interpolation error first satisfies ``tau`` (absolute,
    Frobenius norm). The returned rank is the one whose completed
    factorization produced that estimate; the in-flight block used for
    estimation is discarded.

    Parameters
    ----------
    a : (m, n) array_like
    b : int
        Block size; 20 to 100 is usually plenty.
    tau : float
        Absolute error tolerance, > 0.
    spec : SketchSpec
        Distribution of the per-block embeddings (dimensions are derived
        per block; Gaussian blocks are normalized to variance 1/b so the
        squared estimate is unbiased).
    rng : RngStream
        Base stream; block t draws from ``rng.child(t)``.
    max_rank : int, optional
        Rank cap; defaults to ``min(m, n) - b`` so the Schur block never
        empties on full-rank inputs.

    Returns
    -------
    SkeletonResult
        With status 'ok' when the tolerance was certified,
        'not_converged' when the rank budget ran out first (best rank so
        far is returned), or 'rank_exhausted' when the sample became
        exactly rank deficient mid-block (the final block is truncated to
        the successful pivot count).
    """
    a = _require_2d(a)
    m, n = a.shape
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if not 1 <= b <= min(m, n):
        raise DimensionError(f"block size must be in [1, {min(m, n)}], got {b}")
    if max_rank is None:
        max_rank = max(b, min(m, n) - b)
    max_rank = min(max_rank, min(m, n))

    state = adaptive_init(a, b, spec, rng)
    trace = ErrorTrace()
    status = STATUS_NOT_CONVERGED
    while True:
        stream = rng.child(state.t)
        y = _draw_block(a, spec, stream, b)
        u2, s = _schur_of_block(state, y)
        e_schur = frobenius_norm(s)
        trace.append(TraceRecord(k=state.rank, e_schur=e_schur))
        if e_schur <= tau:
            status = STATUS_OK
            break
        if state.rank + b > max_rank:
            break
        sub, ncols = _lupp_partial(s)
        state = _extend_state(state, y, u2, sub, ncols)
        if ncols < b:
            status = STATUS_RANK_EXHAUSTED
            break

    k = state.rank
    w = interpolation_matrix(state)
    return SkeletonResult(
        rank=k, row_idx=state.perm[:k].copy(), w=w, trace=trace, status=status
    )


def residual_ur_estimates(state, a, p, spec, rng, sample_r=None):
    """Error proxies from the residual p x p triangular factor.

    Extends the state's LU by a dedicated p-column sample ``y_r`` (drawn
    once, Gaussian with unit variance; SRTT/sparse-sign samples keep
    their norm-preserving scale and pick up a sqrt(p) correction) and
    reads the trailing p x p factor U_r of the auxiliary factorization of
    ``[ysofar, y_r]``. Only that trailing panel is new; everything else is
    reused from the state. The estimates scale ``||U_r||_F`` and
    ``max|U_r|`` by ``(4 log k / k) * sqrt(m - k)``, the reciprocal of
    the asymptotic LU growth factor of randomly sketched matrices.

    Parameters
    ----------
    state : BlockedLUState
    a : (m, n) array_like
    p : int
        Oversampling count, 1 <= p < state.b.
    spec : SketchSpec
        Distribution for the dedicated sample.
    rng : RngStream
        Stream for the dedicated sample (ignored when ``sample_r`` is
        given).
    sample_r : (m, p) ndarray, optional
        A precomputed dedicated sample ``a @ Omega_r``, allowing one
        up-front draw to be reused across iterations.

    Returns
    -------
    ResidualEstimates
    """
    a = _require_2d(a)
    m, n = a.shape
    if not 1 <= p < state.b:
        raise DimensionError(f"oversample count must satisfy 1 <= p < b = {state.b}")
    k = state.rank
    if m - k < p:
        raise DimensionError(f"need at least p = {p} rows beyond rank {k}")
    if sample_r is None:
        sample_r = draw_residual_sample(a, p, spec, rng)
    elif sample_r.shape != (m, p):
        raise DimensionError(f"sample_r must have shape {(m, p)}, got {sample_r.shape}")

    _, s_r = _schur_of_block(state, sample_r)
    sub, ncols = _lupp_partial(s_r)
    if ncols == 0:
        norm_ur = 0.0
        max_ur = 0.0
    else:
        norm_ur = frobenius_norm(sub.U)
        max_ur = float(np.abs(sub.U).max())
    factor = (4.0 * math.log(k) / k) * math.sqrt(m - k)
    if spec.kind != "gaussian":
        factor *= math.sqrt(p)
    return ResidualEstimates(
        norm_ur=norm_ur,
        max_ur=max_ur,
        est_norm=factor * norm_ur,
        est_max=factor * max_ur,
    )


def draw_residual_sample(a, p, spec, rng):
    """Dedicated sample a @ Omega_r for the residual-factor estimates.

    Gaussian Omega_r has unit-variance entries; the implicit operators
    keep their norm-preserving construction (their estimates compensate
    with sqrt(p)).
    """
    a = _require_2d(a)
    n = a.shape[1]
    stream = rng.child(_RESIDUAL_STREAM)
    if spec.kind == "gaussian":
        omega = make_gaussian(_sized_spec(spec, n, p, scale="unit"), stream)
        return a @ omega
    op = make_sketch(_sized_spec(spec, n, p), stream)
    return apply_sketch(a, op)


def row_id_error(a, result):
    """Plain row-ID residual ``||a - w @ a[row_idx]||_F``."""
    a = _require_2d(a)
    if result.row_idx is None or result.w is None:
        raise ValueError("result carries no row skeletons")
    return frobenius_norm(a - result.w @ a[result.row_idx])


def stable_row_id_error(a, result):
    """Projection residual through an orthonormal basis of the skeleton rows.

    Computes ``||a.T - Q Q.T a.T||_F`` with Q from unpivoted QR of
    ``a[row_idx].T``; this is the true approximation error of the selected
    skeletons, immune to ill-conditioning of the interpolation matrix.
    """
    a = _require_2d(a)
    if result.row_idx is None:
        raise ValueError("result carries no row skeletons")
    q = qr_unpivoted(a[result.row_idx].T).Q
    at = a.T
    return frobenius_norm(at - q @ (q.T @ at))


def _column_skeletons_from_rows(a, row_idx, k):
    """Column skeletons and interpolation from the selected rows (LUPP on
    the transposed row block)."""
    rows = a[row_idx]
    f = lupp(rows.T)
    x = _w_from_lu(f.L, f.perm).T
    return f.perm[:k].copy(), x


def column_id(a, k, spec, rng):
    """Column skeleton selection; the transposed mirror of ``rand_lupp``.

    Sketches ``x = a.T @ Gamma`` and selects column skeletons by LUPP.
    The result's ``x`` factor satisfies ``a ~= a[:, col_idx] @ x`` with
    ``x[:, col_idx] = I_k`` exactly.
    """
    a = _require_2d(a)
    m, n = a.shape
    if not 1 <= k <= min(m, n):
        raise DimensionError(f"k must be in [1, {min(m, n)}], got {k}")
    op = make_sketch(spec.with_dims(m, k), rng)
    xs = apply_sketch(a, op, side="transposed_right")
    f = lupp(xs)
    x = _w_from_lu(f.L, f.perm).T
    return SkeletonResult(rank=k, col_idx=f.perm[:k].copy(), x=x)


def _condition_estimate_1norm(s):
    """LAPACK 1-norm condition estimate of a square matrix (no inverse)."""
    anorm = float(np.abs(s).sum(axis=0).max())
    if anorm == 0.0:
        return np.inf
    lu_band, piv, info = scipy.linalg.lapack.dgetrf(s)
    if info > 0:
        return np.inf
    rcond, _ = scipy.linalg.lapack.dgecon(lu_band, anorm, norm="1")
    if rcond == 0.0:
        return np.inf
    return 1.0 / rcond


def two_sided_id(a, k, spec, rng):
    """Two-sided ID: row skeletons by sketched LUPP, columns from the rows.

    Row skeletons come from ``rand_lupp``; column skeletons are then
    selected by LUPP on ``a[row_idx].T`` (no second sketch needed since
    the row block is already small). Reconstruction is
    ``w @ a[ix_(row_idx, col_idx)] @ x``. The result is flagged
    'ill_conditioned' when the skeleton submatrix has an estimated 1-norm
    condition number above 1e14.
    """
    a = _require_2d(a)
    r = rand_lupp(a, k, spec, rng)
    col_idx, x = _column_skeletons_from_rows(a, r.row_idx, k)
    s = a[np.ix_(r.row_idx, col_idx)]
    status = STATUS_OK
    if _condition_estimate_1norm(s) > _COND_LIMIT:
        status = STATUS_ILL_CONDITIONED
    return SkeletonResult(
        rank=k, row_idx=r.row_idx, col_idx=col_idx, w=r.w, x=x, status=status
    )


def cur_decompose(a, k, spec, rng):
    """CUR decomposition with skeletons from sketched LUPP.

    Row skeletons from ``rand_lupp``, column skeletons from the selected
    rows, and the linking matrix ``u_mid = C^+ a R^+`` computed by two
    least-squares solves (never an explicit pseudoinverse). Flagged
    'ill_conditioned' like ``two_sided_id``.
    """
    a = _require_2d(a)
    r = rand_lupp(a, k, spec, rng)
    col_idx, _ = _column_skeletons_from_rows(a, r.row_idx, k)
    c = a[:, col_idx]
    rows = a[r.row_idx]
    # a @ R^+ via the transposed least-squares problem, then C^+ applied.
    ar_pinv = pinv_apply(rows.T, a.T).T
    u_mid = pinv_apply(c, ar_pinv)
    status = STATUS_OK
    if _condition_estimate_1norm(a[np.ix_(r.row_idx, col_idx)]) > _COND_LIMIT:
        status = STATUS_ILL_CONDITIONED
    return CurFactors(row_idx=r.row_idx, col_idx=col_idx, u_mid=u_mid, status=status)
