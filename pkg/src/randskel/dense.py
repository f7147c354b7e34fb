"""Dense linear-algebra kernels.

All routines operate on real float64 matrices and keep working copies in
column-major (Fortran) order so that panel operations touch contiguous
memory. Matrix products, unpivoted QR, the reference SVD, and triangular
solves are delegated to BLAS/LAPACK through numpy/scipy; the pivoted
factorizations (partial-pivoting LU and column-pivoted QR) are implemented
here because their pivot ordering, tie-breaking, and incremental blocked
extension are part of this package's contract.

Conventions
-----------
* A row permutation is an index vector ``perm`` of length m such that
  ``A[perm]`` is the permuted matrix; ``invert_permutation`` gives the
  inverse vector.
* ``lupp`` factors with row pivoting: ``A[perm] = L @ U`` with L unit lower
  trapezoidal (entries bounded by 1 in magnitude) and U upper triangular.
* ``cpqr`` factors with column pivoting: ``A[:, perm] = Q @ R`` with
  ``|R[0, 0]| >= |R[1, 1]| >= ...``.
"""

import numpy as np
import scipy.linalg

from .errors import DimensionError, NumericalError, RankDeficientError, SingularError

__all__ = [
    "LUFactors",
    "QRFactors",
    "SvdFactors",
    "gemm",
    "lupp",
    "lupp_blocked_step",
    "cpqr",
    "qr_unpivoted",
    "svd",
    "svd_tail_norm",
    "triangular_solve",
    "frobenius_norm",
    "row_permute",
    "invert_permutation",
    "pinv_apply",
]

# Panel width for the blocked right-looking LU update.
_LU_PANEL = 64

# Relative singular-value cutoff used by pinv_apply.
_PINV_RCOND = 1e-12


def _as_matrix(a, name="matrix"):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-dimensional, got shape {a.shape}")
    return a


def _fortran_workspace(a):
    """Private column-major copy (asfortranarray alone would alias F-ordered
    input, and the factorizations destroy their workspace)."""
    return np.array(a, dtype=np.float64, order="F", copy=True)


def _check_finite(a, name="matrix"):
    if not np.isfinite(a).all():
        raise ValueError(f"{name} contains non-finite entries")


class LUFactors:
    """Partial-pivoting LU factors: ``A[perm] = L @ U``.

    Attributes
    ----------
    L : (m, k) ndarray
        Unit lower trapezoidal; subdiagonal entries bounded by 1 in
        magnitude (up to roundoff).
    U : (k, k) ndarray
        Upper triangular.
    perm : (m,) ndarray of int
        Row permutation vector.
    """

    __slots__ = ("L", "U", "perm")

    def __init__(self, L, U, perm):
        self.L = L
        self.U = U
        self.perm = perm

    @property
    def k(self):
        return self.L.shape[1]


class QRFactors:
    """Pivoted or plain QR factors: ``A[:, perm] = Q @ R``."""

    __slots__ = ("Q", "R", "perm")

    def __init__(self, Q, R, perm):
        self.Q = Q
        self.R = R
        self.perm = perm


class SvdFactors:
    """Thin SVD factors ``A = U @ diag(sigma) @ V.T`` with sigma non-increasing."""

    __slots__ = ("U", "sigma", "V")

    def __init__(self, U, sigma, V):
        self.U = U
        self.sigma = sigma
        self.V = V


def gemm(a, b, transpose_a=False, transpose_b=False):
    """Matrix-matrix product ``op(a) @ op(b)`` with optional transposes.

    Parameters
    ----------
    a, b : array_like
        Real matrices.
    transpose_a, transpose_b : bool, optional
        Transpose the corresponding operand before multiplying.

    Returns
    -------
    (m, n) ndarray
        The product, deterministic for fixed inputs.
    """
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    opa = a.T if transpose_a else a
    opb = b.T if transpose_b else b
    if opa.shape[1] != opb.shape[0]:
        raise DimensionError(
            f"inner dimensions do not agree: {opa.shape} x {opb.shape}"
        )
    return opa @ opb


def frobenius_norm(a):
    """Frobenius norm of a matrix (or Euclidean norm of a vector)."""
    return float(np.linalg.norm(np.asarray(a, dtype=np.float64)))


def row_permute(a, perm):
    """Apply a row permutation vector: returns ``a[perm]``."""
    a = _as_matrix(a)
    perm = np.asarray(perm, dtype=np.intp)
    if perm.shape[0] != a.shape[0]:
        raise DimensionError("permutation length does not match row count")
    return a[perm]


def invert_permutation(perm):
    """Inverse of a permutation vector: ``inv[perm[i]] = i``."""
    perm = np.asarray(perm, dtype=np.intp)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.shape[0], dtype=np.intp)
    return inv


def pinv_apply(a, b):
    """Minimum-norm least-squares solution of ``a @ x = b``.

    Realized through an SVD-based solve (LAPACK gelsd); singular values
    below ``1e-12 * sigma_max`` are truncated. The pseudoinverse is never
    formed explicitly.
    """
    a = _as_matrix(a, "a")
    b = np.asarray(b, dtype=np.float64)
    if b.ndim == 1:
        b = b[:, None]
    if a.shape[0] != b.shape[0]:
        raise DimensionError(
            f"row counts do not agree: {a.shape} vs {b.shape}"
        )
    x, _, _, _ = scipy.linalg.lstsq(a, b, cond=_PINV_RCOND, lapack_driver="gelsd")
    return x


def _lupp_panel(A, perm, j0, j1, allow_partial):
    """Factor columns ``j0:j1`` of A in place, swapping full rows of A.

    Returns the number of panel columns eliminated successfully (equal to
    ``j1 - j0`` unless an exactly zero pivot column is met).
    """
    m = A.shape[0]
    for j in range(j0, j1):
        col = A[j:, j]
        p = int(np.argmax(np.abs(col)))  # first maximum wins ties
        if col[p] == 0.0:
            if allow_partial:
                return j - j0
            raise RankDeficientError(j)
        if p != 0:
            i = j + p
            A[[j, i], :] = A[[i, j], :]
            perm[[j, i]] = perm[[i, j]]
        if j + 1 < m:
            A[j + 1 :, j] /= A[j, j]
            if j + 1 < j1:
                A[j + 1 :, j + 1 : j1] -= np.outer(A[j + 1 :, j], A[j, j + 1 : j1])
    return j1 - j0


def _lupp_inplace(A, allow_partial=False):
    """Blocked right-looking LU with partial pivoting on a Fortran-ordered copy.

    Returns ``(perm, ncols)`` where ``ncols`` is the number of columns
    factored (< n only when ``allow_partial`` and a zero pivot column
    occurred). L and U overwrite A.
    """
    m, n = A.shape
    perm = np.arange(m, dtype=np.intp)
    for j0 in range(0, n, _LU_PANEL):
        j1 = min(j0 + _LU_PANEL, n)
        done = _lupp_panel(A, perm, j0, j1, allow_partial)
        if done < j1 - j0:
            # Partial factorization: the caller keeps only the factored
            # columns, so the trailing update is unnecessary.
            return perm, j0 + done
        if j1 < n:
            # U12 = L11^{-1} A12, then the trailing Schur update.
            L11 = A[j0:j1, j0:j1]
            A[j0:j1, j1:] = scipy.linalg.solve_triangular(
                L11, A[j0:j1, j1:], lower=True, unit_diagonal=True
            )
            A[j1:, j1:] -= A[j1:, j0:j1] @ A[j0:j1, j1:]
    return perm, n


def _split_lu(A, k):
    """Extract (L, U) from the in-place LU storage of the first k columns."""
    m = A.shape[0]
    L = np.tril(A[:, :k], -1)
    np.fill_diagonal(L, 1.0)
    if m < k:  # cannot happen under the m >= n precondition; guard anyway
        raise DimensionError("fewer rows than factored columns")
    U = np.triu(A[:k, :k])
    return L, U


def lupp(a):
    """LU factorization with row-wise partial pivoting.

    At each elimination step the pivot is the largest-magnitude entry of
    the active column, the first such index winning ties; the trailing
    submatrix is updated with the corresponding Schur complement. All
    columns are factored, so the input must have at least as many rows as
    columns.

    Parameters
    ----------
    a : (m, n) array_like, m >= n
        Matrix with finite entries.

    Returns
    -------
    LUFactors
        ``a[perm] = L @ U`` with L (m, n) unit lower trapezoidal and
        U (n, n) upper triangular.

    Raises
    ------
    RankDeficientError
        If every pivot candidate in some column is exactly zero. The
        exception carries the elimination step.
    """
    a = _as_matrix(a)
    m, n = a.shape
    if m < n:
        raise DimensionError(f"lupp requires rows >= cols, got {m} x {n}")
    _check_finite(a)
    A = _fortran_workspace(a)
    perm, _ = _lupp_inplace(A, allow_partial=False)
    L, U = _split_lu(A, n)
    return LUFactors(L, U, perm)


def _lupp_partial(a):
    """Like ``lupp`` but stops at an exactly zero pivot column.

    Returns ``(LUFactors, ncols)`` where the factors cover the first
    ``ncols`` columns of ``a``.
    """
    a = _as_matrix(a)
    m, n = a.shape
    if m < n:
        raise DimensionError(f"lupp requires rows >= cols, got {m} x {n}")
    _check_finite(a)
    A = _fortran_workspace(a)
    perm, ncols = _lupp_inplace(A, allow_partial=True)
    L, U = _split_lu(A, ncols)
    return LUFactors(L, U, perm), ncols


def lupp_blocked_step(factors, new_cols):
    """Extend a partial-pivoting LU by a fresh block of columns.

    Given factors of ``Y`` (m x k) and a new block ``new_cols`` (m x b),
    produces the factors that one-shot ``lupp`` would return on the
    horizontal concatenation ``[Y, new_cols]``: the previous rows of L and
    the leading U block are reused, the new block is reduced against them,
    and only its Schur complement is eliminated from scratch. Pivot
    choices are identical to the one-shot factorization because partial
    pivoting inspects one column at a time.

    Parameters
    ----------
    factors : LUFactors or None
        Factors accumulated so far; ``None`` (or zero factored columns)
        starts a new factorization.
    new_cols : (m, b) array_like

    Returns
    -------
    LUFactors
        Factors over all k + b columns.
    """
    Y = _as_matrix(new_cols, "new_cols")
    if factors is None or factors.k == 0:
        return lupp(Y)
    m = factors.L.shape[0]
    k = factors.k
    b = Y.shape[1]
    if Y.shape[0] != m:
        raise DimensionError("new block row count does not match the factors")
    if k + b > m:
        raise DimensionError("extended factorization would have more cols than rows")
    _check_finite(Y, "new_cols")

    L1 = factors.L[:k]
    L2 = factors.L[k:]
    PY = Y[factors.perm]
    U2 = scipy.linalg.solve_triangular(L1, PY[:k], lower=True, unit_diagonal=True)
    S = PY[k:] - L2 @ U2
    sub = lupp(S)

    L2p = L2[sub.perm]
    Lnew = np.zeros((m, k + b))
    Lnew[:k, :k] = L1
    Lnew[k:, :k] = L2p
    Lnew[k:, k:] = sub.L
    Unew = np.zeros((k + b, k + b))
    Unew[:k, :k] = factors.U
    Unew[:k, k:] = U2
    Unew[k:, k:] = sub.U
    perm = factors.perm.copy()
    perm[k:] = perm[k:][sub.perm]
    return LUFactors(Lnew, Unew, perm)


def _householder(x):
    """Householder vector/coefficient annihilating x[1:]; returns (v, tau, alpha)."""
    normx = np.linalg.norm(x)
    if normx == 0.0:
        v = np.zeros_like(x)
        v[0] = 1.0
        return v, 0.0, 0.0
    alpha = -normx if x[0] >= 0 else normx
    v = x.copy()
    v[0] -= alpha
    v /= v[0]
    tau = (alpha - x[0]) / alpha
    return v, tau, alpha


def cpqr(a, k=None):
    """Householder QR with greedy column pivoting.

    Each step pivots the residual column of maximal Euclidean norm (lowest
    index wins ties) to the front, then reduces it with a Householder
    reflection. Column norms are downdated incrementally and recomputed
    from scratch whenever downdating has cancelled half the digits, which
    keeps the pivot order reliable.

    Parameters
    ----------
    a : (m, n) array_like
    k : int, optional
        Number of elimination steps (partial factorization). Defaults to
        ``min(m, n)``.

    Returns
    -------
    QRFactors
        ``a[:, perm] = Q @ R`` with Q (m, k) orthonormal and R (k, n)
        upper triangular whose diagonal is non-increasing in magnitude.
        Zero columns are legal and end up pivoted last.
    """
    a = _as_matrix(a)
    m, n = a.shape
    kmax = min(m, n)
    if k is None:
        k = kmax
    if not 1 <= k <= kmax:
        raise DimensionError(f"k must be in [1, {kmax}], got {k}")
    _check_finite(a)

    R = _fortran_workspace(a)
    perm = np.arange(n, dtype=np.intp)
    norms2 = np.einsum("ij,ij->j", R, R)
    norms2_ref = norms2.copy()
    # Downdated norm below sqrt(eps) of its reference: recompute exactly.
    recompute_tol = np.sqrt(np.finfo(np.float64).eps)
    dger = scipy.linalg.blas.dger
    dgemv = scipy.linalg.blas.dgemv

    vs = []
    taus = np.zeros(k)
    vpad = np.zeros(m)
    for j in range(k):
        p = j + int(np.argmax(norms2[j:]))  # first maximum wins ties
        if p != j:
            R[:, [j, p]] = R[:, [p, j]]
            perm[[j, p]] = perm[[p, j]]
            norms2[[j, p]] = norms2[[p, j]]
            norms2_ref[[j, p]] = norms2_ref[[p, j]]
        v, tau, alpha = _householder(R[j:, j])
        if tau != 0.0 and j + 1 < n:
            # Rank-1 update in place on the F-contiguous trailing columns;
            # the zero padding above row j contributes exact zeros.
            vpad[:j] = 0.0
            vpad[j:] = v
            trailing = R[:, j + 1 :]
            w = dgemv(tau, trailing, vpad, trans=1)
            dger(-1.0, vpad, w, a=trailing, overwrite_a=1)
        R[j, j] = alpha
        R[j + 1 :, j] = 0.0
        vs.append(v)
        taus[j] = tau
        if j + 1 < n:
            norms2[j + 1 :] -= R[j, j + 1 :] ** 2
            np.maximum(norms2[j + 1 :], 0.0, out=norms2[j + 1 :])
            stale = np.flatnonzero(
                norms2[j + 1 :] < recompute_tol * norms2_ref[j + 1 :]
            )
            if stale.size and j + 1 < m:
                cols = stale + j + 1
                fresh = np.einsum("ij,ij->j", R[j + 1 :, cols], R[j + 1 :, cols])
                norms2[cols] = fresh
                norms2_ref[cols] = fresh
            elif stale.size:
                norms2[stale + j + 1] = 0.0

    # Accumulate the thin Q by applying the reflectors backwards to I;
    # at step j the columns left of j still equal identity columns and
    # stay untouched, so the update is restricted to Q[:, j:].
    Q = np.zeros((m, k), order="F")
    Q[np.arange(k), np.arange(k)] = 1.0
    for j in range(k - 1, -1, -1):
        if taus[j] == 0.0:
            continue
        vpad[:j] = 0.0
        vpad[j:] = vs[j]
        block = Q[:, j:]
        w = dgemv(taus[j], block, vpad, trans=1)
        dger(-1.0, vpad, w, a=block, overwrite_a=1)
    return QRFactors(np.ascontiguousarray(Q), np.triu(R[:k, :]), perm)


def qr_unpivoted(a):
    """Thin unpivoted QR via LAPACK Householder; ``perm`` is the identity."""
    a = _as_matrix(a)
    _check_finite(a)
    Q, R = np.linalg.qr(a)
    return QRFactors(Q, R, np.arange(a.shape[1], dtype=np.intp))


def svd(a):
    """Thin singular value decomposition (reference oracle, not a fast path).

    Delegates to LAPACK's divide-and-conquer bidiagonalization solver.

    Returns
    -------
    SvdFactors
        U (m, r) and V (n, r) with orthonormal columns and ``sigma``
        non-increasing, r = min(m, n).

    Raises
    ------
    NumericalError
        If the iteration fails to converge within LAPACK's sweep budget.
    """
    a = _as_matrix(a)
    _check_finite(a)
    try:
        U, s, Vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    return SvdFactors(U, s, Vt.T)


def svd_tail_norm(sigma, k):
    """Frobenius norm of the optimal rank-k residual: ``sqrt(sum_{j>k} sigma_j^2)``."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if not 0 <= k <= sigma.shape[0]:
        raise DimensionError(f"k must be in [0, {sigma.shape[0]}], got {k}")
    return float(np.sqrt(np.sum(sigma[k:] ** 2)))


def triangular_solve(t, b, side="left", uplo="lower", trans=False, unit_diagonal=False):
    """Solve a triangular system without forming the inverse.

    Parameters
    ----------
    t : (k, k) array_like
        Triangular matrix. With ``unit_diagonal`` the stored diagonal is
        ignored and taken to be 1.
    b : array_like
        Right-hand side.
    side : {'left', 'right'}
        'left' solves ``op(t) @ x = b``; 'right' solves ``x @ op(t) = b``.
    uplo : {'lower', 'upper'}
    trans : bool
        Solve with ``t.T`` in place of ``t``.
    unit_diagonal : bool

    Raises
    ------
    SingularError
        If a stored diagonal entry is exactly zero (and the diagonal is
        not implicit).
    """
    t = _as_matrix(t, "t")
    if t.shape[0] != t.shape[1]:
        raise DimensionError("triangular matrix must be square")
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if uplo not in ("lower", "upper"):
        raise ValueError(f"uplo must be 'lower' or 'upper', got {uplo!r}")
    if not unit_diagonal:
        diag = np.diagonal(t)
        zero = np.flatnonzero(diag == 0.0)
        if zero.size:
            raise SingularError(int(zero[0]))
    b = np.asarray(b, dtype=np.float64)
    squeeze = b.ndim == 1
    if squeeze:
        b = b[:, None]
    if side == "left":
        if t.shape[1] != b.shape[0]:
            raise DimensionError("dimension mismatch in triangular solve")
        x = scipy.linalg.solve_triangular(
            t, b, lower=(uplo == "lower"), trans=1 if trans else 0,
            unit_diagonal=unit_diagonal,
        )
    else:
        # x op(t) = b  <=>  op(t).T x.T = b.T
        if t.shape[0] != b.shape[1]:
            raise DimensionError("dimension mismatch in triangular solve")
        x = scipy.linalg.solve_triangular(
            t, b.T, lower=(uplo == "lower"), trans=0 if trans else 1,
            unit_diagonal=unit_diagonal,
        ).T
    return x[:, 0] if squeeze else x
