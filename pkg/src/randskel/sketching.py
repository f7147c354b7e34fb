"""Seeded random embeddings for sketching.

Three distributions are provided, all reproducible from a
``(seed, stream)`` pair through the counter-based Philox4x64 generator:

* Gaussian: dense i.i.d. normal entries, variance 1 or 1/ell.
* SRTT: subsampled randomized trigonometric transform, composed as
  ``sqrt(n/ell) * (column permutation) * (orthonormal DCT-II) *
  (random signs) * (column subsample)`` and applied through the fast
  transform in O(m n log n).
* Sparse sign: each of the n rows holds exactly ``zeta`` entries of
  value +-1/sqrt(zeta) at distinct uniformly random coordinates.

The normalizations are chosen so that ``E ||X @ Omega||_F^2 = ||X||_F^2``
under the default scaling (Gaussian with variance 1/ell; SRTT and sparse
sign by construction), which is what makes the downstream residual-norm
estimators unbiased.
"""

from dataclasses import dataclass, replace

import numpy as np
import scipy.fft
import scipy.sparse

from .errors import DimensionError

__all__ = [
    "SketchSpec",
    "RngStream",
    "GaussianSketch",
    "SrttSketch",
    "SparseSignSketch",
    "make_gaussian",
    "make_srtt",
    "make_sparse_sign",
    "make_sketch",
    "apply_sketch",
]

KINDS = ("gaussian", "srtt", "sparsesign")
SCALES = ("unit", "inv_sqrt_ell")

_MASK64 = (1 << 64) - 1


def _mix64(z):
    """SplitMix64 finalizer; bijective on 64-bit integers."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


@dataclass(frozen=True)
class RngStream:
    """A reproducible, splittable random stream.

    Streams with distinct ``(seed, stream)`` pairs are independent by
    construction of the Philox4x64 keyed generator; ``child(i)`` derives
    further independent streams deterministically.
    """

    seed: int
    stream: int = 0

    def generator(self):
        key = [self.seed & _MASK64, self.stream & _MASK64]
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, i):
        return RngStream(self.seed, _mix64((self.stream & _MASK64) ^ _mix64(i & _MASK64)))


@dataclass(frozen=True)
class SketchSpec:
    """Description of a random embedding Omega in R^{n x ell}.

    ``scale`` selects the Gaussian variance convention: 'unit' draws
    entries with variance 1, 'inv_sqrt_ell' with variance 1/ell (standard
    deviation 1/sqrt(ell)). SRTT and sparse-sign operators carry their
    fixed norm-preserving scales and ignore this field. ``zeta`` is the
    nonzeros-per-row count of the sparse-sign distribution. ``seed`` is a
    base seed used by the harness when building streams from a config.
    """

    kind: str
    n: int
    ell: int
    scale: str = "inv_sqrt_ell"
    zeta: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sketch kind {self.kind!r}; expected one of {KINDS}")
        if self.scale not in SCALES:
            raise ValueError(f"unknown scale {self.scale!r}; expected one of {SCALES}")
        if not 1 <= self.ell <= self.n:
            raise DimensionError(
                f"embedding dimension must satisfy 1 <= ell <= n, got ell={self.ell}, n={self.n}"
            )
        if self.kind == "sparsesign" and not 2 <= self.zeta <= self.ell:
            raise DimensionError(
                f"sparse sign needs 2 <= zeta <= ell, got zeta={self.zeta}, ell={self.ell}"
            )

    def with_dims(self, n, ell):
        return replace(self, n=n, ell=ell)


class GaussianSketch:
    """Dense Gaussian embedding; thin wrapper around the materialized matrix."""

    def __init__(self, omega):
        self.omega = omega

    @property
    def shape(self):
        return self.omega.shape

    def apply(self, a):
        a = np.asarray(a, dtype=np.float64)
        if a.shape[1] != self.omega.shape[0]:
            raise DimensionError(
                f"operator ambient dimension {self.omega.shape[0]} does not match {a.shape}"
            )
        return a @ self.omega

    def to_dense(self):
        return self.omega


class SrttSketch:
    """Subsampled randomized trigonometric transform, applied implicitly."""

    def __init__(self, perm, signs, cols, scale):
        self.perm = perm
        self.signs = signs
        self.cols = cols
        self.scale = scale

    @property
    def shape(self):
        return (self.perm.shape[0], self.cols.shape[0])

    def apply(self, a):
        a = np.asarray(a, dtype=np.float64)
        if a.shape[1] != self.perm.shape[0]:
            raise DimensionError(
                f"operator ambient dimension {self.perm.shape[0]} does not match {a.shape}"
            )
        c = scipy.fft.dct(a[:, self.perm], type=2, axis=1, norm="ortho")
        c *= self.signs
        return self.scale * c[:, self.cols]

    def to_dense(self):
        return self.apply(np.eye(self.perm.shape[0]))


class SparseSignSketch:
    """Sparse-sign embedding stored row-compressed as (index, sign) pairs."""

    def __init__(self, idx, signs, ell, scale):
        self.idx = idx
        self.signs = signs
        self.ell = ell
        self.scale = scale
        n, zeta = idx.shape
        rows = np.repeat(np.arange(n), zeta)
        self._csr = scipy.sparse.csr_matrix(
            (signs.ravel() * scale, (rows, idx.ravel())), shape=(n, ell)
        )

    @property
    def shape(self):
        return self._csr.shape

    def apply(self, a):
        a = np.asarray(a, dtype=np.float64)
        if a.shape[1] != self._csr.shape[0]:
            raise DimensionError(
                f"operator ambient dimension {self._csr.shape[0]} does not match {a.shape}"
            )
        return (self._csr.T @ a.T).T

    def to_dense(self):
        return self._csr.toarray()


def make_gaussian(spec, rng):
    """Draw a dense Gaussian embedding matrix of shape (n, ell).

    With ``scale='unit'`` entries have variance 1; with 'inv_sqrt_ell'
    they have variance 1/ell so that sketching preserves squared
    Frobenius norms in expectation.
    """
    if spec.kind != "gaussian":
        raise ValueError(f"spec kind is {spec.kind!r}, expected 'gaussian'")
    g = rng.generator()
    omega = g.standard_normal((spec.n, spec.ell))
    if spec.scale == "inv_sqrt_ell":
        omega /= np.sqrt(spec.ell)
    return omega


def make_srtt(spec, rng):
    """Build an SRTT operator: permute, DCT-II, random signs, subsample."""
    if spec.kind != "srtt":
        raise ValueError(f"spec kind is {spec.kind!r}, expected 'srtt'")
    g = rng.generator()
    perm = g.permutation(spec.n)
    signs = g.integers(0, 2, size=spec.n) * 2.0 - 1.0
    cols = g.choice(spec.n, size=spec.ell, replace=False)
    scale = np.sqrt(spec.n / spec.ell)
    return SrttSketch(perm.astype(np.intp), signs, cols.astype(np.intp), scale)


def make_sparse_sign(spec, rng):
    """Build a sparse-sign operator with exactly zeta nonzeros per row.

    The coordinates in each row are a uniformly random zeta-subset of the
    ell columns (realized by ranking i.i.d. uniforms), with independent
    Rademacher signs scaled by 1/sqrt(zeta).
    """
    if spec.kind != "sparsesign":
        raise ValueError(f"spec kind is {spec.kind!r}, expected 'sparsesign'")
    g = rng.generator()
    # Rank i.i.d. uniforms per row; the first zeta ranks form a uniform subset.
    u = g.random((spec.n, spec.ell))
    idx = np.argsort(u, axis=1)[:, : spec.zeta]
    signs = g.integers(0, 2, size=(spec.n, spec.zeta)) * 2.0 - 1.0
    return SparseSignSketch(
        np.ascontiguousarray(idx, dtype=np.intp), signs, spec.ell, 1.0 / np.sqrt(spec.zeta)
    )


def make_sketch(spec, rng):
    """Construct the operator described by ``spec`` from the given stream."""
    if spec.kind == "gaussian":
        return GaussianSketch(make_gaussian(spec, rng))
    if spec.kind == "srtt":
        return make_srtt(spec, rng)
    return make_sparse_sign(spec, rng)


def apply_sketch(a, op, side="right"):
    """Apply a sketch operator to a matrix.

    Parameters
    ----------
    a : (m, n) array_like
    op : operator or ndarray
        A sketch operator (anything with ``.apply``) or a dense embedding
        matrix.
    side : {'right', 'transposed_right'}
        'right' forms the column sketch ``a @ Omega`` (m, ell);
        'transposed_right' forms the row sketch ``a.T @ Gamma`` (n, ell),
        where the operator's ambient dimension must match a's row count.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"matrix must be 2-dimensional, got shape {a.shape}")
    if side not in ("right", "transposed_right"):
        raise ValueError(f"side must be 'right' or 'transposed_right', got {side!r}")
    target = a if side == "right" else a.T
    if isinstance(op, np.ndarray):
        if target.shape[1] != op.shape[0]:
            raise DimensionError(
                f"dimension mismatch: {target.shape} x {op.shape}"
            )
        return target @ op
    return op.apply(target)
