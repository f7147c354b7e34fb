"""Test-matrix generators and file ingestion/persistence.

Generators cover the standard accuracy-study inputs: geometric singular
value decay behind Haar-random bases, the Kahan triangular matrix, and
the adversarial unit-lower matrix whose elimination growth factor is
2^(n-1). Readers handle Matrix Market (coordinate and array, real,
general), IDX image files, raw column-major float64 dumps, and a CSV
fallback; writers emit raw float64 and full-precision CSV.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParseError

__all__ = [
    "MatrixRecipe",
    "materialize",
    "gen_fast_decay",
    "gen_kahan",
    "gen_chan",
    "read_matrix_market",
    "read_idx_images",
    "read_raw_f64",
    "write_raw_f64",
    "read_csv_matrix",
    "write_csv_matrix",
    "write_csv_trace",
]

_IDX_IMAGE_MAGIC = 0x00000803


def _haar_orthonormal(g, m, n):
    """Orthonormal (m, n) factor with Haar measure: QR of a Gaussian with
    the sign of diag(R) fixed positive."""
    q, r = np.linalg.qr(g.standard_normal((m, n)))
    s = np.sign(np.diagonal(r))
    s[s == 0] = 1.0
    return q * s


def gen_fast_decay(m, n, beta, rng):
    """Matrix with geometrically decaying singular values.

    Builds ``a = u @ diag(d) @ v.T`` with Haar-orthonormal u (m, n) and
    v (n, n) and ``d_i = beta ** ((i - 1) / (n - 1))``, so the spectrum
    slides from 1 down to beta.

    Parameters
    ----------
    m, n : int, m >= n >= 1
    beta : float in (0, 1]
        Smallest singular value.
    rng : RngStream

    Returns
    -------
    (a, sigma) : ((m, n) ndarray, (n,) ndarray)
        The matrix and its exact singular values, for oracle use.
    """
    if m < n or n < 1:
        raise DimensionError(f"need m >= n >= 1, got {m} x {n}")
    if not 0 < beta <= 1:
        raise ValueError(f"beta must be in (0, 1], got {beta}")
    g = rng.generator()
    u = _haar_orthonormal(g, m, n)
    v = _haar_orthonormal(g, n, n)
    if n == 1:
        d = np.ones(1)
    else:
        d = beta ** (np.arange(n) / (n - 1))
    return (u * d) @ v.T, d


def gen_kahan(n, zeta=0.99):
    """Kahan's upper-triangular matrix ``D_n @ K_n``.

    ``D_n = diag(1, zeta, ..., zeta^(n-1))`` and K_n is unit upper
    triangular with ``-phi`` above the diagonal, ``phi = sqrt(1 - zeta^2)``.
    """
    if not 0 < zeta < 1:
        raise ValueError(f"zeta must be in (0, 1), got {zeta}")
    phi = np.sqrt(1.0 - zeta * zeta)
    k = np.eye(n) - phi * np.triu(np.ones((n, n)), 1)
    return zeta ** np.arange(n)[:, None] * k


def gen_chan(n):
    """Adversarial growth-factor matrix: unit lower triangular part with
    -1 below the diagonal and a final column of ones.

    Partial pivoting never swaps (every pivot candidate ties at magnitude
    1 and the first row wins), and the last column doubles at each
    elimination step, so the growth factor max|U| / max|A| is exactly
    2^(n-1).
    """
    if n < 1:
        raise DimensionError(f"n must be >= 1, got {n}")
    a = np.eye(n) - np.tril(np.ones((n, n)), -1)
    a[:, -1] = 1.0
    return a


@dataclass(frozen=True)
class MatrixRecipe:
    """Declarative description of a test matrix.

    ``kind`` is one of 'fastdecay', 'kahan', 'chan', 'file'. For 'file',
    ``path`` and ``format`` ('mm', 'idx', 'raw', 'csv') identify the
    source; raw files additionally need m and n.
    """

    kind: str
    m: int = 0
    n: int = 0
    beta: float = 1e-16
    zeta: float = 0.99
    path: str = ""
    format: str = ""

    def __post_init__(self):
        if self.kind not in ("fastdecay", "kahan", "chan", "file"):
            raise ValueError(f"unknown matrix kind {self.kind!r}")
        if self.kind == "fastdecay" and not 0 < self.beta < 1:
            raise ValueError(f"fastdecay needs 0 < beta < 1, got {self.beta}")
        if self.kind == "kahan" and not 0 < self.zeta < 1:
            raise ValueError(f"kahan needs 0 < zeta < 1, got {self.zeta}")
        if self.kind == "chan" and self.m not in (0, self.n):
            raise ValueError("chan matrix is square; m must equal n")


def materialize(recipe, rng):
    """Build the matrix described by a recipe.

    Returns
    -------
    (a, sigma)
        ``sigma`` is the exact singular-value vector when the generator
        knows it (fastdecay), else None.
    """
    if recipe.kind == "fastdecay":
        return gen_fast_decay(recipe.m, recipe.n, recipe.beta, rng)
    if recipe.kind == "kahan":
        return gen_kahan(recipe.n, recipe.zeta), None
    if recipe.kind == "chan":
        return gen_chan(recipe.n), None
    fmt = recipe.format or recipe.path.rsplit(".", 1)[-1].lower()
    if fmt in ("mm", "mtx"):
        return read_matrix_market(recipe.path), None
    if fmt == "idx":
        return read_idx_images(recipe.path), None
    if fmt in ("raw", "f64"):
        return read_raw_f64(recipe.path, recipe.m, recipe.n), None
    if fmt == "csv":
        return read_csv_matrix(recipe.path), None
    raise ValueError(f"unknown file format {fmt!r}")


def read_matrix_market(path):
    """Read a Matrix Market file (coordinate or array, real, general).

    Sparse coordinate files are densified. Malformed or truncated input
    raises ParseError carrying the byte offset of the offending line.
    """
    with open(path, "rb") as fh:
        raw = fh.read()

    offset = 0
    lines = []
    for line in raw.split(b"\n"):
        lines.append((offset, line))
        offset += len(line) + 1

    def fail(msg, off):
        raise ParseError(f"{path}: {msg}", offset=off)

    if not lines or not lines[0][1].startswith(b"%%MatrixMarket"):
        fail("missing %%MatrixMarket banner", 0)
    header = lines[0][1].decode("ascii", "replace").split()
    if len(header) != 5:
        fail(f"banner must have 5 fields, got {len(header)}", 0)
    _, obj, fmt, field_, symmetry = (h.lower() for h in header)
    if obj != "matrix":
        fail(f"unsupported object {obj!r}", 0)
    if fmt not in ("coordinate", "array"):
        fail(f"unsupported format {fmt!r}", 0)
    if field_ != "real":
        fail(f"unsupported field {field_!r} (only real)", 0)
    if symmetry != "general":
        fail(f"unsupported symmetry {symmetry!r} (only general)", 0)

    # Skip comments and blank lines to find the size line.
    body = [
        (off, ln) for off, ln in lines[1:]
        if ln.strip() and not ln.lstrip().startswith(b"%")
    ]
    if not body:
        fail("missing size line", offset)
    size_off, size_line = body[0]
    sizes = size_line.split()
    if fmt == "coordinate":
        if len(sizes) != 3:
            fail("coordinate size line needs 'rows cols nnz'", size_off)
        try:
            m, n, nnz = (int(s) for s in sizes)
        except ValueError:
            fail("non-integer size line", size_off)
        entries = body[1:]
        if len(entries) < nnz:
            fail(f"truncated file: {len(entries)} of {nnz} coordinate entries", offset)
        a = np.zeros((m, n))
        for off, ln in entries[:nnz]:
            parts = ln.split()
            if len(parts) != 3:
                fail("coordinate entry needs 'i j value'", off)
            try:
                i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                fail("malformed coordinate entry", off)
            if not (1 <= i <= m and 1 <= j <= n):
                fail(f"entry index ({i}, {j}) outside {m} x {n}", off)
            a[i - 1, j - 1] = v
        return a
    # array format: column-major dense values
    if len(sizes) != 2:
        fail("array size line needs 'rows cols'", size_off)
    try:
        m, n = (int(s) for s in sizes)
    except ValueError:
        fail("non-integer size line", size_off)
    entries = body[1:]
    if len(entries) < m * n:
        fail(f"truncated file: {len(entries)} of {m * n} array values", offset)
    vals = np.empty(m * n)
    for t, (off, ln) in enumerate(entries[: m * n]):
        try:
            vals[t] = float(ln)
        except ValueError:
            fail("malformed array value", off)
    return vals.reshape((m, n), order="F")


def read_idx_images(path):
    """Read an IDX image file into a (count, rows * cols) float64 matrix.

    Pixels are normalized to [0, 1] by dividing by 255. The magic number
    must be 0x00000803 (unsigned byte, 3 dimensions).
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 16:
        raise ParseError(f"{path}: truncated IDX header", offset=len(raw))
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != _IDX_IMAGE_MAGIC:
        raise ParseError(
            f"{path}: bad IDX magic 0x{magic:08X}, expected 0x{_IDX_IMAGE_MAGIC:08X}",
            offset=0,
        )
    need = count * rows * cols
    if len(raw) - 16 < need:
        raise ParseError(
            f"{path}: truncated pixel data: {len(raw) - 16} of {need} bytes",
            offset=len(raw),
        )
    pix = np.frombuffer(raw, dtype=np.uint8, count=need, offset=16)
    return pix.reshape(count, rows * cols).astype(np.float64) / 255.0


def read_raw_f64(path, m, n):
    """Read a raw little-endian column-major float64 dump of shape (m, n)."""
    data = np.fromfile(path, dtype="<f8")
    if data.size != m * n:
        raise DimensionError(
            f"{path}: file holds {data.size} values, expected {m} x {n} = {m * n}"
        )
    return data.reshape((m, n), order="F")


def write_raw_f64(path, a):
    """Write a matrix as raw little-endian column-major float64."""
    np.asarray(a, dtype=np.float64).ravel(order="F").astype("<f8").tofile(path)


def write_csv_matrix(path, a, schema="randskel-matrix v1"):
    """Write a matrix as CSV: schema comment, column-name header, %.17g values."""
    a = np.asarray(a, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        fh.write(f"# {schema}\n")
        fh.write(",".join(f"c{j}" for j in range(a.shape[1])) + "\n")
        for row in a:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_csv_matrix(path):
    """Read a CSV matrix written by ``write_csv_matrix`` (or plain CSV
    with an optional header row of non-numeric labels)."""
    rows = []
    with open(path, "r") as fh:
        offset = 0
        for line in fh:
            stripped = line.strip()
            if stripped and not stripped.startswith("#"):
                parts = stripped.split(",")
                try:
                    rows.append([float(p) for p in parts])
                except ValueError:
                    if rows:
                        raise ParseError(f"{path}: malformed CSV row", offset=offset)
                    # a non-numeric first row is a header; skip it
            offset += len(line)
    if not rows:
        raise ParseError(f"{path}: no numeric rows", offset=0)
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ParseError(f"{path}: ragged CSV rows", offset=0)
    return np.asarray(rows, dtype=np.float64)


def write_csv_trace(path, trace, schema="randskel-trace v1"):
    """Persist an adaptive error trace as CSV."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# {schema}\n")
        fh.write("k,e_schur,est_norm_ur,est_max_ur\n")
        for rec in trace:
            norm_s = "" if rec.est_norm_ur is None else f"{rec.est_norm_ur:.17g}"
            max_s = "" if rec.est_max_ur is None else f"{rec.est_max_ur:.17g}"
            fh.write(f"{rec.k},{rec.e_schur:.17g},{norm_s},{max_s}\n")
