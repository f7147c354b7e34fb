"""Row, column, two-sided interpolative decompositions, and CUR.

All four share the same machinery: pivoted LU of a random sketch picks
the skeletons, and interpolation factors come from triangular solves.
On an exactly low-rank matrix every variant reconstructs to roundoff.
"""

import numpy as np

import randskel as rs

m, n, r = 300, 240, 25
g = np.random.default_rng(0)
a = g.standard_normal((m, r)) @ g.standard_normal((r, n))
norm_a = np.linalg.norm(a)
spec = rs.SketchSpec("gaussian", n=n, ell=r)
rng = rs.RngStream(seed=11)

row = rs.rand_lupp(a, r, spec, rng.child(1))
print("row ID      ", f"{rs.row_id_error(a, row) / norm_a:.2e}",
      "rows:", row.row_idx[:6].tolist(), "...")

col = rs.column_id(a, r, spec, rng.child(2))
err = np.linalg.norm(a - a[:, col.col_idx] @ col.x) / norm_a
print("column ID   ", f"{err:.2e}", "cols:", col.col_idx[:6].tolist(), "...")

two = rs.two_sided_id(a, r, spec, rng.child(3))
mid = a[np.ix_(two.row_idx, two.col_idx)]
err = np.linalg.norm(a - two.w @ mid @ two.x) / norm_a
print("two-sided ID", f"{err:.2e}", f"(status {two.status})")

cur = rs.cur_decompose(a, r, spec, rng.child(4))
err = np.linalg.norm(a - a[:, cur.col_idx] @ cur.u_mid @ a[cur.row_idx]) / norm_a
print("CUR         ", f"{err:.2e}",
      "(C and R are actual columns/rows; only indices need storing)")

# the CPQR-based reference selector picks different skeletons of the same
# quality
qr = rs.rand_cpqr(a, r, spec, rng.child(5))
print("CPQR row ID ", f"{rs.row_id_error(a, qr) / norm_a:.2e}")
