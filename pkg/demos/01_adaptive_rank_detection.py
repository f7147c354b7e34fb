"""Adaptive rank detection on a matrix with geometric spectral decay.

The driver grows the factorization block by block, watching the Schur
complement of each fresh sketch block as a posterior error estimate, and
stops at the first rank whose estimate clears the tolerance.
"""

import numpy as np

import randskel as rs

n = 600
rng = rs.RngStream(seed=7)
a, sigma = rs.gen_fast_decay(n, n, beta=1e-16, rng=rng.child(0))
norm_a = np.linalg.norm(a)
spec = rs.SketchSpec("gaussian", n=n, ell=40)

for tau_rel in (1e-4, 1e-8):
    res = rs.rand_lupp_adaptive(a, b=40, tau=tau_rel * norm_a, spec=spec,
                                rng=rng.child(1))
    err = rs.row_id_error(a, res)
    print(f"tau = {tau_rel:.0e}*||A||  ->  rank {res.rank:4d}  ({res.status}), "
          f"actual error {err / norm_a:.2e}*||A||")
    print("  estimate trace:",
          " ".join(f"k={r.k}:{r.e_schur:.1e}" for r in res.trace))

# the detected skeletons are actual rows of A; W carries an exact identity
# on them
res = rs.rand_lupp_adaptive(a, b=40, tau=1e-6 * norm_a, spec=spec, rng=rng.child(2))
print("\nskeleton rows (first 10):", res.row_idx[:10].tolist())
print("W[skeletons] == I exactly:",
      np.array_equal(res.w[res.row_idx], np.eye(res.rank)))
print("largest interpolation entry:", f"{res.w_max:.3f}")
