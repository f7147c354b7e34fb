"""Growth factors: the adversarial worst case and the randomized regime.

Plain partial pivoting admits a 2^(n-1) element growth on an adversarial
matrix. After randomized sketching that behavior disappears: the ratio of
the optimal rank-k error to the residual-factor norm stays below the
reciprocal asymptotic growth-factor curve (4 log k / k) sqrt(m - k).
"""

import numpy as np

import randskel as rs

# adversarial: element growth doubles at every elimination step
for n in (5, 10, 20):
    a = rs.gen_chan(n)
    f = rs.lupp(a)
    print(f"n={n:2d}: growth factor {np.abs(f.U).max() / np.abs(a).max():.0f} "
          f"= 2^{n - 1}")

# randomized regime: ratios vs the reference curve on a decaying spectrum
n, b, p = 400, 40, 10
a, sigma = rs.gen_fast_decay(n, n, beta=1e-16, rng=rs.RngStream(0))
rng = rs.RngStream(1)
spec = rs.SketchSpec("gaussian", n=n, ell=b)
state = rs.adaptive_init(a, b, spec, rng)
y_r = rs.draw_residual_sample(a, p, spec, rng)

print(f"\n{'k':>4} {'tail/|Ur|_F':>12} {'tail/max|Ur|':>13} {'reference':>10}")
while True:
    k = state.rank
    est = rs.residual_ur_estimates(state, a, p, spec, rng, sample_r=y_r)
    tail = rs.svd_tail_norm(sigma, k)
    ref = (4 * np.log(k) / k) * np.sqrt(n - k)
    print(f"{k:4d} {tail / est.norm_ur:12.3f} {tail / est.max_ur:13.3f} "
          f"{ref:10.3f}")
    if k + b > n - b:
        break
    _, state = rs.adaptive_step(state, a, spec)
