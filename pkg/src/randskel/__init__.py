"""randskel: randomized matrix skeletonization via blocked adaptive LUPP.

Interpolative and CUR decompositions built on partial-pivoting LU of
random sketches, with Schur-complement and residual-triangular-factor
error certificates, adaptive rank detection, test-matrix generators, and
a reproducible experiment harness.
"""

from .dense import (
    LUFactors,
    QRFactors,
    SvdFactors,
    cpqr,
    frobenius_norm,
    gemm,
    invert_permutation,
    lupp,
    lupp_blocked_step,
    pinv_apply,
    qr_unpivoted,
    row_permute,
    svd,
    svd_tail_norm,
    triangular_solve,
)
from .errors import (
    DimensionError,
    NumericalError,
    ParseError,
    RankDeficientError,
    SingularError,
)
from .sketching import (
    GaussianSketch,
    RngStream,
    SketchSpec,
    SparseSignSketch,
    SrttSketch,
    apply_sketch,
    make_gaussian,
    make_sketch,
    make_sparse_sign,
    make_srtt,
)
from .skeleton import (
    STATUS_ILL_CONDITIONED,
    STATUS_NOT_CONVERGED,
    STATUS_OK,
    STATUS_RANK_EXHAUSTED,
    BlockedLUState,
    CurFactors,
    ErrorTrace,
    ResidualEstimates,
    SkeletonResult,
    TraceRecord,
    adaptive_init,
    adaptive_step,
    column_id,
    cpqr_skeleton,
    cur_decompose,
    draw_residual_sample,
    interpolation_matrix,
    rand_cpqr,
    rand_lupp,
    rand_lupp_adaptive,
    residual_ur_estimates,
    row_id_error,
    stable_row_id_error,
    two_sided_id,
)
from .zoo import (
    MatrixRecipe,
    gen_chan,
    gen_fast_decay,
    gen_kahan,
    materialize,
    read_csv_matrix,
    read_idx_images,
    read_matrix_market,
    read_raw_f64,
    write_csv_matrix,
    write_csv_trace,
    write_raw_f64,
)

__version__ = "0.1.0"
