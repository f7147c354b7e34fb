import numpy as np
import pytest
from numpy.testing import assert_allclose

import randskel as rs
from randskel.errors import DimensionError


def mc_mean_sq_norm(x, kind, ell, draws, seed, zeta=8):
    """Monte-Carlo oracle: mean of ||x @ Omega||_F^2 over independent draws."""
    n = x.shape[1]
    spec = rs.SketchSpec(kind, n=n, ell=ell, zeta=zeta)
    base = rs.RngStream(seed)
    total = 0.0
    for i in range(draws):
        op = rs.make_sketch(spec, base.child(i))
        total += np.linalg.norm(rs.apply_sketch(x, op)) ** 2
    return total / draws


# ---------------------------------------------------------------------------
# streams

def test_stream_determinism_and_children():
    r = rs.RngStream(123, 4)
    a = r.generator().standard_normal(8)
    b = rs.RngStream(123, 4).generator().standard_normal(8)
    assert np.array_equal(a, b)
    assert r.child(0) != r.child(1)
    assert r.child(2) == r.child(2)


def test_distinct_streams_uncorrelated():
    n, ell = 100, 100
    spec = rs.SketchSpec("gaussian", n=n, ell=ell, scale="unit")
    a = rs.make_gaussian(spec, rs.RngStream(7, 0)).ravel()
    b = rs.make_gaussian(spec, rs.RngStream(7, 1)).ravel()
    corr = np.corrcoef(a, b)[0, 1]
    assert abs(corr) < 4.0 / np.sqrt(n * ell)


# ---------------------------------------------------------------------------
# spec validation

def test_spec_validation():
    with pytest.raises(ValueError):
        rs.SketchSpec("fourier", n=8, ell=4)
    with pytest.raises(DimensionError):
        rs.SketchSpec("gaussian", n=8, ell=9)
    with pytest.raises(DimensionError):
        rs.SketchSpec("sparsesign", n=16, ell=4, zeta=8)
    with pytest.raises(ValueError):
        rs.SketchSpec("gaussian", n=8, ell=4, scale="cubed")


# ---------------------------------------------------------------------------
# gaussian

def test_gaussian_mean_near_zero():
    n = ell = 1000
    spec = rs.SketchSpec("gaussian", n=n, ell=ell, scale="unit")
    omega = rs.make_gaussian(spec, rs.RngStream(0))
    assert abs(omega.mean()) < 4.0 / np.sqrt(n * ell)


def test_gaussian_bitwise_deterministic():
    spec = rs.SketchSpec("gaussian", n=32, ell=8)
    a = rs.make_gaussian(spec, rs.RngStream(5, 17))
    b = rs.make_gaussian(spec, rs.RngStream(5, 17))
    assert np.array_equal(a, b)


def test_gaussian_unbiased_unit_row():
    x = np.zeros((1, 32))
    x[0, 0] = 1.0
    mean = mc_mean_sq_norm(x, "gaussian", ell=8, draws=10_000, seed=11)
    assert 0.95 <= mean <= 1.05


def test_gaussian_scale_conventions():
    spec_unit = rs.SketchSpec("gaussian", n=64, ell=16, scale="unit")
    spec_inv = rs.SketchSpec("gaussian", n=64, ell=16, scale="inv_sqrt_ell")
    a = rs.make_gaussian(spec_unit, rs.RngStream(3))
    b = rs.make_gaussian(spec_inv, rs.RngStream(3))
    assert_allclose(a / np.sqrt(16.0), b)


# ---------------------------------------------------------------------------
# srtt

def test_srtt_full_width_orthogonal():
    n = 64
    spec = rs.SketchSpec("srtt", n=n, ell=n)
    op = rs.make_srtt(spec, rs.RngStream(21))
    dense = op.to_dense()
    assert np.linalg.norm(dense.T @ dense - np.eye(n)) <= 1e-10 * n


def test_srtt_zero_matrix():
    spec = rs.SketchSpec("srtt", n=32, ell=8)
    op = rs.make_srtt(spec, rs.RngStream(2))
    assert_allclose(rs.apply_sketch(np.zeros((5, 32)), op), np.zeros((5, 8)))


def test_srtt_matches_dense_materialization():
    g = np.random.default_rng(3)
    a = g.standard_normal((7, 48))
    spec = rs.SketchSpec("srtt", n=48, ell=12)
    op = rs.make_srtt(spec, rs.RngStream(9))
    assert_allclose(rs.apply_sketch(a, op), a @ op.to_dense(), atol=1e-12)


def test_srtt_unbiased_unit_row():
    x = np.zeros((1, 256))
    x[0, 3] = 1.0
    mean = mc_mean_sq_norm(x, "srtt", ell=64, draws=10_000, seed=13)
    assert 0.9 <= mean <= 1.1


def test_srtt_determinism():
    spec = rs.SketchSpec("srtt", n=32, ell=8)
    a = rs.make_srtt(spec, rs.RngStream(1, 2))
    b = rs.make_srtt(spec, rs.RngStream(1, 2))
    assert np.array_equal(a.to_dense(), b.to_dense())


# ---------------------------------------------------------------------------
# sparse sign

def test_sparse_sign_row_counts_exact():
    spec = rs.SketchSpec("sparsesign", n=50, ell=16, zeta=8)
    op = rs.make_sparse_sign(spec, rs.RngStream(4))
    dense = op.to_dense()
    counts = (dense != 0).sum(axis=1)
    assert np.all(counts == 8)
    # distinct coordinates per row
    assert all(len(set(row)) == 8 for row in op.idx)


def test_sparse_sign_saturated():
    spec = rs.SketchSpec("sparsesign", n=20, ell=6, zeta=6)
    op = rs.make_sparse_sign(spec, rs.RngStream(5))
    dense = op.to_dense()
    assert np.all(np.abs(dense) == pytest.approx(1.0 / np.sqrt(6.0)))


def test_sparse_sign_unbiased_unit_row():
    x = np.zeros((1, 64))
    x[0, 9] = 1.0
    mean = mc_mean_sq_norm(x, "sparsesign", ell=16, draws=10_000, seed=17)
    assert 0.9 <= mean <= 1.1


def test_sparse_sign_matches_dense_product():
    g = np.random.default_rng(6)
    a = g.standard_normal((9, 40))
    spec = rs.SketchSpec("sparsesign", n=40, ell=12, zeta=5)
    op = rs.make_sparse_sign(spec, rs.RngStream(8))
    assert_allclose(rs.apply_sketch(a, op), a @ op.to_dense(), atol=1e-13)


# ---------------------------------------------------------------------------
# apply_sketch

def test_apply_identity_embedding():
    a = np.random.default_rng(7).standard_normal((5, 6))
    assert_allclose(rs.apply_sketch(a, np.eye(6)), a)


def test_apply_rank_one_columns_parallel():
    u = np.arange(1.0, 9.0)[:, None]
    v = np.random.default_rng(8).standard_normal((1, 30))
    a = u @ v
    spec = rs.SketchSpec("gaussian", n=30, ell=5)
    y = rs.apply_sketch(a, rs.make_sketch(spec, rs.RngStream(10)))
    # every sketch column is parallel to u
    coef = y[0] / u[0, 0]
    assert_allclose(y, u @ coef[None, :], atol=1e-12)


def test_apply_transposed_side():
    a = np.random.default_rng(9).standard_normal((12, 7))
    spec = rs.SketchSpec("gaussian", n=12, ell=4)
    gamma = rs.make_gaussian(spec, rs.RngStream(11))
    assert_allclose(rs.apply_sketch(a, gamma, side="transposed_right"), a.T @ gamma)


def test_apply_dimension_mismatch():
    spec = rs.SketchSpec("gaussian", n=30, ell=5)
    op = rs.make_sketch(spec, rs.RngStream(1))
    with pytest.raises(DimensionError):
        rs.apply_sketch(np.ones((4, 29)), op)
    with pytest.raises(DimensionError):
        rs.apply_sketch(np.ones((4, 29)), np.ones((28, 3)))


def test_fixed_matrix_isometry_all_kinds():
    x = np.random.default_rng(12).standard_normal((8, 64))
    nx2 = np.linalg.norm(x) ** 2
    for kind in ("gaussian", "srtt", "sparsesign"):
        mean = mc_mean_sq_norm(x, kind, ell=16, draws=2_000, seed=23)
        assert 0.9 <= mean / nx2 <= 1.1, kind
