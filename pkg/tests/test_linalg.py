"""Frames, spectral splits, determinant signs, alignment."""

import numpy as np
import pytest

from hetindex import (
    DimensionMismatch,
    Frame,
    GapTooLarge,
    NotHyperbolic,
    align_frame,
    det_sign,
    gap_distance,
    orthogonal_complement,
    orthonormalize,
    pair_matrix,
    spectral_split,
)
from hetindex.linalg import DEGENERATE


def test_orthonormalize_columns_are_orthonormal():
    rng = np.random.default_rng(0)
    for _ in range(20):
        B = rng.normal(size=(5, 3))
        F = orthonormalize(B)
        assert np.allclose(F.columns.T @ F.columns, np.eye(3), atol=1e-12)


def test_orthonormalize_preserves_span():
    rng = np.random.default_rng(1)
    B = rng.normal(size=(6, 2))
    F = orthonormalize(B)
    # projection onto span(F) fixes the original columns
    P = F.columns @ F.columns.T
    assert np.allclose(P @ B, B, atol=1e-10)


def test_orthonormalize_is_idempotent_on_clean_input():
    F = orthonormalize(np.array([[3.0, 0.0], [0.0, 0.0], [0.0, 2.0]]))
    G = orthonormalize(F.columns)
    assert np.allclose(F.columns, G.columns, atol=1e-14)


def test_gap_distance_same_span_is_zero():
    A = orthonormalize(np.array([[1.0, 1.0], [0.0, 1.0], [0.0, 0.0]]))
    B = orthonormalize(np.array([[2.0, 0.0], [1.0, -1.0], [0.0, 0.0]]))
    assert gap_distance(A, B) < 1e-12


def test_gap_distance_rotated_line():
    # gap between span(e1) and a line at angle theta is sin(theta)
    e1 = orthonormalize(np.array([[1.0], [0.0]]))
    for theta in (0.1, 0.4, np.pi / 3):
        v = orthonormalize(np.array([[np.cos(theta)], [np.sin(theta)]]))
        assert abs(gap_distance(e1, v) - np.sin(theta)) < 1e-12


def test_gap_distance_orthogonal_is_one():
    e1 = orthonormalize(np.array([[1.0], [0.0]]))
    e2 = orthonormalize(np.array([[0.0], [1.0]]))
    assert abs(gap_distance(e1, e2) - 1.0) < 1e-12


def test_spectral_split_diagonal():
    split = spectral_split(np.diag([-1.0, 2.0]))
    assert split.v_plus.k == 1 and split.v_minus.k == 1
    assert np.allclose(np.abs(split.v_plus.columns.ravel()), [0.0, 1.0],
                       atol=1e-12)
    assert np.allclose(np.abs(split.v_minus.columns.ravel()), [1.0, 0.0],
                       atol=1e-12)


def test_spectral_split_triangular():
    # [[1, 5], [0, -1]]: eigenvector for -1 solves 2 x1 = -5 x2,
    # so v_minus spans (5, -2) / sqrt(29)
    split = spectral_split(np.array([[1.0, 5.0], [0.0, -1.0]]))
    v = split.v_minus.columns.ravel()
    expect = np.array([5.0, -2.0]) / np.sqrt(29.0)
    if v[0] < 0:
        v = -v
    assert np.allclose(v, expect, atol=1e-12)
    w = split.v_plus.columns.ravel()
    assert abs(abs(w[0]) - 1.0) < 1e-12 and abs(w[1]) < 1e-12


def test_spectral_split_dimensions_random():
    rng = np.random.default_rng(7)
    for _ in range(20):
        n = int(rng.integers(2, 7))
        lam = rng.normal(size=n)
        lam[np.abs(lam) < 0.2] += np.sign(lam[np.abs(lam) < 0.2]) + 0.3
        Q = np.linalg.qr(rng.normal(size=(n, n)))[0]
        S = Q @ np.diag(lam) @ Q.T
        split = spectral_split(S)
        assert split.v_plus.k == int(np.sum(lam > 0))
        assert split.v_minus.k == int(np.sum(lam < 0))
        # each claimed subspace is invariant: S maps it into itself
        for F in (split.v_plus, split.v_minus):
            img = S @ F.columns
            P = F.columns @ F.columns.T
            assert np.allclose(P @ img, img, atol=1e-8)


def test_spectral_split_rejects_rotation():
    with pytest.raises(NotHyperbolic):
        spectral_split(np.array([[0.0, 1.0], [-1.0, 0.0]]))


def test_spectral_split_rejects_near_zero_eigenvalue():
    with pytest.raises(NotHyperbolic):
        spectral_split(np.diag([1e-12, 1.0]), delta=1e-8)


def test_det_sign_basic():
    assert det_sign(np.eye(3)) == 1
    assert det_sign(np.diag([1.0, -1.0])) == -1
    assert det_sign(np.zeros((2, 2))) == DEGENERATE


def test_det_sign_is_scale_free():
    assert det_sign(1e-30 * np.eye(4)) == 1
    assert det_sign(1e+30 * np.diag([-1.0, 1.0, 1.0])) == -1


def test_det_sign_relative_threshold():
    # sigma_min / sigma_max below eps_trans reads as degenerate
    M = np.diag([1.0, 1e-8])
    assert det_sign(M, eps_trans=1e-6) == DEGENERATE
    assert det_sign(M, eps_trans=1e-10) == 1


def test_align_frame_spans_next():
    rng = np.random.default_rng(3)
    prev = orthonormalize(rng.normal(size=(5, 2)))
    nxt = orthonormalize(prev.columns + 0.05 * rng.normal(size=(5, 2)))
    out = align_frame(prev, nxt)
    P = nxt.columns @ nxt.columns.T
    assert np.allclose(P @ out.columns, out.columns, atol=1e-10)
    # Procrustes factor against prev is symmetric positive definite
    G = out.columns.T @ prev.columns
    assert np.allclose(G, G.T, atol=1e-10)
    assert np.all(np.linalg.eigvalsh((G + G.T) / 2) > 0)


def test_align_frame_identity_when_same_frame():
    F = orthonormalize(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))
    out = align_frame(F, F)
    assert np.allclose(out.columns, F.columns, atol=1e-12)


def test_align_frame_rejects_large_gap():
    e1 = orthonormalize(np.array([[1.0], [0.0]]))
    e2 = orthonormalize(np.array([[0.0], [1.0]]))
    with pytest.raises(GapTooLarge):
        align_frame(e1, e2)


def test_align_frame_rejects_shape_mismatch():
    a = orthonormalize(np.eye(3)[:, :1])
    b = orthonormalize(np.eye(4)[:, :1])
    with pytest.raises(DimensionMismatch):
        align_frame(a, b)


def test_orthogonal_complement():
    rng = np.random.default_rng(5)
    for n, k in ((4, 1), (5, 2), (6, 3)):
        F = orthonormalize(rng.normal(size=(n, k)))
        C = orthogonal_complement(F)
        assert C.columns.shape == (n, n - k)
        assert np.allclose(F.columns.T @ C.columns, 0.0, atol=1e-12)
        assert np.allclose(C.columns.T @ C.columns, np.eye(n - k),
                           atol=1e-12)


def test_pair_matrix_concatenates():
    V = orthonormalize(np.array([[1.0], [0.0]]))
    W = orthonormalize(np.array([[0.0], [1.0]]))
    M = pair_matrix(V, W)
    assert M.shape == (2, 2)
    assert det_sign(M) == 1


def test_pair_matrix_rejects_wrong_total_dimension():
    V = orthonormalize(np.eye(3)[:, :2])
    W = orthonormalize(np.eye(3)[:, :2])
    with pytest.raises(DimensionMismatch):
        pair_matrix(V, W)


def test_frame_carries_shape():
    F = Frame(columns=np.eye(4)[:, :2])
    assert F.n == 4 and F.k == 2
