"""Finite-dimensional parity, operator discretization, index theorem."""

import numpy as np
import pytest
import scipy.sparse as sp

from hetindex import (
    DegenerateEndpoint,
    HypothesisFailure,
    LinearFamily,
    boundary_pair_over_lambda,
    decomposition_check,
    discretize,
    finite_parity,
    kernel_dimension,
    operator_parity,
    parse_matrix,
    sparse_det_sign,
    verify_index_theorem,
    z2_index,
)
from hetindex.suites import poschl_teller_family


def positive_family():
    return LinearFamily.from_matrix_expr(
        parse_matrix([["0", "1"], ["1 + lambda*sech(t)^2", "0"]]), k=1)


# -- finite-dimensional model ------------------------------------------

def test_finite_parity_sign_change():
    assert finite_parity(lambda s: np.diag([1.0, 1.0 - 2.0 * s])) == 1


def test_finite_parity_constant():
    assert finite_parity(lambda s: np.eye(3)) == 0


def test_finite_parity_rotation():
    def T(s):
        c, w = np.cos(np.pi * s), np.sin(np.pi * s)
        return np.array([[c, -w], [w, c]])

    assert finite_parity(T) == 0


def test_finite_parity_rejects_singular_endpoint():
    with pytest.raises(DegenerateEndpoint):
        finite_parity(lambda s: np.diag([s, 1.0]))


# -- sparse determinant signs ------------------------------------------

def test_sparse_det_sign_basic():
    assert sparse_det_sign(sp.eye(5, format="csc")) == 1
    assert sparse_det_sign(sp.csc_matrix(np.diag([1.0, -1.0, 1.0]))) == -1
    assert sparse_det_sign(sp.csc_matrix(np.zeros((3, 3)))) == 0


def test_sparse_det_sign_permutation():
    # a transposition flips the sign, a 3-cycle does not
    P = np.eye(4)[[1, 0, 2, 3]]
    assert sparse_det_sign(sp.csc_matrix(P)) == -1
    P = np.eye(4)[[1, 2, 0, 3]]
    assert sparse_det_sign(sp.csc_matrix(P)) == 1


def test_sparse_det_sign_matches_dense():
    rng = np.random.default_rng(17)
    for _ in range(20):
        n = int(rng.integers(2, 9))
        M = rng.normal(size=(n, n))
        want = int(np.sign(np.linalg.det(M)))
        assert sparse_det_sign(sp.csc_matrix(M)) == want


# -- discretized operator ----------------------------------------------

def test_discretize_shape_and_boundary_frames():
    fam = poschl_teller_family()
    op = discretize(fam, 0.0, tau=6.0, N=100)
    assert op.matrix.shape == (202, 202)
    assert op.b_u.columns.shape == (2, 1)
    assert op.b_s.columns.shape == (2, 1)
    # boundary rows annihilate the prescribed subspaces
    assert np.allclose(op.b_u.columns.T @ op.e_u.columns, 0.0, atol=1e-12)
    assert np.allclose(op.b_s.columns.T @ op.e_s.columns, 0.0, atol=1e-12)


def test_discretize_interior_consistency():
    # constant q = 1: x(t) = (cosh t, sinh t) solves x' = S x, so the
    # midpoint rows applied to its samples are O(h^2)
    S = np.array([[0.0, 1.0], [1.0, 0.0]])
    fam = LinearFamily.from_callable(lambda lam, t: S, n=2, k=1, t_max=4.0)
    tau, N = 1.0, 100
    op = discretize(fam, 0.0, tau=tau, N=N)
    grid = np.linspace(-tau, tau, N + 1)
    x = np.stack([np.cosh(grid), np.sinh(grid)], axis=1).ravel()
    res = op.matrix @ x
    interior = res[1:-1]
    assert np.max(np.abs(interior)) < 3e-4


def test_kernel_dimension_at_coincidence():
    # q = 1 - 2 sech^2 t has the explicit kernel solution sech t
    fam = poschl_teller_family()
    rep = kernel_dimension(discretize(fam, 0.8, tau=15.0, N=1500))
    assert rep.dim == 1
    assert rep.relative[0] < 1e-6
    assert rep.relative[1] > 1e-4


def test_kernel_dimension_away_from_coincidence():
    fam = poschl_teller_family()
    rep = kernel_dimension(discretize(fam, 0.3, tau=15.0, N=1500))
    assert rep.dim == 0
    assert rep.relative[0] > 1e-4


# -- operator parity over lambda ---------------------------------------

def test_operator_parity_poschl_teller():
    fam = poschl_teller_family()
    rep = operator_parity(fam, lams=np.linspace(0.0, 1.0, 21),
                          tau=8.0, N=400)
    assert rep.value == 1
    assert len(rep.flips) == 1
    assert abs(rep.flips[0] - 0.8) < 0.02
    assert rep.stable_tau and rep.stable_N


def test_operator_parity_no_flip():
    rep = operator_parity(positive_family(), lams=np.linspace(0.0, 1.0, 11),
                          tau=6.0, N=200)
    assert rep.value == 0
    assert rep.flips == ()


def test_operator_parity_rejects_degenerate_endpoint():
    fam = poschl_teller_family()
    with pytest.raises(DegenerateEndpoint):
        operator_parity(fam, lams=np.linspace(0.8, 1.0, 5),
                        tau=15.0, N=1500, stability=False)


def test_operator_parity_tracks_sigma():
    rep = operator_parity(positive_family(), lams=np.linspace(0.0, 1.0, 5),
                          tau=6.0, N=200, track_sigma=True, stability=False)
    assert rep.sigma_mins is not None
    assert len(rep.sigma_mins) == 5
    assert all(s > 0 for s in rep.sigma_mins)


# -- the index theorem -------------------------------------------------

def test_boundary_pair_crossing_location():
    fam = poschl_teller_family()
    pair = boundary_pair_over_lambda(fam, np.linspace(0.0, 1.0, 41))
    rep = z2_index(pair)
    assert rep.value == 1
    assert len(rep.crossings) == 1
    assert abs(rep.crossings[0] - 0.8) < 2e-3


def test_verify_index_theorem_poschl_teller():
    fam = poschl_teller_family()
    rep = verify_index_theorem(fam, lams=np.linspace(0.0, 1.0, 21),
                               tau=8.0, N=400)
    assert rep.agree
    assert rep.lhs == 1 and rep.rhs == 1
    assert rep.hypotheses.ok


def test_verify_index_theorem_trivial_family():
    fam = LinearFamily.from_matrix_expr(
        parse_matrix([["-1", "0"], ["0", "1"]]), k=1)
    rep = verify_index_theorem(fam, lams=np.linspace(0.0, 1.0, 5),
                               tau=4.0, N=100)
    assert rep.agree and rep.lhs == 0 and rep.rhs == 0


def test_verify_index_theorem_rejects_bad_hypotheses():
    fam = LinearFamily.from_matrix_expr(
        parse_matrix([["lambda - 0.5", "0"], ["0", "1"]]), k=1)
    with pytest.raises(HypothesisFailure):
        verify_index_theorem(fam, lams=np.linspace(0.0, 1.0, 5),
                             tau=4.0, N=100)


def test_decomposition_poschl_teller():
    rep = decomposition_check(poschl_teller_family(),
                              lams=np.linspace(0.0, 1.0, 21), samples=51)
    assert rep.holds
    assert rep.index_over_lambda.value == 1
    assert rep.geo_start.value == 0
    assert rep.geo_end.value == 1
    assert rep.limit_term.value == 0
    assert rep.limits_lambda_independent
