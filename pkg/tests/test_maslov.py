"""Crossing forms and the Maslov index against the Z2-index."""

import numpy as np
import pytest

from hetindex import (
    DegenerateEndpoint,
    InvalidInput,
    IrregularCrossing,
    crossing_form,
    graph_frame,
    graph_path,
    is_lagrangian,
    maslov_index,
    mod2_compare,
    orthonormalize,
    symplectic_form_matrix,
)


def test_symplectic_form_matrix():
    for k in (1, 2, 3):
        J = symplectic_form_matrix(k)
        assert J.shape == (2 * k, 2 * k)
        assert np.allclose(J.T, -J)
        assert np.allclose(J @ J, -np.eye(2 * k))
    J = symplectic_form_matrix(2)
    # coordinate i pairs with coordinate k + i
    assert J[0, 2] != 0.0 and J[1, 3] != 0.0


def test_graph_of_symmetric_matrix_is_lagrangian():
    A = np.array([[1.0, 0.3], [0.3, -2.0]])
    assert is_lagrangian(graph_frame(A))
    B = np.array([[1.0, 0.5], [-0.5, 1.0]])
    assert not is_lagrangian(graph_frame(B))


def test_coordinate_plane_lagrangian_or_not():
    e = np.eye(4)
    assert is_lagrangian(orthonormalize(e[:, [0, 1]]))
    assert not is_lagrangian(orthonormalize(e[:, [0, 2]]))


def test_graph_frame_spans_graph():
    F = graph_frame(np.array([[2.0]]))
    v = F.columns.ravel()
    expect = np.array([1.0, 2.0]) / np.sqrt(5.0)
    assert abs(abs(v @ expect) - 1.0) < 1e-12


def test_graph_path_wraps_callable():
    path = graph_path(lambda t: np.array([[t]]))
    F = path(3.0)
    v = F.columns.ravel()
    expect = np.array([1.0, 3.0]) / np.sqrt(10.0)
    assert abs(abs(v @ expect) - 1.0) < 1e-12


def test_crossing_form_simple():
    V = graph_path(lambda t: np.array([[t]]))
    W = graph_path(lambda t: np.array([[-t]]))
    data = crossing_form(V, W, 0.0)
    assert data.signature == -1
    assert abs(data.instant) < 1e-12


def test_crossing_form_rejects_noncrossing():
    V = graph_path(lambda t: np.array([[t]]))
    W = graph_path(lambda t: np.array([[-t]]))
    with pytest.raises(InvalidInput):
        crossing_form(V, W, 0.5)


def test_maslov_single_crossing():
    V = graph_path(lambda t: np.array([[t]]))
    W = graph_path(lambda t: np.array([[-t]]))
    assert maslov_index(V, W, interval=(-1.0, 1.0)) == -1


def test_maslov_cubic():
    # B - A = t - t^3 crosses zero at -1, 0, 1 with slopes -2, 1, -2
    V = graph_path(lambda t: np.array([[t ** 3 - t]]))
    W = graph_path(lambda t: np.array([[0.0]]))
    assert maslov_index(V, W, interval=(-1.5, 1.5)) == -1
    rep = mod2_compare(V, W, interval=(-1.5, 1.5))
    assert rep.z2 == 1 and rep.maslov == -1 and rep.agree
    assert len(rep.crossings) == 3


def test_maslov_two_dimensional():
    V = graph_path(lambda t: np.diag([t, t - 0.5]))
    W = graph_path(lambda t: np.zeros((2, 2)))
    assert maslov_index(V, W, interval=(-0.3, 0.8)) == -2
    rep = mod2_compare(V, W, interval=(-0.3, 0.8))
    assert rep.z2 == 0 and rep.agree


def test_maslov_signature_zero_crossing():
    # kernel dim 2 at t = 0 with indefinite form: det(B - A) = -t^2
    # never changes sign, only the sigma_min dip reveals the crossing
    V = graph_path(lambda t: np.diag([t, -t]))
    W = graph_path(lambda t: np.zeros((2, 2)))
    assert maslov_index(V, W, interval=(-1.0, 1.0)) == 0
    rep = mod2_compare(V, W, interval=(-1.0, 1.0))
    assert rep.z2 == 0 and rep.agree
    assert len(rep.crossings) == 1
    assert rep.crossings[0].signature == 0
    assert abs(rep.crossings[0].instant) < 1e-5


def test_maslov_rejects_tangential_crossing():
    V = graph_path(lambda t: np.array([[t ** 2]]))
    W = graph_path(lambda t: np.array([[0.0]]))
    with pytest.raises(IrregularCrossing):
        maslov_index(V, W, interval=(-1.0, 1.0))


def test_maslov_rejects_endpoint_crossing():
    V = graph_path(lambda t: np.array([[t]]))
    W = graph_path(lambda t: np.array([[0.0]]))
    with pytest.raises(DegenerateEndpoint):
        maslov_index(V, W, interval=(0.0, 1.0))
