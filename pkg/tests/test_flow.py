"""Linear families: transport, asymptotics, subspace paths, hypotheses."""

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.linalg import expm

from hetindex import (
    InvalidInput,
    LinearFamily,
    NotStabilized,
    asymptotic_limits,
    check_A1_A3,
    fundamental_solution,
    gap_distance,
    invariant_subspace_path,
    orthonormalize,
    parse_matrix,
    path_from_sampler,
    subspace_at,
    subspaces_over_lambda,
)
from hetindex.suites import poschl_teller_family


def tanh_family():
    return LinearFamily.from_matrix_expr(
        parse_matrix([["-tanh(t)", "0"], ["0", "tanh(t)"]]), k=1)


def test_from_matrix_expr_shapes():
    fam = poschl_teller_family()
    assert fam.n == 2 and fam.k == 1
    S = fam.evaluate(0.8, 0.0)
    assert np.allclose(S, [[0.0, 1.0], [1.0 - 2.0, 0.0]])


def test_evaluate_many_broadcasts():
    fam = poschl_teller_family()
    lams = np.array([0.0, 0.5, 1.0])
    ts = np.linspace(-1, 1, 7)
    out = fam.evaluate_many(lams[:, None], ts[None, :])
    assert out.shape == (3, 7, 2, 2)
    assert np.allclose(out[1, 3], fam.evaluate(0.5, ts[3]))


def test_from_callable_matches_expr():
    fam = poschl_teller_family()

    def f(lam, t):
        q = 1.0 - 2.5 * lam / np.cosh(t) ** 2
        return np.array([[0.0, 1.0], [q, 0.0]])

    fam2 = LinearFamily.from_callable(f, n=2, k=1)
    for lam, t in ((0.0, 0.0), (0.8, 1.3), (1.0, -2.0)):
        assert np.allclose(fam.evaluate(lam, t), fam2.evaluate(lam, t))


def test_fundamental_solution_constant_family():
    S = np.array([[-1.0, 0.0], [0.0, 1.0]])
    fam = LinearFamily.from_callable(lambda lam, t: S, n=2, k=1, t_max=6.0)
    # gamma(tau) = I and gamma(t) = expm(S (t - tau)) for constant S
    G = fundamental_solution(fam, 0.0, tau=1.0, t=1.0)
    assert np.allclose(G, np.eye(2), atol=1e-9)
    G = fundamental_solution(fam, 0.0, tau=-2.0, t=3.0)
    assert np.allclose(G, expm(5.0 * S), atol=1e-6 * np.exp(5.0))


def test_fundamental_solution_cocycle():
    fam = poschl_teller_family()
    a, b, c = -4.0, 0.5, 3.0
    lam = 0.7
    g_ab = fundamental_solution(fam, lam, tau=a, t=b)
    g_bc = fundamental_solution(fam, lam, tau=b, t=c)
    g_ac = fundamental_solution(fam, lam, tau=a, t=c)
    assert np.max(np.abs(g_bc @ g_ab - g_ac)) < 1e-6


def test_fundamental_solution_rejects_out_of_range():
    fam = poschl_teller_family()
    with pytest.raises(InvalidInput):
        fundamental_solution(fam, 0.0, tau=0.0, t=fam.t_max + 1.0)


def test_asymptotic_limits_tanh():
    lim = asymptotic_limits(tanh_family(), 0.0)
    assert np.allclose(lim.s_minus, np.diag([1.0, -1.0]), atol=1e-8)
    assert np.allclose(lim.s_plus, np.diag([-1.0, 1.0]), atol=1e-8)
    assert lim.split_plus.v_minus.k == 1
    assert lim.split_minus.v_plus.k == 1


def test_asymptotic_limits_rejects_drifting_family():
    fam = LinearFamily.from_matrix_expr(
        parse_matrix([["sin(t) - 2", "0"], ["0", "1"]]), k=1)
    with pytest.raises(NotStabilized):
        asymptotic_limits(fam, 0.0)


def test_subspace_at_diagonal_family():
    # decoupled system: the stable direction is e1 at every t
    fam = tanh_family()
    for t in (-2.0, 0.0, 1.5):
        F = subspace_at(fam, 0.0, "stable", t)
        v = F.columns.ravel()
        assert abs(abs(v[0]) - 1.0) < 1e-8 and abs(v[1]) < 1e-8


def test_unstable_subspace_against_quadrature():
    # x' = -x + sech(t) y, y' = y.  Solutions bounded backward satisfy
    # x0 = c y0 with c the integral of exp(2s) sech(s) over (-inf, 0],
    # so E^u(0) = span (c, 1).
    fam = LinearFamily.from_matrix_expr(
        parse_matrix([["-1", "sech(t)"], ["0", "1"]]), k=1)
    # exp(2s) sech(s) written to avoid cosh overflow as s -> -inf
    c, _ = quad(lambda s: 2.0 * np.exp(3.0 * s) / (1.0 + np.exp(2.0 * s)),
                -np.inf, 0.0)
    expect = orthonormalize(np.array([[c], [1.0]]))
    F = subspace_at(fam, 0.0, "unstable", 0.0)
    assert gap_distance(F, expect) < 1e-6


def test_invariant_subspace_path_chains():
    fam = poschl_teller_family()
    grid = np.linspace(-6.0, 6.0, 25)
    path = invariant_subspace_path(fam, 0.8, "stable", grid)
    for i in range(len(path.frames) - 1):
        assert gap_distance(path.frames[i], path.frames[i + 1]) <= 0.4
    # grid refinement must preserve the requested endpoints
    assert path.grid[0] == grid[0] and path.grid[-1] == grid[-1]
    F = subspace_at(fam, 0.8, "stable", float(grid[-1]))
    assert gap_distance(path.frames[-1], F) < 1e-6


def test_subspaces_over_lambda_continuity():
    fam = poschl_teller_family()
    lams = np.linspace(0.0, 1.0, 11)
    frames = subspaces_over_lambda(fam, lams, "unstable", 0.0)
    assert len(frames) == 11
    for a, b in zip(frames, frames[1:]):
        assert gap_distance(a, b) < 0.3


def test_path_from_sampler_refines_coarse_grid():
    def line(t):
        return orthonormalize(np.array([[np.cos(t)], [np.sin(t)]]))

    path = path_from_sampler(line, np.linspace(0.0, np.pi, 5))
    assert len(path.grid) > 5
    for i in range(len(path.frames) - 1):
        assert gap_distance(path.frames[i], path.frames[i + 1]) <= 0.4


def test_check_hypotheses_poschl_teller():
    rep = check_A1_A3(poschl_teller_family(), samples=21)
    assert rep.ok
    assert rep.violations == ()
    assert rep.min_gap > 0.0


def test_check_hypotheses_flags_nonhyperbolic_lambda():
    # limit matrix diag(lambda - 0.5, 1) loses hyperbolicity at 0.5
    fam = LinearFamily.from_matrix_expr(
        parse_matrix([["lambda - 0.5", "0"], ["0", "1"]]), k=1)
    rep = check_A1_A3(fam, samples=21)
    assert not rep.ok
    lams = [v[0] for v in rep.violations]
    assert any(abs(l - 0.5) < 1e-12 for l in lams)
