"""Z2-index of subspace path pairs and its derived invariants.

Given two subspace paths V (dim k) and W (dim n-k) on a common grid
with transversal ends, the index is 0 when det M(a) and det M(b) have
the same sign and 1 otherwise, where M(t) is the square matrix whose
columns are continuous frames of V(t) and W(t).  Everything else here
is bookkeeping to make that one determinant comparison trustworthy:
grid refinement to keep consecutive frames close, Procrustes chaining
to keep the frames continuous, and relative singular-value thresholds
to refuse an answer when an endpoint is numerically degenerate.

On top of the core index the module builds the unbounded-interval
variants (restriction to a bounded core, stable under doubling the
tail horizon), the geometric parity of an orbit (index of the pair
t -> (E^s(t), E^u(-t)) on the half line), loop closure of a path pair,
and the orientability bit of the line bundle a closed loop drags
around the circle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    BoundaryDegenerate,
    CannotClose,
    DegenerateEndpoint,
    DimensionMismatch,
    GapTooLarge,
    InternalMismatch,
    NotClosed,
    TailNotTransversal,
)
from .flow import (
    LinearFamily,
    SubspacePath,
    asymptotic_limits,
    invariant_subspace_path,
    subspace_at,
)
from .linalg import (
    DEGENERATE,
    Frame,
    align_frame,
    det_sign,
    gap_distance,
    orthogonal_complement,
    orthonormalize,
    pair_matrix,
)

__all__ = [
    "SubspacePathPair",
    "IndexReport",
    "ClosedLoop",
    "z2_index",
    "z2_index_unbounded",
    "geometric_parity",
    "close_loop",
    "bundle_orientability",
]

_GAP_REFINE = 0.2
_MAX_DEPTH = 20


def _chain_interp(F0: Frame, F1: Frame, s: float) -> Frame:
    """Geodesic frame between two chained frames, pinned to F0 at s=0.

    Unlike a bare Grassmann geodesic this keeps the orientation of the
    alignment chain: the returned frame varies continuously from F0
    itself, so inserting it between F0 and F1 cannot flip a det trace.
    """
    A, B = F0.columns, F1.columns
    U, sig, Vt = np.linalg.svd(A.T @ B)
    sig = np.clip(sig, -1.0, 1.0)
    theta = np.arccos(sig)
    A0 = A @ U
    G = B @ Vt.T - A0 * sig
    norms = np.linalg.norm(G, axis=0)
    G = np.divide(G, norms, out=np.zeros_like(G), where=norms > 1e-12)
    cols = (A0 * np.cos(s * theta) + G * np.sin(s * theta)) @ U.T
    return orthonormalize(cols)


def _on_grid(path: SubspacePath, new_grid: np.ndarray) -> SubspacePath:
    """Resample a chained path onto a finer grid over the same interval."""
    grid = path.grid
    if len(grid) == len(new_grid) and np.allclose(grid, new_grid,
                                                  rtol=0.0, atol=1e-12):
        return path
    frames = []
    for t in new_grid:
        j = int(np.searchsorted(grid, t))
        if j < len(grid) and abs(grid[j] - t) <= 1e-12:
            frames.append(path.frames[j])
            continue
        if j > 0 and abs(grid[j - 1] - t) <= 1e-12:
            frames.append(path.frames[j - 1])
            continue
        j = min(max(j, 1), len(grid) - 1)
        s = (t - grid[j - 1]) / (grid[j] - grid[j - 1])
        frames.append(_chain_interp(path.frames[j - 1], path.frames[j],
                                    float(np.clip(s, 0.0, 1.0))))
    return SubspacePath(grid=np.asarray(new_grid, dtype=float),
                        frames=tuple(frames), sampler=path.sampler)


@dataclass(frozen=True)
class SubspacePathPair:
    """Two subspace paths on a common grid, dims k and n-k.

    Paths arriving on different grids over the same interval are merged
    onto the union grid; missing frames are filled by chain-preserving
    geodesic interpolation.
    """

    V: SubspacePath
    W: SubspacePath

    def __post_init__(self):
        if self.V.n != self.W.n:
            raise DimensionMismatch(
                f"ambient dimensions {self.V.n} != {self.W.n}"
            )
        if self.V.k + self.W.k != self.V.n:
            raise DimensionMismatch(
                f"dims {self.V.k} + {self.W.k} != ambient {self.V.n}"
            )
        gv, gw = self.V.grid, self.W.grid
        if len(gv) == len(gw) and np.allclose(gv, gw, rtol=0.0,
                                              atol=1e-12):
            return
        if abs(gv[0] - gw[0]) > 1e-9 or abs(gv[-1] - gw[-1]) > 1e-9:
            raise DimensionMismatch("paths cover different intervals")
        union = np.union1d(gv, gw)
        union = union[np.concatenate([[True], np.diff(union) > 1e-12])]
        object.__setattr__(self, "V", _on_grid(self.V, union))
        object.__setattr__(self, "W", _on_grid(self.W, union))

    @property
    def grid(self) -> np.ndarray:
        return self.V.grid

    @property
    def n(self) -> int:
        return self.V.n


@dataclass(frozen=True)
class IndexReport:
    """A Z2 value together with the evidence used to compute it.

    ``det_trace`` holds det M(t) at every (refined) grid sample;
    ``crossings`` the instants where its sign flips, located to the
    refinement resolution.
    """

    value: int
    grid: np.ndarray
    det_trace: np.ndarray
    crossings: tuple
    eps_trans: float
    refinement_depth: int

    def __post_init__(self):
        object.__setattr__(self, "grid", np.asarray(self.grid, float))
        object.__setattr__(self, "det_trace",
                           np.asarray(self.det_trace, float))


@dataclass(frozen=True)
class ClosedLoop:
    """Result of closing a path pair over the doubled interval.

    ``v_loop`` runs over [0, 2] with v_loop(0) = v_loop(2); ``w_tilde``
    is the reversed W-path on [1, 2] the closure stays transversal to.
    """

    v_loop: SubspacePath
    w_tilde: SubspacePath
    epsilon: float


# -- core refinement pipeline ------------------------------------------

def _interval_refine(ts, Vf, Wf, depths, trigger, v_sample, w_sample,
                     max_depth):
    """Bisect triggered intervals in place; returns max depth used."""
    i = 0
    while i < len(ts) - 1:
        if depths[i] < max_depth and trigger(i):
            tm = 0.5 * (ts[i] + ts[i + 1])
            if tm <= ts[i] or tm >= ts[i + 1]:
                i += 1     # interval at floating-point resolution
                continue
            ts.insert(i + 1, tm)
            Vf.insert(i + 1, v_sample(tm, i))
            Wf.insert(i + 1, w_sample(tm, i))
            d = depths[i] + 1
            depths[i:i + 1] = [d, d]
        else:
            i += 1
    return max(depths) if depths else 0


def _trace(ts, Vf, Wf, eps_trans):
    dets = np.empty(len(ts))
    signs = []
    for i in range(len(ts)):
        M = pair_matrix(Vf[i], Wf[i])
        dets[i] = np.linalg.det(M)
        signs.append(det_sign(M, eps_trans))
    return dets, signs


def _sign_crossings(ts, signs) -> tuple:
    out = []
    last = None
    for i, s in enumerate(signs):
        if s == DEGENERATE:
            continue
        if last is not None and s != signs[last]:
            out.append(float(0.5 * (ts[last] + ts[i])))
        last = i
    return tuple(out)


def _refine_pair(pair: SubspacePathPair, eps_trans: float, max_depth: int):
    """Shared pipeline: refine spans, align chains, localize crossings.

    Returns (ts, dets, signs, depth_used) where ts is the refined grid
    and the det trace is computed on Procrustes-chained frames whose
    first frames keep the input orientation.
    """
    ts = list(map(float, pair.grid))
    Vf = list(pair.V.frames)
    Wf = list(pair.W.frames)
    depths = [0] * (len(ts) - 1)
    vs, ws = pair.V.sampler, pair.W.sampler
    can_refine = vs is not None and ws is not None
    depth_used = 0

    if can_refine:
        # span refinement: no orientation needed, raw samples suffice
        def too_wide(i):
            return (
                gap_distance(Vf[i], Vf[i + 1]) >= _GAP_REFINE
                or gap_distance(Wf[i], Wf[i + 1]) >= _GAP_REFINE
            )

        depth_used = _interval_refine(
            ts, Vf, Wf, depths, too_wide,
            lambda tm, i: vs(tm), lambda tm, i: ws(tm), max_depth,
        )

    # orientation sweep: chain Procrustes from the left end
    for i in range(1, len(ts)):
        Vf[i] = align_frame(Vf[i - 1], Vf[i])
        Wf[i] = align_frame(Wf[i - 1], Wf[i])

    dets, signs = _trace(ts, Vf, Wf, eps_trans)

    if can_refine:
        # crossing localization: bisect clean sign flips
        def flips(i):
            return (
                signs[i] != DEGENERATE
                and signs[i + 1] != DEGENERATE
                and signs[i] != signs[i + 1]
            )

        def insert_v(tm, i):
            return align_frame(Vf[i], vs(tm))

        def insert_w(tm, i):
            return align_frame(Wf[i], ws(tm))

        i = 0
        while i < len(ts) - 1:
            if depths[i] < max_depth and flips(i):
                tm = 0.5 * (ts[i] + ts[i + 1])
                if tm <= ts[i] or tm >= ts[i + 1]:
                    i += 1
                    continue
                fv = insert_v(tm, i)
                fw = insert_w(tm, i)
                M = pair_matrix(fv, fw)
                ts.insert(i + 1, tm)
                Vf.insert(i + 1, fv)
                Wf.insert(i + 1, fw)
                dets = np.insert(dets, i + 1, np.linalg.det(M))
                signs.insert(i + 1, det_sign(M, eps_trans))
                d = depths[i] + 1
                depths[i:i + 1] = [d, d]
                depth_used = max(depth_used, d)
            else:
                i += 1

    return np.asarray(ts), dets, signs, depth_used


def z2_index(pair: SubspacePathPair, eps_trans: float = 1e-6,
             max_depth: int = _MAX_DEPTH) -> IndexReport:
    """Z2-index of a subspace path pair with transversal ends.

    The value depends only on the determinant signs at the two ends,
    evaluated on a continuously chained frame pair; the interior det
    trace and the sign-change instants are diagnostics.

    Raises
    ------
    DegenerateEndpoint
        If det M at either end is within eps_trans (relative) of zero.
    """
    ts, dets, signs, depth = _refine_pair(pair, eps_trans, max_depth)
    if signs[0] == DEGENERATE or signs[-1] == DEGENERATE:
        which = "left" if signs[0] == DEGENERATE else "right"
        raise DegenerateEndpoint(
            f"{which} endpoint pair matrix numerically singular "
            f"(eps_trans={eps_trans})"
        )
    value = 0 if signs[0] * signs[-1] > 0 else 1
    return IndexReport(
        value=value,
        grid=ts,
        det_trace=dets,
        crossings=_sign_crossings(ts, signs),
        eps_trans=eps_trans,
        refinement_depth=depth,
    )


def _core_indices(ts: np.ndarray, tail_T: float) -> tuple[int, int]:
    inside = np.nonzero(np.abs(ts) <= tail_T + 1e-12)[0]
    if len(inside) < 2:
        raise TailNotTransversal(
            f"fewer than two samples inside |t| <= {tail_T}"
        )
    return int(inside[0]), int(inside[-1])


def z2_index_unbounded(pair: SubspacePathPair, tail_T: float,
                       eps_trans: float = 1e-6,
                       max_depth: int = _MAX_DEPTH) -> IndexReport:
    """Index of a pair over a half line or line, via a bounded core.

    The restriction to |t| <= tail_T carries the index provided the
    pair stays transversal on the tails; the computation checks the
    tail samples, evaluates the core restriction, and re-evaluates at
    2 * tail_T (clamped to the grid) to confirm the value has settled.

    Raises
    ------
    TailNotTransversal
        If a tail sample is degenerate or the tail det sign flips.
    """
    ts, dets, signs, depth = _refine_pair(pair, eps_trans, max_depth)

    for side, mask in (
        ("left", ts <= -tail_T),
        ("right", ts >= tail_T),
    ):
        idx = np.nonzero(mask)[0]
        tail_signs = [signs[i] for i in idx]
        if any(s == DEGENERATE for s in tail_signs):
            bad = ts[idx[[s == DEGENERATE for s in tail_signs].index(True)]]
            raise TailNotTransversal(
                f"{side} tail sample at t={bad:.6g} is degenerate"
            )
        if len(set(tail_signs)) > 1:
            raise TailNotTransversal(
                f"det sign flips on the {side} tail (|t| >= {tail_T})"
            )

    lo, hi = _core_indices(ts, tail_T)
    lo2, hi2 = _core_indices(ts, 2.0 * tail_T)
    value = 0 if signs[lo] * signs[hi] > 0 else 1
    value2 = 0 if signs[lo2] * signs[hi2] > 0 else 1
    if value != value2:
        raise InternalMismatch(
            "index changed when the tail horizon doubled despite "
            "constant tail signs"
        )
    return IndexReport(
        value=value,
        grid=ts,
        det_trace=dets,
        crossings=_sign_crossings(ts, signs),
        eps_trans=eps_trans,
        refinement_depth=depth,
    )


def geometric_parity(fam: LinearFamily, lam: float, samples: int = 201,
                     eps_trans: float = 1e-6, rtol: float = 1e-9,
                     atol: float = 1e-12) -> IndexReport:
    """Geometric parity of the orbit: index of t -> (E^s(t), E^u(-t)).

    The pair lives on [0, T] with T the family horizon; the far end
    approximates the limit pair (V^-(S^+), V^+(S^-)), whose
    transversality is the boundary non-degeneracy condition.

    Raises
    ------
    BoundaryDegenerate
        If V^+(S^-) fails transversality to V^-(S^+), or E^s(0) fails
        transversality to E^u(0).
    """
    limits = asymptotic_limits(fam, lam)
    vp = limits.split_minus.v_plus      # V^+(S^-), dim k
    vm = limits.split_plus.v_minus      # V^-(S^+), dim n-k
    if det_sign(pair_matrix(vp, vm), eps_trans) == DEGENERATE:
        raise BoundaryDegenerate(
            "V^+(S^-) not transversal to V^-(S^+)",
            condition="limit transversality",
        )
    es0 = subspace_at(fam, lam, "stable", 0.0, rtol, atol)
    eu0 = subspace_at(fam, lam, "unstable", 0.0, rtol, atol)
    if det_sign(pair_matrix(es0, eu0), eps_trans) == DEGENERATE:
        raise BoundaryDegenerate(
            "E^s(0) not transversal to E^u(0)",
            condition="origin transversality",
        )

    T = limits.horizon
    grid = np.linspace(0.0, T, samples)
    V = invariant_subspace_path(fam, lam, "stable", grid, rtol, atol)
    U = invariant_subspace_path(fam, lam, "unstable", -grid[::-1],
                                rtol, atol)
    # reflect U's own grid: refinement may have densified it
    W = SubspacePath(
        grid=-U.grid[::-1],
        frames=tuple(U.frames[::-1]),
        sampler=lambda s: subspace_at(fam, lam, "unstable", -s, rtol, atol),
    )
    pair = SubspacePathPair(V=V, W=W)
    return z2_index_unbounded(pair, tail_T=T / 2.0, eps_trans=eps_trans)


# -- loop closure and orientability ------------------------------------

def _geodesic(F0: Frame, F1: Frame) -> Callable[[float], Frame]:
    """Grassmann geodesic s in [0, 1] from span(F0) to span(F1)."""
    A, B = F0.columns, F1.columns
    U, sig, Vt = np.linalg.svd(A.T @ B)
    sig = np.clip(sig, -1.0, 1.0)
    theta = np.arccos(sig)
    A0 = A @ U
    B0 = B @ Vt.T
    G = B0 - A0 * sig
    norms = np.linalg.norm(G, axis=0)
    G = np.divide(G, norms, out=np.zeros_like(G), where=norms > 1e-12)

    def at(s: float) -> Frame:
        cols = A0 * np.cos(s * theta) + G * np.sin(s * theta)
        return orthonormalize(cols)

    return at


def _chart_segment(w_ref: Frame, F0: Frame,
                   F1: Frame) -> Callable[[float], Frame]:
    """Path s in [0, 1] from span(F0) to span(F1) through planes
    transversal to span(w_ref).

    Both endpoints are written as graphs over the complement of w_ref
    and the graph maps are interpolated linearly, so every intermediate
    plane is again a graph and cannot meet w_ref.  A Grassmann geodesic
    would not do here: it may leave the graph chart, and when it does
    the closing leg picks up index against the reference, silently
    breaking the loop identity.

    Raises numpy.linalg.LinAlgError when an endpoint is not a graph,
    i.e. not transversal to w_ref.
    """
    P = orthogonal_complement(w_ref).columns
    Wc = w_ref.columns
    graphs = []
    for F in (F0, F1):
        X = P.T @ F.columns
        Y = Wc.T @ F.columns
        graphs.append(np.linalg.solve(X.T, Y.T).T)
    A0, A1 = graphs

    def at(s: float) -> Frame:
        A = (1.0 - s) * A0 + s * A1
        return orthonormalize(P + Wc @ A)

    return at


def _refine_by_gap(sampler: Callable[[float], Frame],
                   params: np.ndarray, max_gap: float = 0.3,
                   rounds: int = 12) -> np.ndarray:
    """Insert midpoints until consecutive subspaces are max_gap-close."""
    pts = [float(t) for t in params]
    frames = [sampler(t) for t in pts]
    for _ in range(rounds):
        inserted = False
        i = 0
        while i < len(pts) - 1:
            if gap_distance(frames[i], frames[i + 1]) > max_gap:
                tm = 0.5 * (pts[i] + pts[i + 1])
                pts.insert(i + 1, tm)
                frames.insert(i + 1, sampler(tm))
                inserted = True
            else:
                i += 1
        if not inserted:
            break
    return np.asarray(pts)


def _sign_constant_along(v_ext: Callable[[float], Frame],
                         w_ext: Callable[[float], Frame],
                         params: np.ndarray, eps_trans: float) -> bool:
    """Transported det sign of the pair is defined and constant."""
    v = v_ext(params[0])
    w = w_ext(params[0])
    s0 = det_sign(pair_matrix(v, w), eps_trans)
    if s0 == DEGENERATE:
        return False
    for t in params[1:]:
        try:
            v = align_frame(v, v_ext(t))
            w = align_frame(w, w_ext(t))
        except GapTooLarge:
            return False
        if det_sign(pair_matrix(v, w), eps_trans) != s0:
            return False
    return True


def _interp_frame(path: SubspacePath, t: float) -> Frame:
    """Subspace at an off-grid parameter: sampler, else local geodesic."""
    if path.sampler is not None:
        return path.sampler(t)
    grid = path.grid
    t = float(np.clip(t, grid[0], grid[-1]))
    j = int(np.searchsorted(grid, t))
    if j == 0:
        return path.frames[0]
    if t == grid[j - 1]:
        return path.frames[j - 1]
    if j >= len(grid):
        return path.frames[-1]
    s = (t - grid[j - 1]) / (grid[j] - grid[j - 1])
    return _geodesic(path.frames[j - 1], path.frames[j])(s)


def close_loop(pair: SubspacePathPair, epsilon: float = 0.05,
               max_halvings: int = 10,
               eps_trans: float = 1e-6) -> ClosedLoop:
    """Close a path pair into a V-loop over the doubled interval.

    The input (normalized to [0, 1]) is extended to [1, 2] against the
    reversed W-path W~(t) = W(2 - t): outside two plateaus of width
    epsilon the extension is the orthogonal complement of W~, which is
    transversal by construction; on the plateaus it is a graph-chart
    segment (see _chart_segment) joining V(1) and V(0) to that
    complement without ever meeting the local W~.  The whole extension
    is then audited by a transported determinant-sign check on a
    gap-refined grid; epsilon is halved when an endpoint fails to be a
    graph over the plateau reference or the audit fails.

    Raises
    ------
    DegenerateEndpoint
        If the input pair fails transversality at either end.
    CannotClose
        If every plateau width down to epsilon / 2^max_halvings fails.
    """
    grid = pair.grid
    a, b = grid[0], grid[-1]
    span = b - a
    V, W = pair.V, pair.W
    for t_end, name in ((a, "left"), (b, "right")):
        i = 0 if t_end == a else -1
        if det_sign(pair_matrix(V.frames[i], W.frames[i]),
                    eps_trans) == DEGENERATE:
            raise DegenerateEndpoint(f"{name} endpoint pair degenerate")

    norm_grid = (grid - a) / span
    v0, v1 = V.frames[0], V.frames[-1]
    m = len(grid)

    def w_at(u: float) -> Frame:
        # u in [0, 1] in normalized parameter
        return _interp_frame(W, a + u * span)

    eps = epsilon
    for _ in range(max_halvings + 1):
        w_ref1 = w_at(1.0 - eps)
        w_ref2 = w_at(eps)
        try:
            plat1 = _chart_segment(w_ref1, v1,
                                   orthogonal_complement(w_ref1))
            plat2 = _chart_segment(w_ref2,
                                   orthogonal_complement(w_ref2), v0)
        except np.linalg.LinAlgError:
            # an input endpoint is not a graph over the plateau
            # reference; a narrower plateau moves the reference closer
            # to the endpoint's own partner, where transversality holds
            eps *= 0.5
            continue

        def v_ext(t: float) -> Frame:
            # t in [1, 2]
            if t <= 1.0 + eps:
                return plat1((t - 1.0) / eps)
            if t >= 2.0 - eps:
                return plat2((t - (2.0 - eps)) / eps)
            return orthogonal_complement(w_at(2.0 - t))

        def w_ext(t: float) -> Frame:
            return w_at(2.0 - t)

        ext = _refine_by_gap(v_ext, np.unique(np.concatenate([
            np.linspace(1.0, 2.0, max(m, 41)),
            1.0 + eps * np.linspace(0.0, 1.0, 17),
            2.0 - eps * np.linspace(0.0, 1.0, 17),
        ])))
        ok = _sign_constant_along(v_ext, w_ext, ext, eps_trans)
        if ok:
            loop_grid = np.concatenate([norm_grid, ext[1:]])
            loop_frames = list(V.frames) + [v_ext(t) for t in ext[1:]]

            def loop_sampler(t: float, _eps=eps) -> Frame:
                if t <= 1.0:
                    return _interp_frame(V, a + t * span)
                return v_ext(t)

            v_loop = SubspacePath(grid=loop_grid,
                                  frames=tuple(loop_frames),
                                  sampler=loop_sampler)
            w_tilde = SubspacePath(grid=ext,
                                   frames=tuple(w_ext(t) for t in ext),
                                   sampler=w_ext)
            return ClosedLoop(v_loop=v_loop, w_tilde=w_tilde, epsilon=eps)
        eps *= 0.5
    raise CannotClose(
        f"transversal closure failed at every plateau width down to {eps * 2}"
    )


def bundle_orientability(loop: ClosedLoop | SubspacePath,
                         eps_trans: float = 1e-6) -> int:
    """First Stiefel-Whitney class of the bundle a closed loop pulls back.

    Accepts the result of :func:`close_loop` or any closed
    SubspacePath.  Transports a frame once around by stepwise
    alignment; the loop is orientable (returns 0) iff the return map
    last^T first has positive determinant.

    Raises
    ------
    NotClosed
        If the first and last subspaces differ by more than 1e-8 in gap.
    """
    if isinstance(loop, ClosedLoop):
        loop = loop.v_loop
    first, last = loop.frames[0], loop.frames[-1]
    if gap_distance(first, last) > 1e-8:
        raise NotClosed(
            f"loop endpoints {gap_distance(first, last):.2e} apart in gap"
        )
    running = first
    for f in loop.frames[1:]:
        running = align_frame(running, f)
    ret = running.columns.T @ first.columns
    s = det_sign(ret, eps_trans)
    if s == DEGENERATE:
        raise InternalMismatch("return map of a closed loop is singular")
    return 0 if s > 0 else 1
