"""Linear nonautonomous families and their invariant subspace paths.

A family u'(t) = S(lambda, t) u(t) with hyperbolic asymptotic limits
S^- and S^+ carries, at every instant, a stable subspace E^s(t) (data
decaying as t -> +inf) and an unstable subspace E^u(t) (decaying as
t -> -inf).  This module evaluates the family, computes fundamental
solutions, checks the standing hypotheses (limits exist and are
hyperbolic, with the declared dimension split), and tracks the frames
of E^s and E^u along t and along lambda.

Frames are propagated under the flow with periodic re-orthonormalization
and Procrustes alignment (continuous-QR style); raw fundamental-solution
columns would collapse onto the dominant direction.  The direction of
integration is chosen so the tracked subspace is attracting: stable
frames are seeded at +T and integrated backward, unstable frames at -T
forward.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    DimensionMismatch,
    IntegrationFailure,
    InvalidInput,
    NotHyperbolic,
    NotStabilized,
)
from .expr import MatrixExpr, compile_matrix, eval_matrix
from .linalg import (
    Frame,
    SpectralSplit,
    align_frame,
    gap_distance,
    orthonormalize,
    spectral_split,
)

__all__ = [
    "LinearFamily",
    "AsymptoticLimits",
    "SubspacePath",
    "HypothesisReport",
    "fundamental_solution",
    "asymptotic_limits",
    "invariant_subspace_path",
    "subspace_at",
    "subspaces_over_lambda",
    "path_from_sampler",
    "check_A1_A3",
]

_STAB_TOL = 1e-6
_DEFAULT_RTOL = 1e-9
_DEFAULT_ATOL = 1e-12
_LEG = 2.0          # re-orthonormalization interval for frame transport
_SEED_MARGIN = 5.0  # extra horizon beyond the furthest requested instant
_ESCALATION_CAP = 8


@dataclass(frozen=True)
class LinearFamily:
    """Evaluator for a matrix family S(lambda, t).

    Attributes
    ----------
    n : int
        Ambient dimension.
    k : int
        Declared unstable dimension, dim V^+(S^-).
    t_max : float
        Truncation horizon; limits are read off at +-t_max (escalated
        automatically when the family has not stabilized there).
    """

    n: int
    k: int
    t_max: float = 20.0
    matrix: MatrixExpr | None = None
    _scalar: Callable = field(default=None, repr=False, compare=False)
    _batched: Callable = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not (0 <= self.k <= self.n):
            raise DimensionMismatch(f"k={self.k} outside 0..{self.n}")
        if self.t_max <= 0:
            raise InvalidInput("t_max must be positive")

    @staticmethod
    def from_matrix_expr(m: MatrixExpr, k: int, t_max: float = 20.0) -> "LinearFamily":
        """Family from a grid of expressions in (lambda, t)."""
        if m.rows != m.cols:
            raise DimensionMismatch(f"matrix is {m.rows}x{m.cols}, not square")
        batched = compile_matrix(m, ("lambda", "t"))
        scalar = lambda lam, t: eval_matrix(m, {"lambda": lam, "t": t})
        return LinearFamily(n=m.rows, k=k, t_max=t_max, matrix=m,
                            _scalar=scalar, _batched=batched)

    @staticmethod
    def from_callable(f: Callable, n: int, k: int, t_max: float = 20.0,
                      batched: Callable | None = None) -> "LinearFamily":
        """Family from a Python callable (lam, t) -> (n, n) array.

        Pass ``batched`` accepting broadcastable array arguments to keep
        lambda-sweeps vectorized; otherwise a loop fallback is used.
        """
        return LinearFamily(n=n, k=k, t_max=t_max, matrix=None,
                            _scalar=f, _batched=batched)

    def evaluate(self, lam: float, t: float) -> np.ndarray:
        """S(lambda, t) as an (n, n) array."""
        S = np.asarray(self._scalar(lam, t), dtype=float)
        if S.shape != (self.n, self.n):
            raise DimensionMismatch(
                f"evaluator returned {S.shape}, expected {(self.n, self.n)}"
            )
        return S

    def evaluate_many(self, lam, t) -> np.ndarray:
        """Broadcast evaluation, shape broadcast(lam, t) + (n, n)."""
        if self._batched is not None:
            out = np.asarray(self._batched(lam, t), dtype=float)
            return out
        lam_b, t_b = np.broadcast_arrays(np.asarray(lam, float),
                                         np.asarray(t, float))
        out = np.empty(lam_b.shape + (self.n, self.n))
        for idx in np.ndindex(lam_b.shape):
            out[idx] = self._scalar(float(lam_b[idx]), float(t_b[idx]))
        return out


@dataclass(frozen=True)
class AsymptoticLimits:
    """Limit matrices of a family at one lambda, with their splittings.

    ``horizon`` is the instant where the limits were read off; it is
    t_max unless stabilization required escalation.
    """

    s_minus: np.ndarray
    s_plus: np.ndarray
    split_minus: SpectralSplit
    split_plus: SpectralSplit
    horizon: float


@dataclass(frozen=True)
class SubspacePath:
    """Subspace path sampled on a parameter grid with aligned frames.

    ``sampler``, when present, evaluates the underlying subspace at an
    arbitrary parameter value (frame orientation arbitrary); index
    computations use it to refine between grid samples.
    """

    grid: np.ndarray
    frames: tuple
    sampler: Callable | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 1 or len(grid) < 2:
            raise InvalidInput("grid must hold at least two samples")
        if not np.all(np.diff(grid) > 0):
            raise InvalidInput("grid must be strictly increasing")
        if len(self.frames) != len(grid):
            raise DimensionMismatch("one frame per grid sample required")
        n, k = self.frames[0].n, self.frames[0].k
        for f in self.frames:
            if f.n != n or f.k != k:
                raise DimensionMismatch("frames change dimension along path")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "frames", tuple(self.frames))

    @property
    def n(self) -> int:
        return self.frames[0].n

    @property
    def k(self) -> int:
        return self.frames[0].k


@dataclass(frozen=True)
class HypothesisReport:
    """Outcome of the sampled hypothesis checks for a family.

    ``violations`` holds (lambda, tag, message) triples; ``note``
    records that the check samples a lambda-grid and cannot certify
    uniformity.
    """

    ok: bool
    violations: tuple
    min_gap: float
    lambdas_checked: int
    note: str = "sampled, not uniform"


# -- integration core --------------------------------------------------

def _solve_matrix_ode(rhs: Callable, t0: float, t1: float, y0: np.ndarray,
                      rtol: float, atol: float) -> np.ndarray:
    sol = solve_ivp(rhs, (t0, t1), y0.ravel(), method="RK45",
                    rtol=rtol, atol=atol, dense_output=False)
    if not sol.success:
        raise IntegrationFailure(
            f"integration {t0} -> {t1} failed: {sol.message}"
        )
    out = sol.y[:, -1]
    if not np.all(np.isfinite(out)):
        raise IntegrationFailure(f"non-finite state reached at t={t1}")
    return out


def fundamental_solution(fam: LinearFamily, lam: float, tau: float, t: float,
                         rtol: float = _DEFAULT_RTOL,
                         atol: float = _DEFAULT_ATOL) -> np.ndarray:
    """Fundamental solution gamma_{(lambda,tau)}(t) with gamma(tau) = I.

    Raises
    ------
    InvalidInput
        If tau or t lies outside [-t_max, t_max].
    IntegrationFailure
        On integrator breakdown.
    """
    T = fam.t_max
    if not (-T <= tau <= T and -T <= t <= T):
        raise InvalidInput(
            f"tau={tau}, t={t} outside the horizon [-{T}, {T}]"
        )
    n = fam.n
    if t == tau:
        return np.eye(n)

    def rhs(s, y):
        return (fam.evaluate(lam, s) @ y.reshape(n, n)).ravel()

    return _solve_matrix_ode(rhs, tau, t, np.eye(n), rtol, atol).reshape(n, n)


def asymptotic_limits(fam: LinearFamily, lam: float,
                      delta: float = 1e-8) -> AsymptoticLimits:
    """Limit matrices S^-, S^+ with their spectral splittings.

    Reads the family off at +-T and checks it has settled:
    ||S(+-T) - S(+-T/2)|| <= 1e-6.  T starts at t_max and doubles until
    the check passes (a bounded number of times).

    Raises
    ------
    NotStabilized
        If the family keeps drifting at every horizon tried.
    NotHyperbolic
        If a limit matrix has spectrum near the imaginary axis.
    """
    T = fam.t_max
    for _ in range(_ESCALATION_CAP):
        s_minus = fam.evaluate(lam, -T)
        s_plus = fam.evaluate(lam, T)
        drift = max(
            np.linalg.norm(s_minus - fam.evaluate(lam, -T / 2), 2),
            np.linalg.norm(s_plus - fam.evaluate(lam, T / 2), 2),
        )
        if drift <= _STAB_TOL:
            return AsymptoticLimits(
                s_minus=s_minus,
                s_plus=s_plus,
                split_minus=spectral_split(s_minus, delta),
                split_plus=spectral_split(s_plus, delta),
                horizon=T,
            )
        T *= 2.0
    raise NotStabilized(
        f"family still drifting {drift:.2e} at t = +-{T / 2:.0f} (lambda={lam})"
    )


def _leg_points(t_from: float, t_to: float) -> np.ndarray:
    legs = max(1, int(np.ceil(abs(t_to - t_from) / _LEG)))
    return np.linspace(t_from, t_to, legs + 1)


def _transport_frame(fam: LinearFamily, lam: float, F: Frame,
                     t_from: float, t_to: float,
                     rtol: float, atol: float,
                     collect: Sequence[float] = ()) -> tuple[Frame, list]:
    """Carry a frame under the flow with per-leg QR and alignment.

    ``collect`` lists instants (ordered in the direction of travel)
    where raw solution frames are sampled via the integrator's dense
    evaluation; one solver call per leg regardless of how many samples
    fall inside it.  Returns the final frame and the raw (n, k) column
    blocks at the collected instants, travel-ordered.
    """
    n, k = F.n, F.k
    collect = list(collect)
    if k == 0 or t_from == t_to:
        return F, [F.columns.copy() for _ in collect]
    cols = F.columns.copy()
    samples: list[np.ndarray] = []
    pts = _leg_points(t_from, t_to)
    forward = t_to > t_from
    ci = 0
    for a, b in zip(pts, pts[1:]):
        while ci < len(collect) and collect[ci] == a:
            samples.append(cols.copy())
            ci += 1
        inside = []
        while ci < len(collect) and (
            (forward and a < collect[ci] <= b)
            or (not forward and b <= collect[ci] < a)
        ):
            inside.append(collect[ci])
            ci += 1

        def rhs(s, y):
            return (fam.evaluate(lam, s) @ y.reshape(n, k)).ravel()

        t_eval = list(inside)
        if not t_eval or t_eval[-1] != b:
            t_eval.append(b)
        sol = solve_ivp(rhs, (a, b), cols.ravel(), method="RK45",
                        rtol=rtol, atol=atol, t_eval=t_eval)
        if not sol.success:
            raise IntegrationFailure(
                f"integration {a} -> {b} failed: {sol.message}"
            )
        if not np.all(np.isfinite(sol.y[:, -1])):
            raise IntegrationFailure(f"non-finite state reached at t={b}")
        for j in range(len(inside)):
            samples.append(sol.y[:, j].reshape(n, k).copy())
        Y = sol.y[:, -1].reshape(n, k)
        Q, _ = np.linalg.qr(Y)
        U, _, Vt = np.linalg.svd(Q.T @ cols)
        cols = Q @ (U @ Vt)
    while ci < len(collect):
        samples.append(cols.copy())
        ci += 1
    return Frame(cols), samples


def _seed(fam: LinearFamily, lam: float, which: str,
          far: float) -> tuple[Frame, float, AsymptoticLimits]:
    """Seed frame at the attracting end, horizon beyond |far|."""
    limits = asymptotic_limits(fam, lam)
    T = max(limits.horizon, abs(far) + _SEED_MARGIN)
    if which == "stable":
        seed = limits.split_plus.v_minus
        return seed, T, limits
    if which == "unstable":
        seed = limits.split_minus.v_plus
        return seed, -T, limits
    raise InvalidInput(f"which must be 'stable' or 'unstable', got {which!r}")


def _check_declared_dims(fam: LinearFamily, limits: AsymptoticLimits):
    ku = limits.split_minus.v_plus.k
    ks = limits.split_plus.v_minus.k
    if ku != fam.k or ks != fam.n - fam.k:
        raise DimensionMismatch(
            f"spectral dims (unstable {ku}, stable {ks}) contradict "
            f"declared k={fam.k} in ambient {fam.n}"
        )


def subspace_at(fam: LinearFamily, lam: float, which: str, t: float,
                rtol: float = _DEFAULT_RTOL,
                atol: float = _DEFAULT_ATOL) -> Frame:
    """E^s(t) or E^u(t) at a single instant (frame orientation arbitrary)."""
    seed, t0, limits = _seed(fam, lam, which, t)
    _check_declared_dims(fam, limits)
    F, _ = _transport_frame(fam, lam, seed, t0, t, rtol, atol)
    return F


def invariant_subspace_path(fam: LinearFamily, lam: float, which: str,
                            grid: Sequence[float],
                            rtol: float = _DEFAULT_RTOL,
                            atol: float = _DEFAULT_ATOL) -> SubspacePath:
    """Stable or unstable subspace path sampled on an increasing grid.

    Stable frames are seeded at v_minus(S^+) beyond the last grid point
    and transported backward; unstable frames at v_plus(S^-) forward.
    Consecutive frames are Procrustes-aligned.

    Raises
    ------
    DimensionMismatch
        If the spectral dimensions contradict the declared k.
    """
    grid = np.asarray(grid, dtype=float)
    far = grid[-1] if which == "stable" else grid[0]
    seed, t0, limits = _seed(fam, lam, which, far)
    _check_declared_dims(fam, limits)

    # the requested grid is a floor, not a contract: where the subspace
    # turns faster than the spacing resolves, collect at midpoints too,
    # so the alignment chain below stays within its gap budget
    work = grid
    for _ in range(6):
        targets = list(work[::-1] if which == "stable" else work)
        _, raw = _transport_frame(fam, lam, seed, t0, targets[-1], rtol,
                                  atol, collect=targets)
        on = [orthonormalize(b) for b in raw]
        bad = [i for i in range(len(on) - 1)
               if gap_distance(on[i], on[i + 1]) > 0.4]
        if not bad:
            break
        mids = [(targets[i] + targets[i + 1]) / 2.0 for i in bad]
        work = np.unique(np.concatenate([work, mids]))

    frames = [on[0]]
    for block in on[1:]:
        frames.append(align_frame(frames[-1], block))
    if which == "stable":
        frames.reverse()

    sampler = lambda s: subspace_at(fam, lam, which, s, rtol, atol)
    return SubspacePath(grid=work, frames=tuple(frames), sampler=sampler)


def path_from_sampler(sampler: Callable, grid: Sequence[float]) -> SubspacePath:
    """Build an aligned path by sampling a subspace-valued function.

    ``sampler(t)`` must return a Frame; orientations are chained with
    Procrustes alignment so determinant traces vary continuously.
    Midpoints are inserted wherever consecutive samples are more than
    0.4 apart in gap, so a coarse grid over a fast rotation does not
    abort the chain.
    """
    pts = [float(t) for t in np.asarray(grid, dtype=float)]
    raw = [sampler(t) for t in pts]
    for _ in range(6):
        inserted = False
        i = 0
        while i < len(pts) - 1:
            if gap_distance(raw[i], raw[i + 1]) > 0.4:
                tm = 0.5 * (pts[i] + pts[i + 1])
                pts.insert(i + 1, tm)
                raw.insert(i + 1, sampler(tm))
                inserted = True
            else:
                i += 1
        if not inserted:
            break
    frames = [raw[0]]
    for f in raw[1:]:
        frames.append(align_frame(frames[-1], f))
    return SubspacePath(grid=np.asarray(pts), frames=tuple(frames),
                        sampler=sampler)


# -- batched lambda sweeps ---------------------------------------------

def _transport_batched(fam: LinearFamily, lams: np.ndarray, seeds: np.ndarray,
                       t_from: float, t_to: float,
                       rtol: float, atol: float) -> np.ndarray:
    """Transport one frame per lambda simultaneously.

    seeds has shape (m, n, k); all m systems ride in one solver call
    per leg, with batched QR and alignment between legs.  This keeps a
    201-point lambda sweep at a handful of integrator calls.
    """
    m, n, k = seeds.shape
    if k == 0 or t_from == t_to:
        return seeds.copy()
    Y = seeds.copy()
    pts = _leg_points(t_from, t_to)
    for a, b in zip(pts, pts[1:]):
        def rhs(s, y):
            S = fam.evaluate_many(lams, s)
            return np.einsum("mij,mjk->mik", S, y.reshape(m, n, k)).ravel()

        flat = _solve_matrix_ode(rhs, a, b, Y, rtol, atol)
        Q, _ = np.linalg.qr(flat.reshape(m, n, k))
        M = np.einsum("mji,mjk->mik", Q, Y)
        U, _, Vt = np.linalg.svd(M)
        Y = np.einsum("mij,mjk->mik", Q, U @ Vt)
    return Y


def subspaces_over_lambda(fam: LinearFamily, lams: Sequence[float], which: str,
                          t: float,
                          rtol: float = _DEFAULT_RTOL,
                          atol: float = _DEFAULT_ATOL) -> list[Frame]:
    """E^s(t) or E^u(t) for every lambda, frames aligned along lambda.

    The returned frames form a continuous chain in lambda (consecutive
    Procrustes alignment), which is what determinant-sign tracking
    across a sweep requires.
    """
    lams = np.asarray(lams, dtype=float)
    seeds = []
    t0 = None
    for lam in lams:
        seed, t0_cur, limits = _seed(fam, lam, which, t)
        _check_declared_dims(fam, limits)
        seeds.append(seed.columns)
        t0 = t0_cur if t0 is None else (max(t0, t0_cur) if t0_cur > 0
                                        else min(t0, t0_cur))
    seeds = np.asarray(seeds)
    cols = _transport_batched(fam, lams, seeds, t0, t, rtol, atol)
    frames = [Frame(c) for c in cols]
    aligned = [frames[0]]
    for f in frames[1:]:
        aligned.append(align_frame(aligned[-1], f))
    return aligned


# -- hypothesis checks -------------------------------------------------

def check_A1_A3(fam: LinearFamily, samples: int = 101) -> HypothesisReport:
    """Sampled check of the limit hypotheses over lambda in [0, 1].

    At each sampled lambda the limits must stabilize, both must be
    hyperbolic, and the limit dimensions must match the declared k:
    dim v_plus(S^-) = k and dim v_minus(S^+) = n - k.  The report can
    only speak for the sampled grid, hence its fixed note.
    """
    violations = []
    min_gap = np.inf
    for lam in np.linspace(0.0, 1.0, samples):
        try:
            limits = asymptotic_limits(fam, lam)
        except NotStabilized as exc:
            violations.append((lam, "A1", str(exc)))
            continue
        except NotHyperbolic as exc:
            violations.append((lam, "A1", str(exc)))
            continue
        min_gap = min(min_gap, limits.split_minus.gap, limits.split_plus.gap)
        ku = limits.split_minus.v_plus.k
        ks = limits.split_plus.v_minus.k
        if ku != fam.k:
            violations.append(
                (lam, "A3", f"dim V^+(S^-) = {ku}, declared k = {fam.k}")
            )
        if ks != fam.n - fam.k:
            violations.append(
                (lam, "A3", f"dim V^-(S^+) = {ks}, expected {fam.n - fam.k}")
            )
    return HypothesisReport(
        ok=not violations,
        violations=tuple(violations),
        min_gap=float(min_gap) if np.isfinite(min_gap) else float("nan"),
        lambdas_checked=samples,
    )
