"""Quadratic program over a piecewise Bezier trajectory inside a corridor.

Decision variables are the unscaled control points of every segment,
ordered segment-major then dimension (s before l).  Segment ``j`` lasts
``alpha_j`` (its cube's time extent) and is evaluated as
``alpha_j * sum p_i b(u)``; derivative control points are
``alpha_j**(1-k) * D_k p``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import clarabel
import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .bezier import BezierSegment, difference_operator, jerk_hessian
from .corridor import Corridor, DynamicLimits
from .errors import (
    DimensionMismatch,
    GoalOutsideCorridor,
    Infeasible,
    SolverNumericalFailure,
    StartOutsideCorridor,
)
from .frenet import FrenetState

log = logging.getLogger(__name__)

DIMS = ("s", "l")


@dataclass(frozen=True)
class OptimizerConfig:
    w_s: float = 1.0
    w_l: float = 1.0
    limits: DynamicLimits = field(default_factory=DynamicLimits)
    tolerance: float = 1e-6
    max_iter: int = 200
    degree: int = 5
    continuity_order: int = 3
    corridor_tolerance: float = 1e-9

    def __post_init__(self):
        if not (self.w_s > 0.0 and self.w_l > 0.0):
            raise ValueError("cost weights must be positive")
        if not self.tolerance > 0.0:
            raise ValueError("solver tolerance must be positive")
        if self.continuity_order not in (2, 3):
            raise ValueError("continuity order must be 2 or 3")
        if self.degree < 3:
            raise ValueError("degree must be at least 3")

    def weight(self, dim):
        return self.w_s if dim == "s" else self.w_l


@dataclass
class QpProblem:
    """``min x' H x`` subject to ``A_eq x = b_eq`` and ``lb <= A_in x <= ub``."""

    H: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    A_in: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    degree: int
    alphas: np.ndarray
    t0: float
    eq_labels: list = field(default_factory=list)
    in_labels: list = field(default_factory=list)
    dropped_eq: list = field(default_factory=list)

    @property
    def n_vars(self) -> int:
        return self.H.shape[0]

    @property
    def n_segments(self) -> int:
        return len(self.alphas)

    def index(self, seg: int, dim: int, i: int = 0) -> int:
        return (2 * seg + dim) * (self.degree + 1) + i


@dataclass
class QpSolution:
    x: np.ndarray
    cost: float
    primal_residual: float
    stationarity_residual: float
    iterations: int
    status: str


def _var(seg, dim, m):
    base = (2 * seg + dim) * (m + 1)
    return slice(base, base + m + 1)


def _check_inside(state: FrenetState, cube, tol, err, what):
    for ax, v in ((0, state.s), (1, state.l)):
        lo, hi = cube.lower[ax], cube.upper[ax]
        if not lo - tol <= v <= hi + tol:
            raise err(f"{what} {('s', 'l')[ax]}={v} outside cube range [{lo}, {hi}]")


def assemble_qp(corridor: Corridor, start: FrenetState, goal: FrenetState,
                cfg: OptimizerConfig = OptimizerConfig()) -> QpProblem:
    cubes = corridor.cubes
    if not cubes:
        raise ValueError("corridor is empty")
    for c in cubes:
        if c.vel_bounds is None or c.acc_bounds is None:
            raise ValueError("corridor cubes need associated constraints")
    _check_inside(start, cubes[0], cfg.corridor_tolerance, StartOutsideCorridor, "start")
    _check_inside(goal, cubes[-1], cfg.corridor_tolerance, GoalOutsideCorridor, "goal")

    m = cfg.degree
    n = len(cubes)
    nv = 2 * n * (m + 1)
    alphas = np.array([c.duration for c in cubes])
    D = [difference_operator(m, k) for k in range(4)]

    H = np.zeros((nv, nv))
    for j, a in enumerate(alphas):
        Qj = jerk_hessian(m, a)
        for d, dim in enumerate(DIMS):
            sl = _var(j, d, m)
            H[sl, sl] = cfg.weight(dim) * Qj

    eq_rows, eq_rhs, eq_labels = [], [], []

    def end_row(j, d, k, which):
        row = np.zeros(nv)
        coef = alphas[j] ** (1 - k) * (D[k][0] if which == "first" else D[k][-1])
        row[_var(j, d, m)] = coef
        return row

    for d, dim in enumerate(DIMS):
        for k, val in enumerate(start.derivatives(dim)):
            eq_rows.append(end_row(0, d, k, "first"))
            eq_rhs.append(val)
            eq_labels.append(("start", dim, k))
        for k, val in enumerate(goal.derivatives(dim)):
            eq_rows.append(end_row(n - 1, d, k, "last"))
            eq_rhs.append(val)
            eq_labels.append(("goal", dim, k))
    for j in range(n - 1):
        for d, dim in enumerate(DIMS):
            for k in range(cfg.continuity_order + 1):
                eq_rows.append(end_row(j, d, k, "last") - end_row(j + 1, d, k, "first"))
                eq_rhs.append(0.0)
                eq_labels.append(("continuity", j, dim, k))
    A_eq = np.array(eq_rows)
    b_eq = np.array(eq_rhs)
    A_eq, b_eq, eq_labels, dropped = _independent_rows(A_eq, b_eq, eq_labels)

    in_rows, lb, ub, in_labels = [], [], [], []
    for j, c in enumerate(cubes):
        a = alphas[j]
        for d, dim in enumerate(DIMS):
            sl = _var(j, d, m)
            specs = ((0, (c.lower[d], c.upper[d])), (1, c.vel_bounds[dim]), (2, c.acc_bounds[dim]))
            for k, (lo, hi) in specs:
                M = a ** (1 - k) * D[k]
                for i in range(M.shape[0]):
                    row = np.zeros(nv)
                    row[sl] = M[i]
                    in_rows.append(row)
                    lb.append(lo)
                    ub.append(hi)
                    in_labels.append((j, dim, k, i))
    return QpProblem(H, A_eq, b_eq, np.array(in_rows), np.array(lb, float), np.array(ub, float),
                     m, alphas, cubes[0].t_start, eq_labels, in_labels, dropped)


def _independent_rows(A, b, labels, rtol=1e-10):
    """Drop linearly dependent equality rows (rank-revealing QR on A')."""
    if A.shape[0] == 0:
        return A, b, labels, []
    _, R, piv = scipy.linalg.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > rtol * max(diag[0], 1.0)))
    keep = np.sort(piv[:rank])
    dropped = [labels[i] for i in sorted(set(range(A.shape[0])) - set(keep.tolist()))]
    if dropped:
        log.debug("dropping %d dependent equality rows: %s", len(dropped), dropped)
    return A[keep], b[keep], [labels[i] for i in keep], dropped


_INFEASIBLE = {"PrimalInfeasible", "AlmostPrimalInfeasible"}


def solve(problem: QpProblem, cfg: OptimizerConfig = OptimizerConfig()) -> QpSolution:
    """Solve with Clarabel (interior point), then polish on the active set.

    The solver sees an equilibrated copy of the problem (control points in
    meters, unit-norm constraint rows, unit-scale cost); residuals are
    measured on the original problem.  Raises :class:`Infeasible` when the
    solver certifies primal infeasibility, :class:`SolverNumericalFailure`
    for any other failure or when the returned point misses the residual
    tolerances.
    """
    sc = _equilibrate(problem)
    n = problem.n_vars
    n_eq = sc.A_eq.shape[0]
    n_in = sc.A_in.shape[0]
    P = sp.triu(sp.csc_matrix(2.0 * sc.H), format="csc")
    A = sp.csc_matrix(np.vstack([sc.A_eq, sc.A_in, -sc.A_in]))
    b = np.concatenate([sc.b_eq, sc.ub, -sc.lb])
    cones = []
    if n_eq:
        cones.append(clarabel.ZeroConeT(n_eq))
    if n_in:
        cones.append(clarabel.NonnegativeConeT(2 * n_in))

    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = cfg.max_iter
    settings.tol_feas = 1e-10
    settings.tol_gap_abs = 1e-10
    settings.tol_gap_rel = 1e-10
    settings.max_threads = 1
    sol = clarabel.DefaultSolver(P, np.zeros(n), A, b, cones, settings).solve()
    status = str(sol.status).split(".")[-1]
    diag = {"status": status, "iterations": int(sol.iterations)}
    if status in _INFEASIBLE:
        raise Infeasible("QP is infeasible: no trajectory satisfies the corridor constraints", diag)
    if status not in ("Solved", "AlmostSolved"):
        raise SolverNumericalFailure(f"QP solver stopped with status {status}", diag)

    y = np.asarray(sol.x, dtype=float)
    zs = np.asarray(sol.z, dtype=float)
    x = sc.col * y
    z_eq = sc.r_eq * zs[:n_eq] / sc.cost
    z_in = sc.r_in * (zs[n_eq:n_eq + n_in] - zs[n_eq + n_in:]) / sc.cost
    primal = _primal_residual(problem, x)
    stationarity = _stationarity(problem, x, problem.A_eq.T @ z_eq + problem.A_in.T @ z_in,
                                 np.abs(problem.A_eq.T) @ np.abs(z_eq) + np.abs(problem.A_in.T) @ np.abs(z_in))
    polished = _polish(problem, sc, y, zs)
    if polished is not None and max(polished[1:]) < max(primal, stationarity):
        x, primal, stationarity = polished
        diag["polished"] = True
    diag.update(primal_residual=primal, stationarity_residual=stationarity)
    if primal > cfg.tolerance or stationarity > cfg.tolerance:
        raise SolverNumericalFailure(
            f"QP solution misses tolerance (primal {primal:.2e}, stationarity {stationarity:.2e})", diag)
    return QpSolution(x, float(x @ problem.H @ x), primal, stationarity, int(sol.iterations), status)


@dataclass
class _Scaled:
    H: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    A_in: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    col: np.ndarray  # x = col * y
    r_eq: np.ndarray  # scaled row = r * original row
    r_in: np.ndarray
    cost: float  # scaled cost = cost * original cost


def _row_scale(A):
    if A.shape[0] == 0:
        return np.ones(0)
    norm = np.abs(A).max(axis=1)
    return 1.0 / np.where(norm > 0.0, norm, 1.0)


def _equilibrate(problem: QpProblem) -> _Scaled:
    m1 = problem.degree + 1
    col = np.repeat(1.0 / problem.alphas, 2 * m1)
    H = col[:, None] * problem.H * col[None, :]
    cost = 1.0 / max(float(np.abs(H).max()), 1e-300)
    A_eq = problem.A_eq * col
    A_in = problem.A_in * col
    r_eq = _row_scale(A_eq)
    r_in = _row_scale(A_in)
    return _Scaled(cost * H, r_eq[:, None] * A_eq, r_eq * problem.b_eq, r_in[:, None] * A_in,
                   r_in * problem.lb, r_in * problem.ub, col, r_eq, r_in, cost)


def _stationarity(problem: QpProblem, x, at_mult, at_mag=None) -> float:
    """Infinity norm of the Lagrangian gradient ``2Hx + A'z``, relative to
    the magnitude of the terms before cancellation (``|2H||x|`` and
    ``|A'||z|``) so that round-off on badly scaled segments is not mistaken
    for a lack of optimality."""
    Px = 2.0 * problem.H @ x
    mag = 2.0 * np.abs(problem.H) @ np.abs(x)
    if at_mag is None:
        at_mag = np.abs(at_mult)
    scale = max(1.0, mag.max(initial=0.0), at_mag.max(initial=0.0))
    return float(np.abs(Px + at_mult).max(initial=0.0) / scale)


def _polish(problem: QpProblem, sc: _Scaled, y, z, max_rounds: int = 25, tol: float = 1e-10):
    """Re-solve the KKT system of the equality-constrained problem on the
    active set, refining the set until it is primal and dual consistent.

    Interior-point iterates sit a hair inside active bounds and satisfy the
    equalities only to the solver's relative accuracy; the polished point
    lies exactly on the constraint surface.  The initial active set is read
    off the interior-point duals; each round adds violated inequality rows
    or drops the active row with the most wrong-signed multiplier.  Works on
    the equilibrated problem and returns ``(x, primal, stationarity)`` in
    original units, or ``None`` when no consistent set is found.
    """
    n_eq, n_in = sc.A_eq.shape[0], sc.A_in.shape[0]
    n = sc.H.shape[0]
    v = sc.A_in @ y
    z_u = z[n_eq:n_eq + n_in]
    z_l = z[n_eq + n_in:]
    side = np.zeros(n_in, dtype=int)  # +1 upper active, -1 lower active
    side[z_l > np.maximum(v - sc.lb, 0.0)] = -1
    side[z_u > np.maximum(sc.ub - v, 0.0)] = 1
    base_cost = y @ sc.H @ y
    for _ in range(max_rounds):
        act = np.flatnonzero(side)
        A_act = np.vstack([sc.A_eq, sc.A_in[act]])
        b_act = np.concatenate([sc.b_eq, np.where(side[act] > 0, sc.ub[act], sc.lb[act])])
        labels = [("eq", i) for i in range(n_eq)] + [("in", int(i)) for i in act]
        A_act, b_act, labels, _ = _independent_rows(A_act, b_act, labels)
        k = A_act.shape[0]
        K = np.zeros((n + k, n + k))
        K[:n, :n] = 2.0 * sc.H
        K[:n, n:] = A_act.T
        K[n:, :n] = A_act
        try:
            sol = scipy.linalg.solve(K, np.concatenate([np.zeros(n), b_act]), assume_a="sym")
        except (np.linalg.LinAlgError, ValueError):
            return None
        if not np.all(np.isfinite(sol)):
            return None
        yp, lam = sol[:n], sol[n:]
        v = sc.A_in @ yp
        over = (v > sc.ub + tol) & (side == 0)
        under = (v < sc.lb - tol) & (side == 0)
        if over.any() or under.any():
            side[over] = 1
            side[under] = -1
            continue
        # wrong sign: an upper-active row pulling down or a lower-active row pushing up
        worst, worst_row = tol, None
        for (kind, i), li in zip(labels, lam):
            if kind == "in" and -side[i] * li > worst:
                worst, worst_row = -side[i] * li, i
        if worst_row is None:
            break
        side[worst_row] = 0
    else:
        return None
    if yp @ sc.H @ yp > base_cost + 1e-9 * max(1.0, abs(base_cost)):
        return None
    xp = sc.col * yp
    at_mult = np.zeros(n)
    at_mag = np.zeros(n)
    for (kind, i), li in zip(labels, lam):
        row = problem.A_eq[i] if kind == "eq" else problem.A_in[i]
        w = (sc.r_eq[i] if kind == "eq" else sc.r_in[i]) * li / sc.cost
        at_mult += row * w
        at_mag += np.abs(row * w)
    return xp, _primal_residual(problem, xp), _stationarity(problem, xp, at_mult, at_mag)


def _primal_residual(problem: QpProblem, x) -> float:
    r = 0.0
    if problem.A_eq.shape[0]:
        r = float(np.abs(problem.A_eq @ x - problem.b_eq).max())
    if problem.A_in.shape[0]:
        y = problem.A_in @ x
        r = max(r, float(np.maximum(y - problem.ub, problem.lb - y).max()), 0.0)
    return r


class PiecewiseBezierTrajectory:
    """Consecutive :class:`BezierSegment` pieces sharing junction time stamps."""

    def __init__(self, segments):
        segs = list(segments)
        if not segs:
            raise ValueError("trajectory needs at least one segment")
        for a, b in zip(segs, segs[1:]):
            if abs(a.t_end - b.t_start) > 1e-9 * max(1.0, abs(a.t_end)):
                raise ValueError("segments must be contiguous in time")
        self.segments = segs
        self.times = np.array([segs[0].t_start] + [s.t_end for s in segs])
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("junction times must be strictly increasing")

    def __len__(self):
        return len(self.segments)

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def segment_index(self, t):
        t = np.asarray(t, float)
        idx = np.searchsorted(self.times, t, side="right") - 1
        return np.clip(idx, 0, len(self.segments) - 1)

    def eval(self, t, k: int = 0, dim: int | str = 0):
        d = DIMS.index(dim) if isinstance(dim, str) else dim
        t_arr = np.atleast_1d(np.asarray(t, float))
        idx = self.segment_index(t_arr)
        out = np.empty_like(t_arr)
        for j in np.unique(idx):
            mask = idx == j
            seg = self.segments[j]
            out[mask] = seg.eval(np.clip(t_arr[mask], seg.t_start, seg.t_end), k, d)
        return float(out[0]) if np.ndim(t) == 0 else out

    def sample(self, dt: float = 0.01):
        """Dense samples as a dict of arrays: t, s, l and their first two derivatives."""
        n = int(np.floor((self.t_end - self.t_start) / dt + 1e-9))
        t = self.t_start + dt * np.arange(n + 1)
        if self.t_end - t[-1] > 1e-9:
            t = np.append(t, self.t_end)
        out = {"t": t}
        for dim in DIMS:
            out[dim] = self.eval(t, 0, dim)
            out[f"{dim}_dot"] = self.eval(t, 1, dim)
            out[f"{dim}_ddot"] = self.eval(t, 2, dim)
        return out

    def control_points(self):
        return [seg.control_points for seg in self.segments]


def build_trajectory(solution, corridor: Corridor, degree: int = 5) -> PiecewiseBezierTrajectory:
    x = solution.x if isinstance(solution, QpSolution) else np.asarray(solution, float)
    n = len(corridor.cubes)
    if x.shape != (2 * n * (degree + 1),):
        raise DimensionMismatch(f"solution has {x.size} entries, corridor needs {2 * n * (degree + 1)}")
    segs = []
    for j, c in enumerate(corridor.cubes):
        cp = np.vstack([x[_var(j, d, degree)] for d in range(2)])
        segs.append(BezierSegment(cp, c.duration, c.t_start))
    return PiecewiseBezierTrajectory(segs)


def plan(corridor: Corridor, start: FrenetState, goal: FrenetState, cfg: OptimizerConfig = OptimizerConfig()):
    """Assemble, solve and wrap; returns ``(trajectory, solution, problem)``."""
    problem = assemble_qp(corridor, start, goal, cfg)
    solution = solve(problem, cfg)
    return build_trajectory(solution, corridor, cfg.degree), solution, problem
