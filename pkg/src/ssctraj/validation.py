"""Independent verification of a planned trajectory.

Nothing here reuses the optimizer's constraint assembly or the Bernstein
helpers in :mod:`ssctraj.bezier`: each segment is converted to the power
basis by direct expansion of its Bernstein sum and evaluated with
``numpy.polynomial``.  Checks:

* containment of dense samples in the owning cube and in free grid cells,
* velocity and acceleration samples against the cube bounds,
* scaled hodograph control points against the same bounds (these bound the
  curve for all t, not only at samples),
* derivative continuity at the junctions,
* start and goal boundary conditions.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from math import comb

import numpy as np
from numpy.polynomial import polynomial as P

DIMS = ("s", "l")


@dataclass(frozen=True)
class VerifyConfig:
    dt: float = 1e-3
    position_tol: float = 1e-6
    derivative_tol: float = 1e-6
    continuity_tol: float = 1e-6
    continuity_order: int = 3
    check_grid: bool = True
    grid_tol: float = 1e-9


@dataclass
class CheckRecord:
    check_id: str
    worst_violation: float
    time: float | None
    tolerance: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.worst_violation <= self.tolerance

    def to_dict(self):
        d = asdict(self)
        d["passed"] = self.passed
        return d


@dataclass
class VerificationReport:
    checks: list[CheckRecord] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, check_id) -> CheckRecord:
        for c in self.checks:
            if c.check_id == check_id:
                return c
        raise KeyError(check_id)

    def failures(self) -> list[CheckRecord]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self):
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}

    def summary(self) -> str:
        lines = [f"verification {'PASSED' if self.passed else 'FAILED'}"]
        for c in self.checks:
            at = "" if c.time is None else f" at t={c.time:.4f}"
            lines.append(f"  {'ok  ' if c.passed else 'FAIL'} {c.check_id}: worst {c.worst_violation:.3e}{at}")
        return "\n".join(lines)


def power_coefficients(control_points, alpha: float) -> np.ndarray:
    """Monomial coefficients in ``u`` of ``alpha * sum_i p_i C(m,i) u^i (1-u)^(m-i)``."""
    p = np.asarray(control_points, float)
    m = len(p) - 1
    c = np.zeros(m + 1)
    for i in range(m + 1):
        for j in range(m - i + 1):
            c[i + j] += p[i] * comb(m, i) * comb(m - i, j) * (-1) ** j
    return alpha * c


class _PowerSegment:
    def __init__(self, seg):
        self.t0 = seg.t_start
        self.alpha = seg.alpha
        cp = np.asarray(seg.control_points, float)
        self.cp = cp
        self.coef = [power_coefficients(cp[d], seg.alpha) for d in range(len(DIMS))]

    def eval(self, t, k, d):
        u = (np.asarray(t, float) - self.t0) / self.alpha
        c = P.polyder(self.coef[d], k) if k else self.coef[d]
        return P.polyval(u, c) / self.alpha ** k

    def derivative_control_points(self, k, d):
        q = self.cp[d]
        m = len(q) - 1
        for j in range(k):
            q = (m - j) * (q[1:] - q[:-1])
        return self.alpha ** (1 - k) * q


def _sample_times(t0, t1, dt):
    n = max(1, int(np.ceil((t1 - t0) / dt - 1e-9)))
    return np.linspace(t0, t1, n + 1)


def _worst(record_id, viol, times, tol, detail=""):
    viol = np.asarray(viol, float)
    if viol.size == 0:
        return CheckRecord(record_id, 0.0, None, tol, detail)
    k = int(np.argmax(viol))
    w = max(float(viol[k]), 0.0)
    return CheckRecord(record_id, w, None if times is None else float(np.asarray(times)[k]), tol, detail)


def _grid_violation(grid, s, l, t, tol):
    """0 where a sample lies in the closure of some free cell, else 1."""
    pts = (s, l, t)
    cand = []
    for ax in range(3):
        x = (np.asarray(pts[ax]) - grid.origin[ax]) / grid.resolution[ax]
        eps = tol / grid.resolution[ax]
        cand.append((np.floor(x - eps).astype(int), np.floor(x + eps).astype(int)))
    ok = np.zeros(len(s), dtype=bool)
    shape = grid.occupancy.shape
    for i in cand[0]:
        for j in cand[1]:
            for k in cand[2]:
                inside = (i >= 0) & (i < shape[0]) & (j >= 0) & (j < shape[1]) & (k >= 0) & (k < shape[2])
                free = np.zeros(len(s), dtype=bool)
                free[inside] = ~grid.occupancy[i[inside], j[inside], k[inside]]
                ok |= free
    return (~ok).astype(float)


def verify(traj, corridor, grid=None, cfg: VerifyConfig = VerifyConfig(), start=None, goal=None) -> VerificationReport:
    """Check ``traj`` against ``corridor`` (and ``grid``); never raises on a violation."""
    segs = [_PowerSegment(s) for s in traj.segments]
    cubes = list(corridor.cubes)
    report = VerificationReport()
    if len(segs) != len(cubes):
        report.checks.append(CheckRecord("dimensions", float(abs(len(segs) - len(cubes))), None, 0.0,
                                         f"{len(segs)} segments for {len(cubes)} cubes"))
        return report
    span_viol = [max(abs(sg.t0 - c.t_start), abs(sg.t0 + sg.alpha - c.t_end)) for sg, c in zip(segs, cubes)]
    report.checks.append(_worst("time_alignment", span_viol, [c.t_start for c in cubes], cfg.position_tol))

    pos_v, pos_t, grid_v, grid_t = [], [], [], []
    der_v = {k: ([], []) for k in (1, 2)}
    cp_v = {k: [] for k in (0, 1, 2)}
    for sg, c in zip(segs, cubes):
        t = _sample_times(sg.t0, sg.t0 + sg.alpha, cfg.dt)
        vals = [sg.eval(t, 0, d) for d in range(2)]
        v = np.zeros_like(t)
        for d in range(2):
            v = np.maximum(v, np.maximum(c.lower[d] - vals[d], vals[d] - c.upper[d]))
        pos_v.append(v)
        pos_t.append(t)
        if cfg.check_grid and grid is not None:
            grid_v.append(_grid_violation(grid, vals[0], vals[1], t, cfg.grid_tol))
            grid_t.append(t)
        for k, bounds in ((1, c.vel_bounds), (2, c.acc_bounds)):
            if bounds is None:
                continue
            for d, dim in enumerate(DIMS):
                lo, hi = bounds[dim]
                x = sg.eval(t, k, d)
                der_v[k][0].append(np.maximum(lo - x, x - hi))
                der_v[k][1].append(t)
        for k in (0, 1, 2):
            for d, dim in enumerate(DIMS):
                if k == 0:
                    lo, hi = c.lower[d], c.upper[d]
                else:
                    b = c.vel_bounds if k == 1 else c.acc_bounds
                    if b is None:
                        continue
                    lo, hi = b[dim]
                q = sg.derivative_control_points(k, d)
                cp_v[k].append(float(np.max(np.maximum(lo - q, q - hi))))

    cat = lambda xs: np.concatenate(xs) if xs else np.zeros(0)
    report.checks.append(_worst("containment_cube", cat(pos_v), cat(pos_t), cfg.position_tol))
    if cfg.check_grid and grid is not None:
        report.checks.append(_worst("containment_grid", cat(grid_v), cat(grid_t), 0.0,
                                    "1 marks a sample outside every free cell"))
    for k, name in ((1, "velocity_bounds"), (2, "acceleration_bounds")):
        report.checks.append(_worst(name, cat(der_v[k][0]), cat(der_v[k][1]), cfg.derivative_tol))
    for k, name in ((0, "control_points_position"), (1, "control_points_velocity"),
                    (2, "control_points_acceleration")):
        tol = cfg.position_tol if k == 0 else cfg.derivative_tol
        seg_t = [c.t_start for c in cubes]
        report.checks.append(_worst(name, cp_v[k], seg_t[:len(cp_v[k])] if len(cp_v[k]) == len(cubes) else None,
                                    tol, "sufficient-condition bounds per segment"))

    cont_v, cont_t = [], []
    for a, b in zip(segs, segs[1:]):
        tj = b.t0
        for k in range(cfg.continuity_order + 1):
            for d in range(2):
                x, y = a.eval(tj, k, d), b.eval(tj, k, d)
                cont_v.append(abs(x - y) / max(1.0, abs(x), abs(y)))
                cont_t.append(tj)
    report.checks.append(_worst("continuity", cont_v, cont_t, cfg.continuity_tol, "relative jump at junctions"))

    for name, state, sg, t in (("start_state", start, segs[0], segs[0].t0),
                               ("goal_state", goal, segs[-1], segs[-1].t0 + segs[-1].alpha)):
        if state is None:
            continue
        viol = []
        for d, dim in enumerate(DIMS):
            for k, val in enumerate(state.derivatives(dim)):
                viol.append(abs(sg.eval(t, k, d) - val))
        report.checks.append(_worst(name, viol, [t] * len(viol), cfg.position_tol))
    return report
