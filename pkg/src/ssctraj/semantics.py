"""Semantic elements and their rendering into the slt configuration space.

Obstacle-like elements (static and dynamic obstacles, red lights) become
occupied cells of a 3-D grid over (s, l, t).  Constraint-like elements
(speed limits, stop signs, lane-change duration rules) become
:class:`SemanticBoundary` records consumed by the corridor builder.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import InvalidHorizon


@dataclass(frozen=True)
class StaticObstacle:
    s_range: tuple[float, float]
    l_range: tuple[float, float]

    def __post_init__(self):
        _check_range(self.s_range, "s_range")
        _check_range(self.l_range, "l_range")


@dataclass(frozen=True)
class DynamicObstacle:
    """Box footprint moving along a predicted (t, s, l) trajectory."""

    half_length: float
    half_width: float
    times: tuple[float, ...]
    s: tuple[float, ...]
    l: tuple[float, ...]

    def __post_init__(self):
        t = np.asarray(self.times, float)
        if len(t) < 1 or len(t) != len(self.s) or len(t) != len(self.l):
            raise ValueError("predicted trajectory needs matching t, s, l samples")
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("predicted trajectory timestamps must be strictly increasing")
        if self.half_length < 0.0 or self.half_width < 0.0:
            raise ValueError("footprint half-dimensions must be non-negative")

    @classmethod
    def constant_velocity(cls, s0, l0, s_dot, l_dot, t_end, half_length=0.0, half_width=0.0, t0=0.0):
        return cls(half_length, half_width, (t0, t_end),
                   (s0, s0 + s_dot * (t_end - t0)), (l0, l0 + l_dot * (t_end - t0)))


@dataclass(frozen=True)
class RedLight:
    s_stop: float
    t_on: float
    t_off: float

    def __post_init__(self):
        _check_range((self.t_on, self.t_off), "red light interval")


@dataclass(frozen=True)
class SpeedLimit:
    v_max: float
    s_begin: float
    s_end: float

    def __post_init__(self):
        if not self.v_max > 0.0:
            raise ValueError("speed limit must be positive")
        _check_range((self.s_begin, self.s_end), "speed limit range")


@dataclass(frozen=True)
class StopSign:
    s_stop: float


@dataclass(frozen=True)
class LaneChangeDuration:
    t_max: float
    d_begin: float
    d_end: float
    fluctuation: float = 1.0

    def __post_init__(self):
        if not self.t_max > 0.0:
            raise ValueError("lane change duration must be positive")
        if self.fluctuation < 0.0:
            raise ValueError("allowed fluctuation must be non-negative")
        _check_range((self.d_begin, self.d_end), "lane change lateral range")


SemanticElement = Union[StaticObstacle, DynamicObstacle, RedLight, SpeedLimit, StopSign, LaneChangeDuration]
OBSTACLE_LIKE = (StaticObstacle, DynamicObstacle, RedLight)
CONSTRAINT_LIKE = (SpeedLimit, StopSign, LaneChangeDuration)


def _check_range(r, what):
    lo, hi = r
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
        raise ValueError(f"{what} must satisfy begin < end, got {r}")


@dataclass(frozen=True)
class SemanticScene:
    elements: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))

    def obstacles(self):
        return [e for e in self.elements if isinstance(e, OBSTACLE_LIKE)]

    def constraints(self):
        return [e for e in self.elements if isinstance(e, CONSTRAINT_LIKE)]

    def shifted(self, dt: float) -> "SemanticScene":
        """Same scene with its time origin moved to ``dt`` (used for replanning)."""
        out = []
        for e in self.elements:
            if isinstance(e, DynamicObstacle):
                e = DynamicObstacle(e.half_length, e.half_width, tuple(t - dt for t in e.times), e.s, e.l)
            elif isinstance(e, RedLight):
                e = RedLight(e.s_stop, e.t_on - dt, e.t_off - dt)
            out.append(e)
        return SemanticScene(tuple(out))


@dataclass(frozen=True)
class SemanticBoundary:
    """Region of the slt space over which a constraint-like element applies.

    ``axis`` names the coordinate the region ``[lower, upper]`` is measured
    on.  A derivative constraint of ``order`` 1 or 2 bounds the ``dim``
    trajectory dimension to ``beta``; a time budget limits how long the
    trajectory may spend inside the region.
    """

    axis: str
    lower: float
    upper: float
    hard: bool
    kind: str
    dim: str = "s"
    order: int | None = None
    beta: tuple[float, float] | None = None
    time_budget: float | None = None
    fluctuation: float = 0.0
    source: int = -1

    def __post_init__(self):
        if self.axis not in ("s", "l", "t"):
            raise ValueError(f"unknown axis {self.axis!r}")
        if not self.lower < self.upper:
            raise ValueError("boundary needs lower < upper")
        if self.beta is not None and self.beta[0] > self.beta[1]:
            raise ValueError("boundary bounds need beta- <= beta+")

    def faces(self):
        return [f for f in (self.lower, self.upper) if math.isfinite(f)]


def extract_boundaries(scene: SemanticScene) -> list[SemanticBoundary]:
    out = []
    for idx, e in enumerate(scene.elements):
        if isinstance(e, SpeedLimit):
            out.append(SemanticBoundary("s", e.s_begin, e.s_end, True, "speed_limit",
                                        order=1, beta=(0.0, e.v_max), source=idx))
        elif isinstance(e, StopSign):
            # no forward motion past the stop line
            out.append(SemanticBoundary("s", e.s_stop, math.inf, True, "stop",
                                        order=1, beta=(0.0, 0.0), source=idx))
        elif isinstance(e, LaneChangeDuration):
            out.append(SemanticBoundary("l", e.d_begin, e.d_end, False, "time_budget",
                                        dim="l", time_budget=e.t_max, fluctuation=e.fluctuation, source=idx))
    return out


@dataclass(frozen=True)
class GridConfig:
    ds: float = 0.25
    dl: float = 0.1
    dt: float = 0.1
    s_range: tuple[float, float] = (-20.0, 200.0)
    l_range: tuple[float, float] = (-5.0, 5.0)
    ego_half_length: float = 0.0
    ego_half_width: float = 0.0
    red_light_depth: float = 2.0

    def __post_init__(self):
        if min(self.ds, self.dl, self.dt) <= 0.0:
            raise ValueError("grid resolutions must be positive")
        _check_range(self.s_range, "grid s_range")
        _check_range(self.l_range, "grid l_range")


class SltGrid:
    """Occupancy over (s, l, t) cells.

    Cell ``(i, j, k)`` covers ``[s0 + i ds, s0 + (i+1) ds) x ...``.  A box
    query counts the cells whose interior meets the box interior; anything
    reaching outside the grid extent is reported occupied.
    """

    AXES = ("s", "l", "t")

    def __init__(self, origin, resolution, occupancy):
        self.origin = tuple(float(o) for o in origin)
        self.resolution = tuple(float(r) for r in resolution)
        occ = np.ascontiguousarray(occupancy, dtype=bool)
        if occ.ndim != 3:
            raise ValueError("occupancy must be a 3-D array")
        if min(self.resolution) <= 0.0:
            raise ValueError("grid resolutions must be positive")
        occ.setflags(write=False)
        self.occupancy = occ
        self.shape = occ.shape
        self._sat = None
        self._sub = None

    def _build_sat(self):
        # summed-area table restricted to the bounding box of occupied cells
        occ = self.occupancy
        sub = []
        for ax in range(3):
            other = tuple(a for a in range(3) if a != ax)
            hit = np.flatnonzero(occ.any(axis=other))
            sub.append((int(hit[0]), int(hit[-1]) + 1) if hit.size else (0, 0))
        self._sub = sub
        if any(a == b for a, b in sub):
            self._sat = np.zeros((1, 1, 1), dtype=np.int32)
            return
        (a0, a1), (b0, b1), (c0, c1) = sub
        sat = np.zeros((a1 - a0 + 1, b1 - b0 + 1, c1 - c0 + 1), dtype=np.int32)
        sat[1:, 1:, 1:] = occ[a0:a1, b0:b1, c0:c1]
        for ax in (2, 1, 0):
            np.cumsum(sat, axis=ax, out=sat)
        self._sat = sat

    @property
    def upper(self):
        return tuple(o + n * r for o, n, r in zip(self.origin, self.shape, self.resolution))

    def cell_edges(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.resolution[axis] * np.arange(self.shape[axis] + 1)

    def index_range(self, axis: int, lo: float, hi: float):
        """Half-open index range of cells whose interior meets ``(lo, hi)``."""
        o, r = self.origin[axis], self.resolution[axis]
        a = (lo - o) / r
        b = (hi - o) / r
        i0 = math.floor(a + 1e-9)
        i1 = math.ceil(b - 1e-9)
        if i1 <= i0:
            i1 = i0 + 1
        return i0, i1

    def count_occupied(self, i0, i1, j0, j1, k0, k1) -> int:
        """Number of occupied cells in the index box ``[i0, i1) x [j0, j1) x [k0, k1)``."""
        if self._sat is None:
            self._build_sat()
        (a0, a1), (b0, b1), (c0, c1) = self._sub
        i0, i1 = max(i0, a0) - a0, min(i1, a1) - a0
        j0, j1 = max(j0, b0) - b0, min(j1, b1) - b0
        k0, k1 = max(k0, c0) - c0, min(k1, c1) - c0
        if i1 <= i0 or j1 <= j0 or k1 <= k0:
            return 0
        S = self._sat
        return int(S[i1, j1, k1] - S[i0, j1, k1] - S[i1, j0, k1] - S[i1, j1, k0]
                   + S[i0, j0, k1] + S[i0, j1, k0] + S[i1, j0, k0] - S[i0, j0, k0])

    def box_free(self, lo, hi) -> bool:
        """True iff the open box ``(lo, hi)`` lies in the grid and meets no occupied cell."""
        idx = []
        for ax in range(3):
            i0, i1 = self.index_range(ax, lo[ax], hi[ax])
            if i0 < 0 or i1 > self.shape[ax]:
                return False
            idx.extend((i0, i1))
        i0, i1, j0, j1, k0, k1 = idx
        return self.count_occupied(i0, i1, j0, j1, k0, k1) == 0

    def point_occupied(self, s, l, t) -> bool:
        idx = []
        for ax, v in enumerate((s, l, t)):
            i = math.floor((v - self.origin[ax]) / self.resolution[ax])
            if i < 0 or i >= self.shape[ax]:
                return True
            idx.append(i)
        return bool(self.occupancy[tuple(idx)])


def _closed_cells(o, r, n, lo, hi):
    # cells whose closed extent touches the closed interval [lo, hi]
    i0 = 0 if lo == -math.inf else max(math.ceil((lo - o) / r) - 1, 0)
    i1 = n - 1 if hi == math.inf else min(math.floor((hi - o) / r), n - 1)
    return i0, i1 + 1


def render_occupancy(scene: SemanticScene, horizon: float, cfg: GridConfig = GridConfig()) -> SltGrid:
    if not horizon > 0.0 or not math.isfinite(horizon):
        raise InvalidHorizon(f"planning horizon must be positive, got {horizon}")
    s0, s1 = cfg.s_range
    l0, l1 = cfg.l_range
    ns = math.ceil((s1 - s0) / cfg.ds - 1e-9)
    nl = math.ceil((l1 - l0) / cfg.dl - 1e-9)
    nt = math.ceil(horizon / cfg.dt - 1e-9)
    occ = np.zeros((ns, nl, nt), dtype=bool)
    hl, hw = cfg.ego_half_length, cfg.ego_half_width

    def mark(s_lo, s_hi, l_lo, l_hi, k0, k1):
        i0, i1 = _closed_cells(s0, cfg.ds, ns, s_lo, s_hi)
        j0, j1 = _closed_cells(l0, cfg.dl, nl, l_lo, l_hi)
        if i0 < i1 and j0 < j1 and k0 < k1:
            occ[i0:i1, j0:j1, k0:k1] = True

    t_edges = cfg.dt * np.arange(nt + 1)
    for e in scene.elements:
        if isinstance(e, StaticObstacle):
            mark(e.s_range[0] - hl, e.s_range[1] + hl, e.l_range[0] - hw, e.l_range[1] + hw, 0, nt)
        elif isinstance(e, RedLight):
            k0, k1 = _closed_cells(0.0, cfg.dt, nt, e.t_on, e.t_off)
            mark(e.s_stop - hl, e.s_stop + cfg.red_light_depth + hl, -math.inf, math.inf, k0, k1)
        elif isinstance(e, DynamicObstacle):
            _mark_dynamic(e, t_edges, mark, hl, hw)
    return SltGrid((s0, l0, 0.0), (cfg.ds, cfg.dl, cfg.dt), occ)


def _mark_dynamic(e: DynamicObstacle, t_edges, mark, hl, hw):
    times = np.asarray(e.times, float)
    ss = np.asarray(e.s, float)
    ll = np.asarray(e.l, float)
    for k in range(len(t_edges) - 1):
        ta = max(t_edges[k], times[0])
        tb = min(t_edges[k + 1], times[-1])
        if ta > tb:
            continue
        inside = (times > ta) & (times < tb)
        tq = np.concatenate([[ta, tb], times[inside]])
        sq = np.interp(tq, times, ss)
        lq = np.interp(tq, times, ll)
        mark(sq.min() - e.half_length - hl, sq.max() + e.half_length + hl,
             lq.min() - e.half_width - hw, lq.max() + e.half_width + hw, k, k + 1)
