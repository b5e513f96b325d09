"""Spatio-temporal semantic corridor construction.

Pipeline: seeds -> initial cubes from consecutive seed pairs -> round-robin
inflation that stops at obstacles, semantic boundary faces and size limits
-> exact time chaining -> constraint association -> relaxation of faces that
may legitimately be pushed past a boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

from .errors import EmptyFeasibleInterval, EmptyInput, NonIncreasingTime, SeedCubeCollision
from .frenet import FrenetState
from .semantics import SemanticBoundary, SltGrid

AXES = ("s", "l", "t")
AXIS_INDEX = {"s": 0, "l": 1, "t": 2}
# round-robin order; time never grows backward
FACES = ("s+", "s-", "l+", "l-", "t+")
ALL_FACES = FACES + ("t-",)


class Seed(NamedTuple):
    s: float
    l: float
    t: float


@dataclass(frozen=True)
class DynamicLimits:
    """Global derivative limits per trajectory dimension, ``(lower, upper)``."""

    vel_s: tuple[float, float] = (0.0, 30.0)
    vel_l: tuple[float, float] = (-3.0, 3.0)
    acc_s: tuple[float, float] = (-3.0, 2.0)
    acc_l: tuple[float, float] = (-2.5, 2.5)

    def __post_init__(self):
        for name in ("vel_s", "vel_l", "acc_s", "acc_l"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise ValueError(f"{name} must be a finite (lower, upper) pair")

    @property
    def vel(self):
        return {"s": tuple(self.vel_s), "l": tuple(self.vel_l)}

    @property
    def acc(self):
        return {"s": tuple(self.acc_s), "l": tuple(self.acc_l)}


@dataclass(frozen=True)
class CorridorConfig:
    max_inflation: tuple[float, float, float] = (50.0, 3.5, 3.0)
    limits: DynamicLimits = field(default_factory=DynamicLimits)


@dataclass(frozen=True)
class DrivingCube:
    """Axis-aligned slt box.

    ``face_tags`` records why each face stopped moving: ``"obstacle"``,
    ``"limit"``, ``"disabled"``, ``"chain"``, ``"seed"`` or
    ``"hard:<i>"`` / ``"soft:<i>"`` for a face flush with boundary ``i``.
    """

    lower: tuple[float, float, float]
    upper: tuple[float, float, float]
    vel_bounds: dict | None = None
    acc_bounds: dict | None = None
    soft_margins: dict = field(default_factory=dict)
    provenance: tuple[int, ...] = ()
    face_tags: dict = field(default_factory=dict)
    associated: tuple[int, ...] = ()

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != 3 or len(hi) != 3:
            raise ValueError("cube bounds need three axes")
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValueError(f"cube needs lower < upper on every axis, got {lo} / {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def range(self, axis) -> tuple[float, float]:
        ax = AXIS_INDEX.get(axis, axis)
        return self.lower[ax], self.upper[ax]

    @property
    def t_start(self) -> float:
        return self.lower[2]

    @property
    def t_end(self) -> float:
        return self.upper[2]

    @property
    def duration(self) -> float:
        return self.upper[2] - self.lower[2]

    def contains(self, point, tol: float = 0.0) -> bool:
        """Closed containment of an ``(s, l, t)`` point."""
        return all(lo - tol <= v <= hi + tol for v, lo, hi in zip(point, self.lower, self.upper))

    def with_bounds(self, lower, upper, **kw) -> "DrivingCube":
        return replace(self, lower=tuple(lower), upper=tuple(upper), **kw)


@dataclass(frozen=True)
class Corridor:
    cubes: tuple[DrivingCube, ...]
    seeds: tuple[Seed, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "cubes", tuple(self.cubes))
        object.__setattr__(self, "seeds", tuple(self.seeds))

    def __len__(self):
        return len(self.cubes)

    def __iter__(self):
        return iter(self.cubes)

    def __getitem__(self, i):
        return self.cubes[i]

    @property
    def junction_times(self) -> list[float]:
        if not self.cubes:
            return []
        return [self.cubes[0].t_start] + [c.t_end for c in self.cubes]


def generate_seeds(simulated_states: Sequence[FrenetState], initial_state: FrenetState) -> list[Seed]:
    """Initial state followed by the projected simulated states, one seed per time stamp."""
    if not simulated_states:
        raise EmptyInput("no simulated states to build seeds from")
    ts = [st.t for st in simulated_states]
    if any(b < a for a, b in zip(ts, ts[1:])):
        raise NonIncreasingTime("simulated states must be sorted by time")
    if initial_state.t > ts[0]:
        raise NonIncreasingTime("initial state is later than the first simulated state")
    seeds = [Seed(initial_state.s, initial_state.l, initial_state.t)]
    for st in simulated_states:
        if st.t <= seeds[-1].t:
            continue
        seeds.append(Seed(st.s, st.l, st.t))
    return seeds


def initial_cube(prev: Seed, nxt: Seed, resolution=(0.25, 0.1, 0.1), index: tuple[int, int] = ()) -> DrivingCube:
    """Bounding box of two seeds; degenerate axes are widened by one cell."""
    if not prev.t < nxt.t:
        raise NonIncreasingTime(f"seed times must increase ({prev.t} -> {nxt.t})")
    lo, hi = [], []
    for ax in range(3):
        a, b = sorted((prev[ax], nxt[ax]))
        if a == b:
            a -= 0.5 * resolution[ax]
            b += 0.5 * resolution[ax]
        lo.append(a)
        hi.append(b)
    tags = {f: "seed" for f in ALL_FACES}
    return DrivingCube(tuple(lo), tuple(hi), provenance=tuple(index), face_tags=tags)


def check_initial_cube_free(cube: DrivingCube, grid: SltGrid) -> bool:
    return grid.box_free(cube.lower, cube.upper)


def _interiors_meet(cube: DrivingCube, b: SemanticBoundary) -> bool:
    lo, hi = cube.range(b.axis)
    return hi > b.lower and lo < b.upper


def _inside(cube: DrivingCube, b: SemanticBoundary) -> bool:
    lo, hi = cube.range(b.axis)
    return lo >= b.lower and hi <= b.upper


def entry_directions(seeds: Sequence[Seed], boundaries: Sequence[SemanticBoundary]) -> list[str | None]:
    """Direction (``'+'``/``'-'``) in which the seed chain first enters each boundary region."""
    out = []
    for b in boundaries:
        entry = None
        if b.axis != "t":
            ax = AXIS_INDEX[b.axis]
            for p, q in zip(seeds, seeds[1:]):
                a, c = p[ax], q[ax]
                if a < b.lower <= c:
                    entry = "+"
                    break
                if a > b.upper >= c:
                    entry = "-"
                    break
        out.append(entry)
    return out


def exit_directions(seeds: Sequence[Seed], boundaries: Sequence[SemanticBoundary]) -> list[str | None]:
    """Direction in which the seed chain first leaves each boundary region
    after having been inside it (``None`` if it never does)."""
    out = []
    for b in boundaries:
        leave = None
        if b.axis != "t":
            ax = AXIS_INDEX[b.axis]
            for p, q in zip(seeds, seeds[1:]):
                if not b.lower <= p[ax] <= b.upper:
                    continue
                if q[ax] > b.upper:
                    leave = "+"
                    break
                if q[ax] < b.lower:
                    leave = "-"
                    break
        out.append(leave)
    return out


def inflation_directions(cube: DrivingCube, boundaries: Sequence[SemanticBoundary],
                         entries: Sequence[str | None] | None = None,
                         exits: Sequence[str | None] | None = None) -> set[str]:
    """Faces allowed to grow.

    A cube straddling a hard boundary may not grow in the direction opposite
    to where the seed chain entered the region.  If it straddles the face
    through which the chain leaves the region, it may not grow onward in
    the leaving direction either: the constraint it inherits would
    otherwise extend well past the region.
    """
    dirs = set(FACES)
    if entries is None:
        entries = [None] * len(boundaries)
    if exits is None:
        exits = [None] * len(boundaries)
    for b, entry, leave in zip(boundaries, entries, exits):
        if not b.hard or not _interiors_meet(cube, b) or _inside(cube, b):
            continue
        if entry is not None:
            dirs.discard(f"{b.axis}-" if entry == "+" else f"{b.axis}+")
        if leave is not None:
            lo, hi = cube.range(b.axis)
            face = b.upper if leave == "+" else b.lower
            if lo < face < hi:
                dirs.discard(f"{b.axis}{leave}")
    return dirs


@dataclass(frozen=True)
class TimeBudgetWindow:
    """A soft time-budget boundary bound to the seed chain: cubes overlapping
    the lateral band stop growing in time at ``t_face``."""

    t_face: float
    l_range: tuple[float, float]
    boundary: int


def time_budget_windows(seeds: Sequence[Seed], boundaries: Sequence[SemanticBoundary]) -> list[TimeBudgetWindow]:
    out = []
    for i, b in enumerate(boundaries):
        if b.kind != "time_budget" or b.time_budget is None:
            continue
        ax = AXIS_INDEX[b.axis]
        t_enter = None
        for p, q in zip(seeds, seeds[1:]):
            if b.lower < q[ax] < b.upper and not (b.lower < p[ax] < b.upper):
                t_enter = p.t
                break
        if t_enter is None and seeds and b.lower < seeds[0][ax] < b.upper:
            t_enter = seeds[0].t
        if t_enter is not None:
            out.append(TimeBudgetWindow(t_enter + b.time_budget, (b.lower, b.upper), i))
    return out


def _faces_for(axis: int, sign: int, cube_lo, cube_hi, boundaries, windows, skip=()):
    """Boundary face values a step along ``axis`` may not cross, with tags."""
    out = []
    for i, b in enumerate(boundaries):
        if not b.hard or i in skip or AXIS_INDEX[b.axis] != axis:
            continue
        for f in b.faces():
            out.append((f, f"hard:{i}"))
    if axis == 2 and sign > 0:
        for w in windows:
            lo, hi = w.l_range
            if cube_hi[1] > lo and cube_lo[1] < hi:
                out.append((w.t_face, f"soft:{w.boundary}"))
    return out


def inflate_cube(cube: DrivingCube, dirs, boundaries: Sequence[SemanticBoundary], grid: SltGrid,
                 cfg: CorridorConfig = CorridorConfig(), windows: Sequence[TimeBudgetWindow] = ()) -> DrivingCube:
    """Grow ``cube`` one grid cell at a time, round robin over ``dirs``."""
    lo = list(cube.lower)
    hi = list(cube.upper)
    tags = dict(cube.face_tags)
    for f in FACES:
        if f not in dirs:
            tags[f] = "disabled"
    limit_lo = [lo[a] - cfg.max_inflation[a] for a in range(3)]
    limit_hi = [hi[a] + cfg.max_inflation[a] for a in range(3)]
    res = grid.resolution
    open_faces = [f for f in FACES if f in dirs]
    while open_faces:
        still_open = []
        for f in open_faces:
            ax = AXIS_INDEX[f[0]]
            sign = 1 if f[1] == "+" else -1
            cur = hi[ax] if sign > 0 else lo[ax]
            target = cur + sign * res[ax]
            close = None
            lim = limit_hi[ax] if sign > 0 else limit_lo[ax]
            if sign * (target - lim) >= 0.0:
                target, close = lim, "limit"
            for fv, tag in _faces_for(ax, sign, lo, hi, boundaries, windows):
                crosses = cur <= fv < target if sign > 0 else target < fv <= cur
                if crosses and sign * (fv - target) <= 0.0:
                    target, close = fv, tag
            if target == cur:
                tags[f] = close or "limit"
                continue
            slab_lo, slab_hi = list(lo), list(hi)
            if sign > 0:
                slab_lo[ax], slab_hi[ax] = cur, target
            else:
                slab_lo[ax], slab_hi[ax] = target, cur
            if not grid.box_free(slab_lo, slab_hi):
                tags[f] = "obstacle"
                continue
            if sign > 0:
                hi[ax] = target
            else:
                lo[ax] = target
            if close is not None:
                tags[f] = close
            else:
                still_open.append(f)
        open_faces = still_open
    return cube.with_bounds(lo, hi, face_tags=tags)


def generate_corridor(seeds: Sequence[Seed], boundaries: Sequence[SemanticBoundary], grid: SltGrid,
                      cfg: CorridorConfig = CorridorConfig()) -> Corridor:
    seeds = [Seed(*s) for s in seeds]
    if len(seeds) < 2:
        raise EmptyInput("corridor generation needs at least two seeds")
    if any(b.t <= a.t for a, b in zip(seeds, seeds[1:])):
        raise NonIncreasingTime("seed times must be strictly increasing")
    entries = entry_directions(seeds, boundaries)
    exits = exit_directions(seeds, boundaries)
    windows = time_budget_windows(seeds, boundaries)
    cubes: list[DrivingCube] = []
    pairs: list[tuple[int, int]] = []
    for i in range(1, len(seeds)):
        if cubes and cubes[-1].contains(seeds[i]):
            continue
        c = initial_cube(seeds[i - 1], seeds[i], grid.resolution, index=(i - 1, i))
        if not check_initial_cube_free(c, grid):
            raise SeedCubeCollision(f"seeds {i - 1} and {i} span an occupied region", pair=(i - 1, i))
        dirs = inflation_directions(c, boundaries, entries, exits)
        c = inflate_cube(c, dirs, boundaries, grid, cfg, windows)
        cubes.append(c)
        pairs.append((i - 1, i))
    return Corridor(_chain_times(cubes, pairs, seeds), seeds)


def _exit_time(cube, p, q):
    """Latest time in ``[p.t, q.t]`` up to which the straight move from seed
    ``p`` to seed ``q`` stays inside ``cube`` (``p`` must be inside)."""
    w_max = 1.0
    for ax in (0, 1):
        d = q[ax] - p[ax]
        if d > 0.0:
            w_max = min(w_max, (cube.upper[ax] - p[ax]) / d)
        elif d < 0.0:
            w_max = min(w_max, (cube.lower[ax] - p[ax]) / d)
    return p.t + max(w_max, 0.0) * (q.t - p.t)


def _chain_times(cubes, pairs, seeds):
    """Clip t-extents so consecutive cubes share exactly one time stamp.

    The later cube was opened by a seed pair ``(a, b)`` whose first seed lies
    in the earlier cube.  The shared stamp is the midpoint of the interval,
    starting at seed ``a``, during which the straight move from ``a`` to
    ``b`` is inside both cubes; the seed path therefore always crosses the
    junction inside both cubes.  The previous junction precedes the second
    seed of this cube's own pair, which is no later than ``a``, so every
    cube keeps a positive duration.
    """
    n = len(cubes)
    t_lo = [c.t_start for c in cubes]
    t_hi = [c.t_end for c in cubes]
    t_lo[0] = seeds[0].t
    tags = [dict(c.face_tags) for c in cubes]
    for j in range(n - 1):
        a, b = pairs[j + 1]
        ta = seeds[a].t
        t_end = min(_exit_time(cubes[j], seeds[a], seeds[b]), t_hi[j], t_hi[j + 1])
        t_star = 0.5 * (ta + max(t_end, ta))
        # a face capped by a soft time budget keeps its tag so relaxation may
        # later move the junction by the allowed fluctuation
        if t_star != t_hi[j] and not tags[j].get("t+", "").startswith("soft:"):
            tags[j]["t+"] = "chain"
        t_hi[j] = t_star
        t_lo[j + 1] = t_star
        tags[j + 1]["t-"] = "chain"
    if t_hi[-1] != seeds[-1].t:
        tags[-1]["t+"] = "chain"
    t_hi[-1] = seeds[-1].t
    out = []
    for c, lo, hi, tg in zip(cubes, t_lo, t_hi, tags):
        out.append(c.with_bounds((c.lower[0], c.lower[1], lo), (c.upper[0], c.upper[1], hi), face_tags=tg))
    return out


def _intersect(a, b):
    return (max(a[0], b[0]), min(a[1], b[1]))


def associate_constraints(corridor: Corridor, boundaries: Sequence[SemanticBoundary],
                          limits: DynamicLimits = DynamicLimits()) -> Corridor:
    """Attach derivative bounds (global limits intersected with every hard
    boundary the cube meets) and relaxation margins to each cube."""
    v_glob, a_glob = limits.vel, limits.acc
    decel = max(-limits.acc_s[0], 1e-9)
    out = []
    for j, c in enumerate(corridor.cubes):
        vel = dict(v_glob)
        acc = dict(a_glob)
        assoc = []
        for i, b in enumerate(boundaries):
            if not b.hard or b.beta is None or not _interiors_meet(c, b):
                continue
            assoc.append(i)
            target = vel if b.order == 1 else acc
            target[b.dim] = _intersect(target[b.dim], b.beta)
        for name, bounds in (("velocity", vel), ("acceleration", acc)):
            for dim, (lo, hi) in bounds.items():
                if lo > hi:
                    raise EmptyFeasibleInterval(
                        f"cube {j}: {name} bounds on {dim} are empty ({lo} > {hi})")
        margins = {}
        if assoc:
            # velocity-matching distance toward the unconstrained neighbourhood
            dv = abs(v_glob["s"][1] - vel["s"][1])
            m = dv * (dv / decel)
            for f in ("s-", "s+"):
                tag = c.face_tags.get(f, "")
                if tag == "disabled" or any(tag == f"hard:{i}" for i in assoc):
                    margins[f] = m
        for f, tag in c.face_tags.items():
            if tag.startswith("soft:"):
                b = boundaries[int(tag[5:])]
                margins[f] = b.fluctuation
        out.append(replace(c, vel_bounds=vel, acc_bounds=acc, soft_margins=margins, associated=tuple(assoc)))
    return Corridor(out, corridor.seeds)


def relax_cubes(corridor: Corridor, grid: SltGrid, boundaries: Sequence[SemanticBoundary] = (),
                min_duration: float = 0.05) -> Corridor:
    """Push faces that carry a relaxation margin outward, cell by cell, as
    long as the swept slab is free and no foreign hard boundary is crossed."""
    cubes = list(corridor.cubes)
    res = grid.resolution
    for j, c in enumerate(cubes):
        lo, hi = list(c.lower), list(c.upper)
        for f in ("s+", "s-", "l+", "l-"):
            margin = c.soft_margins.get(f, 0.0)
            if margin <= 0.0:
                continue
            ax = AXIS_INDEX[f[0]]
            sign = 1 if f[1] == "+" else -1
            start = hi[ax] if sign > 0 else lo[ax]
            stop = start + sign * margin
            faces = [fv for fv, _ in _faces_for(ax, sign, lo, hi, boundaries, (), skip=c.associated)]
            for fv in faces:
                if (sign > 0 and start <= fv < stop) or (sign < 0 and stop < fv <= start):
                    stop = fv
            cur = start
            while sign * (stop - cur) > 0.0:
                target = cur + sign * res[ax]
                if sign * (target - stop) > 0.0:
                    target = stop
                slab_lo, slab_hi = list(lo), list(hi)
                if sign > 0:
                    slab_lo[ax], slab_hi[ax] = cur, target
                else:
                    slab_lo[ax], slab_hi[ax] = target, cur
                if not grid.box_free(slab_lo, slab_hi):
                    break
                cur = target
            if sign > 0:
                hi[ax] = cur
            else:
                lo[ax] = cur
        cubes[j] = c.with_bounds(lo, hi)

    for j in range(len(cubes) - 1):
        margin = cubes[j].soft_margins.get("t+", 0.0)
        if margin <= 0.0:
            continue
        c, nxt = cubes[j], cubes[j + 1]
        stop = min(c.t_end + margin, nxt.t_end - min_duration)
        for sd in corridor.seeds:
            # seeds moved from the next cube into this one must stay covered
            if c.t_end < sd.t <= stop and not (c.lower[0] <= sd.s <= c.upper[0] and c.lower[1] <= sd.l <= c.upper[1]):
                stop = min(stop, sd.t - 1e-9)
        cur = c.t_end
        while stop - cur > 0.0:
            target = min(cur + res[2], stop)
            if not grid.box_free((c.lower[0], c.lower[1], cur), (c.upper[0], c.upper[1], target)):
                break
            cur = target
        if cur > c.t_end:
            cubes[j] = c.with_bounds(c.lower, (c.upper[0], c.upper[1], cur))
            cubes[j + 1] = nxt.with_bounds((nxt.lower[0], nxt.lower[1], cur), nxt.upper)
    return Corridor(cubes, corridor.seeds)


def split_first_cube(corridor: Corridor, start: FrenetState, degree: int = 5, safety: float = 0.5,
                     min_duration: float = 0.05) -> Corridor:
    """Split the first cube in time so the start state leaves room in it.

    The second control point of the first segment and of its velocity curve
    are fixed by the start state: ``x0 + v0 a / m`` and ``v0 + a0 a / (m-1)``
    for segment duration ``a``.  On a long segment they can leave the
    cube's bounds even though a smooth trajectory exists (the bounds are
    sufficient conditions).  Cutting the cube at a shorter duration keeps
    both points at most ``safety`` of the way to their bounds.  Splitting a
    cube in time never removes a trajectory the unsplit cube admitted.
    """
    if not corridor.cubes:
        return corridor
    c = corridor.cubes[0]
    m = degree
    alpha = c.duration
    for d, dim in enumerate(("s", "l")):
        x0, v0, a0 = start.derivatives(dim)
        lo, hi = c.range(d)
        if v0 > 0.0 and hi > x0:
            alpha = min(alpha, safety * m * (hi - x0) / v0)
        elif v0 < 0.0 and x0 > lo:
            alpha = min(alpha, safety * m * (x0 - lo) / -v0)
        if c.vel_bounds is not None:
            vlo, vhi = c.vel_bounds[dim]
            if a0 > 0.0 and vhi > v0:
                alpha = min(alpha, safety * (m - 1) * (vhi - v0) / a0)
            elif a0 < 0.0 and v0 > vlo:
                alpha = min(alpha, safety * (m - 1) * (v0 - vlo) / -a0)
    alpha = max(alpha, min_duration)
    if alpha >= c.duration - min_duration:
        return corridor
    t_cut = c.t_start + alpha
    first = c.with_bounds(c.lower, (c.upper[0], c.upper[1], t_cut), face_tags={**c.face_tags, "t+": "split"})
    second = c.with_bounds((c.lower[0], c.lower[1], t_cut), c.upper, face_tags={**c.face_tags, "t-": "split"})
    return Corridor((first, second) + corridor.cubes[1:], corridor.seeds)


def build_corridor(seeds, boundaries, grid, cfg: CorridorConfig = CorridorConfig()) -> Corridor:
    """Full semantic corridor generation: inflation, association, relaxation."""
    corridor = generate_corridor(seeds, boundaries, grid, cfg)
    corridor = associate_constraints(corridor, boundaries, cfg.limits)
    return relax_cubes(corridor, grid, boundaries)
