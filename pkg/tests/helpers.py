"""Independent checks shared by the unit and acceptance suites."""
import numpy as np

from ssctraj.corridor import Seed, initial_cube
from ssctraj.semantics import (DynamicObstacle, GridConfig, SemanticScene, SpeedLimit, StaticObstacle,
                               extract_boundaries, render_occupancy)

# overlaps thinner than this fraction of a cell are round-off of exact grid steps
SLACK = 1e-9


def occupied_cells_in(cube, grid):
    """Occupied cells whose interior meets the cube interior, by direct slicing.

    Returns -1 if the cube reaches outside the grid extent.
    """
    sl = []
    for ax in range(3):
        e = grid.cell_edges(ax)
        r = grid.resolution[ax]
        lo, hi = cube.lower[ax], cube.upper[ax]
        if lo < e[0] - SLACK * r or hi > e[-1] + SLACK * r:
            return -1
        meet = np.flatnonzero((e[1:] > lo + SLACK * r) & (e[:-1] < hi - SLACK * r))
        sl.append(slice(meet[0], meet[-1] + 1) if meet.size else slice(0, 0))
    return int(grid.occupancy[tuple(sl)].sum())


def corridor_violations(corridor, grid, seeds):
    """Names of violated corridor invariants (empty when all hold)."""
    bad = []
    cubes = corridor.cubes
    for j, c in enumerate(cubes):
        if occupied_cells_in(c, grid) != 0:
            bad.append(f"cube {j} meets occupied cells")
        if not all(a < b for a, b in zip(c.lower, c.upper)):
            bad.append(f"cube {j} is degenerate")
    for j in range(len(cubes) - 1):
        a, b = cubes[j], cubes[j + 1]
        if a.t_end != b.t_start:
            bad.append(f"t-chaining broken between {j} and {j + 1}")
        for ax in (0, 1):
            if min(a.upper[ax], b.upper[ax]) < max(a.lower[ax], b.lower[ax]):
                bad.append(f"cubes {j} and {j + 1} do not overlap on axis {ax}")
    for i, sd in enumerate(seeds):
        if not any(c.contains(sd) for c in cubes):
            bad.append(f"seed {i} not covered")
    return bad


def random_scene(rng, horizon=4.0):
    """Random obstacles and speed limits around a collision-free seed chain."""
    v = rng.uniform(2.0, 12.0)
    l0 = rng.uniform(-1.0, 1.0)
    l1 = l0 + rng.choice([0.0, rng.uniform(-2.0, 2.0)])
    ts = np.arange(0.0, horizon + 1e-9, 0.15)
    seeds = [Seed(v * t, l0 + (l1 - l0) * t / horizon, t) for t in ts]
    cfg = GridConfig(s_range=(-20.0, v * horizon + 60.0), l_range=(-4.0, 4.0))
    pairs = [initial_cube(a, b, (cfg.ds, cfg.dl, cfg.dt)) for a, b in zip(seeds, seeds[1:])]
    elements = []
    while len(elements) < rng.integers(2, 7):
        if rng.random() < 0.5:
            s = rng.uniform(-10.0, v * horizon + 40.0)
            l = rng.uniform(-3.5, 3.0)
            e = StaticObstacle((s, s + rng.uniform(0.5, 4.0)), (l, l + rng.uniform(0.2, 1.5)))
        else:
            e = DynamicObstacle.constant_velocity(rng.uniform(-15.0, v * horizon + 30.0), rng.uniform(-3.0, 3.0),
                                                  rng.uniform(0.0, 15.0), rng.uniform(-0.5, 0.5), horizon + 1.0,
                                                  half_length=rng.uniform(0.5, 2.5), half_width=rng.uniform(0.2, 1.0))
        g = render_occupancy(SemanticScene([e]), horizon + 0.5, cfg)
        if all(g.box_free(c.lower, c.upper) for c in pairs):
            elements.append(e)
    if rng.random() < 0.5:
        a = rng.uniform(0.0, v * horizon)
        elements.append(SpeedLimit(rng.uniform(v, v + 5.0), a, a + rng.uniform(5.0, 40.0)))
    scene = SemanticScene(elements)
    return scene, seeds, render_occupancy(scene, horizon + 0.5, cfg), extract_boundaries(scene)
