import math

import numpy as np
import pytest

from scipy.ndimage import binary_dilation

from ssctraj.errors import InvalidHorizon
from ssctraj.semantics import (DynamicObstacle, GridConfig, LaneChangeDuration, RedLight, SemanticBoundary,
                               SemanticScene, SltGrid, SpeedLimit, StaticObstacle, StopSign, extract_boundaries,
                               render_occupancy)

CFG = GridConfig(ds=0.25, dl=0.1, dt=0.1, s_range=(-10.0, 40.0), l_range=(-4.0, 4.0))


def cell_box(grid, i, j, k):
    lo = [o + n * r for o, n, r in zip(grid.origin, (i, j, k), grid.resolution)]
    return lo, [a + r for a, r in zip(lo, grid.resolution)]


def test_static_box_is_time_extruded():
    scene = SemanticScene([StaticObstacle((10.0, 14.0), (-1.0, 1.0))])
    grid = render_occupancy(scene, 8.0, CFG)
    assert grid.shape[2] == 80
    first = grid.occupancy[:, :, 0]
    for k in range(grid.shape[2]):
        np.testing.assert_array_equal(grid.occupancy[:, :, k], first)
    # every cell whose closed extent meets the box, and no other
    s_edges, l_edges = grid.cell_edges(0), grid.cell_edges(1)
    expect = ((s_edges[1:, None] >= 10.0) & (s_edges[:-1, None] <= 14.0)
              & (l_edges[None, 1:] >= -1.0) & (l_edges[None, :-1] <= 1.0))
    np.testing.assert_array_equal(first, expect)


def test_dynamic_point_obstacle_example():
    scene = SemanticScene([DynamicObstacle.constant_velocity(0.0, 0.0, 5.0, 0.0, t_end=5.0)])
    grid = render_occupancy(scene, 5.0, CFG)
    assert grid.point_occupied(2.5, 0.0, 0.5)
    assert grid.point_occupied(2.6, 0.05, 0.52)
    assert not grid.point_occupied(10.0, 0.0, 0.5)
    assert not grid.point_occupied(2.5, 1.0, 0.5)


def _sweep_oracle(obs, grid, n_sub=50):
    """Cells touched by the footprint at finely sampled times."""
    occ = np.zeros(grid.shape, dtype=bool)
    nt = grid.shape[2]
    for k in range(nt):
        ts = np.linspace(k * grid.resolution[2], (k + 1) * grid.resolution[2], n_sub)
        ts = ts[(ts >= obs.times[0]) & (ts <= obs.times[-1])]
        for t in ts:
            s = np.interp(t, obs.times, obs.s)
            l = np.interp(t, obs.times, obs.l)
            s_e, l_e = grid.cell_edges(0), grid.cell_edges(1)
            si = (s_e[1:] >= s - obs.half_length) & (s_e[:-1] <= s + obs.half_length)
            li = (l_e[1:] >= l - obs.half_width) & (l_e[:-1] <= l + obs.half_width)
            occ[:, :, k] |= si[:, None] & li[None, :]
    return occ


def test_dynamic_rasterization_matches_sweep_oracle():
    obs = DynamicObstacle(1.0, 0.4, (0.3, 1.0, 2.2), (0.0, 4.0, 5.5), (-1.0, 0.2, 1.1))
    grid = render_occupancy(SemanticScene([obs]), 3.0, CFG)
    oracle = _sweep_oracle(obs, grid)
    # sound: every swept cell is occupied
    assert not np.any(oracle & ~grid.occupancy)
    # tight: occupied cells are within one cell of the sweep
    assert not np.any(grid.occupancy & ~binary_dilation(oracle, np.ones((3, 3, 1), bool)))


def test_red_light_window():
    cfg = GridConfig(s_range=(300.0, 340.0), l_range=(-2.0, 2.0))
    grid = render_occupancy(SemanticScene([RedLight(320.0, 0.0, 30.0)]), 40.0, cfg)
    assert grid.point_occupied(320.5, 0.0, 10.0)
    assert grid.point_occupied(321.9, -1.9, 29.95)
    assert not grid.point_occupied(320.5, 0.0, 30.2)
    assert not grid.point_occupied(318.0, 0.0, 10.0)
    assert not grid.point_occupied(323.0, 0.0, 10.0)


def test_empty_scene_and_invalid_horizon():
    grid = render_occupancy(SemanticScene(), 2.0, CFG)
    assert not grid.occupancy.any()
    for h in (0.0, -1.0, math.inf):
        with pytest.raises(InvalidHorizon):
            render_occupancy(SemanticScene(), h, CFG)


def test_constraint_like_elements_never_alter_occupancy():
    obstacles = [StaticObstacle((5.0, 6.0), (-1.0, 0.0)), RedLight(20.0, 1.0, 2.0)]
    rules = [SpeedLimit(4.0, 0.0, 30.0), StopSign(25.0), LaneChangeDuration(5.0, 0.0, 3.5)]
    a = render_occupancy(SemanticScene(obstacles), 4.0, CFG)
    b = render_occupancy(SemanticScene(obstacles + rules), 4.0, CFG)
    assert a.occupancy.tobytes() == b.occupancy.tobytes()


def _random_obstacle(rng):
    if rng.random() < 0.5:
        s = rng.uniform(-5, 35)
        l = rng.uniform(-3.5, 3.5)
        return StaticObstacle((s, s + rng.uniform(0.1, 4)), (l, l + rng.uniform(0.05, 2)))
    n = rng.integers(2, 5)
    t = np.sort(rng.uniform(0, 3, n)) + np.arange(n) * 1e-3
    return DynamicObstacle(rng.uniform(0, 2), rng.uniform(0, 1), tuple(t),
                           tuple(rng.uniform(-5, 35, n)), tuple(rng.uniform(-3, 3, n)))


def _inside(obs, rng):
    """A random point (s, l, t) on the continuous obstacle."""
    if isinstance(obs, StaticObstacle):
        return rng.uniform(*obs.s_range), rng.uniform(*obs.l_range), rng.uniform(0, 3)
    t = rng.uniform(obs.times[0], obs.times[-1])
    s = np.interp(t, obs.times, obs.s) + rng.uniform(-1, 1) * obs.half_length
    l = np.interp(t, obs.times, obs.l) + rng.uniform(-1, 1) * obs.half_width
    return s, l, t


def test_rasterization_soundness_random_scenes():
    rng = np.random.default_rng(11)
    for _ in range(100):
        obstacles = [_random_obstacle(rng) for _ in range(rng.integers(1, 4))]
        grid = render_occupancy(SemanticScene(obstacles), 3.0, CFG)
        for obs in obstacles:
            for _ in range(40):
                s, l, t = _inside(obs, rng)
                if not (CFG.s_range[0] < s < CFG.s_range[1] and CFG.l_range[0] < l < CFG.l_range[1] and t < 3.0):
                    continue
                assert grid.point_occupied(s, l, t)


def test_occupancy_monotone():
    rng = np.random.default_rng(12)
    for _ in range(30):
        obstacles = [_random_obstacle(rng) for _ in range(4)]
        prev = render_occupancy(SemanticScene(obstacles[:1]), 3.0, CFG).occupancy
        for n in range(2, 5):
            cur = render_occupancy(SemanticScene(obstacles[:n]), 3.0, CFG).occupancy
            assert not np.any(prev & ~cur)
            prev = cur


def test_ego_inflation():
    cfg = GridConfig(ds=0.25, dl=0.1, dt=0.1, s_range=(0.0, 20.0), l_range=(-3.0, 3.0),
                     ego_half_length=2.0, ego_half_width=1.0)
    grid = render_occupancy(SemanticScene([StaticObstacle((10.0, 11.0), (-0.5, 0.5))]), 1.0, cfg)
    assert grid.point_occupied(8.1, 1.4, 0.5)
    assert not grid.point_occupied(7.5, 0.0, 0.5)


def test_grid_is_fail_closed_outside_extent():
    grid = render_occupancy(SemanticScene(), 2.0, CFG)
    assert grid.point_occupied(-11.0, 0.0, 0.5)
    assert grid.point_occupied(0.0, 0.0, 2.5)
    assert not grid.box_free((-10.5, -1.0, 0.0), (0.0, 1.0, 1.0))
    assert grid.box_free((-10.0, -4.0, 0.0), (40.0, 4.0, 2.0))


def test_box_query_is_open():
    occ = np.zeros((10, 10, 10), dtype=bool)
    occ[5, 5, 5] = True
    grid = SltGrid((0.0, 0.0, 0.0), (1.0, 1.0, 1.0), occ)
    assert grid.box_free((0, 0, 0), (5, 10, 10))
    assert grid.box_free((6, 0, 0), (10, 10, 10))
    assert not grid.box_free((0, 0, 0), (5.01, 10, 10))
    assert not grid.box_free((5.4, 5.4, 5.4), (5.6, 5.6, 5.6))
    # counting via the summed-area table agrees with brute force
    rng = np.random.default_rng(0)
    occ = rng.random((12, 9, 7)) < 0.1
    grid = SltGrid((0, 0, 0), (1, 1, 1), occ)
    for _ in range(200):
        a = sorted(rng.integers(0, 13, 2)); b = sorted(rng.integers(0, 10, 2)); c = sorted(rng.integers(0, 8, 2))
        assert grid.count_occupied(a[0], a[1], b[0], b[1], c[0], c[1]) == occ[a[0]:a[1], b[0]:b[1], c[0]:c[1]].sum()


def test_extract_boundaries():
    (b,) = extract_boundaries(SemanticScene([SpeedLimit(4.0, 500.0, 700.0)]))
    assert (b.axis, b.lower, b.upper, b.hard, b.order, b.dim) == ("s", 500.0, 700.0, True, 1, "s")
    assert b.beta == (0.0, 4.0)
    assert extract_boundaries(SemanticScene([StaticObstacle((0, 1), (0, 1)), RedLight(3.0, 0, 1)])) == []
    (lc,) = extract_boundaries(SemanticScene([LaneChangeDuration(6.0, 0.0, 3.5)]))
    assert (lc.axis, lc.lower, lc.upper, lc.hard, lc.kind, lc.time_budget) == ("l", 0.0, 3.5, False, "time_budget", 6.0)
    (stop,) = extract_boundaries(SemanticScene([StopSign(60.0)]))
    assert stop.hard and stop.beta == (0.0, 0.0) and stop.lower == 60.0 and stop.upper == math.inf


@pytest.mark.parametrize("make", [
    lambda: SpeedLimit(0.0, 0.0, 1.0),
    lambda: SpeedLimit(5.0, 2.0, 2.0),
    lambda: LaneChangeDuration(0.0, 0.0, 1.0),
    lambda: StaticObstacle((1.0, 0.0), (0.0, 1.0)),
    lambda: DynamicObstacle(0.0, 0.0, (0.0, 0.0), (0.0, 1.0), (0.0, 0.0)),
    lambda: SemanticBoundary("s", 0.0, 1.0, True, "x", beta=(2.0, 1.0)),
])
def test_element_invariants(make):
    with pytest.raises(ValueError):
        make()
