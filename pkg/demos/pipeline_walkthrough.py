"""Build a scene in code and run each planning stage by hand.

An ego at 5 m/s follows a car 20 m ahead and enters a 5.5 m/s zone at
s = 15.

    python demos/pipeline_walkthrough.py
"""
from ssctraj import (
    DynamicObstacle,
    FrenetState,
    GridConfig,
    SemanticScene,
    SpeedLimit,
    build_corridor,
    extract_boundaries,
    generate_seeds,
    plan,
    render_occupancy,
    verify,
)

HORIZON = 6.0


def main():
    scene = SemanticScene((
        DynamicObstacle.constant_velocity(20.0, 0.0, 5.0, 0.0, HORIZON, 2.0, 1.0),
        SpeedLimit(5.5, 15.0, 90.0),
    ))
    grid = render_occupancy(scene, HORIZON, GridConfig(s_range=(-20.0, 150.0)))
    boundaries = extract_boundaries(scene)

    # constant-speed seeds stand in for a behavior planner's rollout
    ego = FrenetState(0.0, 0.0, 0.0, 5.0)
    states = [FrenetState(5.0 * t, 0.0, t, 5.0) for t in (0.5 * k for k in range(1, 13))]
    seeds = generate_seeds(states, ego)

    corridor = build_corridor(seeds, boundaries, grid)
    print(f"{len(corridor)} cubes")
    for c in corridor.cubes:
        print(f"  t [{c.t_start:4.2f}, {c.t_end:4.2f}]  s [{c.lower[0]:6.2f}, {c.upper[0]:6.2f}]"
              f"  l [{c.lower[1]:5.2f}, {c.upper[1]:5.2f}]  s_dot {c.vel_bounds['s']}")

    goal = FrenetState(states[-1].s, 0.0, states[-1].t, 5.0)
    traj, sol, _ = plan(corridor, ego, goal)
    print(f"jerk cost {sol.cost:.4f}, solver status {sol.status}")

    report = verify(traj, corridor, grid, start=ego, goal=goal)
    print(report.summary())


if __name__ == "__main__":
    main()
