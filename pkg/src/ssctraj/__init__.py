"""Semantic-corridor trajectory generation with piecewise Bezier QPs."""
from .bezier import BezierSegment, bernstein, hodograph, jerk_hessian
from .corridor import (
    Corridor,
    CorridorConfig,
    DrivingCube,
    DynamicLimits,
    Seed,
    associate_constraints,
    build_corridor,
    generate_corridor,
    generate_seeds,
    relax_cubes,
)
from .errors import *  # noqa: F401,F403
from .frenet import FrenetState, ReferenceLane, to_cartesian, to_frenet
from .optimizer import OptimizerConfig, PiecewiseBezierTrajectory, assemble_qp, build_trajectory, plan, solve
from .scenario_io import (
    PlannerConfig,
    ScenarioFile,
    load_scenario,
    parse_scenario,
    plan_scenario,
    replan_scenario,
    simulate_seeds,
)
from .semantics import (
    DynamicObstacle,
    GridConfig,
    LaneChangeDuration,
    RedLight,
    SemanticScene,
    SltGrid,
    SpeedLimit,
    StaticObstacle,
    StopSign,
    extract_boundaries,
    render_occupancy,
)
from .validation import VerificationReport, VerifyConfig, verify

__version__ = "0.1.0"
