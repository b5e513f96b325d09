"""Scenario files, the forward-simulation seed stub, the planning pipeline and
result emission.

Scenario documents are YAML (see ``docs/scenario_schema.md``).  All
quantities are SI and expressed in the Frenet frame of the scenario's
reference lane, except the ego pose which may alternatively be given as a
Cartesian ``x, y``.
"""
from __future__ import annotations

import copy
import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .corridor import (Corridor, CorridorConfig, DynamicLimits, Seed, build_corridor, generate_seeds,
                       split_first_cube)
from .errors import ParseError, SchemaVersionMismatch, SeedCollision, VerificationFailure
from .frenet import FrenetState, ReferenceLane, to_frenet
from .optimizer import OptimizerConfig, PiecewiseBezierTrajectory, plan
from .bezier import BezierSegment
from .semantics import (
    DynamicObstacle,
    GridConfig,
    LaneChangeDuration,
    RedLight,
    SemanticScene,
    SpeedLimit,
    StaticObstacle,
    StopSign,
    extract_boundaries,
    render_occupancy,
)
from .validation import VerificationReport, VerifyConfig, verify

SCHEMA_VERSION = 1
_Loader = getattr(yaml, "CSafeLoader", yaml.SafeLoader)


# ----------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class SeedConfig:
    """Forward-simulation stub parameters.

    ``accel``/``decel`` are the comfort rates the rollout plans with;
    ``brake_max`` caps the braking it may apply when a comfortable profile
    no longer suffices.  ``speed_margin`` scales every speed limit to leave
    the optimizer slack inside limit zones; ``stop_gap`` is how far before a
    stop line the rollout comes to rest.
    """

    dt: float = 0.15
    accel: float = 1.0
    decel: float = 2.0
    brake_max: float = 3.0
    speed_margin: float = 0.9
    stop_gap: float = 0.5

    def __post_init__(self):
        if min(self.dt, self.accel, self.decel, self.brake_max) <= 0.0:
            raise ValueError("seed rollout rates and step must be positive")
        if not 0.0 < self.speed_margin <= 1.0:
            raise ValueError("speed margin must lie in (0, 1]")
        if self.stop_gap < 0.0:
            raise ValueError("stop gap must be non-negative")


@dataclass(frozen=True)
class PlannerConfig:
    grid: GridConfig | None = None  # None: extent derived from the seeds
    limits: DynamicLimits = field(default_factory=DynamicLimits)
    max_inflation: tuple[float, float, float] = (50.0, 3.5, 3.0)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    seeds: SeedConfig = field(default_factory=SeedConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    output_dt: float = 0.01

    @property
    def corridor(self) -> CorridorConfig:
        return CorridorConfig(self.max_inflation, self.limits)


@dataclass(frozen=True)
class Directive:
    kind: str  # "lane_keep" | "lane_change"
    target_speed: float
    target_l: float | None = None
    duration: float | None = None


@dataclass(frozen=True)
class ScenarioFile:
    name: str
    lane: ReferenceLane
    scene: SemanticScene
    ego: FrenetState
    directive: Directive
    horizon: float
    config: PlannerConfig = field(default_factory=PlannerConfig)
    description: str = ""
    expect: str = "feasible"
    raw_config: dict = field(default_factory=dict, repr=False, compare=False)


# ----------------------------------------------------------------------------
# parsing


def _marks(node, path=(), out=None):
    if out is None:
        out = {}
    out[path] = (node.start_mark.line + 1, node.start_mark.column + 1)
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            _marks(v, path + (k.value,), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _marks(v, path + (i,), out)
    return out


def _dotted(path):
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out


class _Doc:
    def __init__(self, marks):
        self.marks = marks

    def error(self, msg, path, cls=ParseError):
        loc = None
        for k in range(len(path), -1, -1):
            if tuple(path[:k]) in self.marks:
                loc = self.marks[tuple(path[:k])]
                break
        return cls(msg, field=_dotted(path) or None, location=loc)

    def mapping(self, value, path, allowed=None):
        if not isinstance(value, dict):
            raise self.error("expected a mapping", path)
        if allowed is not None:
            extra = sorted(set(value) - set(allowed), key=str)
            if extra:
                raise self.error(f"unknown field '{extra[0]}'", path + (extra[0],))
        return value

    def req(self, m, key, path):
        if key not in m or m[key] is None:
            raise self.error(f"missing required field '{key}'", path + (key,))
        return m[key]

    def num(self, v, path, positive=False, nonneg=False):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise self.error("expected a finite number", path)
        v = float(v)
        if positive and not v > 0.0:
            raise self.error("expected a positive number", path)
        if nonneg and v < 0.0:
            raise self.error("expected a non-negative number", path)
        return v

    def integer(self, v, path):
        if isinstance(v, bool) or not isinstance(v, int):
            raise self.error("expected an integer", path)
        return v

    def nums(self, v, path, n=None, min_len=1):
        if not isinstance(v, list):
            raise self.error("expected a list of numbers", path)
        if n is not None and len(v) != n:
            raise self.error(f"expected {n} numbers, got {len(v)}", path)
        if len(v) < min_len:
            raise self.error(f"expected at least {min_len} numbers", path)
        return tuple(self.num(x, path + (i,)) for i, x in enumerate(v))

    def opt(self, m, key, path, conv, default, **kw):
        if key not in m or m[key] is None:
            return default
        return conv(m[key], path + (key,), **kw)


_CONFIG_KEYS = {
    "grid": {"ds": "pos", "dl": "pos", "dt": "pos", "s_range": "pair", "l_range": "pair",
             "ego_half_length": "nonneg", "ego_half_width": "nonneg", "red_light_depth": "nonneg"},
    "limits": {"vel_s": "pair", "vel_l": "pair", "acc_s": "pair", "acc_l": "pair"},
    "corridor": {"max_inflation": "triple"},
    "optimizer": {"w_s": "pos", "w_l": "pos", "tolerance": "pos", "max_iter": "int",
                  "continuity_order": "int"},
    "seeds": {"dt": "pos", "accel": "pos", "decel": "pos", "brake_max": "pos",
              "speed_margin": "pos", "stop_gap": "nonneg"},
    "verify": {"dt": "pos", "position_tol": "pos", "derivative_tol": "pos", "continuity_tol": "pos"},
    "output": {"dt": "pos"},
}


def _config_values(doc: _Doc, raw, path):
    """Validated ``{section: {key: value}}`` from a config mapping."""
    raw = doc.mapping(raw or {}, path, _CONFIG_KEYS)
    out = {}
    for sec, body in raw.items():
        body = doc.mapping(body or {}, path + (sec,), _CONFIG_KEYS[sec])
        vals = {}
        for key, v in body.items():
            p = path + (sec, key)
            kind = _CONFIG_KEYS[sec][key]
            if kind == "pos":
                vals[key] = doc.num(v, p, positive=True)
            elif kind == "nonneg":
                vals[key] = doc.num(v, p, nonneg=True)
            elif kind == "int":
                vals[key] = doc.integer(v, p)
            else:
                vals[key] = doc.nums(v, p, n=2 if kind == "pair" else 3)
        out[sec] = vals
    return out


def _merge(base, over):
    out = copy.deepcopy(base)
    for sec, vals in over.items():
        out.setdefault(sec, {}).update(vals)
    return out


def build_config(values: dict) -> PlannerConfig:
    """Turn validated config values into a :class:`PlannerConfig`."""
    limits = DynamicLimits(**values.get("limits", {}))
    grid = GridConfig(**values["grid"]) if values.get("grid") else None
    opt = OptimizerConfig(limits=limits, **values.get("optimizer", {}))
    seeds = SeedConfig(**values.get("seeds", {}))
    ver = VerifyConfig(continuity_order=opt.continuity_order, **values.get("verify", {}))
    infl = values.get("corridor", {}).get("max_inflation", (50.0, 3.5, 3.0))
    return PlannerConfig(grid, limits, tuple(infl), opt, seeds, ver, values.get("output", {}).get("dt", 0.01))


def _parse_yaml(text, source):
    try:
        node = yaml.compose(text, Loader=_Loader)
        data = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = (mark.line + 1, mark.column + 1) if mark is not None else None
        raise ParseError(f"{source}: malformed document: {getattr(exc, 'problem', exc)}", location=loc) from None
    if node is None:
        raise ParseError(f"{source}: empty document", location=(1, 1))
    return data, _Doc(_marks(node))


def _check_version(doc, data):
    v = doc.req(data, "schema_version", ())
    if isinstance(v, bool) or not isinstance(v, int):
        raise doc.error("schema_version must be an integer", ("schema_version",))
    if v != SCHEMA_VERSION:
        raise doc.error(f"schema version {v} is not supported (expected {SCHEMA_VERSION})",
                        ("schema_version",), SchemaVersionMismatch)


def parse_config(text: str, source: str = "<config>") -> dict:
    """Validated override values from a standalone config document."""
    data, doc = _parse_yaml(text, source)
    doc.mapping(data, (), set(_CONFIG_KEYS) | {"schema_version"})
    if "schema_version" in data:
        _check_version(doc, data)
    return _config_values(doc, {k: v for k, v in data.items() if k != "schema_version"}, ())


def _parse_lane(doc, raw, path):
    raw = doc.mapping(raw, path, {"points", "straight", "arc"})
    if len(raw) != 1:
        raise doc.error("lane needs exactly one of points, straight, arc", path)
    try:
        if "points" in raw:
            pts = raw["points"]
            if not isinstance(pts, list):
                raise doc.error("expected a list of [x, y] pairs", path + ("points",))
            return ReferenceLane([doc.nums(p, path + ("points", i), n=2) for i, p in enumerate(pts)])
        if "straight" in raw:
            p = path + ("straight",)
            m = doc.mapping(raw["straight"], p, {"length", "heading", "origin"})
            return ReferenceLane.straight(doc.num(doc.req(m, "length", p), p + ("length",), positive=True),
                                          doc.opt(m, "heading", p, doc.num, 0.0),
                                          doc.opt(m, "origin", p, doc.nums, (0.0, 0.0), n=2))
        p = path + ("arc",)
        m = doc.mapping(raw["arc"], p, {"radius", "sweep", "center", "start_angle"})
        return ReferenceLane.arc(doc.num(doc.req(m, "radius", p), p + ("radius",), positive=True),
                                 doc.num(doc.req(m, "sweep", p), p + ("sweep",)),
                                 doc.opt(m, "center", p, doc.nums, (0.0, 0.0), n=2),
                                 doc.opt(m, "start_angle", p, doc.num, 0.0))
    except ValueError as exc:
        raise doc.error(str(exc), path) from None


def _parse_element(doc, raw, path):
    raw = doc.mapping(raw, path)
    kind = doc.req(raw, "type", path)
    req, opt = doc.req, doc.opt

    def n(key, **kw):
        return doc.num(req(raw, key, path), path + (key,), **kw)

    def pair(key):
        return doc.nums(req(raw, key, path), path + (key,), n=2)

    schemas = {
        "static_obstacle": {"s", "l"},
        "dynamic_obstacle": {"half_length", "half_width", "trajectory", "constant_velocity"},
        "red_light": {"s", "t"},
        "speed_limit": {"v_max", "s"},
        "stop_sign": {"s"},
        "lane_change_duration": {"t_max", "l", "fluctuation"},
    }
    if kind not in schemas:
        raise doc.error(f"unknown element type {kind!r}", path + ("type",))
    doc.mapping(raw, path, schemas[kind] | {"type", "name"})
    try:
        if kind == "static_obstacle":
            return StaticObstacle(pair("s"), pair("l"))
        if kind == "red_light":
            return RedLight(n("s"), *pair("t"))
        if kind == "speed_limit":
            return SpeedLimit(n("v_max", positive=True), *pair("s"))
        if kind == "stop_sign":
            return StopSign(n("s"))
        if kind == "lane_change_duration":
            return LaneChangeDuration(n("t_max", positive=True), *pair("l"),
                                      opt(raw, "fluctuation", path, doc.num, 1.0, nonneg=True))
        hl = opt(raw, "half_length", path, doc.num, 0.0, nonneg=True)
        hw = opt(raw, "half_width", path, doc.num, 0.0, nonneg=True)
        if ("trajectory" in raw) == ("constant_velocity" in raw):
            raise doc.error("dynamic obstacle needs exactly one of trajectory, constant_velocity", path)
        if "trajectory" in raw:
            p = path + ("trajectory",)
            m = doc.mapping(raw["trajectory"], p, {"t", "s", "l"})
            ts, ss, ls = (doc.nums(req(m, k, p), p + (k,)) for k in ("t", "s", "l"))
            return DynamicObstacle(hl, hw, ts, ss, ls)
        p = path + ("constant_velocity",)
        m = doc.mapping(raw["constant_velocity"], p, {"s0", "l0", "s_dot", "l_dot", "t0", "t_end"})
        vals = {k: doc.num(req(m, k, p), p + (k,)) for k in ("s0", "s_dot", "t_end")}
        return DynamicObstacle.constant_velocity(
            vals["s0"], opt(m, "l0", p, doc.num, 0.0), vals["s_dot"], opt(m, "l_dot", p, doc.num, 0.0),
            vals["t_end"], hl, hw, opt(m, "t0", p, doc.num, 0.0))
    except ParseError:
        raise
    except ValueError as exc:
        raise doc.error(str(exc), path) from None


def _parse_ego(doc, raw, path, lane):
    raw = doc.mapping(raw, path, {"s", "l", "x", "y", "s_dot", "l_dot", "s_ddot", "l_ddot"})
    if "x" in raw or "y" in raw:
        if "s" in raw or "l" in raw:
            raise doc.error("give the ego pose either as s, l or as x, y", path)
        x = doc.num(doc.req(raw, "x", path), path + ("x",))
        y = doc.num(doc.req(raw, "y", path), path + ("y",))
        try:
            s, l = to_frenet((x, y), lane)
        except Exception as exc:
            raise doc.error(str(exc), path) from None
    else:
        s = doc.num(doc.req(raw, "s", path), path + ("s",))
        l = doc.num(doc.req(raw, "l", path), path + ("l",))
    d = {k: doc.opt(raw, k, path, doc.num, 0.0) for k in ("s_dot", "l_dot", "s_ddot", "l_ddot")}
    return FrenetState(s, l, 0.0, **d)


def _parse_directive(doc, raw, path):
    raw = doc.mapping(raw, path, {"type", "target_speed", "target_l", "duration"})
    kind = doc.req(raw, "type", path)
    speed = doc.num(doc.req(raw, "target_speed", path), path + ("target_speed",), nonneg=True)
    if kind == "lane_keep":
        doc.mapping(raw, path, {"type", "target_speed"})
        return Directive("lane_keep", speed)
    if kind == "lane_change":
        return Directive("lane_change", speed,
                         doc.num(doc.req(raw, "target_l", path), path + ("target_l",)),
                         doc.num(doc.req(raw, "duration", path), path + ("duration",), positive=True))
    raise doc.error(f"unknown behavior type {kind!r}", path + ("type",))


_TOP = {"schema_version", "name", "description", "lane", "ego", "behavior", "horizon", "elements",
        "config", "expect"}
_EXPECT = ("feasible", "infeasible", "seed_collision", "seed_cube_collision")


def parse_scenario(text: str, source: str = "<scenario>", overrides: dict | None = None) -> ScenarioFile:
    """Parse and validate a scenario document.

    ``overrides`` are validated config values (see :func:`parse_config`)
    applied on top of the document's own ``config`` section.
    """
    data, doc = _parse_yaml(text, source)
    doc.mapping(data, (), _TOP)
    _check_version(doc, data)
    lane = _parse_lane(doc, doc.req(data, "lane", ()), ("lane",))
    ego = _parse_ego(doc, doc.req(data, "ego", ()), ("ego",), lane)
    directive = _parse_directive(doc, doc.req(data, "behavior", ()), ("behavior",))
    horizon = doc.num(doc.req(data, "horizon", ()), ("horizon",), positive=True)
    elems = data.get("elements") or []
    if not isinstance(elems, list):
        raise doc.error("expected a list of elements", ("elements",))
    scene = SemanticScene(tuple(_parse_element(doc, e, ("elements", i)) for i, e in enumerate(elems)))
    values = _config_values(doc, data.get("config"), ("config",))
    if overrides:
        values = _merge(values, overrides)
    try:
        cfg = build_config(values)
    except ValueError as exc:
        raise doc.error(str(exc), ("config",)) from None
    expect = data.get("expect", "feasible")
    if expect not in _EXPECT:
        raise doc.error(f"expect must be one of {', '.join(_EXPECT)}", ("expect",))
    name = str(data.get("name") or Path(source).stem)
    return ScenarioFile(name, lane, scene, ego, directive, horizon, cfg,
                        str(data.get("description") or ""), expect, values)


def load_scenario(path, overrides: dict | None = None) -> ScenarioFile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"cannot read scenario {path}: {exc}") from None
    return parse_scenario(text, str(path), overrides)


# ----------------------------------------------------------------------------
# seed stub


def _stop_points(scene, t, s, gap):
    out = []
    for e in scene.elements:
        if isinstance(e, StopSign) and s <= e.s_stop - gap + 1e-9:
            out.append(e.s_stop - gap)
        elif isinstance(e, RedLight) and t < e.t_off and s <= e.s_stop - gap + 1e-9:
            out.append(e.s_stop - gap)
    return out


def _longitudinal_accel(scene, t, s, v, target, cfg: SeedConfig):
    """Piecewise-constant acceleration for the next step."""
    v_ref = target
    brake = 0.0
    for e in scene.elements:
        if isinstance(e, SpeedLimit) and s < e.s_end:
            cap = cfg.speed_margin * e.v_max
            if s >= e.s_begin:
                v_ref = min(v_ref, cap)
            elif v > cap:
                d = e.s_begin - s
                brake = max(brake, (v * v - cap * cap) / (2.0 * max(d, 1e-6)))
    for stop in _stop_points(scene, t, s, cfg.stop_gap):
        d = stop - s
        if d <= 1e-9:
            return None  # at rest on the stop point
        brake = max(brake, v * v / (2.0 * d))
    if brake >= cfg.decel:
        return -min(brake, cfg.brake_max)
    # comfortable motion toward the reference speed, without running
    # into a braking profile steeper than the comfort rate next step
    a = float(np.clip((v_ref - v) / cfg.dt, -cfg.decel, cfg.accel))
    return a


def simulate_seeds(scenario: ScenarioFile, cfg: SeedConfig | None = None) -> list[FrenetState]:
    """Scripted forward simulation standing in for the behavior planner.

    Returns timestamped Frenet states every ``cfg.dt`` seconds from the ego
    state up to the horizon (initial state included).  Raises
    :class:`SeedCollision` when the rollout runs into an obstacle.
    """
    cfg = cfg or scenario.config.seeds
    ego, d = scenario.ego, scenario.directive
    n = int(math.floor(scenario.horizon / cfg.dt + 1e-9))
    s, v, l = ego.s, max(ego.s_dot, 0.0), ego.l
    rate = 0.0
    if d.kind == "lane_change":
        rate = (d.target_l - ego.l) / d.duration
    states = [FrenetState(s, l, 0.0, v, ego.l_dot)]
    target = min(d.target_speed, cfg.speed_margin * scenario.config.limits.vel_s[1])
    for k in range(n):
        t = k * cfg.dt
        a = _longitudinal_accel(scenario.scene, t, s, v, target, cfg)
        if a is None:
            v = 0.0
        elif v + a * cfg.dt < 0.0:
            s += v * v / (-2.0 * a)
            v = 0.0
        else:
            s += v * cfg.dt + 0.5 * a * cfg.dt ** 2
            v += a * cfg.dt
        for stop in _stop_points(scenario.scene, t, states[-1].s, cfg.stop_gap):
            if s > stop:
                s, v = stop, 0.0
        l_dot = 0.0
        if d.kind == "lane_change" and rate != 0.0:
            l_new = l + rate * cfg.dt
            if (rate > 0 and l_new >= d.target_l) or (rate < 0 and l_new <= d.target_l):
                l_new = d.target_l
            else:
                l_dot = rate
            l = l_new
        states.append(FrenetState(s, l, (k + 1) * cfg.dt, v, l_dot))
    return states


def check_seed_clearance(states, grid, samples: int = 8):
    """Raise :class:`SeedCollision` if a state, or the straight move between
    two consecutive states, touches an occupied cell."""
    for a, b in zip(states, states[1:]):
        for w in np.linspace(0.0, 1.0, samples + 1)[1:]:
            s = a.s + w * (b.s - a.s)
            l = a.l + w * (b.l - a.l)
            t = a.t + w * (b.t - a.t)
            t_q = min(t, grid.upper[2] - 1e-9)
            if grid.point_occupied(s, l, t_q):
                raise SeedCollision(f"seed rollout hits an obstacle at t={t:.3f} (s={s:.3f}, l={l:.3f})", time=t)
    s0 = states[0]
    if grid.point_occupied(s0.s, s0.l, 0.0):
        raise SeedCollision("ego starts inside an obstacle", time=0.0)


# ----------------------------------------------------------------------------
# pipeline


@dataclass
class PlanResult:
    scenario: ScenarioFile
    grid: object
    boundaries: list
    states: list
    seeds: list
    corridor: Corridor
    start: FrenetState
    goal: FrenetState
    trajectory: PiecewiseBezierTrajectory | None = None
    solution: object = None
    problem: object = None
    report: VerificationReport | None = None


def _grid_config(scenario: ScenarioFile, states) -> GridConfig:
    if scenario.config.grid is not None and "s_range" in scenario.raw_config.get("grid", {}):
        return scenario.config.grid
    base = scenario.config.grid or GridConfig()
    s_lo = min(st.s for st in states) - 20.0
    s_hi = max(st.s for st in states) + scenario.config.max_inflation[0] + 10.0
    # snap to the cell size so grids of shifted scenes stay aligned
    s_lo = math.floor(s_lo / base.ds) * base.ds
    s_hi = math.ceil(s_hi / base.ds) * base.ds
    return replace(base, s_range=(s_lo, s_hi))


def _goal_state(last: FrenetState, cube) -> FrenetState:
    """Terminal seed at rest in acceleration, with its velocity clamped into
    the last cube's associated bounds (the rollout may already be speeding
    up past a limit zone that the last cube still overlaps)."""
    v = [min(max(val, lo), hi) for val, (lo, hi) in
         ((last.s_dot, cube.vel_bounds["s"]), (last.l_dot, cube.vel_bounds["l"]))]
    return FrenetState(last.s, last.l, last.t, v[0], v[1], 0.0, 0.0)


def _snap_start(ego: FrenetState, cube, tol: float) -> FrenetState:
    """Pull start derivatives that sit outside the first cube's bounds by no
    more than ``tol`` (round-off of a previous plan) onto the bounds."""
    vals = {}
    for name, dim, bounds in (("s_dot", "s", cube.vel_bounds), ("l_dot", "l", cube.vel_bounds),
                              ("s_ddot", "s", cube.acc_bounds), ("l_ddot", "l", cube.acc_bounds)):
        v = getattr(ego, name)
        lo, hi = bounds[dim]
        if lo - tol <= v < lo:
            v = lo
        elif hi < v <= hi + tol:
            v = hi
        vals[name] = v
    return replace(ego, **vals)


def prepare(scenario: ScenarioFile) -> PlanResult:
    """Everything up to and including the corridor."""
    states = simulate_seeds(scenario)
    gcfg = _grid_config(scenario, states)
    grid = render_occupancy(scenario.scene, scenario.horizon, gcfg)
    check_seed_clearance(states, grid)
    boundaries = extract_boundaries(scenario.scene)
    seeds = generate_seeds(states[1:], scenario.ego)
    corridor = build_corridor(seeds, boundaries, grid, scenario.config.corridor)
    goal = _goal_state(states[-1], corridor.cubes[-1])
    start = _snap_start(scenario.ego, corridor.cubes[0], scenario.config.optimizer.tolerance)
    corridor = split_first_cube(corridor, start, scenario.config.optimizer.degree)
    return PlanResult(scenario, grid, boundaries, states, seeds, corridor, start, goal)


def plan_scenario(scenario: ScenarioFile, raise_on_violation: bool = True) -> PlanResult:
    """Run the full pipeline; the returned trajectory has been verified."""
    res = prepare(scenario)
    cfg = scenario.config
    res.trajectory, res.solution, res.problem = plan(res.corridor, res.start, res.goal, cfg.optimizer)
    res.report = verify(res.trajectory, res.corridor, res.grid, cfg.verify, res.start, res.goal)
    if raise_on_violation and not res.report.passed:
        raise VerificationFailure("trajectory failed verification:\n" + res.report.summary(), res.report)
    return res


def replan_scenario(scenario: ScenarioFile, traj: PiecewiseBezierTrajectory, t: float) -> ScenarioFile:
    """The scenario as seen from the trajectory state at time ``t``."""
    if not traj.t_start <= t < traj.t_end:
        raise ValueError(f"replan time {t} outside [{traj.t_start}, {traj.t_end})")
    vals = [traj.eval(t, k, dim) for dim in ("s", "l") for k in range(3)]
    ego = FrenetState(vals[0], vals[3], 0.0, vals[1], vals[4], vals[2], vals[5])
    d = scenario.directive
    if d.kind == "lane_change":
        d = replace(d, duration=max(d.duration - t, scenario.config.seeds.dt))
    return replace(scenario, ego=ego, directive=d, scene=scenario.scene.shifted(t))


# ----------------------------------------------------------------------------
# serialization


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def trajectory_to_dict(traj: PiecewiseBezierTrajectory, dt: float = 0.01, report: VerificationReport | None = None):
    segs = [{"t_start": _num(s.t_start), "alpha": _num(s.alpha),
             "control_points": {"s": [_num(v) for v in s.control_points[0]],
                                "l": [_num(v) for v in s.control_points[1]]}}
            for s in traj.segments]
    smp = traj.sample(dt)
    out = {"schema_version": SCHEMA_VERSION, "degree": traj.segments[0].degree, "segments": segs,
           "samples": {"dt": dt, **{k: [_num(v) for v in smp[k]] for k in SAMPLE_COLUMNS}}}
    if report is not None:
        out["verification"] = report.to_dict()
    return out


SAMPLE_COLUMNS = ("t", "s", "l", "s_dot", "l_dot", "s_ddot", "l_ddot")


def trajectory_from_dict(data) -> PiecewiseBezierTrajectory:
    try:
        segs = [BezierSegment(np.vstack([seg["control_points"]["s"], seg["control_points"]["l"]]),
                              float(seg["alpha"]), float(seg["t_start"])) for seg in data["segments"]]
        return PiecewiseBezierTrajectory(segs)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed trajectory document: {exc}") from None


def corridor_to_dict(corridor: Corridor):
    cubes = []
    for c in corridor.cubes:
        cubes.append({
            "lower": {"s": _num(c.lower[0]), "l": _num(c.lower[1]), "t": _num(c.lower[2])},
            "upper": {"s": _num(c.upper[0]), "l": _num(c.upper[1]), "t": _num(c.upper[2])},
            "velocity": {k: [_num(v) for v in b] for k, b in (c.vel_bounds or {}).items()},
            "acceleration": {k: [_num(v) for v in b] for k, b in (c.acc_bounds or {}).items()},
            "soft_margins": {k: _num(v) for k, v in sorted(c.soft_margins.items())},
            "face_tags": dict(sorted(c.face_tags.items())),
            "seed_pair": list(c.provenance),
            "associated_boundaries": list(c.associated),
        })
    return {"schema_version": SCHEMA_VERSION, "cubes": cubes,
            "seeds": [{"s": _num(s.s), "l": _num(s.l), "t": _num(s.t)} for s in corridor.seeds]}


def _json(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in zip(*rows):
        w.writerow([repr(float(x)) for x in r])
    return buf.getvalue()


PLOT_FILES = {
    "st.csv": ("t", "s"),
    "lt.csv": ("t", "l"),
    "velocity.csv": ("t", "s_dot", "l_dot"),
    "acceleration.csv": ("t", "s_ddot", "l_ddot"),
}


def write_outputs(res: PlanResult, out_dir, dump_corridor: bool = False) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dt = res.scenario.config.output_dt
    written = []
    traj_doc = trajectory_to_dict(res.trajectory, dt, res.report)
    p = out / "trajectory.json"
    p.write_text(_json(traj_doc), encoding="utf-8")
    written.append(p)
    smp = traj_doc["samples"]
    for name, cols in PLOT_FILES.items():
        p = out / name
        p.write_text(_csv(cols, [smp[c] for c in cols]), encoding="utf-8")
        written.append(p)
    if dump_corridor:
        p = out / "corridor.json"
        p.write_text(_json(corridor_to_dict(res.corridor)), encoding="utf-8")
        written.append(p)
    return written


def write_report(out_dir, status: str, scenario_name: str | None, res: PlanResult | None = None,
                 error: Exception | None = None, exit_code: int = 0) -> Path:
    doc = {"schema_version": SCHEMA_VERSION, "scenario": scenario_name, "status": status, "exit_code": exit_code}
    if error is not None:
        doc["error"] = {"type": type(error).__name__, "message": str(error)}
        diag = getattr(error, "diagnostic", None)
        if diag:
            doc["error"]["diagnostic"] = {k: (_num(v) if isinstance(v, float) else v) for k, v in diag.items()}
    if res is not None:
        doc["n_seeds"] = len(res.seeds)
        doc["n_cubes"] = len(res.corridor)
        if res.solution is not None:
            doc["solver"] = {"cost": _num(res.solution.cost), "status": res.solution.status,
                             "iterations": res.solution.iterations,
                             "primal_residual": _num(res.solution.primal_residual),
                             "stationarity_residual": _num(res.solution.stationarity_residual)}
        if res.report is not None:
            doc["verification"] = res.report.to_dict()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    p = out / "report.json"
    p.write_text(_json(doc), encoding="utf-8")
    return p


def corpus_dir() -> Path:
    """Directory of the bundled scenario corpus."""
    return Path(__file__).parent / "scenarios"


def corpus(expect: str | None = None) -> list[Path]:
    paths = sorted(corpus_dir().glob("*.yaml"))
    if expect is None:
        return paths
    return [p for p in paths if load_scenario(p).expect == expect]
