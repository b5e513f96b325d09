"""Command line entry point: ``ssctraj run <scenario> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .errors import (
    Infeasible,
    ParseError,
    PlanningError,
    SeedCollision,
    SeedCubeCollision,
    SolverNumericalFailure,
    VerificationFailure,
)
from .scenario_io import (
    load_scenario,
    parse_config,
    plan_scenario,
    prepare,
    trajectory_from_dict,
    write_outputs,
    write_report,
)
from .validation import verify

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 10
EXIT_SEED_COLLISION = 11
EXIT_SEED_CUBE_COLLISION = 12
EXIT_INFEASIBLE = 13
EXIT_VERIFICATION = 14
EXIT_NUMERICAL = 15
EXIT_PLANNING = 16

# most specific first
EXIT_CODES = (
    (ParseError, EXIT_PARSE),
    (SeedCollision, EXIT_SEED_COLLISION),
    (SeedCubeCollision, EXIT_SEED_CUBE_COLLISION),
    (Infeasible, EXIT_INFEASIBLE),
    (VerificationFailure, EXIT_VERIFICATION),
    (SolverNumericalFailure, EXIT_NUMERICAL),
    (PlanningError, EXIT_PLANNING),
)


def exit_code_for(exc: BaseException) -> int:
    for cls, code in EXIT_CODES:
        if isinstance(exc, cls):
            return code
    return EXIT_PLANNING


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ssctraj", description="Semantic-corridor trajectory planner.")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="plan one scenario")
    run.add_argument("scenario", type=Path, help="scenario YAML file")
    run.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: ./out)")
    run.add_argument("--dump-corridor", action="store_true", help="also write corridor.json")
    run.add_argument("--horizon", type=float, help="override the planning horizon [s]")
    run.add_argument("--config", type=Path, help="YAML file with config overrides")
    run.add_argument("--verify-only", type=Path, metavar="TRAJECTORY",
                     help="verify an existing trajectory.json against the scenario instead of planning")
    run.add_argument("-q", "--quiet", action="store_true", help="print nothing on success")
    return p


def _load(args):
    overrides = None
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ParseError(f"cannot read config {args.config}: {exc}") from None
        overrides = parse_config(text, str(args.config))
    scenario = load_scenario(args.scenario, overrides)
    if args.horizon is not None:
        if not args.horizon > 0.0:
            raise ParseError("--horizon must be positive", field="horizon")
        scenario = replace(scenario, horizon=args.horizon)
    return scenario


def run(args) -> int:
    scenario = None
    res = None
    try:
        scenario = _load(args)
        if args.verify_only is not None:
            try:
                doc = json.loads(args.verify_only.read_text(encoding="utf-8"))
            except (OSError, ValueError) as exc:
                raise ParseError(f"cannot read trajectory {args.verify_only}: {exc}") from None
            traj = trajectory_from_dict(doc)
            res = prepare(scenario)
            res.report = verify(traj, res.corridor, res.grid, scenario.config.verify, res.start, res.goal)
            if not res.report.passed:
                raise VerificationFailure("trajectory failed verification:\n" + res.report.summary(), res.report)
            write_report(args.out, "verified", scenario.name, res)
            if not args.quiet:
                print(res.report.summary())
            return EXIT_OK
        res = plan_scenario(scenario, raise_on_violation=False)
        if not res.report.passed:
            raise VerificationFailure("trajectory failed verification:\n" + res.report.summary(), res.report)
        write_outputs(res, args.out, args.dump_corridor)
        write_report(args.out, "ok", scenario.name, res)
        if not args.quiet:
            print(f"{scenario.name}: {len(res.corridor)} cubes, cost {res.solution.cost:.6g}, "
                  f"verification passed; outputs in {args.out}")
        return EXIT_OK
    except PlanningError as exc:
        code = exit_code_for(exc)
        if isinstance(exc, VerificationFailure) and res is not None and res.trajectory is not None:
            write_outputs(res, args.out, args.dump_corridor)
        write_report(args.out, type(exc).__name__, scenario.name if scenario else None, res, exc, code)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
